// Concrete physical models: the two-waveguide-qubit module, the cascaded
// four-waveguide-qubit pair with inter-module loss, and the full eight-qubit
// system with parametric data-waveguide coupling and data-qubit decoherence.
//
// Copyright (c) 2026 the chiralink authors
// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "chiralink/lindblad.hpp"
#include "chiralink/qops.hpp"
#include "chiralink/slh.hpp"

namespace chiralink {

// Device parameters. Waveguide qubits (Q1, Q2 on module A; Q5, Q6 on module
// B) are radiatively limited: their only decay is the directional emission at
// rate gamma. Data qubits (Q3, Q4, Q7, Q8) carry non-radiative decay 1/T1 and
// pure dephasing 1/T2* - 1/(2 T1).
struct DeviceParams {
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  std::array<double, 4> gamma{};                      // rad/ns for Q1,Q2,Q5,Q6
  double kd = 0.0;                                    // inter-module propagation phase, rad
  double eta = 1.0;                                   // amplitude transmissivity
  std::array<double, 4> t1_data{kInf, kInf, kInf, kInf};      // ns for Q3,Q4,Q7,Q8
  std::array<double, 4> t2star_data{kInf, kInf, kInf, kInf};  // ns for Q3,Q4,Q7,Q8
  double intra_module_phase = 1.5707963267948966;     // rad; lambda/4 spacing
  double residual_exchange = 0.0;                     // rad/ns; uncancelled intra-module coupling

  double gamma_nr(int data_index) const { return 1.0 / t1_data.at(data_index); }
  double gamma_phi(int data_index) const {
    return 1.0 / t2star_data.at(data_index) - 0.5 / t1_data.at(data_index);
  }

  void validate() const {
    for (double g : gamma)
      if (!(g > 0.0)) throw std::invalid_argument("DeviceParams: gamma must be positive");
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("DeviceParams: eta outside [0,1]");
    for (int i = 0; i < 4; ++i) {
      if (!(t1_data[i] > 0.0) || !(t2star_data[i] > 0.0))
        throw std::invalid_argument("DeviceParams: data-qubit times must be positive");
      if (gamma_phi(i) < 0.0)
        throw std::invalid_argument("DeviceParams: derived pure dephasing rate is negative");
    }
  }
};

// All four waveguide qubits at the same emission rate, no decoherence, no
// loss: the idealized system used for exact transfer checks.
inline DeviceParams ideal_device(double gamma = 2.0 * 3.14159265358979323846 * 0.0177) {
  DeviceParams p;
  p.gamma = {gamma, gamma, gamma, gamma};
  return p;
}

// The measured device: emission rates gamma/2pi = 17.7, 17.3, 17.9, 17.1 MHz
// for Q1, Q2, Q5, Q6; data-qubit T1 = 7.9, 4.4, 8.1, 6.0 us and T2* = 3.2,
// 2.0, 4.5, 5.4 us for Q3, Q4, Q7, Q8; interconnect power transmission 0.82.
inline DeviceParams standard_device() {
  constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
  DeviceParams p;
  p.gamma = {kTwoPi * 0.0177, kTwoPi * 0.0173, kTwoPi * 0.0179, kTwoPi * 0.0171};
  p.eta = std::sqrt(0.82);
  p.t1_data = {7900.0, 4400.0, 8100.0, 6000.0};
  p.t2star_data = {3200.0, 2000.0, 4500.0, 5400.0};
  return p;
}

enum class Module { kA, kB };

// A built physical model: the master-equation generator, the composite
// directional jump operators (c1 rightward, c3 leftward; c2/c4 are the loss
// taps, exactly zero at eta = 1), the raw lowered output-field operators for
// driven models, and the register layout.
struct NetworkSpec {
  GeneratorSpec generator;
  Operator jump_right;  // c1 = eta*L_RA + e^{-ikd} L_RB (rate-1 dissipator)
  Operator jump_left;   // c3 = L_LA + eta e^{ikd} L_LB
  Operator tap_right;   // c2 = sqrt(1-eta^2) L_RA
  Operator tap_left;    // c4 = sqrt(1-eta^2) L_LB
  std::vector<Operator> out_ops;  // raw output-field operators (driven models)
  std::array<int, 8> site_of{-1, -1, -1, -1, -1, -1, -1, -1};  // Q1..Q8 -> site
  int n_sites = 0;
};

// Dimensionless collective jump operator of one module on the eight-qubit
// register: sigma_a^- + e^{+-i phase} sigma_b^- with + for leftward emission.
// Module A lives on sites 0,1 and module B on sites 4,5.
inline Operator collective_jump(Module m, Direction dir, const DeviceParams& p) {
  const int a = (m == Module::kA) ? 0 : 4;
  const double sign = (dir == Direction::kLeft) ? 1.0 : -1.0;
  const Complex f = std::exp(kI * (sign * p.intra_module_phase));
  return embed(sigma_minus(), a, 8) + f * embed(sigma_minus(), a + 1, 8);
}

namespace detail {

struct WeightedJumps {
  Operator l_ra, l_la, l_rb, l_lb;
};

// Dimensional directional jumps sqrt(gamma_a/2) sm_a + e^{+-i phase}
// sqrt(gamma_b/2) sm_b for both modules on an n-site register with module A
// waveguide qubits at sites (a0, a0+1) and module B at (b0, b0+1).
inline WeightedJumps weighted_jumps(const DeviceParams& p, int a0, int b0, int n) {
  WeightedJumps w;
  w.l_ra = directional_jump(Direction::kRight, a0, a0 + 1, p.gamma[0], p.gamma[1], n,
                            p.intra_module_phase);
  w.l_la = directional_jump(Direction::kLeft, a0, a0 + 1, p.gamma[0], p.gamma[1], n,
                            p.intra_module_phase);
  w.l_rb = directional_jump(Direction::kRight, b0, b0 + 1, p.gamma[2], p.gamma[3], n,
                            p.intra_module_phase);
  w.l_lb = directional_jump(Direction::kLeft, b0, b0 + 1, p.gamma[2], p.gamma[3], n,
                            p.intra_module_phase);
  return w;
}

// Fills the chiral-cascade part shared by both builders: H += eta(H_R + H_L)
// plus any residual intra-module exchange, the composite jumps c1..c4 as
// rate-1 dissipators (taps only when eta < 1), and the jump fields.
inline void add_cascade(NetworkSpec& net, const DeviceParams& p, const detail::WeightedJumps& w,
                        int a0, int b0) {
  const Complex f = std::exp(kI * p.kd);
  const double kap = std::sqrt(std::max(0.0, 1.0 - p.eta * p.eta));

  const Operator h_r = -0.5 * kI *
                       (f * (w.l_ra * w.l_rb.adjoint()) - std::conj(f) * (w.l_ra.adjoint() * w.l_rb));
  const Operator h_l = -0.5 * kI *
                       (f * (w.l_la.adjoint() * w.l_lb) - std::conj(f) * (w.l_la * w.l_lb.adjoint()));
  net.generator.h_static += p.eta * (h_r + h_l);

  if (p.residual_exchange != 0.0) {
    const int n = num_sites(net.generator.h_static);
    for (int s : {a0, b0}) {
      const Operator ex = embed(sigma_plus(), s, n) * embed(sigma_minus(), s + 1, n);
      net.generator.h_static += p.residual_exchange * (ex + ex.adjoint());
    }
  }

  net.jump_right = p.eta * w.l_ra + std::conj(f) * w.l_rb;
  net.jump_left = w.l_la + p.eta * f * w.l_lb;
  net.tap_right = kap * w.l_ra;
  net.tap_left = kap * w.l_lb;
  net.generator.lindblad_terms.push_back({1.0, net.jump_right, net.jump_right});
  net.generator.lindblad_terms.push_back({1.0, net.jump_left, net.jump_left});
  if (kap > 0.0) {
    net.generator.lindblad_terms.push_back({1.0, net.tap_right, net.tap_right});
    net.generator.lindblad_terms.push_back({1.0, net.tap_left, net.tap_left});
  }
}

}  // namespace detail

// The full eight-qubit system: waveguide qubits Q1,Q2 (sites 0,1) and Q5,Q6
// (sites 4,5) form the chiral cascade; data qubits Q3,Q4 (sites 2,3) and
// Q7,Q8 (sites 6,7) start uncoupled (parametric couplings are added
// separately) and carry non-radiative decay and pure dephasing.
inline NetworkSpec build_cascaded(const DeviceParams& p) {
  p.validate();
  const int n = 8, dim = 256;
  NetworkSpec net;
  net.n_sites = n;
  net.site_of = {0, 1, 2, 3, 4, 5, 6, 7};  // Q1..Q8 in register order
  net.generator.h_static = Operator::Zero(dim, dim);
  detail::add_cascade(net, p, detail::weighted_jumps(p, 0, 4, n), 0, 4);

  const std::array<int, 4> data_sites = {2, 3, 6, 7};
  for (int i = 0; i < 4; ++i) {
    const double g_nr = p.gamma_nr(i), g_phi = p.gamma_phi(i);
    if (g_nr > 0.0) {
      const Operator sm = embed(sigma_minus(), data_sites[i], n);
      net.generator.lindblad_terms.push_back({g_nr, sm, sm});
    }
    if (g_phi > 0.0) {
      const Operator sz = embed(sigma_z(), data_sites[i], n);
      net.generator.lindblad_terms.push_back({0.5 * g_phi, sz, sz});
    }
  }
  return net;
}

// The four-waveguide-qubit system (Q1,Q2,Q5,Q6 on sites 0..3), optionally
// driven through the waveguide. The driven direction's input port carries a
// coherent amplitude; the probe detuning delta = omega_q - omega_probe enters
// as -(delta/2) sigma_z on every waveguide qubit. Built by lowering the
// series/concatenation product of the module, loss, propagation-phase, and
// drive elements, so the drive terms (2*Omega upstream, attenuated and
// phase-shifted downstream) come out of the composition rather than being
// pasted in.
inline NetworkSpec build_waveguide_only(const DeviceParams& p,
                                        Direction drive_dir = Direction::kRight,
                                        Complex amplitude = Complex(0.0, 0.0),
                                        double detuning = 0.0) {
  p.validate();
  const int n = 4, dim = 16;
  NetworkSpec net;
  net.n_sites = n;
  net.site_of = {0, 1, -1, -1, 2, 3, -1, -1};

  // Driven chain carries the system Hamiltonian (detunings); the reverse
  // chain is built bare so nothing is double counted by the concatenation.
  const SLHTriplet phase_el = element_phase(p.kd, 2, dim);
  const SLHTriplet bs = element_beamsplitter(p.eta, dim);
  const SLHTriplet drv = element_drive(amplitude, dim);
  SLHTriplet right, left;
  if (drive_dir == Direction::kRight) {
    const SLHTriplet ra = element_module(Direction::kRight, 0, 1, p.gamma[0], p.gamma[1], detuning, n);
    const SLHTriplet rb = element_module(Direction::kRight, 2, 3, p.gamma[2], p.gamma[3], detuning, n);
    right = series(rb, series(phase_el, series(bs, series(ra, drv))));
    const SLHTriplet la = element_module(Direction::kLeft, 0, 1, p.gamma[0], p.gamma[1], 0.0, n);
    const SLHTriplet lb = element_module(Direction::kLeft, 2, 3, p.gamma[2], p.gamma[3], 0.0, n);
    left = series(la, series(phase_el, series(bs, lb)));
  } else {
    const SLHTriplet la = element_module(Direction::kLeft, 0, 1, p.gamma[0], p.gamma[1], detuning, n);
    const SLHTriplet lb = element_module(Direction::kLeft, 2, 3, p.gamma[2], p.gamma[3], detuning, n);
    left = series(la, series(phase_el, series(bs, series(lb, drv))));
    const SLHTriplet ra = element_module(Direction::kRight, 0, 1, p.gamma[0], p.gamma[1], 0.0, n);
    const SLHTriplet rb = element_module(Direction::kRight, 2, 3, p.gamma[2], p.gamma[3], 0.0, n);
    right = series(rb, series(phase_el, series(bs, ra)));
  }
  const SLHTriplet g4 = concat(right, left);
  net.generator = lower(g4);
  net.out_ops = g4.l;

  // Canonical composite jumps for flux observables (no drive displacement).
  const auto w = detail::weighted_jumps(p, 0, 2, n);
  const Complex f = std::exp(kI * p.kd);
  const double kap = std::sqrt(std::max(0.0, 1.0 - p.eta * p.eta));
  net.jump_right = p.eta * w.l_ra + std::conj(f) * w.l_rb;
  net.jump_left = w.l_la + p.eta * f * w.l_lb;
  net.tap_right = kap * w.l_ra;
  net.tap_left = kap * w.l_lb;

  if (p.residual_exchange != 0.0) {
    for (int s : {0, 2}) {
      const Operator ex = embed(sigma_plus(), s, n) * embed(sigma_minus(), s + 1, n);
      net.generator.h_static += p.residual_exchange * (ex + ex.adjoint());
    }
  }
  return net;
}

// Parametric exchange between a data qubit and its waveguide qubit:
// H(t) = envelope(t) sigma_wg^+ sigma_data^- + h.c., so a real constant
// envelope g produces g(sigma_wg^+ sigma_data^- + sigma_data^+ sigma_wg^-)
// and a full population swap at t = pi/(2g). The envelope's phase realizes
// the coupler-modulation phase.
inline TimeDependentTerm parametric_coupling(int data_qubit, int wg_qubit, EnvelopeFn envelope,
                                             const NetworkSpec& net) {
  const bool valid_pair = (data_qubit == 3 && wg_qubit == 1) ||
                          (data_qubit == 4 && wg_qubit == 2) ||
                          (data_qubit == 7 && wg_qubit == 5) ||
                          (data_qubit == 8 && wg_qubit == 6);
  if (!valid_pair)
    throw std::invalid_argument("parametric_coupling: pair must be one of (3,1),(4,2),(7,5),(8,6)");
  const int sd = net.site_of.at(data_qubit - 1), sw = net.site_of.at(wg_qubit - 1);
  if (sd < 0 || sw < 0)
    throw std::invalid_argument("parametric_coupling: qubit not present in this network");
  TimeDependentTerm term;
  term.envelope = std::move(envelope);
  term.op = embed(sigma_plus(), sw, net.n_sites) * embed(sigma_minus(), sd, net.n_sites);
  return term;
}

// Population observable |e><e| of a labeled qubit on the network's register.
inline Operator qubit_population(const NetworkSpec& net, int qubit_label) {
  const int s = net.site_of.at(qubit_label - 1);
  if (s < 0) throw std::invalid_argument("qubit_population: qubit not present");
  return embed(number_op_site(), s, net.n_sites);
}

// Projects every operator of the model onto an excitation-number-restricted
// basis. Valid only when the dynamics never leave the sector: each
// Hamiltonian piece must hold the sector invariant and each jump may only
// map into it (true for the undriven protocol: exchange terms, lowering
// jumps, and sigma_z dephasing).
inline NetworkSpec restrict_network(const NetworkSpec& net, const ExcitationBasis& basis) {
  const auto check = [&](const Operator& op, const char* what) {
    if (!leaves_sector_invariant(op, basis))
      throw std::invalid_argument(std::string("restrict_network: ") + what +
                                  " maps the sector outside itself");
  };
  check(net.generator.h_static, "h_static");
  for (const auto& t : net.generator.h_time_dependent) check(t.op, "time-dependent term");

  NetworkSpec out;
  out.site_of = net.site_of;
  out.n_sites = net.n_sites;
  out.generator.h_static = restrict_operator(net.generator.h_static, basis);
  for (const auto& t : net.generator.h_time_dependent)
    out.generator.h_time_dependent.push_back({t.envelope, restrict_operator(t.op, basis)});
  for (const auto& term : net.generator.lindblad_terms) {
    check(term.a, "jump operator");
    out.generator.lindblad_terms.push_back(
        {term.rate, restrict_operator(term.a, basis), restrict_operator(term.b, basis)});
  }
  const auto maybe = [&](const Operator& op) {
    return op.size() > 0 ? restrict_operator(op, basis) : op;
  };
  out.jump_right = maybe(net.jump_right);
  out.jump_left = maybe(net.jump_left);
  out.tap_right = maybe(net.tap_right);
  out.tap_left = maybe(net.tap_left);
  for (const auto& op : net.out_ops) out.out_ops.push_back(restrict_operator(op, basis));
  return out;
}

}  // namespace chiralink
