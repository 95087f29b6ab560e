// End-to-end interconnect protocols: entangled-pair preparation, directional
// emission, photon absorption, half-emission W-state generation, and the
// transparency mode, together with per-run excitation accounting, band-power
// analysis, an error-budget decomposition, and the group-delay measurement.
//
// Copyright (c) 2026 the chiralink authors
// SPDX-License-Identifier: MIT
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <iomanip>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chiralink/lindblad.hpp"
#include "chiralink/network.hpp"
#include "chiralink/pulses.hpp"
#include "chiralink/qops.hpp"
#include "chiralink/slh.hpp"

namespace chiralink {

enum class ProtocolMode { kFullTransfer, kHalfEmission, kEmitOnly, kTransparency };
enum class PrepKind { kPsiPlus, kPsiMinus, kCustom };
enum class EnvelopeSource { kSegmented, kIdeal };

// Photon bandwidth of the reference experiments (2π · 7 MHz, in rad/ns).
inline constexpr double kStandardPhotonRate = 2.0 * 3.14159265358979323846 * 0.007;

// Constant phase applied to both absorber coupler envelopes relative to the
// emitter ones. It compensates the phases picked up along the emission ->
// waveguide -> absorption chain so that a caught excitation interferes with a
// retained one exactly as in the half-emission target state (the analog of
// calibrating the absorption-pulse phase on hardware). The value is fixed by
// the architecture, not by device parameters or the waveguide phase kd.
inline constexpr double kAbsorptionPhase = 0.0;

// Control-chain mismatch used for the loss-budget reproduction: a mild
// low-pass plus weak cubic compression on the absorber's realized envelopes,
// calibrated so the leftward missed-absorption fraction of the reference
// loss table (≈ 2.9%) is reproduced by the seeded segmented pulses.
inline DistortionModel budget_distortion() {
  DistortionModel m;
  m.tau_lp = 10.0;
  m.cubic = 0.15;
  return m;
}

// Stronger mismatch used as the pulse-optimization testbed: the same 10 ns
// low-pass with a cubic term strong enough that the unoptimized seed pulses
// lose roughly a quarter of the transfer efficiency, leaving the optimizer
// measurable headroom to recover.
inline DistortionModel training_distortion() {
  DistortionModel m;
  m.tau_lp = 10.0;
  m.cubic = 0.5;
  return m;
}

struct ProtocolConfig {
  Direction direction = Direction::kRight;
  ProtocolMode mode = ProtocolMode::kFullTransfer;
  DeviceParams device = ideal_device();
  PulseSet pulses;  // segmented coupler controls (the optimizer's domain)
  EnvelopeSource envelopes = EnvelopeSource::kSegmented;
  double gamma_ph = kStandardPhotonRate;  // photon rate for analytic envelopes
  PrepKind prep = PrepKind::kPsiPlus;
  Ket custom_prep;                   // 4-dim data-pair ket when prep == kCustom
  double initial_pi_fraction = 1.0;  // seeding rotation angle, in units of π
  TimeGrid grid{0.0, 400.0, 0.05, 4};
  DistortionModel distortion;  // applied to every realized coupler envelope
  bool restrict_excitations = true;  // integrate in the smallest closed sector
};

// Fractions of the initial excitation, integrated over one run. All entries
// are raw bookkeeping for that single trajectory: flux out the wrong end,
// flux out the same end past the absorber, flux into the propagation-loss
// taps, the non-radiative sink (data-qubit T1), and whatever excitation is
// still stored outside the absorber's data pair when the run ends. One minus
// the sum is the excitation delivered to the absorber's data qubits.
struct LossBreakdown {
  double directionality_error = 0.0;
  double missed_absorption = 0.0;
  double propagation_loss = 0.0;
  double decoherence_loss = 0.0;
  double residual = 0.0;

  double sum() const {
    return directionality_error + missed_absorption + propagation_loss + decoherence_loss +
           residual;
  }
};

struct TrajectoryResult {
  std::vector<double> times;  // ns
  // Populations of the four data qubits, always in register order Q3, Q4
  // (emitter-side module A), Q7, Q8 (module B), regardless of direction.
  std::array<std::vector<double>, 4> data_qubit_populations;
  std::vector<Complex> field_amp_left, field_amp_right;  // ⟨a_L⟩, ⟨a_R⟩, √(1/ns)
  std::vector<double> flux_left, flux_right;             // 1/ns
  DensityMatrix final_state;                             // full 8-qubit register
  LossBreakdown loss_accounting;
};

// ---------------------------------------------------------------------------
// State preparation
// ---------------------------------------------------------------------------

// Ideal instantaneous preparation of |ψ±⟩ = (|eg⟩ ± i|ge⟩)/√2 on the named
// module's data-qubit pair (first tensor factor = the lower-numbered qubit).
// The amplitudes are module-independent; the argument documents placement.
inline Ket prepare_entangled(int sign, Module module) {
  (void)module;
  if (sign != 1 && sign != -1) throw std::invalid_argument("prepare_entangled: sign must be ±1");
  Ket k = Ket::Zero(4);
  k(2) = Complex(1.0 / std::sqrt(2.0), 0.0);          // |eg⟩
  k(1) = Complex(0.0, sign / std::sqrt(2.0));         // |ge⟩
  return k;
}

// Finite-duration alternative: evolve |eg⟩ under the exchange Hamiltonian
// H = -sign · g (σ₁⁺σ₂⁻ + σ₂⁺σ₁⁻) for t = π/(4g), which realizes the same
// √iSWAP-style preparation up to a global phase.
inline Ket prepare_entangled_exchange(int sign, double g, Module module) {
  (void)module;
  if (sign != 1 && sign != -1)
    throw std::invalid_argument("prepare_entangled_exchange: sign must be ±1");
  if (g <= 0.0) throw std::invalid_argument("prepare_entangled_exchange: g must be positive");
  const Operator ex = embed(sigma_plus(), 0, 2) * embed(sigma_minus(), 1, 2);
  const Operator h = -static_cast<double>(sign) * g * (ex + Operator(ex.adjoint()));
  Eigen::SelfAdjointEigenSolver<Operator> solver(h);
  const double t = 3.14159265358979323846 / (4.0 * g);
  const Eigen::VectorXcd phases =
      (Complex(0.0, -t) * solver.eigenvalues().cast<Complex>().array()).exp();
  const Operator u =
      solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
  Ket eg = Ket::Zero(4);
  eg(2) = 1.0;
  return u * eg;
}

// Coupler cutoff time relative to the sech center (negative: before the
// center) at which the emitter's data qubits retain exactly half of the
// excitation, counting the waveguide amplitude that subsequently rings down
// into the line. Solves F(Δ) + n_wg(Δ) = 1/2 for the analytic sech emission:
// tanh(γ_ph Δ/2) = γ/γ_ph − √((γ/γ_ph)² + 1).
inline double half_emission_stop_offset(double gamma, double gamma_ph) {
  if (gamma <= 0.0 || gamma_ph <= 0.0 || gamma_ph >= gamma)
    throw std::invalid_argument("half_emission_stop_offset: need 0 < gamma_ph < gamma");
  const double r = gamma / gamma_ph;
  const double t = r - std::sqrt(r * r + 1.0);
  return 2.0 * std::atanh(t) / gamma_ph;
}

namespace detail {

// Incoming amplitude at the absorber for a balanced half emission: the sech
// front up to the coupler stop, then the exponential ringdown of the
// emitter's waveguide amplitude at its collective rate. Continuous at the
// stop because the waveguide amplitude equals f(t_stop)/√γ there.
struct HalfEmissionWavepacket {
  double gamma_emit = 0.0;  // emitter collective rate (ringdown rate)
  double gamma_ph = 0.0;    // sech photon rate
  double center = 0.0;      // sech center, ns
  double t_stop = 0.0;      // coupler cutoff, ns

  double u(double t) const {
    if (t <= t_stop) return sech_photon(t - center, gamma_ph);
    return sech_photon(t_stop - center, gamma_ph) * std::exp(-0.5 * gamma_emit * (t - t_stop));
  }
  double udot(double t) const {
    if (t <= t_stop) {
      const double x = 0.5 * gamma_ph * (t - center);
      return -0.5 * gamma_ph * std::tanh(x) * u(t);
    }
    return -0.5 * gamma_emit * u(t);
  }
  double emitted(double t) const {  // ∫_{-∞}^t u² dt'
    const double front = 0.5 * (1.0 + std::tanh(0.5 * gamma_ph * (std::min(t, t_stop) - center)));
    if (t <= t_stop) return front;
    const double us = sech_photon(t_stop - center, gamma_ph);
    const double n_wg = us * us / gamma_emit;
    return front + n_wg * (1.0 - std::exp(-gamma_emit * (t - t_stop)));
  }
};

// Collective emission rate of a module's waveguide-qubit pair.
inline double module_rate(const DeviceParams& p, Module m) {
  return (m == Module::kA) ? 0.5 * (p.gamma[0] + p.gamma[1]) : 0.5 * (p.gamma[2] + p.gamma[3]);
}

struct CouplerEnvelopes {
  // Envelope per hardware coupler id: 0 -> (3,1), 1 -> (4,2), 2 -> (7,5),
  // 3 -> (8,6). An empty function means the coupler is off for this run.
  std::array<EnvelopeFn, 4> env;
};

inline CouplerEnvelopes realized_envelopes(const ProtocolConfig& cfg) {
  const bool emitter_is_a = (cfg.direction == Direction::kRight);
  const bool half = (cfg.mode == ProtocolMode::kHalfEmission);
  const bool absorb_on =
      (cfg.mode == ProtocolMode::kFullTransfer || cfg.mode == ProtocolMode::kHalfEmission);
  const double duration = cfg.pulses.total_duration;
  const double t_cut = 0.5 * duration;  // half-emission coupler stop

  EnvelopeFn emit_env, absorb_env;
  if (cfg.envelopes == EnvelopeSource::kSegmented) {
    // Envelope ids 0,1 always drive the emitting module's couplers and ids
    // 2,3 the absorbing module's, whichever physical module that is.
    emit_env = {};  // assembled per coupler below
  } else {
    const Module emitter = emitter_is_a ? Module::kA : Module::kB;
    const Module catcher = emitter_is_a ? Module::kB : Module::kA;
    const double g_emit = module_rate(cfg.device, emitter);
    const double g_catch = module_rate(cfg.device, catcher);
    const double center =
        half ? t_cut - half_emission_stop_offset(g_emit, cfg.gamma_ph) : 0.5 * duration;
    emit_env = [g_emit, gph = cfg.gamma_ph, center, half, t_cut, duration](double t) -> Complex {
      if (t < 0.0 || t > duration || (half && t >= t_cut)) return Complex(0.0, 0.0);
      return Complex(ideal_coupling(t - center, g_emit, gph), 0.0);
    };
    const Complex rot = std::exp(kI * kAbsorptionPhase);
    if (half) {
      HalfEmissionWavepacket w{g_emit, cfg.gamma_ph, center, t_cut};
      absorb_env = [w, g_catch, rot](double t) -> Complex {
        return rot * catch_coupling(w.u(t), w.udot(t), w.emitted(t), g_catch);
      };
    } else {
      absorb_env = [g_catch, gph = cfg.gamma_ph, center, rot](double t) -> Complex {
        return rot * ideal_coupling(center - t, g_catch, gph);
      };
    }
  }

  CouplerEnvelopes out;
  for (int k = 0; k < 4; ++k) {
    const bool on_emitter_module = (k < 2) == emitter_is_a;
    const int role_id = on_emitter_module ? k % 2 : 2 + k % 2;  // 0,1 emit; 2,3 absorb
    const bool is_emit = role_id < 2;
    if (!is_emit && !absorb_on) continue;
    EnvelopeFn fn;
    if (cfg.envelopes == EnvelopeSource::kSegmented) {
      EnvelopeFn base = envelope_closure(cfg.pulses, role_id);
      if (is_emit && half) {
        fn = [base, t_cut](double t) -> Complex {
          return (t >= t_cut) ? Complex(0.0, 0.0) : base(t);
        };
      } else if (!is_emit) {
        const Complex rot = std::exp(kI * kAbsorptionPhase);
        fn = [base, rot](double t) { return rot * base(t); };
      } else {
        fn = base;
      }
    } else {
      fn = is_emit ? emit_env : absorb_env;
    }
    // The distortion models the control-chain mismatch between the two
    // modules, so it lands on the absorbing side's envelopes: a common
    // distortion of a matched emit/catch pair is tracked by the pair (the
    // catch remains the time reverse of the emission it receives) and has
    // no observable effect, as only the relative error survives.
    if (!is_emit && !cfg.distortion.is_identity())
      fn = distort(fn, cfg.distortion, cfg.grid.t_end);
    out.env[k] = std::move(fn);
  }
  return out;
}

// The emitting module's data-pair ket for the configured preparation.
inline Ket prep_pair_ket(const ProtocolConfig& cfg) {
  if (cfg.prep == PrepKind::kCustom) {
    if (cfg.custom_prep.size() != 4)
      throw std::invalid_argument("run: custom_prep must be a 4-dim data-pair ket");
    if (std::abs(cfg.custom_prep.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("run: custom_prep must be normalized");
    return cfg.custom_prep;
  }
  if (cfg.initial_pi_fraction <= 0.0 || cfg.initial_pi_fraction > 1.0)
    throw std::invalid_argument("run: initial_pi_fraction must lie in (0, 1]");
  const int sign = (cfg.prep == PrepKind::kPsiPlus) ? 1 : -1;
  const double theta = 3.14159265358979323846 * cfg.initial_pi_fraction;
  // Seeding rotation on the first data qubit, then the ideal exchange-based
  // spreading over the pair: cos(θ/2)|gg⟩ − i sin(θ/2)|ψ_sign⟩.
  Ket k = Ket::Zero(4);
  k(0) = Complex(std::cos(0.5 * theta), 0.0);
  const Complex amp = Complex(0.0, -std::sin(0.5 * theta) / std::sqrt(2.0));
  k(2) = amp;                                      // |eg⟩
  k(1) = amp * Complex(0.0, sign);                 // |ge⟩
  return k;
}

// Full-register initial ket: the prepared pair on the emitting module's data
// qubits, everything else in the ground state. Site 0 is the leftmost qubit.
inline Ket initial_register_ket(const ProtocolConfig& cfg) {
  const Ket pair = prep_pair_ket(cfg);
  const int n = 8;
  const int site_a = (cfg.direction == Direction::kRight) ? 2 : 6;  // Q3 or Q7
  const int site_b = site_a + 1;                                    // Q4 or Q8
  Ket full = Ket::Zero(1 << n);
  for (int idx = 0; idx < 4; ++idx) {
    if (std::abs(pair(idx)) == 0.0) continue;
    const unsigned bit_a = (idx >> 1) & 1u, bit_b = idx & 1u;
    const unsigned state = (bit_a << (n - 1 - site_a)) | (bit_b << (n - 1 - site_b));
    full(state) += pair(idx);
  }
  return full;
}

inline double trapezoid(const std::vector<double>& t, const std::vector<double>& y) {
  double acc = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k)
    acc += 0.5 * (t[k] - t[k - 1]) * (y[k] + y[k - 1]);
  return acc;
}

}  // namespace detail

// Runs one protocol trajectory. Emission envelopes drive the emitting module
// selected by `direction` (right: A emits, B absorbs), absorption envelopes
// the other module; in half_emission mode the emission envelopes are cut off
// at total_duration/2 while the absorption envelopes run in full; emit_only
// and transparency leave the absorber couplers off. Field amplitudes are the
// expectations of the composite left/right output operators (the downstream
// term η-attenuated and phase-shifted, detector gain unity) and fluxes their
// ⟨ĉ†ĉ⟩ counterparts.
inline TrajectoryResult run(const ProtocolConfig& cfg) {
  cfg.device.validate();
  if (cfg.grid.dt <= 0.0 || cfg.grid.t_end <= cfg.grid.t_start)
    throw std::invalid_argument("run: invalid time grid");

  NetworkSpec net = build_cascaded(cfg.device);
  const detail::CouplerEnvelopes couplers = detail::realized_envelopes(cfg);
  const std::array<std::pair<int, int>, 4> pairs = {{{3, 1}, {4, 2}, {7, 5}, {8, 6}}};
  for (int k = 0; k < 4; ++k) {
    if (!couplers.env[k]) continue;
    net.generator.h_time_dependent.push_back(
        parametric_coupling(pairs[k].first, pairs[k].second, couplers.env[k], net));
  }

  const Ket full_ket = detail::initial_register_ket(cfg);

  // Observables: data-qubit populations, output fields, output fluxes, the
  // loss taps when present, and the total excitation number.
  Operator number_total = Operator::Zero(256, 256);
  for (int s = 0; s < 8; ++s) number_total += embed(number_op_site(), s, 8);
  std::vector<Operator> obs = {qubit_population(net, 3), qubit_population(net, 4),
                               qubit_population(net, 7), qubit_population(net, 8),
                               net.jump_left,            net.jump_right,
                               Operator(net.jump_left.adjoint() * net.jump_left),
                               Operator(net.jump_right.adjoint() * net.jump_right),
                               number_total};
  const bool has_taps = net.tap_right.size() > 0;
  if (has_taps) {
    obs.push_back(Operator(net.tap_right.adjoint() * net.tap_right));
    obs.push_back(Operator(net.tap_left.adjoint() * net.tap_left));
  }

  DensityMatrix rho0;
  ExcitationBasis basis;
  bool restricted = false;
  if (cfg.restrict_excitations) {
    int max_exc = 0;
    for (long idx = 0; idx < full_ket.size(); ++idx)
      if (std::abs(full_ket(idx)) > 1e-14)
        max_exc = std::max(max_exc, std::popcount(static_cast<unsigned>(idx)));
    basis = make_excitation_basis(8, std::max(1, max_exc));
    net = restrict_network(net, basis);
    for (auto& op : obs) op = restrict_operator(op, basis);
    const Ket r = restrict_ket(full_ket, basis);
    rho0 = ket_to_density(r);
    restricted = true;
  } else {
    rho0 = ket_to_density(full_ket);
  }

  const Trajectory tr = evolve(rho0, net.generator, cfg.grid, obs);

  TrajectoryResult out;
  out.times = tr.times;
  const std::size_t m = tr.times.size();
  for (auto& series : out.data_qubit_populations) series.resize(m);
  out.field_amp_left.resize(m);
  out.field_amp_right.resize(m);
  out.flux_left.resize(m);
  out.flux_right.resize(m);
  std::vector<double> tap_flux(m, 0.0), total_exc(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& e = tr.expectations[k];
    for (int q = 0; q < 4; ++q) out.data_qubit_populations[q][k] = e[q].real();
    out.field_amp_left[k] = e[4];
    out.field_amp_right[k] = e[5];
    out.flux_left[k] = e[6].real();
    out.flux_right[k] = e[7].real();
    total_exc[k] = e[8].real();
    if (has_taps) tap_flux[k] = e[9].real() + e[10].real();
  }
  out.final_state = restricted ? lift_density(tr.final_state, basis) : tr.final_state;

  // Excitation bookkeeping, normalized by the initial excitation.
  const double initial_exc = total_exc.empty() ? 0.0 : total_exc.front();
  if (initial_exc > 1e-12) {
    const bool emitter_is_a = (cfg.direction == Direction::kRight);
    const double same = detail::trapezoid(out.times, emitter_is_a ? out.flux_right : out.flux_left);
    const double wrong =
        detail::trapezoid(out.times, emitter_is_a ? out.flux_left : out.flux_right);
    const double tapped = detail::trapezoid(out.times, tap_flux);
    const double final_exc = total_exc.back();
    const double absorber_pop =
        out.data_qubit_populations[emitter_is_a ? 2 : 0].back() +
        out.data_qubit_populations[emitter_is_a ? 3 : 1].back();
    LossBreakdown& loss = out.loss_accounting;
    loss.missed_absorption = std::max(0.0, same / initial_exc);
    loss.directionality_error = std::max(0.0, wrong / initial_exc);
    loss.propagation_loss = std::max(0.0, tapped / initial_exc);
    loss.decoherence_loss =
        std::max(0.0, (initial_exc - final_exc) / initial_exc -
                          (loss.missed_absorption + loss.directionality_error +
                           loss.propagation_loss));
    loss.residual = std::max(0.0, (final_exc - absorber_pop) / initial_exc);
  }
  return out;
}

// Reduced state of the four data qubits (Q3, Q4, Q7, Q8) at the end of a run.
inline DensityMatrix data_qubit_state(const TrajectoryResult& result) {
  return partial_trace(result.final_state, {2, 3, 6, 7});
}

// ---------------------------------------------------------------------------
// Band power
// ---------------------------------------------------------------------------

// Integrated power of a complex field series inside the frequency band
// [center − halfwidth, center + halfwidth] (rad/ns): a plain discrete Fourier
// transform of the uniformly sampled series with ∫|x|²dt normalization, so
// that summing over all bins reproduces the Parseval total.
inline double band_power(const std::vector<double>& times, const std::vector<Complex>& values,
                         double center, double halfwidth) {
  if (times.size() != values.size()) throw std::invalid_argument("band_power: length mismatch");
  if (halfwidth < 0.0) throw std::invalid_argument("band_power: negative halfwidth");
  const std::size_t n = times.size();
  if (n < 2) return 0.0;
  const double dt = times[1] - times[0];
  for (std::size_t k = 1; k < n; ++k)
    if (std::abs(times[k] - times[k - 1] - dt) > 1e-9 * std::max(1.0, dt))
      throw std::invalid_argument("band_power: series must be uniformly sampled");
  const double nyquist = 3.14159265358979323846 / dt;
  if (std::abs(center) + halfwidth > nyquist)
    throw std::domain_error("band_power: band extends beyond the Nyquist frequency");
  const double span = static_cast<double>(n) * dt;
  const double dw = 2.0 * 3.14159265358979323846 / span;
  double power = 0.0;
  const long k_max = static_cast<long>(n) / 2;
  for (long k = -k_max; k < static_cast<long>(n) - k_max; ++k) {
    const double w = k * dw;
    if (w < center - halfwidth || w > center + halfwidth) continue;
    Complex x(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      x += values[j] * std::exp(Complex(0.0, -w * times[j]));
    power += std::norm(x * dt);
  }
  return power / span;
}

// ---------------------------------------------------------------------------
// Error budget
// ---------------------------------------------------------------------------

// Decomposes the transfer inefficiency in the style of the loss-budget table:
// directionality from the wrong-direction band power of an emission-only run,
// missed absorption from the residual same-direction band power of a full
// transfer against the transparency reference, propagation exactly 1 − η²,
// decoherence as the absorber-population difference between a
// decoherence-free and the actual device, and the rest as residual. Band
// powers use π/2 seeding (a Fock photon carries no mean field), populations
// use π seeding.
inline LossBreakdown error_budget(const DeviceParams& device, const PulseSet& pulses,
                                  Direction direction = Direction::kRight,
                                  EnvelopeSource source = EnvelopeSource::kSegmented,
                                  double gamma_ph = kStandardPhotonRate,
                                  const DistortionModel& distortion = DistortionModel{}) {
  ProtocolConfig base;
  base.direction = direction;
  base.device = device;
  base.pulses = pulses;
  base.envelopes = source;
  base.gamma_ph = gamma_ph;
  base.distortion = distortion;
  base.prep = (direction == Direction::kRight) ? PrepKind::kPsiPlus : PrepKind::kPsiMinus;
  const double t_raw = std::max(400.0, 2.0 * pulses.total_duration);
  const long steps = static_cast<long>(std::ceil(t_raw / 0.05));
  base.grid = TimeGrid{0.0, steps * 0.05, 0.05, 4};

  const auto field_series = [&](ProtocolMode mode) {
    ProtocolConfig cfg = base;
    cfg.mode = mode;
    cfg.initial_pi_fraction = 0.5;
    return run(cfg);
  };
  const double bw = 2.0 * 3.14159265358979323846 * 0.040;  // 40 MHz half-window
  const TrajectoryResult emit = field_series(ProtocolMode::kEmitOnly);
  const TrajectoryResult transp = field_series(ProtocolMode::kTransparency);
  const TrajectoryResult full = field_series(ProtocolMode::kFullTransfer);
  const bool emitter_is_a = (direction == Direction::kRight);
  const auto& same_emit = emitter_is_a ? emit.field_amp_right : emit.field_amp_left;
  const auto& wrong_emit = emitter_is_a ? emit.field_amp_left : emit.field_amp_right;
  const auto& same_transp = emitter_is_a ? transp.field_amp_right : transp.field_amp_left;
  const auto& same_full = emitter_is_a ? full.field_amp_right : full.field_amp_left;
  const double p_same = band_power(emit.times, same_emit, 0.0, bw);
  const double p_wrong = band_power(emit.times, wrong_emit, 0.0, bw);
  const double p_ref = band_power(transp.times, same_transp, 0.0, bw);
  const double p_miss = band_power(full.times, same_full, 0.0, bw);

  const auto peak_population = [&](const DeviceParams& dev) {
    ProtocolConfig cfg = base;
    cfg.device = dev;
    cfg.mode = ProtocolMode::kFullTransfer;
    cfg.initial_pi_fraction = 1.0;
    const TrajectoryResult res = run(cfg);
    const int a = emitter_is_a ? 2 : 0, b = emitter_is_a ? 3 : 1;
    double peak = 0.0;
    for (std::size_t k = 0; k < res.times.size(); ++k)
      peak = std::max(peak,
                      res.data_qubit_populations[a][k] + res.data_qubit_populations[b][k]);
    return peak;
  };
  DeviceParams coherent = device;
  coherent.t1_data = {DeviceParams::kInf, DeviceParams::kInf, DeviceParams::kInf,
                      DeviceParams::kInf};
  coherent.t2star_data = coherent.t1_data;
  const double peak_ideal = peak_population(coherent);
  const double peak_actual = peak_population(device);

  LossBreakdown out;
  out.directionality_error = (p_same + p_wrong > 0.0) ? p_wrong / (p_same + p_wrong) : 0.0;
  out.missed_absorption = (p_ref > 0.0) ? std::max(0.0, p_miss / p_ref) : 0.0;
  out.propagation_loss = std::max(0.0, 1.0 - device.eta * device.eta);
  out.decoherence_loss = std::max(0.0, peak_ideal - peak_actual);
  out.residual = std::max(0.0, 1.0 - peak_actual - out.directionality_error -
                                   out.missed_absorption - out.propagation_loss -
                                   out.decoherence_loss);
  return out;
}

// ---------------------------------------------------------------------------
// Transparency delay
// ---------------------------------------------------------------------------

// Group delay of a photon crossing the resonant, non-absorbing downstream
// module: the emitter launches an analytic sech photon of rate gamma_ph, the
// absorber couplers stay off, and the result is the centroid difference
// between the flux past the downstream module and the emitter's own output
// flux. Valid in the negligible-distortion regime gamma_ph ≤ 0.5·γ.
inline double transparency_delay(const DeviceParams& device, double gamma_ph) {
  device.validate();
  const double g_b = detail::module_rate(device, Module::kB);
  if (gamma_ph > 0.5 * g_b)
    throw std::invalid_argument("transparency_delay: gamma_ph must be at most 0.5·gamma");

  ProtocolConfig cfg;
  cfg.direction = Direction::kRight;
  cfg.mode = ProtocolMode::kTransparency;
  cfg.device = device;
  cfg.envelopes = EnvelopeSource::kIdeal;
  cfg.gamma_ph = gamma_ph;
  const double span = std::max(400.0, 24.0 / gamma_ph);
  cfg.pulses.total_duration = span;
  const long steps = static_cast<long>(std::ceil(span / 0.05));
  cfg.grid = TimeGrid{0.0, steps * 0.05, 0.05, 2};

  NetworkSpec net = build_cascaded(cfg.device);
  const detail::CouplerEnvelopes couplers = detail::realized_envelopes(cfg);
  net.generator.h_time_dependent.push_back(parametric_coupling(3, 1, couplers.env[0], net));
  net.generator.h_time_dependent.push_back(parametric_coupling(4, 2, couplers.env[1], net));

  const detail::WeightedJumps w = detail::weighted_jumps(cfg.device, 0, 4, 8);
  std::vector<Operator> obs = {Operator(w.l_ra.adjoint() * w.l_ra),
                               Operator(net.jump_right.adjoint() * net.jump_right)};
  const ExcitationBasis basis = make_excitation_basis(8, 1);
  net = restrict_network(net, basis);
  for (auto& op : obs) op = restrict_operator(op, basis);
  const DensityMatrix rho0 = ket_to_density(restrict_ket(detail::initial_register_ket(cfg), basis));
  const Trajectory tr = evolve(rho0, net.generator, cfg.grid, obs);

  double m0_a = 0.0, m1_a = 0.0, m0_b = 0.0, m1_b = 0.0;
  for (std::size_t k = 1; k < tr.times.size(); ++k) {
    const double dt = tr.times[k] - tr.times[k - 1];
    const double fa = 0.5 * (tr.expectations[k][0].real() + tr.expectations[k - 1][0].real());
    const double fb = 0.5 * (tr.expectations[k][1].real() + tr.expectations[k - 1][1].real());
    const double tm = 0.5 * (tr.times[k] + tr.times[k - 1]);
    m0_a += fa * dt;
    m1_a += fa * tm * dt;
    m0_b += fb * dt;
    m1_b += fb * tm * dt;
  }
  if (m0_a <= 0.0 || m0_b <= 0.0) throw std::runtime_error("transparency_delay: no emission");
  return m1_b / m0_b - m1_a / m0_a;
}

// ---------------------------------------------------------------------------
// External record formats
// ---------------------------------------------------------------------------

// One row per sampled time. Columns: time in ns, the four data-qubit
// populations, the complex left/right output field amplitudes, and the
// left/right output fluxes.
inline void trajectory_to_csv(const TrajectoryResult& result, std::ostream& os) {
  os << std::setprecision(12);
  os << "t_ns,pop_q3,pop_q4,pop_q7,pop_q8,re_a_left,im_a_left,re_a_right,im_a_right,"
        "flux_left,flux_right\n";
  const auto& p = result.data_qubit_populations;
  for (std::size_t k = 0; k < result.times.size(); ++k) {
    os << result.times[k] << ',' << p[0][k] << ',' << p[1][k] << ',' << p[2][k] << ',' << p[3][k]
       << ',' << result.field_amp_left[k].real() << ',' << result.field_amp_left[k].imag() << ','
       << result.field_amp_right[k].real() << ',' << result.field_amp_right[k].imag() << ','
       << result.flux_left[k] << ',' << result.flux_right[k] << '\n';
  }
}

inline void loss_to_flat_record(const LossBreakdown& loss, std::ostream& os) {
  os << "directionality_error=" << loss.directionality_error << '\n'
     << "missed_absorption=" << loss.missed_absorption << '\n'
     << "propagation_loss=" << loss.propagation_loss << '\n'
     << "decoherence_loss=" << loss.decoherence_loss << '\n'
     << "residual=" << loss.residual << '\n';
}

}  // namespace chiralink
