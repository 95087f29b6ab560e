// Elastic scattering: the closed-form single-qubit transmission (optical
// Bloch equations, bidirectional coupling), attenuation extraction from the
// four-scan power calibration, the module's all-pass transparency phase, and
// driven steady-state transmission of the cascaded four-qubit system.
//
// Copyright (c) 2026 the chiralink authors
// SPDX-License-Identifier: MIT
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "chiralink/lindblad.hpp"
#include "chiralink/network.hpp"
#include "chiralink/qops.hpp"
#include "chiralink/slh.hpp"

namespace chiralink {

// Transmission of a weak-to-moderate coherent probe past a single
// bidirectionally coupled qubit,
//   S21 = 1 - gamma (1 - i delta/gamma_2)
//             / (2 gamma_2 (1 + (delta/gamma_2)^2 + Omega_p^2/(Gamma_1 gamma_2))),
// where Gamma_1 = gamma + gamma_nr is the total relaxation rate and
// gamma_2 = Gamma_1/2 + gamma_phi the total transverse rate. Non-radiative
// decay enters through the poles (the equation-of-motion form); the emission
// numerator keeps the waveguide rate gamma alone.
inline Complex s21_single(double delta, double omega_p, double gamma, double gamma_phi = 0.0,
                          double gamma_nr = 0.0) {
  if (!(gamma > 0.0)) throw std::invalid_argument("s21_single: gamma must be positive");
  const double gamma_1 = gamma + gamma_nr;
  const double gamma_2 = 0.5 * gamma_1 + gamma_phi;
  const double x = delta / gamma_2;
  const double saturation = 1.0 + x * x + omega_p * omega_p / (gamma_1 * gamma_2);
  return 1.0 - gamma * (1.0 - kI * x) / (2.0 * gamma_2 * saturation);
}

// Attenuation between the modules from the four spectroscopy scans:
// eta^2 = (Omega_1L Omega_5R) / (Omega_1R Omega_5L). The per-qubit
// transduction factors and unknown line powers cancel in the ratio.
inline double extract_eta2(double omega_1l, double omega_1r, double omega_5l, double omega_5r) {
  for (double w : {omega_1l, omega_1r, omega_5l, omega_5r})
    if (!(w > 0.0)) throw std::invalid_argument("extract_eta2: drive strengths must be positive");
  return (omega_1l * omega_5r) / (omega_1r * omega_5l);
}

// Phase imparted on a directional photon crossing a resonant, non-absorbing
// module: theta(delta) = 2 atan(2 delta / gamma), i.e. the phase of the
// all-pass response (gamma/2 + i delta)/(gamma/2 - i delta).
inline double transparency_phase(double delta, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("transparency_phase: gamma must be positive");
  return 2.0 * std::atan(2.0 * delta / gamma);
}

// Group delay d theta / d delta at delta = 0 of the all-pass response.
inline double transparency_group_delay(double gamma) {
  if (!(gamma > 0.0))
    throw std::invalid_argument("transparency_group_delay: gamma must be positive");
  return 4.0 / gamma;
}

struct ScatterPoint {
  double detuning = 0.0;  // rad/ns
  double omega_p = 0.0;   // drive strength, rad/ns (defined through Q1's gamma)
  Complex s21{0.0, 0.0};
  bool converged = false;
};

struct ModuleResponse {
  Complex t{0.0, 0.0};
  Complex r{0.0, 0.0};
  bool converged = false;
};

namespace detail {

// Integrates the driven master equation from the ground state until two
// successive checkpoints 50/gamma apart agree to trace distance 1e-7.
struct SteadyState {
  DensityMatrix rho;
  bool converged = false;
};

inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  Eigen::SelfAdjointEigenSolver<Operator> solver(a - b);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

inline SteadyState relax_to_steady(const GeneratorSpec& gen, double gamma_scale, double dt,
                                   int max_chunks = 12, double tol = 1e-7) {
  const double span = 50.0 / gamma_scale;
  const long steps = std::max<long>(1, static_cast<long>(std::ceil(span / dt)));
  dt = span / static_cast<double>(steps);
  const double chunk = span;
  SteadyState out;
  out.rho = ket_to_density(ground_ket(num_sites(gen.h_static)));
  double t0 = 0.0;
  for (int c = 0; c < max_chunks; ++c) {
    const TimeGrid grid{t0, t0 + chunk, dt, 1 << 30};
    const Trajectory tr = evolve(out.rho, gen, grid);
    const double dist = trace_distance(tr.final_state, out.rho);
    out.rho = tr.final_state;
    t0 += chunk;
    if (c > 0 && dist <= tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace detail

// Driven steady-state transmission of the cascaded four-qubit system on a
// (detuning x power) grid, rightward probe. The drive amplitude follows
// alpha = omega_p / sqrt(2 gamma_1); S21 = (eta alpha + <j_R>)/alpha with
// j_R the composite rightward output field (the input-output relation with
// the global propagation phase removed). Points are row-major in detuning.
inline std::vector<ScatterPoint> sweep_four_qubit(const DeviceParams& device,
                                                  const std::vector<double>& detunings,
                                                  const std::vector<double>& omega_ps) {
  std::vector<ScatterPoint> out;
  const double gamma_min = *std::min_element(device.gamma.begin(), device.gamma.end());
  for (double delta : detunings) {
    for (double omega_p : omega_ps) {
      const Complex alpha(omega_p / std::sqrt(2.0 * device.gamma[0]), 0.0);
      const NetworkSpec net = build_waveguide_only(device, Direction::kRight, alpha, delta);
      // Resolve the decay, drive, and detuning-rotation scales.
      const double dt = std::min(0.1, 0.25 / (gamma_min + std::abs(delta) + omega_p));
      const detail::SteadyState ss = detail::relax_to_steady(net.generator, gamma_min, dt);
      ScatterPoint pt;
      pt.detuning = delta;
      pt.omega_p = omega_p;
      pt.converged = ss.converged;
      pt.s21 = (device.eta * alpha + expect(net.jump_right, ss.rho)) / alpha;
      out.push_back(pt);
    }
  }
  return out;
}

// Steady-state response of a single two-qubit module under a rightward
// probe: transmission t = 1 + <j_R>/alpha and reflection r = <j_L>/alpha
// (leftward output carries no input term). Optional non-radiative decay on
// the waveguide qubits enters as an extra local damping channel.
inline ModuleResponse module_response(double gamma_a, double gamma_b, double delta, Complex alpha,
                                      double gamma_nr = 0.0,
                                      double intra_phase = 1.5707963267948966) {
  const int n = 2, dim = 4;
  const SLHTriplet drv = element_drive(alpha, dim);
  const SLHTriplet mod_r =
      element_module(Direction::kRight, 0, 1, gamma_a, gamma_b, delta, n, intra_phase);
  const SLHTriplet mod_l =
      element_module(Direction::kLeft, 0, 1, gamma_a, gamma_b, 0.0, n, intra_phase);
  const SLHTriplet g = concat(series(mod_r, drv), mod_l);
  GeneratorSpec gen = lower(g);
  if (gamma_nr > 0.0) {
    for (int s = 0; s < 2; ++s) {
      const Operator sm = embed(sigma_minus(), s, n);
      gen.lindblad_terms.push_back({gamma_nr, sm, sm});
    }
  }
  const double gamma_scale = std::min(gamma_a, gamma_b);
  const double dt = std::min(
      0.1, 0.25 / (gamma_scale + std::abs(delta) + std::abs(alpha) * std::sqrt(gamma_a)));
  const detail::SteadyState ss = detail::relax_to_steady(gen, gamma_scale, dt);

  const Operator j_r = directional_jump(Direction::kRight, 0, 1, gamma_a, gamma_b, n, intra_phase);
  const Operator j_l = directional_jump(Direction::kLeft, 0, 1, gamma_a, gamma_b, n, intra_phase);
  ModuleResponse resp;
  resp.converged = ss.converged;
  resp.t = 1.0 + expect(j_r, ss.rho) / alpha;
  resp.r = expect(j_l, ss.rho) / alpha;
  return resp;
}

}  // namespace chiralink
