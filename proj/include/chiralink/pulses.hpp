// Photon wavepacket and coupling-envelope closed forms, the segmented I/Q
// pulse parameterization searched by the optimizer, and an optional
// control-line distortion model.
//
// Copyright (c) 2026 the chiralink authors
// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chiralink/qops.hpp"

namespace chiralink {

// f(t) = (sqrt(gamma_ph)/2) sech(gamma_ph t / 2): time-symmetric single-photon
// amplitude envelope normalized so that the integral of f^2 over all t is 1.
inline double sech_photon(double t, double gamma_ph) {
  if (gamma_ph <= 0.0) throw std::invalid_argument("sech_photon: gamma_ph must be positive");
  const double x = 0.5 * gamma_ph * t;
  // sech via exponentials of -|x| only (never overflows).
  const double e = std::exp(-std::abs(x));
  const double sech = 2.0 * e / (1.0 + e * e);
  return 0.5 * std::sqrt(gamma_ph) * sech;
}

// General pointwise emission envelope: the coupling g that makes a module with
// collective emission rate gamma radiate the target amplitude profile f(t),
// where fdot = df/dt and big_f = int_{-inf}^t f^2 dt'. Returns 0 once the
// target is unreachable (denominator <= 0, i.e. the profile has been fully
// emitted or demands more amplitude than the stored excitation supports).
inline double emission_coupling(double f, double fdot, double big_f, double gamma) {
  const double den2 = gamma * (1.0 - big_f) - f * f;
  if (den2 <= 0.0) return 0.0;
  return (fdot + 0.5 * gamma * f) / std::sqrt(den2);
}

// General pointwise catch envelope: the coupling g that makes the module
// absorb an incoming amplitude profile u(t) without reflection, where
// udot = du/dt and big_u = int_{-inf}^t u^2 dt'. Returns 0 when the module
// already holds all arrived amplitude (denominator <= 0).
inline double catch_coupling(double u, double udot, double big_u, double gamma) {
  const double den2 = gamma * big_u - u * u;
  if (den2 <= 0.0) return 0.0;
  return (0.5 * gamma * u - udot) / std::sqrt(den2);
}

// Closed-form coupling envelope g(t) that emits the sech photon of rate
// gamma_ph from a module with collective emission rate gamma. Derived from
// emission_coupling with f = sech_photon; written in terms of (1 - tanh) and
// (gamma - gamma_ph) so no catastrophic cancellation occurs anywhere, and the
// t -> +inf plateau (gamma_ph/2) sqrt(gamma/gamma_ph - 1) is reached smoothly.
inline double ideal_coupling(double t, double gamma, double gamma_ph) {
  if (gamma_ph <= 0.0) throw std::invalid_argument("ideal_coupling: gamma_ph must be positive");
  if (gamma_ph > gamma)
    throw std::invalid_argument("ideal_coupling: gamma_ph must not exceed gamma");
  const double x = gamma_ph * t;
  // 1 - tanh(x/2) and sech(x/2) via e^{-|x|}; exact rewrites, stable for all x.
  const double e = std::exp(-std::abs(x));
  const double one_minus_tanh = (x >= 0.0) ? 2.0 * e / (1.0 + e) : 2.0 / (1.0 + e);
  const double sech = 2.0 * std::exp(-0.5 * std::abs(x)) / (1.0 + e);
  const double f = 0.5 * std::sqrt(gamma_ph) * sech;
  const double dgamma = gamma - gamma_ph;  // >= 0
  const double num = f * (0.5 * dgamma + 0.5 * gamma_ph * one_minus_tanh);
  const double den2 = one_minus_tanh * (0.5 * dgamma + 0.25 * gamma_ph * one_minus_tanh);
  if (den2 <= 0.0) {
    // Underflow of 1 - tanh at extreme arguments: the analytic limit.
    return (dgamma > 0.0) ? 0.5 * gamma_ph * std::sqrt(gamma / gamma_ph - 1.0) : 0.0;
  }
  return num / std::sqrt(den2);
}

// Emission envelope switched off at t_stop (models stopping the coupler pulse
// partway through an emission).
inline double truncated_coupling(double t, double gamma, double gamma_ph, double t_stop) {
  return (t < t_stop) ? ideal_coupling(t, gamma, gamma_ph) : 0.0;
}

// ---------------------------------------------------------------------------
// Segmented pulse parameterization
// ---------------------------------------------------------------------------

// Four coupler envelopes — two emission (wg1<->data1, wg2<->data2 on module A)
// and two absorption (module B) — each eight time segments of I and Q
// amplitude, plus one detuning and one phase per envelope and one global
// delay shifting the absorption envelopes. 4*8*2 + 4 + 4 + 1 = 73 searched
// parameters; total_duration and the amplitude bound are configuration.
struct PulseSet {
  static constexpr int kEnvelopes = 4;
  static constexpr int kSegments = 8;
  static constexpr int kParamCount = kEnvelopes * kSegments * 2 + kEnvelopes + kEnvelopes + 1;

  double seg_i[kEnvelopes][kSegments] = {};  // rad/ns
  double seg_q[kEnvelopes][kSegments] = {};  // rad/ns
  double detuning[kEnvelopes] = {};          // rad/ns
  double phase[kEnvelopes] = {};             // rad
  double global_delay = 0.0;                 // ns, applied to absorption envelopes
  double total_duration = 200.0;             // ns (configuration, not searched)
  double g_max = 0.15;                       // rad/ns amplitude bound (configuration)

  std::array<double, kParamCount> to_flat() const {
    std::array<double, kParamCount> out{};
    int k = 0;
    for (int e = 0; e < kEnvelopes; ++e)
      for (int s = 0; s < kSegments; ++s) {
        out[k++] = seg_i[e][s];
        out[k++] = seg_q[e][s];
      }
    for (int e = 0; e < kEnvelopes; ++e) out[k++] = detuning[e];
    for (int e = 0; e < kEnvelopes; ++e) out[k++] = phase[e];
    out[k++] = global_delay;
    return out;
  }

  // Inverse of to_flat. Segment amplitudes are clamped to [-g_max, g_max] so
  // optimizer proposals always respect the configured bound.
  void from_flat(const std::array<double, kParamCount>& p) {
    auto clamp = [this](double v) { return std::min(g_max, std::max(-g_max, v)); };
    int k = 0;
    for (int e = 0; e < kEnvelopes; ++e)
      for (int s = 0; s < kSegments; ++s) {
        seg_i[e][s] = clamp(p[k++]);
        seg_q[e][s] = clamp(p[k++]);
      }
    for (int e = 0; e < kEnvelopes; ++e) detuning[e] = p[k++];
    for (int e = 0; e < kEnvelopes; ++e) phase[e] = p[k++];
    global_delay = p[k++];
  }

  static std::string param_name(int index) {
    constexpr const char* kNames[kEnvelopes] = {"c13", "c24", "c57", "c68"};
    const int n_seg = kEnvelopes * kSegments * 2;
    if (index < 0 || index >= kParamCount) throw std::out_of_range("PulseSet: bad parameter index");
    if (index < n_seg) {
      const int e = index / (kSegments * 2);
      const int r = index % (kSegments * 2);
      return std::string(kNames[e]) + "_seg" + std::to_string(r / 2) + (r % 2 ? "_q" : "_i");
    }
    int k = index - n_seg;
    if (k < kEnvelopes) return std::string(kNames[k]) + "_detuning";
    k -= kEnvelopes;
    if (k < kEnvelopes) return std::string(kNames[k]) + "_phase";
    return "global_delay";
  }
};

namespace detail {

// Fritsch–Carlson monotone piecewise-cubic tangents for uniformly spaced
// nodes, with flat tangents forced at both endpoints.
inline std::array<double, PulseSet::kSegments> monotone_tangents(
    const std::array<double, PulseSet::kSegments>& y, double h) {
  constexpr int n = PulseSet::kSegments;
  std::array<double, n - 1> d{};
  for (int k = 0; k + 1 < n; ++k) d[k] = (y[k + 1] - y[k]) / h;
  std::array<double, n> m{};
  m[0] = 0.0;
  m[n - 1] = 0.0;
  for (int k = 1; k + 1 < n; ++k)
    m[k] = (d[k - 1] * d[k] <= 0.0) ? 0.0 : 0.5 * (d[k - 1] + d[k]);
  for (int k = 0; k + 1 < n; ++k) {
    if (d[k] == 0.0) {
      m[k] = 0.0;
      m[k + 1] = 0.0;
      continue;
    }
    const double a = m[k] / d[k], b = m[k + 1] / d[k];
    const double s = a * a + b * b;
    if (s > 9.0) {
      const double tau = 3.0 / std::sqrt(s);
      m[k] = tau * a * d[k];
      m[k + 1] = tau * b * d[k];
    }
  }
  return m;
}

inline double hermite(double y0, double y1, double m0, double m1, double h, double s) {
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * m0 + (-2 * s3 + 3 * s2) * y1 +
         (s3 - s2) * h * m1;
}

inline double interpolate_channel(const std::array<double, PulseSet::kSegments>& y, double h,
                                  double first_node, double t) {
  constexpr int n = PulseSet::kSegments;
  if (t <= first_node) return y[0];
  const double last_node = first_node + (n - 1) * h;
  if (t >= last_node) return y[n - 1];
  const auto m = monotone_tangents(y, h);
  const int k = std::min(n - 2, static_cast<int>((t - first_node) / h));
  const double s = (t - (first_node + k * h)) / h;
  return hermite(y[k], y[k + 1], m[k], m[k + 1], h, s);
}

}  // namespace detail

// Complex envelope value at time t in [0, total_duration]: monotone cubic
// through the eight segment midpoints (I and Q channels independently, flat
// tangents at the end nodes, constant shoulders to the window edges), then
// multiplied by e^{i(detuning t + phase)}. Throws outside the window.
inline Complex segmented_envelope(const PulseSet& ps, int which, double t) {
  if (which < 0 || which >= PulseSet::kEnvelopes)
    throw std::out_of_range("segmented_envelope: envelope id");
  if (t < 0.0 || t > ps.total_duration)
    throw std::out_of_range("segmented_envelope: t outside [0, total_duration]");
  const double h = ps.total_duration / PulseSet::kSegments;
  const double first_node = 0.5 * h;
  std::array<double, PulseSet::kSegments> yi{}, yq{};
  for (int s = 0; s < PulseSet::kSegments; ++s) {
    yi[s] = ps.seg_i[which][s];
    yq[s] = ps.seg_q[which][s];
  }
  const Complex base(detail::interpolate_channel(yi, h, first_node, t),
                     detail::interpolate_channel(yq, h, first_node, t));
  return base * std::exp(kI * (ps.detuning[which] * t + ps.phase[which]));
}

// Closure form used by the integrator: zero outside the pulse window, and the
// absorption envelopes (ids 2, 3) are evaluated at t - global_delay.
inline std::function<Complex(double)> envelope_closure(const PulseSet& ps, int which) {
  if (which < 0 || which >= PulseSet::kEnvelopes)
    throw std::out_of_range("envelope_closure: envelope id");
  const PulseSet copy = ps;
  const double delay = (which >= 2) ? ps.global_delay : 0.0;
  return [copy, which, delay](double t) -> Complex {
    const double u = t - delay;
    if (u < 0.0 || u > copy.total_duration) return Complex(0.0, 0.0);
    return segmented_envelope(copy, which, u);
  };
}

// ---------------------------------------------------------------------------
// Distortion model
// ---------------------------------------------------------------------------

// Single-pole low-pass (time constant tau_lp), cubic amplitude compression
// y(1 - cubic (|y|/peak)^2) with peak the input's maximum modulus, and a
// static phase offset. Stands in for control-line distortion between the
// requested and the realized coupler envelope.
struct DistortionModel {
  double tau_lp = 0.0;        // ns
  double cubic = 0.0;         // dimensionless
  double phase_offset = 0.0;  // rad

  bool is_identity() const { return tau_lp == 0.0 && cubic == 0.0 && phase_offset == 0.0; }
};

// Applies the model to an envelope supported on [0, t_end]. The low-pass is a
// first-order IIR on a uniform grid of step h; the result interpolates those
// samples linearly and is zero outside [0, t_end]. A zero model returns the
// input unchanged; a pure phase offset is applied exactly.
inline std::function<Complex(double)> distort(std::function<Complex(double)> env,
                                              const DistortionModel& model, double t_end,
                                              double h = 0.05) {
  if (model.tau_lp < 0.0) throw std::invalid_argument("distort: negative time constant");
  if (model.is_identity()) return env;
  const Complex rot = std::exp(kI * model.phase_offset);
  if (model.tau_lp == 0.0 && model.cubic == 0.0) {
    return [env, rot](double t) { return rot * env(t); };
  }
  const int n = static_cast<int>(std::ceil(t_end / h)) + 1;
  std::vector<Complex> x(n);
  double peak = 0.0;
  for (int k = 0; k < n; ++k) {
    x[k] = env(k * h);
    peak = std::max(peak, std::abs(x[k]));
  }
  std::vector<Complex> y(n);
  const double alpha = (model.tau_lp > 0.0) ? h / (model.tau_lp + h) : 1.0;
  Complex acc(0.0, 0.0);
  for (int k = 0; k < n; ++k) {
    acc += alpha * (x[k] - acc);
    y[k] = acc;
  }
  if (model.cubic != 0.0 && peak > 0.0) {
    for (int k = 0; k < n; ++k) {
      const double r = std::abs(y[k]) / peak;
      y[k] *= (1.0 - model.cubic * r * r);
    }
  }
  for (int k = 0; k < n; ++k) y[k] *= rot;
  return [y = std::move(y), h, t_end](double t) -> Complex {
    if (t < 0.0 || t > t_end) return Complex(0.0, 0.0);
    const double s = t / h;
    const int k = std::min(static_cast<int>(y.size()) - 2, static_cast<int>(s));
    const double w = s - k;
    return (1.0 - w) * y[k] + w * y[k + 1];
  };
}

// Seeds a PulseSet from the analytic envelopes: emission couplers follow
// ideal_coupling(t - center), absorption couplers its time reversal, sampled
// at the segment midpoints. Detunings, phases, and delay start at zero.
inline PulseSet seed_pulse_set(double gamma, double gamma_ph, double total_duration = 200.0,
                               double center = 100.0) {
  PulseSet ps;
  ps.total_duration = total_duration;
  const double h = total_duration / PulseSet::kSegments;
  for (int s = 0; s < PulseSet::kSegments; ++s) {
    const double t = (s + 0.5) * h - center;
    const double emit = ideal_coupling(t, gamma, gamma_ph);
    const double grab = ideal_coupling(-t, gamma, gamma_ph);
    ps.seg_i[0][s] = emit;
    ps.seg_i[1][s] = emit;
    ps.seg_i[2][s] = grab;
    ps.seg_i[3][s] = grab;
  }
  return ps;
}

}  // namespace chiralink
