// chiralink: fixed-step RK4 integration of Lindblad master equations with
// time-dependent Hamiltonian envelopes, plus a no-jump pure-state fast path.
//
// Copyright (c) 2026 the chiralink authors
// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "chiralink/qops.hpp"

namespace chiralink {

// One dissipative channel: rate * (a rho b^+ - (1/2){b^+ a, rho}).
// Standard channels have a == b; correlated cross terms (a != b) must be
// registered in Hermitian-conjugate pairs by the builder that creates them.
struct LindbladTerm {
  double rate = 0.0;
  Operator a, b;
};

using EnvelopeFn = std::function<Complex(double)>;

// Adds env(t) * op + conj(env(t)) * op^+ to the Hamiltonian. A Hermitian
// operator with a real envelope therefore contributes twice the envelope;
// builders account for that factor.
struct TimeDependentTerm {
  EnvelopeFn envelope;
  Operator op;
};

struct GeneratorSpec {
  Operator h_static;
  std::vector<TimeDependentTerm> h_time_dependent;
  std::vector<LindbladTerm> lindblad_terms;

  int dim() const { return static_cast<int>(h_static.rows()); }
};

struct TimeGrid {
  double t_start = 0.0;
  double t_end = 0.0;
  double dt = 0.05;
  int sample_stride = 1;

  int n_steps() const {
    const double span = t_end - t_start;
    if (dt <= 0.0) throw std::invalid_argument("TimeGrid: dt must be positive");
    const double raw = span / dt;
    const int n = static_cast<int>(std::lround(raw));
    if (n < 0 || std::abs(n * dt - span) > 1e-9 * std::max(1.0, std::abs(span)))
      throw std::invalid_argument("TimeGrid: span must be an integer number of steps");
    return n;
  }
};

struct Trajectory {
  std::vector<double> times;
  // expectations[sample][observable]
  std::vector<std::vector<Complex>> expectations;
  std::vector<DensityMatrix> snapshots;  // filled only when requested
  DensityMatrix final_state;
  double max_trace_drift = 0.0;
  double max_hermiticity_error = 0.0;
};

namespace detail {

// Preprocessed dissipator data: adjoints and b^+ a products are static.
struct ChannelCache {
  double rate;
  Operator a, b_adj, bda;
};

class Rhs {
 public:
  Rhs(const GeneratorSpec& gen) : gen_(gen) {
    const int d = gen.dim();
    if (gen.h_static.rows() != d || gen.h_static.cols() != d)
      throw std::invalid_argument("GeneratorSpec: h_static must be square");
    for (const auto& t : gen.lindblad_terms) {
      if (t.a.rows() != d || t.b.rows() != d)
        throw std::invalid_argument("GeneratorSpec: channel dimension mismatch");
      // Diagonal terms (a == b) must carry non-negative rates to generate a
      // completely positive map; cross terms may be negative (they pair up).
      if (t.rate < 0.0 && (t.a - t.b).cwiseAbs().maxCoeff() < 1e-14)
        throw std::invalid_argument("GeneratorSpec: negative rate on a diagonal channel");
      channels_.push_back({t.rate, t.a, Operator(t.b.adjoint()), Operator(t.b.adjoint() * t.a)});
    }
    h_ = Operator(d, d);
    tmp1_ = Operator(d, d);
    tmp2_ = Operator(d, d);
  }

  // out = -i[H(t), rho] + sum_k rate_k D[a_k, b_k] rho
  void operator()(double t, const DensityMatrix& rho, Operator& out) {
    build_h(t);
    tmp1_.noalias() = h_ * rho;
    tmp2_.noalias() = rho * h_;
    out = -kI * (tmp1_ - tmp2_);
    for (const auto& ch : channels_) {
      tmp1_.noalias() = ch.a * rho;
      tmp2_.noalias() = tmp1_ * ch.b_adj;
      out += ch.rate * tmp2_;
      tmp1_.noalias() = ch.bda * rho;
      tmp2_.noalias() = rho * ch.bda;
      out -= (0.5 * ch.rate) * (tmp1_ + tmp2_);
    }
  }

  const Operator& hamiltonian(double t) {
    build_h(t);
    return h_;
  }

 private:
  void build_h(double t) {
    h_ = gen_.h_static;
    for (const auto& term : gen_.h_time_dependent) {
      const Complex e = term.envelope(t);
      h_ += e * term.op;
      h_ += std::conj(e) * term.op.adjoint();
    }
  }

  const GeneratorSpec& gen_;
  std::vector<ChannelCache> channels_;
  Operator h_, tmp1_, tmp2_;
};

}  // namespace detail

// Integrates d rho / dt = -i[H(t), rho] + sum_k rate_k D[a_k, b_k] rho with
// classic RK4 at fixed step; envelopes are evaluated at the RK4 substage
// times t, t + dt/2, t + dt. The trace is never renormalized — drift is
// recorded so callers can assert integration quality instead of hiding it.
inline Trajectory evolve(const DensityMatrix& rho0, const GeneratorSpec& gen, const TimeGrid& grid,
                         const std::vector<Operator>& observables = {},
                         bool store_snapshots = false) {
  const int d = gen.dim();
  if (rho0.rows() != d || rho0.cols() != d)
    throw std::invalid_argument("evolve: state dimension mismatch");
  detail::Rhs rhs(gen);
  const int n = grid.n_steps();
  const double h = grid.dt;

  DensityMatrix rho = rho0;
  Operator k1(d, d), k2(d, d), k3(d, d), k4(d, d);
  DensityMatrix stage(d, d);

  Trajectory out;
  const double trace0 = rho0.trace().real();

  auto record = [&](int step) {
    const double t = grid.t_start + step * h;
    out.times.push_back(t);
    std::vector<Complex> row;
    row.reserve(observables.size());
    for (const auto& ob : observables) row.push_back((ob * rho).trace());
    out.expectations.push_back(std::move(row));
    if (store_snapshots) out.snapshots.push_back(rho);
    const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (herm > out.max_hermiticity_error) out.max_hermiticity_error = herm;
  };

  record(0);
  for (int s = 0; s < n; ++s) {
    const double t = grid.t_start + s * h;
    rhs(t, rho, k1);
    stage = rho + (0.5 * h) * k1;
    rhs(t + 0.5 * h, stage, k2);
    stage = rho + (0.5 * h) * k2;
    rhs(t + 0.5 * h, stage, k3);
    stage = rho + h * k3;
    rhs(t + h, stage, k4);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const double tr = rho.trace().real();
    if (!std::isfinite(tr)) throw std::runtime_error("evolve: state became non-finite");
    const double drift = std::abs(tr - trace0);
    if (drift > out.max_trace_drift) out.max_trace_drift = drift;

    if ((s + 1) % grid.sample_stride == 0 || s + 1 == n) record(s + 1);
  }
  out.final_state = rho;
  return out;
}

// Richardson-style step-size diagnostic: integrates to t_end with dt and
// dt/2 and returns half the trace-norm distance between the final states.
// For RK4 the estimate shrinks ~16x when dt is halved.
inline double step_error_estimate(const DensityMatrix& rho0, const GeneratorSpec& gen,
                                  const TimeGrid& grid) {
  TimeGrid fine = grid;
  fine.dt = grid.dt / 2.0;
  fine.sample_stride = 2 * grid.sample_stride;
  const DensityMatrix a = evolve(rho0, gen, grid).final_state;
  const DensityMatrix b = evolve(rho0, gen, fine).final_state;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
      Eigen::MatrixXcd(0.5 * ((a - b) + (a - b).adjoint())));
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// ------------------------------------------------------------ pure-state path
//
// When every channel has a == b and the initial state is pure, the master
// equation solution decomposes as rho(t) = |phi(t)><phi(t)| + (leaked weight
// reaching known absorbing states). The no-jump component obeys
//   i d phi / dt = (H(t) - (i/2) sum_k rate_k a_k^+ a_k) phi
// exactly, and for the transfer protocol every jump lands in the vacuum, so
// site populations are recovered from |phi|^2 alone. Callers must check that
// structure applies; this routine only verifies a == b.

struct KetTrajectory {
  std::vector<double> times;
  std::vector<std::vector<Complex>> expectations;  // raw <phi|O|phi>, unnormalized
  std::vector<double> norms;                       // <phi|phi> at sample times
  Ket final_ket;
};

inline KetTrajectory evolve_effective_ket(const Ket& psi0, const GeneratorSpec& gen,
                                          const TimeGrid& grid,
                                          const std::vector<Operator>& observables = {}) {
  const int d = gen.dim();
  if (psi0.size() != d) throw std::invalid_argument("evolve_effective_ket: dimension mismatch");
  Operator damp = Operator::Zero(d, d);
  for (const auto& term : gen.lindblad_terms) {
    if ((term.a - term.b).cwiseAbs().maxCoeff() > 1e-14)
      throw std::invalid_argument("evolve_effective_ket: correlated channels unsupported");
    damp += term.rate * (term.a.adjoint() * term.a);
  }

  detail::Rhs rhs(gen);  // reused only for H(t) assembly
  const int n = grid.n_steps();
  const double h = grid.dt;

  Ket phi = psi0;
  Ket k1(d), k2(d), k3(d), k4(d), stage(d);
  KetTrajectory out;

  auto deriv = [&](double t, const Ket& p, Ket& slope) {
    const Operator& ham = rhs.hamiltonian(t);
    slope.noalias() = ham * p;
    slope = -kI * slope;
    slope.noalias() -= 0.5 * (damp * p);
  };

  auto record = [&](int step) {
    out.times.push_back(grid.t_start + step * h);
    std::vector<Complex> row;
    row.reserve(observables.size());
    for (const auto& ob : observables) row.push_back(Complex(phi.adjoint() * ob * phi));
    out.expectations.push_back(std::move(row));
    out.norms.push_back(phi.squaredNorm());
  };

  record(0);
  for (int s = 0; s < n; ++s) {
    const double t = grid.t_start + s * h;
    deriv(t, phi, k1);
    stage = phi + (0.5 * h) * k1;
    deriv(t + 0.5 * h, stage, k2);
    stage = phi + (0.5 * h) * k2;
    deriv(t + 0.5 * h, stage, k3);
    stage = phi + h * k3;
    deriv(t + h, stage, k4);
    phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(phi.squaredNorm()))
      throw std::runtime_error("evolve_effective_ket: state became non-finite");
    if ((s + 1) % grid.sample_stride == 0 || s + 1 == n) record(s + 1);
  }
  out.final_ket = phi;
  return out;
}

}  // namespace chiralink
