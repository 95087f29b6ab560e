// chiralink: SLH input-output network composition (series/concatenation
// products over scalar scattering matrices) and lowering of a composed
// triplet to a master-equation generator.
//
// Copyright (c) 2026 the chiralink authors
// SPDX-License-Identifier: MIT
#pragma once

#include <vector>

#include "chiralink/lindblad.hpp"
#include "chiralink/qops.hpp"

namespace chiralink {

enum class Direction { kLeft, kRight };

// (S, L, H) with a scalar scattering matrix: every network element here
// (phase, beam splitter, module coupling, coherent drive) scatters fields
// linearly with c-number coefficients, so S is numeric. Coupling operators
// may carry an identity component (coherent displacement) — lower() peels
// it off into an equivalent Hamiltonian drive.
struct SLHTriplet {
  Eigen::MatrixXcd s;       // n_ports x n_ports
  std::vector<Operator> l;  // n_ports entries, each dim x dim
  Operator h;               // dim x dim

  int n_ports() const { return static_cast<int>(l.size()); }
  int dim() const { return static_cast<int>(h.rows()); }
};

// Series product: the output fields of `upstream` feed the inputs of
// `downstream`. Port counts and Hilbert space dimensions must match.
//   S = S2 S1,  L_i = sum_j S2(i,j) L1_j + L2_i,
//   H = H1 + H2 + (1/2i) sum_ij (L2_i^+ S2(i,j) L1_j - h.c.)
inline SLHTriplet series(const SLHTriplet& downstream, const SLHTriplet& upstream) {
  const int p = upstream.n_ports();
  if (downstream.n_ports() != p) throw std::invalid_argument("series: port count mismatch");
  const int d = upstream.dim();
  if (downstream.dim() != d) throw std::invalid_argument("series: dimension mismatch");

  SLHTriplet out;
  out.s = downstream.s * upstream.s;
  out.l.reserve(p);
  for (int i = 0; i < p; ++i) {
    Operator li = downstream.l[i];
    for (int j = 0; j < p; ++j) li += downstream.s(i, j) * upstream.l[j];
    out.l.push_back(std::move(li));
  }
  Operator x = Operator::Zero(d, d);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      x += downstream.s(i, j) * (downstream.l[i].adjoint() * upstream.l[j]);
  out.h = upstream.h + downstream.h + Operator((x - x.adjoint()) / (2.0 * kI));
  return out;
}

// Concatenation product: independent port stacks, first argument's ports
// first; Hamiltonians add (operators live on the same Hilbert space).
inline SLHTriplet concat(const SLHTriplet& a, const SLHTriplet& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("concat: dimension mismatch");
  SLHTriplet out;
  const int pa = a.n_ports(), pb = b.n_ports();
  out.s = Eigen::MatrixXcd::Zero(pa + pb, pa + pb);
  out.s.topLeftCorner(pa, pa) = a.s;
  out.s.bottomRightCorner(pb, pb) = b.s;
  out.l = a.l;
  out.l.insert(out.l.end(), b.l.begin(), b.l.end());
  out.h = a.h + b.h;
  return out;
}

// ----------------------------------------------------------------- elements

// Propagation phase e^{i kd} applied to every port.
inline SLHTriplet element_phase(double kd, int n_ports, int dim) {
  SLHTriplet g;
  g.s = std::exp(kI * kd) * Eigen::MatrixXcd::Identity(n_ports, n_ports);
  g.l.assign(n_ports, Operator::Zero(dim, dim));
  g.h = Operator::Zero(dim, dim);
  return g;
}

// Two-port loss beam splitter with transmission amplitude eta: port 0 is the
// through line, port 1 the loss tap.
inline SLHTriplet element_beamsplitter(double eta, int dim) {
  if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("element_beamsplitter: eta in [0,1]");
  const double kappa = std::sqrt(1.0 - eta * eta);
  SLHTriplet g;
  g.s = Eigen::MatrixXcd(2, 2);
  g.s << Complex(eta), Complex(-kappa), Complex(kappa), Complex(eta);
  g.l.assign(2, Operator::Zero(dim, dim));
  g.h = Operator::Zero(dim, dim);
  return g;
}

// Coherent input of amplitude alpha on port 0 of a two-port line.
inline SLHTriplet element_drive(Complex alpha, int dim) {
  SLHTriplet g;
  g.s = Eigen::MatrixXcd::Identity(2, 2);
  g.l = {Operator(alpha * Operator::Identity(dim, dim)), Operator::Zero(dim, dim)};
  g.h = Operator::Zero(dim, dim);
  return g;
}

// Directional collective coupling operator of one module: the pair of
// waveguide qubits a quarter wavelength apart radiates into one direction
// through sqrt(g_a/2) sm_a + e^{+-i phi} sqrt(g_b/2) sm_b (+ for leftward,
// - for rightward; phi = pi/2 ideally).
inline Operator directional_jump(Direction dir, int site_a, int site_b, double gamma_a,
                                 double gamma_b, int n_sites, double intra_phase = 1.5707963267948966) {
  const Complex phase = std::exp((dir == Direction::kLeft ? kI : -kI) * intra_phase);
  return std::sqrt(gamma_a / 2.0) * embed(sigma_minus(), site_a, n_sites) +
         phase * std::sqrt(gamma_b / 2.0) * embed(sigma_minus(), site_b, n_sites);
}

// Two-port module triplet: coupling operator on port 0, nothing on port 1,
// detuning Hamiltonian -(delta/2)(sz_a + sz_b) in the ground-(+1) sigma_z
// convention (delta = qubit minus drive frequency, so the excited level sits
// delta above the rotating frame).
inline SLHTriplet element_module(Direction dir, int site_a, int site_b, double gamma_a,
                                 double gamma_b, double delta, int n_sites,
                                 double intra_phase = 1.5707963267948966) {
  const int dim = 1 << n_sites;
  SLHTriplet g;
  g.s = Eigen::MatrixXcd::Identity(2, 2);
  g.l = {directional_jump(dir, site_a, site_b, gamma_a, gamma_b, n_sites, intra_phase),
         Operator::Zero(dim, dim)};
  g.h = -(delta / 2.0) *
        (embed(sigma_z(), site_a, n_sites) + embed(sigma_z(), site_b, n_sites));
  return g;
}

// ------------------------------------------------------------------ lowering

// Converts a composed triplet into a master-equation generator. Each L entry
// is split as L_i = c_i + beta_i I (physical coupling operators are
// traceless, so beta_i = tr(L_i)/dim); the displacement re-enters as the
// exact Hamiltonian term -(i/2)(beta_i c_i^+ - conj(beta_i) c_i), since
// D[c + beta] rho = D[c] rho - i [H_d, rho].
inline GeneratorSpec lower(const SLHTriplet& g) {
  const int d = g.dim();
  GeneratorSpec spec;
  spec.h_static = g.h;
  for (const auto& entry : g.l) {
    const Complex beta = entry.trace() / static_cast<double>(d);
    Operator c = entry - beta * Operator::Identity(d, d);
    if (std::abs(beta) > 0.0) {
      spec.h_static +=
          Operator((-0.5 * kI) * (beta * c.adjoint()) + (0.5 * kI) * (std::conj(beta) * c));
    }
    if (c.cwiseAbs().maxCoeff() > 0.0) spec.lindblad_terms.push_back({1.0, c, c});
  }
  return spec;
}

// Max-norm distance between two operators after optimally aligning a global
// phase on `b` (phase chosen to maximize Re tr(b^+ a)); used to compare
// compositions whose entries are only defined up to a propagation phase.
inline double phase_aligned_distance(const Operator& a, const Operator& b) {
  const Complex overlap = (b.adjoint() * a).trace();
  if (std::abs(overlap) < 1e-300) return std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  const Complex phase = overlap / std::abs(overlap);
  return (a - phase * b).cwiseAbs().maxCoeff();
}

}  // namespace chiralink
