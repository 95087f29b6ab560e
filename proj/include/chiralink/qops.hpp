// chiralink: dense complex operator algebra on multi-qubit Hilbert spaces.
//
// Copyright (c) 2026 the chiralink authors
// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cassert>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace chiralink {

using Complex = std::complex<double>;
// Domain types. Operator is a dense complex square matrix (dimension = rows);
// DensityMatrix is an Operator that is trace-1, Hermitian, PSD (validated by
// the checkers below where states are produced); Ket is a unit column vector.
using Operator = Eigen::MatrixXcd;
using DensityMatrix = Eigen::MatrixXcd;
using Ket = Eigen::VectorXcd;

inline const Complex kI{0.0, 1.0};

// Basis convention: |g> = (1,0), |e> = (0,1); sigma^- |e> = |g>;
// sigma_z |g> = +|g>, sigma_z |e> = -|e>.
inline Operator identity_op(int dim) { return Operator::Identity(dim, dim); }

inline Operator sigma_minus() {
  Operator s = Operator::Zero(2, 2);
  s(0, 1) = 1.0;  // |g><e|
  return s;
}

inline Operator sigma_plus() {
  Operator s = Operator::Zero(2, 2);
  s(1, 0) = 1.0;  // |e><g|
  return s;
}

inline Operator sigma_x() {
  Operator s = Operator::Zero(2, 2);
  s(0, 1) = 1.0;
  s(1, 0) = 1.0;
  return s;
}

inline Operator sigma_y() {
  // With |g> = (1,0) listed first, sigma_y = [[0, -i], [i, 0]] in this basis.
  Operator s = Operator::Zero(2, 2);
  s(0, 1) = -kI;
  s(1, 0) = kI;
  return s;
}

inline Operator sigma_z() {
  Operator s = Operator::Zero(2, 2);
  s(0, 0) = 1.0;
  s(1, 1) = -1.0;
  return s;
}

// Excited-state projector sigma^+ sigma^- = |e><e|.
inline Operator number_op_site() {
  Operator s = Operator::Zero(2, 2);
  s(1, 1) = 1.0;
  return s;
}

inline Operator dagger(const Operator& a) { return a.adjoint(); }

inline Operator kron(const Operator& a, const Operator& b) {
  Operator out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Embeds a single-site (2x2) operator at `index` of an n-site register.
// Site 0 is the leftmost / most significant position in basis labeling.
inline Operator embed(const Operator& site_op, int index, int n) {
  assert(site_op.rows() == 2 && site_op.cols() == 2 && "embed wants a 2x2 op!");
  if (index < 0 || index >= n) throw std::out_of_range("embed: site index out of range");
  Operator out = identity_op(1);
  for (int k = 0; k < n; ++k)
    out = kron(out, k == index ? site_op : identity_op(2));
  return out;
}

inline int num_sites(const Operator& op) {
  int n = 0;
  Eigen::Index d = op.rows();
  while (d > 1) {
    assert(d % 2 == 0 && "operator dimension must be a power of 2!");
    d /= 2;
    ++n;
  }
  return n;
}

// Computational-basis ket of an n-site register from a bitmask where bit k
// (counting from the most significant site 0) set means site k is excited.
inline Ket basis_ket(int n, unsigned mask) {
  Ket v = Ket::Zero(1 << n);
  // Site 0 is most significant: its bit contributes 2^(n-1) to the index.
  unsigned idx = 0;
  for (int k = 0; k < n; ++k)
    if (mask & (1u << k)) idx |= 1u << (n - 1 - k);
  v(idx) = 1.0;
  return v;
}

inline Ket ground_ket(int n) { return basis_ket(n, 0u); }

// Ket from a left-to-right label over sites 0..n-1, e.g. "eg" = site 0
// excited, site 1 ground. Accepts 'g'/'0' and 'e'/'1'.
inline Ket ket_from_string(const std::string& label) {
  const int n = static_cast<int>(label.size());
  unsigned mask = 0;
  for (int k = 0; k < n; ++k) {
    const char c = label[k];
    if (c == 'e' || c == '1')
      mask |= 1u << k;
    else if (c != 'g' && c != '0')
      throw std::invalid_argument("ket_from_string: label chars must be g/e/0/1");
  }
  return basis_ket(n, mask);
}

inline DensityMatrix ket_to_density(const Ket& psi) { return psi * psi.adjoint(); }

inline Complex expect(const Operator& op, const DensityMatrix& rho) {
  if (op.rows() != rho.rows()) throw std::invalid_argument("expect: dimension mismatch");
  return (op * rho).trace();
}

inline Complex expect_ket(const Operator& op, const Ket& psi) {
  if (op.rows() != psi.size()) throw std::invalid_argument("expect_ket: dimension mismatch");
  return psi.adjoint() * op * psi;
}

// Generalized dissipator D[a,b] rho = a rho b^dag - (1/2)(b^dag a rho + rho b^dag a).
// With a = b this is the standard Lindblad dissipator; correlated terms (a != b)
// must be paired with their Hermitian conjugates by the caller.
inline Operator dissipator(const Operator& a, const Operator& b, const DensityMatrix& rho) {
  if (a.rows() != rho.rows() || b.rows() != rho.rows())
    throw std::invalid_argument("dissipator: dimension mismatch");
  Operator bda = b.adjoint() * a;
  return a * rho * b.adjoint() - 0.5 * (bda * rho + rho * bda);
}

// Traces out all sites not in `keep` (keep: nonempty, strictly increasing site
// indices). Output ordering keeps the relative order of the kept sites.
inline DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep) {
  const int n = num_sites(rho);
  if (keep.empty()) throw std::invalid_argument("partial_trace: keep set is empty");
  for (size_t i = 0; i < keep.size(); ++i) {
    if (keep[i] < 0 || keep[i] >= n) throw std::invalid_argument("partial_trace: site out of range");
    if (i > 0 && keep[i] <= keep[i - 1])
      throw std::invalid_argument("partial_trace: keep must be strictly increasing");
  }
  const int nk = static_cast<int>(keep.size());
  const int dk = 1 << nk;
  std::vector<int> traced;
  for (int s = 0; s < n; ++s)
    if (std::find(keep.begin(), keep.end(), s) == keep.end()) traced.push_back(s);
  const int dt = 1 << traced.size();

  auto full_index = [&](int keep_bits, int traced_bits) {
    // keep_bits/traced_bits are big-endian within their own subsets.
    unsigned idx = 0;
    for (int i = 0; i < nk; ++i)
      if (keep_bits & (1 << (nk - 1 - i))) idx |= 1u << (n - 1 - keep[i]);
    for (size_t i = 0; i < traced.size(); ++i)
      if (traced_bits & (1 << (static_cast<int>(traced.size()) - 1 - static_cast<int>(i))))
        idx |= 1u << (n - 1 - traced[i]);
    return idx;
  };

  DensityMatrix out = DensityMatrix::Zero(dk, dk);
  for (int r = 0; r < dk; ++r)
    for (int c = 0; c < dk; ++c) {
      Complex acc = 0.0;
      for (int t = 0; t < dt; ++t) acc += rho(full_index(r, t), full_index(c, t));
      out(r, c) = acc;
    }
  return out;
}

// --------------------------------------------------------------- validators

inline double trace_error(const DensityMatrix& rho) { return std::abs(rho.trace() - Complex(1.0)); }

inline double hermiticity_error(const DensityMatrix& rho) {
  return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

inline double min_eigenvalue(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (rho + rho.adjoint()));
  return es.eigenvalues().minCoeff();
}

inline bool is_valid_density(const DensityMatrix& rho, double trace_tol = 1e-8,
                             double herm_tol = 1e-10, double eig_tol = -1e-7) {
  return trace_error(rho) <= trace_tol && hermiticity_error(rho) <= herm_tol &&
         min_eigenvalue(rho) >= eig_tol;
}

// ----------------------------------------------- excitation-sector restriction
//
// The undriven protocol generators conserve total excitation number (exchange
// Hamiltonians; lowering-only jump operators; sigma_z dephasing), so dynamics
// started in the <= k excitation sector stay there. Restricting the dense
// operators to that sector keeps the integrator dense and exact while cutting
// the 2^n dimension to sum_{j<=k} C(n,j) (n = 8, k = 1: dim 9).

struct ExcitationBasis {
  int n_sites = 0;
  int max_excitation = 0;
  std::vector<unsigned> states;   // full-space basis indices, ascending
  std::vector<int> index_of;      // full index -> restricted index, -1 if absent
};

inline ExcitationBasis make_excitation_basis(int n_sites, int max_excitation) {
  ExcitationBasis b;
  b.n_sites = n_sites;
  b.max_excitation = max_excitation;
  const unsigned dim = 1u << n_sites;
  b.index_of.assign(dim, -1);
  for (unsigned s = 0; s < dim; ++s) {
    if (__builtin_popcount(s) <= max_excitation) {
      b.index_of[s] = static_cast<int>(b.states.size());
      b.states.push_back(s);
    }
  }
  return b;
}

inline Operator restrict_operator(const Operator& full, const ExcitationBasis& b) {
  const int d = static_cast<int>(b.states.size());
  Operator out(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) out(r, c) = full(b.states[r], b.states[c]);
  return out;
}

inline Ket restrict_ket(const Ket& full, const ExcitationBasis& b) {
  const int d = static_cast<int>(b.states.size());
  Ket out(d);
  for (int r = 0; r < d; ++r) out(r) = full(b.states[r]);
  return out;
}

inline DensityMatrix lift_density(const DensityMatrix& restricted, const ExcitationBasis& b) {
  const unsigned dim = 1u << b.n_sites;
  DensityMatrix out = DensityMatrix::Zero(dim, dim);
  const int d = static_cast<int>(b.states.size());
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) out(b.states[r], b.states[c]) = restricted(r, c);
  return out;
}

// True when the operator maps the restricted sector into itself (no matrix
// element connects inside to outside), so restriction is exact for it.
inline bool leaves_sector_invariant(const Operator& full, const ExcitationBasis& b,
                                    double tol = 1e-14) {
  // Leakage means a nonzero element <outside|O|inside>; elements mapping
  // outside -> inside are benign for evolutions that never populate outside.
  const unsigned dim = 1u << b.n_sites;
  for (unsigned r = 0; r < dim; ++r) {
    if (b.index_of[r] >= 0) continue;  // row inside the sector
    for (unsigned c = 0; c < dim; ++c)
      if (b.index_of[c] >= 0 && std::abs(full(r, c)) > tol) return false;
  }
  return true;
}

}  // namespace chiralink
