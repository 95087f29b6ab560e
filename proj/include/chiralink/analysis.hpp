// State metrics (fidelity, Wootters concurrence), entangled target states
// (module Bell pairs, the four-data-qubit W state with its propagation
// phase), deterministic shot sampling, and linear-inversion tomography.
//
// Copyright (c) 2026 the chiralink authors
// SPDX-License-Identifier: MIT
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chiralink/qops.hpp"
#include "chiralink/rng.hpp"

namespace chiralink {

// Overlap fidelity F = <target|rho|target> for a pure target.
inline double fidelity(const DensityMatrix& rho, const Ket& target) {
  if (rho.rows() != target.size() || rho.cols() != target.size())
    throw std::invalid_argument("fidelity: dimension mismatch");
  return (target.adjoint() * rho * target)(0, 0).real();
}

// Wootters concurrence of a two-qubit state: max(0, l1 - l2 - l3 - l4) with
// l_i the decreasing square roots of the eigenvalues of rho * rho_tilde,
// rho_tilde = (sy (x) sy) conj(rho) (sy (x) sy).
inline double concurrence(const DensityMatrix& rho) {
  if (rho.rows() != 4 || rho.cols() != 4)
    throw std::invalid_argument("concurrence: requires a two-qubit (4x4) state");
  const Operator yy = kron(sigma_y(), sigma_y());
  const Operator rho_tilde = yy * rho.conjugate() * yy;
  Eigen::ComplexEigenSolver<Operator> solver(rho * rho_tilde, false);
  std::vector<double> lambda;
  for (int i = 0; i < 4; ++i)
    lambda.push_back(std::sqrt(std::max(0.0, solver.eigenvalues()(i).real())));
  std::sort(lambda.begin(), lambda.end(), std::greater<double>());
  return std::max(0.0, lambda[0] - lambda[1] - lambda[2] - lambda[3]);
}

// The four-data-qubit target of the half-emission protocol, in qubit order
// (Q3, Q4, Q7, Q8): an equal superposition of the module Bell pair staying
// on the emitter and appearing on the absorber,
//   |W+-> = [ e^{-+ikd} (|eggg> +- i|gegg>) + (|ggeg> +- i|ggge>) ] / 2.
// The absorbed half leads by the propagation phase e^{ikd} accumulated over
// the inter-module distance; pulling out a global phase puts e^{-+ikd} on
// the emitter half. sign = +1 selects the rightward pair flavor
// (|10> + i|01>), sign = -1 the leftward one.
inline Ket w_target(int sign, double kd) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("w_target: sign must be +-1");
  const Complex s(0.0, static_cast<double>(sign));
  const Ket half_emit = ket_from_string("eggg") + s * ket_from_string("gegg");
  const Ket half_catch = ket_from_string("ggeg") + s * ket_from_string("ggge");
  return 0.5 * (std::exp(-s * kd) * half_emit + half_catch);
}

// A projective-measurement record in the computational basis. Keys are
// bitstrings with site 0 leftmost, '0' = ground; only observed outcomes
// appear. sum(counts) == shots.
struct ShotRecord {
  std::map<std::string, long> counts;
  long shots = 0;
  uint64_t seed = 0;
};

namespace detail {
inline int sites_of_dim(Eigen::Index dim, const char* who) {
  int n = 0;
  while ((Eigen::Index(1) << n) < dim) ++n;
  if ((Eigen::Index(1) << n) != dim)
    throw std::invalid_argument(std::string(who) + ": dimension is not a power of two");
  return n;
}

inline std::string bitstring_of_index(Eigen::Index idx, int n) {
  std::string s(n, '0');
  for (int site = 0; site < n; ++site)
    if ((idx >> (n - 1 - site)) & 1) s[site] = '1';
  return s;
}
}  // namespace detail

// Multinomial draw of n shots from the computational-basis diagonal of rho
// (negative numerical dust is clamped). Deterministic in (rho, n, seed).
inline ShotRecord sample_shots(const DensityMatrix& rho, long n, uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_shots: need at least one shot");
  const int n_sites = detail::sites_of_dim(rho.rows(), "sample_shots");
  std::vector<double> probs(rho.rows());
  for (Eigen::Index i = 0; i < rho.rows(); ++i) probs[i] = std::max(0.0, rho(i, i).real());
  SplitMix64 rng(seed);
  const std::vector<long> counts = multinomial_counts(probs, n, rng);
  ShotRecord rec;
  rec.shots = n;
  rec.seed = seed;
  for (size_t i = 0; i < counts.size(); ++i)
    if (counts[i] > 0)
      rec.counts[detail::bitstring_of_index(static_cast<Eigen::Index>(i), n_sites)] = counts[i];
  return rec;
}

// Flat text serialization: one "bitstring,count" line per observed outcome,
// sorted by bitstring.
inline std::string to_counts_text(const ShotRecord& rec) {
  std::ostringstream out;
  for (const auto& [bits, count] : rec.counts) out << bits << "," << count << "\n";
  return out.str();
}

inline Operator pauli_site_op(char c) {
  switch (c) {
    case 'I': return identity_op(2);
    case 'X': return sigma_x();
    case 'Y': return sigma_y();
    case 'Z': return sigma_z();
    default: throw std::invalid_argument("pauli_site_op: label must be one of I,X,Y,Z");
  }
}

// Tensor product of single-site Paulis; character 0 acts on site 0.
inline Operator pauli_string_op(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("pauli_string_op: empty string");
  Operator op = Operator::Identity(1, 1);
  for (char c : s) op = kron(op, pauli_site_op(c));
  return op;
}

namespace detail {
inline void enumerate_pauli_strings(int n, std::vector<std::string>& out) {
  static const char kAlphabet[4] = {'I', 'X', 'Y', 'Z'};
  out.clear();
  const long total = 1L << (2 * n);
  for (long code = 0; code < total; ++code) {
    std::string s(n, 'I');
    long c = code;
    for (int site = n - 1; site >= 0; --site) {
      s[site] = kAlphabet[c & 3];
      c >>= 2;
    }
    out.push_back(std::move(s));
  }
}
}  // namespace detail

// Exact expectation values <P> = tr(P rho) for every n-site Pauli string.
inline std::map<std::string, double> exact_pauli_expectations(const DensityMatrix& rho) {
  const int n = detail::sites_of_dim(rho.rows(), "exact_pauli_expectations");
  std::vector<std::string> strings;
  detail::enumerate_pauli_strings(n, strings);
  std::map<std::string, double> out;
  for (const auto& s : strings) out[s] = expect(pauli_string_op(s), rho).real();
  return out;
}

// Pauli expectations estimated from finite projective-measurement statistics:
// for each string, the state is rotated into that string's eigenbasis,
// sampled, and the +-1 parity over the non-identity sites averaged. One
// deterministic sub-seed per measurement setting.
inline std::map<std::string, double> sampled_pauli_expectations(const DensityMatrix& rho,
                                                                long shots_per_setting,
                                                                uint64_t seed) {
  const int n = detail::sites_of_dim(rho.rows(), "sampled_pauli_expectations");
  std::vector<std::string> strings;
  detail::enumerate_pauli_strings(n, strings);

  // Single-site rotations onto the measurement basis: U P U^+ = Z.
  const Operator h = (Operator(2, 2) << 1, 1, 1, -1).finished() / std::sqrt(2.0);
  const Operator s_dag = (Operator(2, 2) << 1, 0, 0, Complex(0, -1)).finished();
  auto basis_rotation = [&](char c) -> Operator {
    if (c == 'X') return h;
    if (c == 'Y') return h * s_dag;
    return identity_op(2);
  };

  std::map<std::string, double> out;
  for (size_t k = 0; k < strings.size(); ++k) {
    const std::string& s = strings[k];
    if (s.find_first_not_of('I') == std::string::npos) {
      out[s] = 1.0;
      continue;
    }
    Operator u = Operator::Identity(1, 1);
    for (char c : s) u = kron(u, basis_rotation(c));
    const DensityMatrix rotated = u * rho * u.adjoint();
    const ShotRecord rec =
        sample_shots(rotated, shots_per_setting, mix_seed(seed, static_cast<uint64_t>(k)));
    double acc = 0.0;
    for (const auto& [bits, count] : rec.counts) {
      int parity = 0;
      for (int site = 0; site < n; ++site)
        if (s[site] != 'I' && bits[site] == '1') parity ^= 1;
      acc += (parity ? -1.0 : 1.0) * static_cast<double>(count);
    }
    out[s] = acc / static_cast<double>(shots_per_setting);
  }
  return out;
}

// Linear-inversion tomography: rho = 2^{-n} sum_P <P> P over the complete
// Pauli basis. The result is Hermitian with unit trace when <II..I> = 1 but
// is NOT guaranteed positive; report the deficit via min_eigenvalue.
inline Operator linear_inversion(const std::map<std::string, double>& expectations) {
  if (expectations.empty()) throw std::invalid_argument("linear_inversion: no expectations");
  const int n = static_cast<int>(expectations.begin()->first.size());
  std::vector<std::string> strings;
  detail::enumerate_pauli_strings(n, strings);
  if (expectations.size() != strings.size())
    throw std::invalid_argument("linear_inversion: incomplete Pauli basis");
  const Eigen::Index dim = Eigen::Index(1) << n;
  Operator rho = Operator::Zero(dim, dim);
  for (const auto& s : strings) {
    const auto it = expectations.find(s);
    if (it == expectations.end())
      throw std::invalid_argument("linear_inversion: missing Pauli string " + s);
    rho += it->second * pauli_string_op(s);
  }
  return rho / static_cast<double>(dim);
}

}  // namespace chiralink
