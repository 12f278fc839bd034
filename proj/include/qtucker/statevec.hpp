// Copyright 2026 The qtucker Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense statevector substrate.
//
// Qubit ordering is big-endian everywhere in this library: qubit 0 is the
// most significant bit of the amplitude index, so for n qubits the index of
// basis state |b_0 b_1 ... b_{n-1}> is sum_q b_q * 2^(n-1-q). Unfoldings and
// block-local indices follow the same rule: the first listed qubit of a set
// is the most significant bit of the local index.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qtucker/error.hpp"

namespace qtucker {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kNormTolerance = 1e-10;

inline bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

inline int log2_exact(std::size_t v) {
  int k = 0;
  while ((std::size_t{1} << k) < v) ++k;
  return k;
}

/// Ordered list of distinct qubit indices.
class QubitSet {
public:
  QubitSet() = default;
  QubitSet(std::initializer_list<int> q) : members_(q) {}
  explicit QubitSet(std::vector<int> q) : members_(std::move(q)) {}

  const std::vector<int> &members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  int operator[](std::size_t i) const { return members_[i]; }
  auto begin() const { return members_.begin(); }
  auto end() const { return members_.end(); }

  bool contains(int q) const {
    return std::find(members_.begin(), members_.end(), q) != members_.end();
  }

  /// Throws DimensionMismatch unless all members are distinct and in [0, n).
  void validate(int n) const {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (int q : members_) {
      if (q < 0 || q >= n)
        throw Error(ErrorCode::DimensionMismatch,
                    "qubit " + std::to_string(q) + " out of range for " +
                        std::to_string(n) + " qubits");
      if (seen[static_cast<std::size_t>(q)])
        throw Error(ErrorCode::DimensionMismatch,
                    "duplicate qubit " + std::to_string(q));
      seen[static_cast<std::size_t>(q)] = true;
    }
  }

  /// Qubits of [0, n) not in this set, ascending.
  QubitSet complement(int n) const {
    std::vector<int> rest;
    for (int q = 0; q < n; ++q)
      if (!contains(q)) rest.push_back(q);
    return QubitSet(std::move(rest));
  }

  bool operator==(const QubitSet &) const = default;

private:
  std::vector<int> members_;
};

/// Normalized amplitude vector over n qubits.
class StateVector {
public:
  StateVector() = default;

  /// Wraps an already normalized vector; throws NotPowerOfTwo or NotNormalized.
  static StateVector from_normalized(CVector amps) {
    if (!is_power_of_two(static_cast<std::size_t>(amps.size())))
      throw Error(ErrorCode::NotPowerOfTwo,
                  "length " + std::to_string(amps.size()));
    const double norm2 = amps.squaredNorm();
    if (std::abs(norm2 - 1.0) > kNormTolerance)
      throw Error(ErrorCode::NotNormalized,
                  "squared norm " + std::to_string(norm2));
    StateVector s;
    s.n_ = log2_exact(static_cast<std::size_t>(amps.size()));
    s.amps_ = std::move(amps);
    return s;
  }

  static StateVector basis(int n, std::size_t index) {
    CVector v = CVector::Zero(Eigen::Index{1} << n);
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return from_normalized(std::move(v));
  }

  static StateVector zero(int n) { return basis(n, 0); }

  int n() const { return n_; }
  std::size_t dim() const { return static_cast<std::size_t>(amps_.size()); }
  const CVector &amps() const { return amps_; }
  cplx operator[](std::size_t i) const {
    return amps_(static_cast<Eigen::Index>(i));
  }

private:
  int n_ = 0;
  CVector amps_;
};

/// Scales v to unit norm.
inline StateVector normalize(const CVector &v) {
  if (!is_power_of_two(static_cast<std::size_t>(v.size())))
    throw Error(ErrorCode::NotPowerOfTwo, "length " + std::to_string(v.size()));
  const double norm = v.norm();
  if (!(norm >= 1e-300))
    throw Error(ErrorCode::ZeroVector, "cannot normalize a zero vector");
  return StateVector::from_normalized(v / norm);
}

inline StateVector normalize(std::span<const cplx> v) {
  CVector copy(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    copy(static_cast<Eigen::Index>(i)) = v[i];
  return normalize(copy);
}

inline cplx inner(const StateVector &a, const StateVector &b) {
  if (a.n() != b.n())
    throw Error(ErrorCode::DimensionMismatch, "inner product of " +
                                                  std::to_string(a.n()) +
                                                  " and " +
                                                  std::to_string(b.n()) +
                                                  " qubit states");
  return a.amps().dot(b.amps());
}

/// |<a|b>|^2.
inline double fidelity(const StateVector &a, const StateVector &b) {
  return std::norm(inner(a, b));
}

/// Index arithmetic for viewing the amplitude buffer as a (block x rest)
/// matrix without moving data: global index = block_offset[b] + rest_offset[r].
class BlockView {
public:
  BlockView(int n, const QubitSet &block) : n_(n) {
    block.validate(n);
    block_offsets_ = offsets_for(block.members());
    rest_offsets_ = offsets_for(block.complement(n).members());
  }

  std::size_t block_dim() const { return block_offsets_.size(); }
  std::size_t rest_dim() const { return rest_offsets_.size(); }
  const std::vector<std::size_t> &block_offsets() const { return block_offsets_; }
  const std::vector<std::size_t> &rest_offsets() const { return rest_offsets_; }

  /// Rows indexed by block-local index, columns by rest index.
  CMatrix gather(const CVector &amps) const {
    CMatrix m(static_cast<Eigen::Index>(block_dim()),
              static_cast<Eigen::Index>(rest_dim()));
    for (std::size_t r = 0; r < rest_dim(); ++r)
      for (std::size_t b = 0; b < block_dim(); ++b)
        m(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(r)) =
            amps(static_cast<Eigen::Index>(block_offsets_[b] + rest_offsets_[r]));
    return m;
  }

  void scatter(const CMatrix &m, CVector &amps) const {
    for (std::size_t r = 0; r < rest_dim(); ++r)
      for (std::size_t b = 0; b < block_dim(); ++b)
        amps(static_cast<Eigen::Index>(block_offsets_[b] + rest_offsets_[r])) =
            m(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(r));
  }

private:
  std::vector<std::size_t> offsets_for(const std::vector<int> &qubits) const {
    const std::size_t k = qubits.size();
    std::vector<std::size_t> out(std::size_t{1} << k);
    for (std::size_t local = 0; local < out.size(); ++local) {
      std::size_t global = 0;
      for (std::size_t i = 0; i < k; ++i)
        if ((local >> (k - 1 - i)) & 1U)
          global |= std::size_t{1} << (n_ - 1 - qubits[i]);
      out[local] = global;
    }
    return out;
  }

  int n_;
  std::vector<std::size_t> block_offsets_;
  std::vector<std::size_t> rest_offsets_;
};

/// The 2^|rows| x 2^(n-|rows|) unfolding with `rows` moved to the front.
inline CMatrix unfolding(const StateVector &state, const QubitSet &rows) {
  return BlockView(state.n(), rows).gather(state.amps());
}

/// Marginal on a subset of qubits.
struct DensityMatrix {
  CMatrix elements;

  Eigen::Index dim() const { return elements.rows(); }

  /// Hermitian and unit trace within `tol`; smallest eigenvalue >= -1e-10.
  bool satisfies_invariants(double tol = 1e-12) const {
    if (elements.rows() != elements.cols()) return false;
    if ((elements - elements.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
    if (std::abs(elements.trace() - cplx(1.0)) > tol) return false;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(elements, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -1e-10;
  }
};

/// Marginal on `keep` as the Gram product M M^dagger of the unfolding; the
/// full 2^n x 2^n operator is never formed.
inline DensityMatrix reduced_density(const StateVector &state, const QubitSet &keep) {
  if (keep.empty()) throw Error(ErrorCode::EmptySet, "reduced_density: empty keep set");
  if (static_cast<int>(keep.size()) > state.n())
    throw Error(ErrorCode::DimensionMismatch, "reduced_density: keep larger than state");
  const CMatrix m = unfolding(state, keep);
  DensityMatrix rho{m * m.adjoint()};
  return rho;
}

inline constexpr double kEigenClamp = 1e-12;

/// Von Neumann entropy in bits.
inline double entropy(const DensityMatrix &rho) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho.elements, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double lambda = es.eigenvalues()(i);
    if (lambda > kEigenClamp) s -= lambda * std::log2(lambda);
  }
  return std::max(0.0, s);
}

/// Singular values (descending) of the unfolding across `cut`.
inline RVector schmidt_spectrum(const StateVector &state, const QubitSet &cut) {
  if (cut.empty()) throw Error(ErrorCode::EmptySet, "schmidt_spectrum: empty cut");
  cut.validate(state.n());
  if (static_cast<int>(cut.size()) == state.n())
    throw Error(ErrorCode::FullSet, "schmidt_spectrum: cut contains every qubit");
  const CMatrix m = unfolding(state, cut);
  Eigen::BDCSVD<CMatrix> svd(m);
  return svd.singularValues();
}

/// A small unitary bound to an ordered list of qubits. `rank` records how
/// many columns are needed (trailing columns may act on a zero subspace).
struct BlockFactor {
  QubitSet qubits;
  CMatrix matrix;
  int rank = 0;

  Eigen::Index dim() const { return matrix.rows(); }
};

namespace detail {

inline StateVector apply_block_matrix(const StateVector &state, const QubitSet &qubits,
                                      const CMatrix &op) {
  const BlockView view(state.n(), qubits);
  if (static_cast<std::size_t>(op.rows()) != view.block_dim() ||
      op.rows() != op.cols())
    throw Error(ErrorCode::DimensionMismatch,
                "operator of size " + std::to_string(op.rows()) + "x" +
                    std::to_string(op.cols()) + " on " +
                    std::to_string(qubits.size()) + " qubits");
  CVector out = state.amps();
  view.scatter(op * view.gather(state.amps()), out);
  return StateVector::from_normalized(std::move(out));
}

} // namespace detail

/// W^dagger applied on the factor's qubits (core extraction direction).
inline StateVector apply_block_adjoint(const StateVector &state, const BlockFactor &factor) {
  return detail::apply_block_matrix(state, factor.qubits, factor.matrix.adjoint());
}

/// W applied on the factor's qubits (preparation direction).
inline StateVector apply_block(const StateVector &state, const BlockFactor &factor) {
  return detail::apply_block_matrix(state, factor.qubits, factor.matrix);
}

} // namespace qtucker
