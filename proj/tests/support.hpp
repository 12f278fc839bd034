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

// Shared fixtures and dense reference computations. The oracles here work
// on explicit 2^n x 2^n operators and bit loops, independent of the
// library's BlockView / Gram-product machinery.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qtucker/qtucker.hpp"

namespace qt_test {

using namespace qtucker;

inline StateVector random_state(int n, std::mt19937_64 &rng) {
  std::normal_distribution<double> g;
  CVector v(Eigen::Index{1} << n);
  for (auto &z : v) z = cplx(g(rng), g(rng));
  return normalize(v);
}

inline CMatrix haar_unitary(int d, std::mt19937_64 &rng) {
  std::normal_distribution<double> g;
  CMatrix z(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) z(i, j) = cplx(g(rng), g(rng)) / std::sqrt(2.0);
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ() * CMatrix::Identity(d, d);
  const CMatrix r = qr.matrixQR();
  for (int i = 0; i < d; ++i) q.col(i) *= r(i, i) / std::abs(r(i, i));
  return q;
}

inline StateVector ghz(int n) {
  CVector v = CVector::Zero(Eigen::Index{1} << n);
  v(0) = v(v.size() - 1) = 1.0;
  return normalize(v);
}

inline StateVector w_state(int n) {
  CVector v = CVector::Zero(Eigen::Index{1} << n);
  for (int q = 0; q < n; ++q) v(Eigen::Index{1} << (n - 1 - q)) = 1.0;
  return normalize(v);
}

inline StateVector bell() { return ghz(2); }

inline StateVector kron(const StateVector &a, const StateVector &b) {
  CVector v(static_cast<Eigen::Index>(a.dim() * b.dim()));
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < b.dim(); ++j) v(static_cast<Eigen::Index>(i * b.dim() + j)) = a[i] * b[j];
  return StateVector::from_normalized(v);
}

inline CMatrix kron(const CMatrix &a, const CMatrix &b) {
  CMatrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

inline StateVector random_product(const std::vector<int> &block_sizes, std::mt19937_64 &rng) {
  StateVector s = random_state(block_sizes[0], rng);
  for (std::size_t i = 1; i < block_sizes.size(); ++i) s = kron(s, random_state(block_sizes[i], rng));
  return s;
}

inline int bit(std::size_t idx, int n, int q) { return static_cast<int>((idx >> (n - 1 - q)) & 1U); }

/// Full 2^n operator of `u` acting on `qubits` (listed order, first = MSB).
inline CMatrix dense_operator(int n, const std::vector<int> &qubits, const CMatrix &u) {
  const std::size_t dim = std::size_t{1} << n;
  CMatrix op = CMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t col = 0; col < dim; ++col)
    for (std::size_t row = 0; row < dim; ++row) {
      bool rest_equal = true;
      for (int q = 0; q < n && rest_equal; ++q)
        if (std::find(qubits.begin(), qubits.end(), q) == qubits.end() && bit(row, n, q) != bit(col, n, q))
          rest_equal = false;
      if (!rest_equal) continue;
      int lr = 0, lc = 0;
      for (int q : qubits) {
        lr = (lr << 1) | bit(row, n, q);
        lc = (lc << 1) | bit(col, n, q);
      }
      op(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = u(lr, lc);
    }
  return op;
}

/// Partial trace of |psi><psi| onto `keep` by explicit summation.
inline CMatrix dense_marginal(const StateVector &s, const std::vector<int> &keep) {
  const int n = s.n();
  const CMatrix rho = s.amps() * s.amps().adjoint();
  const Eigen::Index d = Eigen::Index{1} << keep.size();
  CMatrix out = CMatrix::Zero(d, d);
  for (std::size_t r = 0; r < s.dim(); ++r)
    for (std::size_t c = 0; c < s.dim(); ++c) {
      bool same_rest = true;
      for (int q = 0; q < n && same_rest; ++q)
        if (std::find(keep.begin(), keep.end(), q) == keep.end() && bit(r, n, q) != bit(c, n, q)) same_rest = false;
      if (!same_rest) continue;
      int lr = 0, lc = 0;
      for (int q : keep) {
        lr = (lr << 1) | bit(r, n, q);
        lc = (lc << 1) | bit(c, n, q);
      }
      out(lr, lc) += rho(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  return out;
}

inline double max_abs(const CMatrix &m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline bool is_unitary(const CMatrix &u, double tol) {
  return u.rows() == u.cols() && max_abs(u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols())) <= tol;
}

/// Enumerates every perfect pairing of {0..n-1}.
inline void for_each_pairing(int n, const std::function<void(const std::vector<Edge> &)> &fn) {
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  std::vector<Edge> cur;
  std::function<void()> rec = [&] {
    int first = -1;
    for (int i = 0; i < n; ++i)
      if (!used[static_cast<std::size_t>(i)]) {
        first = i;
        break;
      }
    if (first < 0) {
      fn(cur);
      return;
    }
    used[static_cast<std::size_t>(first)] = true;
    for (int j = first + 1; j < n; ++j)
      if (!used[static_cast<std::size_t>(j)]) {
        used[static_cast<std::size_t>(j)] = true;
        cur.emplace_back(first, j);
        rec();
        cur.pop_back();
        used[static_cast<std::size_t>(j)] = false;
      }
    used[static_cast<std::size_t>(first)] = false;
  };
  rec();
}

inline double pairing_weight(const RMatrix &w, const std::vector<Edge> &p) {
  double s = 0.0;
  for (const auto &[a, b] : p) s += w(a, b);
  return s;
}

inline double best_pairing_weight(const RMatrix &w) {
  double best = -1.0;
  for_each_pairing(static_cast<int>(w.rows()), [&](const std::vector<Edge> &p) {
    best = std::max(best, pairing_weight(w, p));
  });
  return best;
}

/// Maximizing pairing by exhaustive enumeration (first found on ties).
inline std::vector<Edge> best_pairing(const RMatrix &w) {
  double best = -1.0;
  std::vector<Edge> arg;
  for_each_pairing(static_cast<int>(w.rows()), [&](const std::vector<Edge> &p) {
    const double v = pairing_weight(w, p);
    if (v > best) {
      best = v;
      arg = p;
    }
  });
  return arg;
}

inline CorrelationGraph random_graph(int n, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CorrelationGraph g;
  g.n = n;
  g.metric = Metric::FrobeniusDistance;
  g.weights = RMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.weights(i, j) = g.weights(j, i) = u(rng);
  g.edges = complete_edges(n);
  return g;
}

inline Partition make_partition(std::vector<std::vector<int>> blocks) {
  Partition p;
  for (auto &b : blocks) {
    p.block_size_max = std::max(p.block_size_max, static_cast<int>(b.size()));
    p.blocks.emplace_back(std::move(b));
  }
  return p;
}

/// Applies a plan's layers to |0...0> by dense operator products.
inline CVector dense_prepare(const CircuitPlan &plan) {
  CVector v = plan.residual_core ? plan.residual_core->amps() : StateVector::zero(plan.n).amps();
  for (auto l = plan.layers.rbegin(); l != plan.layers.rend(); ++l)
    for (const auto &f : l->factors) v = dense_operator(plan.n, f.qubits.members(), f.matrix) * v;
  return v;
}

} // namespace qt_test
