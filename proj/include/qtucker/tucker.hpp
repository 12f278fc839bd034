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

// One Tucker iteration on a fixed partition.
//
// Given the current core |G> and blocks B_1..B_m, a step
//   1. finds unit vectors u_i maximizing |<u_1 (x) ... (x) u_m | G>| (the
//      entanglement eigenvalue alpha) by alternating maximization,
//   2. computes the HOSVD factor of every block (left singular vectors of
//      the block unfolding),
//   3. rotates each factor so that its first column is exactly u_i, and
//   4. returns the new core (W_1 (x) ... (x) W_m)^dagger |G>.
// Because W_i |0> = u_i, the new core satisfies <0|G'> = alpha.

#pragma once

#include <Eigen/QR>

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "qtucker/corrgraph.hpp"
#include "qtucker/statevec.hpp"

namespace qtucker {

inline constexpr double kOrthonormalTolerance = 1e-10;
inline constexpr double kRankTolerance = 1e-10;

/// Result of the closest block-product search.
struct ProductApprox {
  double alpha = 0.0;
  std::vector<CVector> vectors; // one unit vector per block
  // alpha after every sweep of every initialization, when requested
  std::vector<std::vector<double>> sweep_history;
};

struct ClosestProductOptions {
  int restarts = 8;
  double tol = 1e-12;
  int max_sweeps = 500;
  std::uint64_t seed = 0;
  bool record_sweeps = false;
  // initializations tried before the random ones
  std::vector<std::vector<CVector>> seeds;
};

namespace detail {

/// Core amplitudes laid out block-major: the flat index is the mixed-radix
/// number (b_1, ..., b_m) of the block-local indices, b_1 most significant.
struct BlockTensor {
  std::vector<std::size_t> dims;
  CVector data;
};

inline BlockTensor block_tensor(const StateVector &core, const Partition &p) {
  const int n = core.n();
  BlockTensor t;
  std::vector<std::vector<std::size_t>> offsets;
  for (const auto &b : p.blocks) {
    const BlockView view(n, b);
    offsets.push_back(view.block_offsets());
    t.dims.push_back(view.block_dim());
  }
  t.data.resize(static_cast<Eigen::Index>(core.dim()));
  const std::size_t m = t.dims.size();
  std::vector<std::size_t> digit(m, 0);
  std::size_t global = 0;
  for (std::size_t flat = 0; flat < core.dim(); ++flat) {
    t.data(static_cast<Eigen::Index>(flat)) = core[global];
    // odometer increment, last block fastest
    for (std::size_t i = m; i-- > 0;) {
      global -= offsets[i][digit[i]];
      if (++digit[i] < t.dims[i]) {
        global += offsets[i][digit[i]];
        break;
      }
      digit[i] = 0;
      global += offsets[i][0];
    }
  }
  return t;
}

/// Contracts every mode except `keep` with conj(u_j); returns a vector of
/// length dims[keep].
inline CVector contract_all_but(const BlockTensor &t, const std::vector<CVector> &u,
                                std::size_t keep) {
  const std::size_t m = t.dims.size();
  CVector cur = t.data;
  std::size_t size = static_cast<std::size_t>(cur.size());
  // trailing modes
  for (std::size_t i = m; i-- > keep + 1;) {
    const std::size_t d = t.dims[i];
    const std::size_t outer = size / d;
    CVector next(static_cast<Eigen::Index>(outer));
    const cplx *src = cur.data();
    const cplx *ui = u[i].data();
    for (std::size_t o = 0; o < outer; ++o) {
      cplx acc = 0.0;
      for (std::size_t b = 0; b < d; ++b) acc += std::conj(ui[b]) * src[o * d + b];
      next(static_cast<Eigen::Index>(o)) = acc;
    }
    cur = std::move(next);
    size = outer;
  }
  // leading modes
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t d = t.dims[i];
    const std::size_t inner = size / d;
    CVector next = CVector::Zero(static_cast<Eigen::Index>(inner));
    const cplx *src = cur.data();
    const cplx *ui = u[i].data();
    for (std::size_t b = 0; b < d; ++b) {
      const cplx c = std::conj(ui[b]);
      for (std::size_t r = 0; r < inner; ++r) next(static_cast<Eigen::Index>(r)) += c * src[b * inner + r];
    }
    cur = std::move(next);
    size = inner;
  }
  return cur;
}

inline cplx product_overlap(const BlockTensor &t, const std::vector<CVector> &u) {
  const CVector last = contract_all_but(t, u, 0);
  return u[0].dot(last);
}

inline CVector random_unit(std::size_t d, std::mt19937_64 &rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CVector v(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cplx(g(rng), g(rng));
  return v / v.norm();
}

} // namespace detail

/// Block vectors |0>_B for every block of `p`.
inline std::vector<CVector> zero_product(const Partition &p) {
  std::vector<CVector> out;
  for (const auto &b : p.blocks) {
    CVector v = CVector::Zero(Eigen::Index{1} << b.size());
    v(0) = 1.0;
    out.push_back(std::move(v));
  }
  return out;
}

/// Alternating maximization of |<u_1 (x) ... (x) u_m | core>| over unit u_i.
/// Every sweep is non-decreasing in alpha, so the result is a lower bound on
/// the entanglement eigenvalue. Phases are fixed so that the overlap is real
/// and nonnegative.
inline ProductApprox closest_product(const StateVector &core, const Partition &p,
                                     const ClosestProductOptions &opt = {}) {
  p.validate(core.n());
  const detail::BlockTensor t = detail::block_tensor(core, p);
  const std::size_t m = t.dims.size();

  std::vector<std::vector<CVector>> inits = opt.seeds;
  std::mt19937_64 rng(opt.seed);
  for (int r = 0; r < opt.restarts; ++r) {
    std::vector<CVector> u;
    for (std::size_t i = 0; i < m; ++i) u.push_back(detail::random_unit(t.dims[i], rng));
    inits.push_back(std::move(u));
  }
  if (inits.empty()) inits.push_back(zero_product(p));

  ProductApprox best;
  best.alpha = -1.0;
  for (auto &u : inits) {
    if (u.size() != m)
      throw Error(ErrorCode::DimensionMismatch, "seed has wrong number of blocks");
    for (std::size_t i = 0; i < m; ++i) {
      if (static_cast<std::size_t>(u[i].size()) != t.dims[i])
        throw Error(ErrorCode::DimensionMismatch, "seed vector has wrong dimension");
      const double nv = u[i].norm();
      if (nv > 0.0) u[i] /= nv;
    }
    std::vector<double> history;
    double alpha = std::abs(detail::product_overlap(t, u));
    if (opt.record_sweeps) history.push_back(alpha);
    for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
      double current = alpha;
      for (std::size_t i = 0; i < m; ++i) {
        const CVector v = detail::contract_all_but(t, u, i);
        const double nv = v.norm();
        if (nv > 0.0) {
          u[i] = v / nv;
          current = nv;
        }
      }
      if (opt.record_sweeps) history.push_back(current);
      const bool done = std::abs(current - alpha) < opt.tol;
      alpha = current;
      if (done) break;
    }
    alpha = std::abs(detail::product_overlap(t, u));
    if (opt.record_sweeps) best.sweep_history.push_back(std::move(history));
    if (alpha > best.alpha) {
      best.alpha = alpha;
      best.vectors = u;
    }
  }

  const cplx ov = detail::product_overlap(t, best.vectors);
  if (std::abs(ov) > 0.0) best.vectors[0] *= ov / std::abs(ov);
  best.alpha = std::abs(ov);
  return best;
}

namespace detail {

/// Makes the largest-magnitude entry of each column real positive and
/// orders columns of (numerically) equal singular value by that entry's row.
inline void canonicalize_columns(CMatrix &u, const RVector &sv) {
  const Eigen::Index d = u.cols();
  std::vector<Eigen::Index> pivot(static_cast<std::size_t>(d));
  for (Eigen::Index c = 0; c < d; ++c) {
    Eigen::Index r = 0;
    u.col(c).cwiseAbs().maxCoeff(&r);
    pivot[static_cast<std::size_t>(c)] = r;
    const cplx z = u(r, c);
    if (std::abs(z) > 0.0) u.col(c) *= std::conj(z) / std::abs(z);
  }
  Eigen::Index start = 0;
  while (start < d) {
    Eigen::Index end = start + 1;
    while (end < d && std::abs(sv(end - 1) - sv(end)) < kRankTolerance) ++end;
    if (end - start > 1) {
      std::vector<Eigen::Index> order;
      for (Eigen::Index c = start; c < end; ++c) order.push_back(c);
      std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return pivot[static_cast<std::size_t>(a)] < pivot[static_cast<std::size_t>(b)];
      });
      const CMatrix block = u.middleCols(start, end - start);
      for (Eigen::Index c = start; c < end; ++c)
        u.col(c) = block.col(order[static_cast<std::size_t>(c - start)] - start);
    }
    start = end;
  }
}

/// Extends orthonormal columns `a` (d x r) to a d x d unitary whose first r
/// columns equal `a`.
inline CMatrix complete_to_unitary(const CMatrix &a) {
  const Eigen::Index d = a.rows(), r = a.cols();
  if (r == d) return a;
  Eigen::HouseholderQR<CMatrix> qr(a);
  CMatrix q = qr.householderQ() * CMatrix::Identity(d, d);
  q.leftCols(r) = a;
  return q;
}

} // namespace detail

/// Full left singular basis of each block unfolding, columns ordered by
/// descending singular value. `rank` counts singular values >= 1e-10.
inline std::vector<BlockFactor> hosvd_factors(const StateVector &core, const Partition &p) {
  p.validate(core.n());
  std::vector<BlockFactor> out;
  for (const auto &b : p.blocks) {
    const CMatrix m = unfolding(core, b);
    const Eigen::Index d = m.rows(), rest = m.cols();
    BlockFactor f;
    f.qubits = b;
    if (d <= rest) {
      Eigen::SelfAdjointEigenSolver<CMatrix> es(m * m.adjoint());
      CMatrix u = es.eigenvectors().rowwise().reverse();
      RVector sv = es.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
      detail::canonicalize_columns(u, sv);
      f.rank = static_cast<int>((sv.array() >= kRankTolerance).count());
      f.matrix = std::move(u);
    } else {
      // wide block: singular vectors from the small Gram matrix, then complete
      Eigen::SelfAdjointEigenSolver<CMatrix> es(m.adjoint() * m);
      const RVector ev = es.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
      const CMatrix v = es.eigenvectors().rowwise().reverse();
      Eigen::Index r = 0;
      while (r < ev.size() && ev(r) >= kRankTolerance) ++r;
      CMatrix lead(d, std::max<Eigen::Index>(r, 1));
      if (r == 0) {
        lead.setZero();
        lead(0, 0) = 1.0;
      } else {
        lead = m * v.leftCols(r) * ev.head(r).cwiseInverse().asDiagonal();
        Eigen::HouseholderQR<CMatrix> qr(lead);
        const CMatrix q = qr.householderQ() * CMatrix::Identity(d, r);
        const CMatrix rr = qr.matrixQR().topLeftCorner(r, r).triangularView<Eigen::Upper>();
        lead = q;
        for (Eigen::Index c = 0; c < r; ++c) {
          const cplx z = rr(c, c);
          if (std::abs(z) > 0.0) lead.col(c) *= z / std::abs(z);
        }
      }
      f.rank = static_cast<int>(r);
      f.matrix = detail::complete_to_unitary(lead);
    }
    out.push_back(std::move(f));
  }
  return out;
}

namespace detail {

inline bool probe_unitary(const CMatrix &w) {
  // W^dagger W x == x on fixed probes; O(d^2) instead of forming W^dagger W
  const Eigen::Index d = w.rows();
  for (int k = 0; k < 2; ++k) {
    CVector x(d);
    for (Eigen::Index i = 0; i < d; ++i)
      x(i) = cplx(std::cos(1.0 + 0.7 * static_cast<double>(i) + k), std::sin(0.3 * static_cast<double>(i * i) - k));
    const CVector back = w.adjoint() * (w * x);
    if ((back - x).norm() > 1e-12 * x.norm()) return false;
  }
  return true;
}

/// Sequential modified Gram-Schmidt of `candidates` after the columns
/// already in `out`; stops once `out` is square.
inline void mgs_fill(CMatrix &out, Eigen::Index &filled, const CMatrix &candidates) {
  const Eigen::Index d = out.rows();
  for (Eigen::Index i = 0; i < candidates.cols() && filled < d; ++i) {
    CVector q = candidates.col(i);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index j = 0; j < filled; ++j) q -= out.col(j) * out.col(j).dot(q);
    const double rn = q.norm();
    if (rn < kOrthonormalTolerance) continue;
    out.col(filled++) = q / rn;
  }
}

} // namespace detail

/// Rotates one factor so that its first column is exactly `u`. The other
/// columns are the previous columns Gram-Schmidt-projected against u (and
/// each other) in their original order; canonical basis vectors fill any
/// column whose projection degenerates.
inline BlockFactor gauge_factor(const BlockFactor &factor, const CVector &u) {
  const Eigen::Index d = factor.matrix.rows();
  if (u.size() != d || factor.matrix.cols() != d)
    throw Error(ErrorCode::DimensionMismatch, "gauge vector does not match factor");
  const CMatrix &c = factor.matrix;
  CMatrix out(d, d);
  out.col(0) = u;
  Eigen::Index filled = 1;

  // Columns of c are orthonormal, so projecting c_i onto span{u, c_1..c_(i-1)}
  // only needs the part of u outside span{c_1..c_(i-1)}. O(d^2) overall.
  constexpr double kCaptured = 1e-12;
  CVector u_perp = u;
  const CVector a = c.adjoint() * u;
  for (Eigen::Index i = 0; i < d && filled < d; ++i) {
    const double s = u_perp.squaredNorm();
    CVector q = c.col(i);
    if (s > kCaptured) q -= u_perp * (std::conj(a(i)) / s);
    const double rn = q.norm();
    u_perp -= c.col(i) * a(i);
    if (rn < kOrthonormalTolerance) continue;
    out.col(filled++) = q / rn;
  }
  if (filled < d || !detail::probe_unitary(out)) {
    filled = 1;
    detail::mgs_fill(out, filled, c);
  }
  if (filled < d) detail::mgs_fill(out, filled, CMatrix::Identity(d, d));

  BlockFactor g = factor;
  g.matrix = std::move(out);
  return g;
}

inline std::vector<BlockFactor> monotone_gauge(const std::vector<BlockFactor> &factors,
                                               const std::vector<CVector> &product_vectors) {
  if (factors.size() != product_vectors.size())
    throw Error(ErrorCode::DimensionMismatch, "one product vector per factor required");
  std::vector<BlockFactor> out;
  out.reserve(factors.size());
  for (std::size_t i = 0; i < factors.size(); ++i)
    out.push_back(gauge_factor(factors[i], product_vectors[i]));
  return out;
}

struct TuckerStepResult {
  std::vector<BlockFactor> factors;
  StateVector new_core;
  double alpha = 0.0;
  double fidelity_to_zero = 0.0;
};

struct TuckerConfig {
  ClosestProductOptions closest;
  double gauge_tolerance = 1e-8;
};

/// Applies W^dagger of every factor in turn.
inline StateVector extract_core(StateVector core, const std::vector<BlockFactor> &factors) {
  for (const auto &f : factors) core = apply_block_adjoint(core, f);
  return core;
}

/// One Tucker iteration with the monotone gauge. The HOSVD leading vectors
/// and the all-zero product are always part of the initialization pool, so
/// the attained alpha is never below |<0|core>|.
inline TuckerStepResult tucker_step(const StateVector &core, const Partition &p,
                                    const TuckerConfig &cfg = {}) {
  p.validate(core.n());
  const auto hosvd = hosvd_factors(core, p);

  ClosestProductOptions opt = cfg.closest;
  std::vector<CVector> leading;
  for (const auto &f : hosvd) leading.push_back(f.matrix.col(0));
  opt.seeds.insert(opt.seeds.begin(), zero_product(p));
  opt.seeds.insert(opt.seeds.begin(), leading);
  const ProductApprox best = closest_product(core, p, opt);

  TuckerStepResult r;
  r.factors = monotone_gauge(hosvd, best.vectors);
  r.new_core = extract_core(core, r.factors);
  r.alpha = best.alpha;
  const cplx overlap = r.new_core[0];
  if (std::abs(std::abs(overlap) - best.alpha) > cfg.gauge_tolerance)
    throw Error(ErrorCode::GaugeIdentityViolation,
                "|<0|G>| = " + std::to_string(std::abs(overlap)) +
                    " but alpha = " + std::to_string(best.alpha));
  r.fidelity_to_zero = std::norm(overlap);
  return r;
}

} // namespace qtucker
