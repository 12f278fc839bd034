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

// Correlation graph over qubits and the partition searches that use it.

#pragma once

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <array>
#include <bit>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qtucker/statevec.hpp"

namespace qtucker {

enum class Metric { MutualInformation, FrobeniusDistance };

inline std::string_view to_string(Metric m) {
  return m == Metric::MutualInformation ? "mi" : "frobenius";
}

/// Unordered qubit pair stored with first < second.
using Edge = std::pair<int, int>;
using EdgeSet = std::vector<Edge>;

inline EdgeSet canonical_edges(EdgeSet edges) {
  for (auto &e : edges)
    if (e.first > e.second) std::swap(e.first, e.second);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

inline EdgeSet complete_edges(int n) {
  EdgeSet e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return e;
}

inline void validate_edges(const EdgeSet &edges, int n) {
  for (const auto &[a, b] : edges)
    if (a < 0 || b < 0 || a >= n || b >= n || a == b)
      throw Error(ErrorCode::DimensionMismatch,
                  "edge (" + std::to_string(a) + "," + std::to_string(b) +
                      ") invalid for " + std::to_string(n) + " qubits");
}

struct CorrelationGraph {
  int n = 0;
  RMatrix weights;  // symmetric, zero diagonal
  Metric metric = Metric::FrobeniusDistance;
  EdgeSet edges;    // admissible pairs, canonical

  double w(int i, int j) const { return weights(i, j); }
  double total_weight() const {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) s += weights(i, j);
    return s;
  }
};

/// Disjoint qubit blocks covering [0, n). Blocks are kept sorted: members
/// ascending inside a block, blocks ordered by their smallest member.
struct Partition {
  std::vector<QubitSet> blocks;
  int block_size_max = 0;

  std::size_t size() const { return blocks.size(); }

  int num_qubits() const {
    int total = 0;
    for (const auto &b : blocks) total += static_cast<int>(b.size());
    return total;
  }

  void canonicalize() {
    for (auto &b : blocks) {
      std::vector<int> m = b.members();
      std::sort(m.begin(), m.end());
      b = QubitSet(std::move(m));
    }
    std::sort(blocks.begin(), blocks.end(),
              [](const QubitSet &a, const QubitSet &b) { return a[0] < b[0]; });
  }

  /// Throws PartitionMismatch unless the blocks exactly cover [0, n).
  void validate(int n) const {
    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    for (const auto &b : blocks) {
      if (b.empty()) throw Error(ErrorCode::PartitionMismatch, "empty block");
      if (block_size_max > 0 && static_cast<int>(b.size()) > block_size_max)
        throw Error(ErrorCode::PartitionMismatch, "block exceeds size limit");
      for (int q : b) {
        if (q < 0 || q >= n)
          throw Error(ErrorCode::PartitionMismatch,
                      "qubit " + std::to_string(q) + " out of range");
        if (seen[static_cast<std::size_t>(q)]++)
          throw Error(ErrorCode::PartitionMismatch,
                      "qubit " + std::to_string(q) + " in two blocks");
      }
    }
    for (int q = 0; q < n; ++q)
      if (!seen[static_cast<std::size_t>(q)])
        throw Error(ErrorCode::PartitionMismatch,
                    "qubit " + std::to_string(q) + " not covered");
  }

  /// block index of every qubit
  std::vector<int> labels(int n) const {
    std::vector<int> out(static_cast<std::size_t>(n), -1);
    for (std::size_t b = 0; b < blocks.size(); ++b)
      for (int q : blocks[b]) out[static_cast<std::size_t>(q)] = static_cast<int>(b);
    return out;
  }

  bool operator==(const Partition &o) const { return blocks == o.blocks; }
};

namespace detail {

/// Inserts a zero bit at `pos` (bit position counted from the LSB).
inline std::size_t insert_zero_bit(std::size_t x, int pos) {
  const std::size_t low = x & ((std::size_t{1} << pos) - 1);
  return ((x >> pos) << (pos + 1)) | low;
}

inline Eigen::Matrix2cd one_qubit_marginal(const CVector &amps, int n, int q) {
  const int pos = n - 1 - q;
  const std::size_t bit = std::size_t{1} << pos;
  const std::size_t half = static_cast<std::size_t>(amps.size()) / 2;
  double p0 = 0.0, p1 = 0.0;
  cplx c01 = 0.0;
  const cplx *a = amps.data();
  for (std::size_t r = 0; r < half; ++r) {
    const std::size_t i0 = insert_zero_bit(r, pos);
    const cplx x0 = a[i0], x1 = a[i0 | bit];
    p0 += std::norm(x0);
    p1 += std::norm(x1);
    c01 += x0 * std::conj(x1);
  }
  Eigen::Matrix2cd rho;
  rho << p0, c01, std::conj(c01), p1;
  return rho;
}

/// rho_ij with qubit i as the more significant local bit.
inline Eigen::Matrix4cd two_qubit_marginal(const CVector &amps, int n, int i, int j) {
  const int pi = n - 1 - i, pj = n - 1 - j;
  const int hi = std::max(pi, pj), lo = std::min(pi, pj);
  const std::size_t bi = std::size_t{1} << pi, bj = std::size_t{1} << pj;
  const std::array<std::size_t, 4> off{0, bj, bi, bi | bj};
  const std::size_t quarter = static_cast<std::size_t>(amps.size()) / 4;
  std::array<cplx, 16> acc{};
  const cplx *a = amps.data();
  for (std::size_t r = 0; r < quarter; ++r) {
    const std::size_t base = insert_zero_bit(insert_zero_bit(r, lo), hi);
    const cplx x[4] = {a[base + off[0]], a[base + off[1]], a[base + off[2]],
                       a[base + off[3]]};
    for (int u = 0; u < 4; ++u) {
      const cplx xu = x[u];
      for (int v = u; v < 4; ++v) acc[static_cast<std::size_t>(4 * u + v)] += xu * std::conj(x[v]);
    }
  }
  Eigen::Matrix4cd rho;
  for (int u = 0; u < 4; ++u)
    for (int v = u; v < 4; ++v) {
      rho(u, v) = acc[static_cast<std::size_t>(4 * u + v)];
      rho(v, u) = std::conj(rho(u, v));
    }
  return rho;
}

inline double entropy_bits(const Eigen::Ref<const CMatrix> &rho) {
  return entropy(DensityMatrix{rho});
}

} // namespace detail

inline constexpr double kProductPairTolerance = 1e-10;

/// Pairwise correlation weights of `state`. Weights are filled for the
/// requested edges (all pairs when none are given) and zero elsewhere.
inline CorrelationGraph pair_weights(const StateVector &state,
                                     Metric metric = Metric::FrobeniusDistance,
                                     const std::optional<EdgeSet> &edge_set = std::nullopt) {
  const int n = state.n();
  CorrelationGraph g;
  g.n = n;
  g.metric = metric;
  g.weights = RMatrix::Zero(n, n);
  if (edge_set) {
    validate_edges(*edge_set, n);
    g.edges = canonical_edges(*edge_set);
  } else {
    g.edges = complete_edges(n);
  }
  if (n < 2) return g;

  const CVector &amps = state.amps();
  std::vector<Eigen::Matrix2cd> single(static_cast<std::size_t>(n));
  std::vector<double> single_entropy(static_cast<std::size_t>(n), 0.0);
  for (int q = 0; q < n; ++q) {
    single[static_cast<std::size_t>(q)] = detail::one_qubit_marginal(amps, n, q);
    if (metric == Metric::MutualInformation)
      single_entropy[static_cast<std::size_t>(q)] =
          detail::entropy_bits(single[static_cast<std::size_t>(q)]);
  }

  for (const auto &[i, j] : g.edges) {
    const Eigen::Matrix4cd rho = detail::two_qubit_marginal(amps, n, i, j);
    const Eigen::Matrix4cd prod = Eigen::kroneckerProduct(
        single[static_cast<std::size_t>(i)], single[static_cast<std::size_t>(j)]);
    const double frob = (rho - prod).norm();
    double w = 0.0;
    if (frob >= kProductPairTolerance) {
      if (metric == Metric::FrobeniusDistance) {
        w = frob;
      } else {
        w = single_entropy[static_cast<std::size_t>(i)] +
            single_entropy[static_cast<std::size_t>(j)] - detail::entropy_bits(rho);
        w = std::max(0.0, w);
      }
    }
    g.weights(i, j) = g.weights(j, i) = w;
  }
  return g;
}

/// Adds uniform noise in [0, magnitude) to every admissible edge weight.
template <typename Rng>
CorrelationGraph perturb_weights(CorrelationGraph g, double magnitude, Rng &rng) {
  std::uniform_real_distribution<double> dist(0.0, magnitude);
  for (const auto &[i, j] : g.edges) {
    const double w = g.weights(i, j) + dist(rng);
    g.weights(i, j) = g.weights(j, i) = w;
  }
  return g;
}

/// Sum of weights over pairs inside a block.
inline double intra_value(const CorrelationGraph &g, const Partition &p) {
  p.validate(g.n);
  double s = 0.0;
  for (const auto &b : p.blocks)
    for (std::size_t x = 0; x < b.size(); ++x)
      for (std::size_t y = x + 1; y < b.size(); ++y) s += g.w(b[x], b[y]);
  return s;
}

/// Sum of weights over pairs whose endpoints lie in different blocks.
inline double cut_value(const CorrelationGraph &g, const Partition &p) {
  p.validate(g.n);
  const auto label = p.labels(g.n);
  double s = 0.0;
  for (int i = 0; i < g.n; ++i)
    for (int j = i + 1; j < g.n; ++j)
      if (label[static_cast<std::size_t>(i)] != label[static_cast<std::size_t>(j)])
        s += g.w(i, j);
  return s;
}

namespace detail {

using Pairing = std::vector<Edge>;

inline Partition pairing_to_partition(const Pairing &pairs) {
  Partition p;
  p.block_size_max = 2;
  for (const auto &[a, b] : pairs) p.blocks.push_back(QubitSet{a, b});
  p.canonicalize();
  return p;
}

inline double pairing_weight(const CorrelationGraph &g, const Pairing &pairs) {
  double s = 0.0;
  for (const auto &[a, b] : pairs) s += g.w(a, b);
  return s;
}

inline std::vector<std::vector<bool>> adjacency(int n, const EdgeSet &edges) {
  std::vector<std::vector<bool>> adj(static_cast<std::size_t>(n),
                                     std::vector<bool>(static_cast<std::size_t>(n), false));
  for (const auto &[a, b] : edges)
    adj[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
        adj[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = true;
  return adj;
}

inline constexpr int kExactMatchingMaxQubits = 20;

/// Exact maximum-weight perfect matching on `edges` by dynamic programming
/// over qubit subsets. Ties go to the lowest partner index.
inline std::optional<Pairing> exact_matching(const CorrelationGraph &g, const EdgeSet &edges) {
  const int n = g.n;
  const auto adj = adjacency(n, edges);
  const std::size_t full = (std::size_t{1} << n) - 1;
  constexpr double kNone = -std::numeric_limits<double>::infinity();
  std::vector<double> best(full + 1, kNone);
  std::vector<std::int8_t> partner(full + 1, -1);
  best[0] = 0.0;
  for (std::size_t mask = 1; mask <= full; ++mask) {
    if (std::popcount(mask) % 2) continue;
    const int i = std::countr_zero(mask);
    for (int j = i + 1; j < n; ++j) {
      if (!((mask >> j) & 1U) || !adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)])
        continue;
      const double sub = best[mask ^ (std::size_t{1} << i) ^ (std::size_t{1} << j)];
      if (sub == kNone) continue;
      const double cand = sub + g.w(i, j);
      if (cand > best[mask]) {
        best[mask] = cand;
        partner[mask] = static_cast<std::int8_t>(j);
      }
    }
  }
  if (best[full] == kNone) return std::nullopt;
  Pairing out;
  std::size_t mask = full;
  while (mask) {
    const int i = std::countr_zero(mask);
    const int j = partner[mask];
    out.emplace_back(i, j);
    mask ^= (std::size_t{1} << i) | (std::size_t{1} << j);
  }
  return out;
}

} // namespace detail

inline constexpr int kAugmentPerStuckVertex = 2;

/// Greedy matching on `edges`; whenever no admissible pair remains among the
/// unmatched qubits, the top-2 missing edges of each stuck qubit are added.
/// `edges` is updated in place with the augmentation.
inline std::vector<Edge> greedy_pairing(const CorrelationGraph &g, EdgeSet &edges) {
  const int n = g.n;
  auto adj = detail::adjacency(n, edges);
  std::vector<bool> open(static_cast<std::size_t>(n), true);
  int remaining = n;
  std::vector<Edge> pairs;
  while (remaining > 0) {
    int bi = -1, bj = -1;
    double bw = -1.0;
    for (int i = 0; i < n; ++i) {
      if (!open[static_cast<std::size_t>(i)]) continue;
      for (int j = i + 1; j < n; ++j) {
        if (!open[static_cast<std::size_t>(j)] ||
            !adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)])
          continue;
        if (g.w(i, j) > bw) {
          bw = g.w(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    if (bi >= 0) {
      pairs.emplace_back(bi, bj);
      open[static_cast<std::size_t>(bi)] = open[static_cast<std::size_t>(bj)] = false;
      remaining -= 2;
      continue;
    }
    // augment: highest-weight missing edges touching the unmatched set
    bool added = false;
    for (int u = 0; u < n; ++u) {
      if (!open[static_cast<std::size_t>(u)]) continue;
      std::vector<int> cand;
      for (int v = 0; v < n; ++v)
        if (v != u && open[static_cast<std::size_t>(v)] &&
            !adj[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)])
          cand.push_back(v);
      std::stable_sort(cand.begin(), cand.end(),
                       [&](int a, int b) { return g.w(u, a) > g.w(u, b); });
      for (std::size_t t = 0; t < cand.size() && t < kAugmentPerStuckVertex; ++t) {
        const int v = cand[t];
        adj[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] =
            adj[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)] = true;
        edges.emplace_back(std::min(u, v), std::max(u, v));
        added = true;
      }
    }
    if (!added)
      throw Error(ErrorCode::InfeasibleConstraint,
                  "cannot augment the edge set to complete a pairing");
  }
  edges = canonical_edges(std::move(edges));
  return pairs;
}

/// Pairwise-exchange refinement. Each accepted move strictly increases the
/// matched weight and keeps every pair inside `edges`.
inline std::vector<Edge> refine_pairs(const CorrelationGraph &g, const EdgeSet &edges,
                                      std::vector<Edge> pairs) {
  const auto adj = detail::adjacency(g.n, edges);
  auto ok = [&](int a, int b) {
    return adj[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
  };
  for (;;) {
    double best_gain = 0.0;
    std::size_t bp = 0, bq = 0;
    Edge np{}, nq{};
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      for (std::size_t q = p + 1; q < pairs.size(); ++q) {
        const auto [i, k] = pairs[p];
        const auto [j, l] = pairs[q];
        const double cur = g.w(i, k) + g.w(j, l);
        // the four single swaps give two distinct re-pairings
        const std::array<std::pair<Edge, Edge>, 2> options{
            std::pair<Edge, Edge>{{i, j}, {k, l}}, std::pair<Edge, Edge>{{i, l}, {k, j}}};
        for (const auto &[e1, e2] : options) {
          if (!ok(e1.first, e1.second) || !ok(e2.first, e2.second)) continue;
          const double gain = g.w(e1.first, e1.second) + g.w(e2.first, e2.second) - cur;
          if (gain > best_gain) {
            best_gain = gain;
            bp = p;
            bq = q;
            np = e1;
            nq = e2;
          }
        }
      }
    }
    if (best_gain <= 0.0) break;
    pairs[bp] = {std::min(np.first, np.second), std::max(np.first, np.second)};
    pairs[bq] = {std::min(nq.first, nq.second), std::max(nq.first, nq.second)};
  }
  return pairs;
}

/// Pair partition maximizing the total intra-pair weight: exact when a
/// perfect matching exists on the admissible edges, otherwise greedy with
/// edge augmentation followed by pairwise-exchange refinement.
inline Partition partition_pairs(const CorrelationGraph &g,
                                 const std::optional<EdgeSet> &constraint = std::nullopt) {
  if (g.n % 2 != 0)
    throw Error(ErrorCode::OddQubitCount, std::to_string(g.n) + " qubits cannot be paired");
  EdgeSet edges = constraint ? canonical_edges(*constraint) : g.edges;
  validate_edges(edges, g.n);
  if (g.n <= detail::kExactMatchingMaxQubits) {
    if (auto m = detail::exact_matching(g, edges)) return detail::pairing_to_partition(*m);
  }
  auto pairs = greedy_pairing(g, edges);
  return detail::pairing_to_partition(refine_pairs(g, edges, std::move(pairs)));
}

namespace detail {

/// Can `sizes` be packed into bins of exactly the given capacities?
inline bool packable(std::vector<int> sizes, std::vector<int> caps) {
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  std::function<bool(std::size_t)> place = [&](std::size_t idx) -> bool {
    if (idx == sizes.size())
      return std::all_of(caps.begin(), caps.end(), [](int c) { return c == 0; });
    for (std::size_t b = 0; b < caps.size(); ++b) {
      if (caps[b] < sizes[idx]) continue;
      bool seen = false;
      for (std::size_t c = 0; c < b; ++c)
        if (caps[c] == caps[b]) { seen = true; break; }
      if (seen) continue;
      caps[b] -= sizes[idx];
      if (place(idx + 1)) return true;
      caps[b] += sizes[idx];
    }
    return false;
  };
  return place(0);
}

inline double group_link(const CorrelationGraph &g, const std::vector<int> &a,
                         const std::vector<int> &b) {
  double s = 0.0;
  for (int x : a)
    for (int y : b) s += g.w(x, y);
  return s;
}

} // namespace detail

/// Partition into blocks of k qubits (the last block may be smaller) by
/// greedy agglomeration followed by single-element exchanges.
inline Partition partition_blocks(const CorrelationGraph &g, int k) {
  const int n = g.n;
  if (k < 2 || k > n)
    throw Error(ErrorCode::InvalidBlockSize,
                "block size " + std::to_string(k) + " for " + std::to_string(n) + " qubits");
  if (k == n) {
    Partition p;
    p.block_size_max = k;
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    p.blocks.push_back(QubitSet(std::move(all)));
    return p;
  }
  // a 2-set partition of an even register is a perfect matching
  if (k == 2 && n % 2 == 0) return partition_pairs(g);

  std::vector<int> caps(static_cast<std::size_t>(n / k), k);
  if (n % k) caps.push_back(n % k);

  std::vector<std::vector<int>> groups;
  for (int q = 0; q < n; ++q) groups.push_back({q});

  while (groups.size() > caps.size()) {
    double bw = -1.0;
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < groups.size(); ++a) {
      for (std::size_t b = a + 1; b < groups.size(); ++b) {
        const std::size_t merged = groups[a].size() + groups[b].size();
        if (merged > static_cast<std::size_t>(k)) continue;
        const double w = detail::group_link(g, groups[a], groups[b]);
        if (w <= bw) continue;
        std::vector<int> sizes;
        for (std::size_t c = 0; c < groups.size(); ++c)
          if (c != a && c != b) sizes.push_back(static_cast<int>(groups[c].size()));
        sizes.push_back(static_cast<int>(merged));
        if (!detail::packable(sizes, caps)) continue;
        bw = w;
        ba = a;
        bb = b;
      }
    }
    groups[ba].insert(groups[ba].end(), groups[bb].begin(), groups[bb].end());
    std::sort(groups[ba].begin(), groups[ba].end());
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bb));
  }

  auto intra = [&](const std::vector<int> &grp) {
    double s = 0.0;
    for (std::size_t x = 0; x < grp.size(); ++x)
      for (std::size_t y = x + 1; y < grp.size(); ++y) s += g.w(grp[x], grp[y]);
    return s;
  };

  constexpr double kMinGain = 1e-12;
  for (;;) {
    double best_gain = kMinGain;
    std::size_t ga = 0, gb = 0, xa = 0, yb = 0;
    bool found = false;
    for (std::size_t a = 0; a < groups.size(); ++a) {
      for (std::size_t b = a + 1; b < groups.size(); ++b) {
        const double before = intra(groups[a]) + intra(groups[b]);
        for (std::size_t x = 0; x < groups[a].size(); ++x) {
          for (std::size_t y = 0; y < groups[b].size(); ++y) {
            auto na = groups[a];
            auto nb = groups[b];
            std::swap(na[x], nb[y]);
            const double gain = intra(na) + intra(nb) - before;
            if (gain > best_gain) {
              best_gain = gain;
              ga = a;
              gb = b;
              xa = x;
              yb = y;
              found = true;
            }
          }
        }
      }
    }
    if (!found) break;
    std::swap(groups[ga][xa], groups[gb][yb]);
    std::sort(groups[ga].begin(), groups[ga].end());
    std::sort(groups[gb].begin(), groups[gb].end());
  }

  Partition p;
  p.block_size_max = k;
  for (auto &grp : groups) p.blocks.push_back(QubitSet(std::move(grp)));
  p.canonicalize();
  return p;
}

} // namespace qtucker
