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

// The outer compilation loop: weights -> partition -> Tucker step, with
// stall detection and block-size growth.

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "qtucker/corrgraph.hpp"
#include "qtucker/statevec.hpp"
#include "qtucker/tucker.hpp"

namespace qtucker {

struct EngineConfig {
  double epsilon = 1e-9;     // stop once F >= 1 - epsilon
  int k_init = 2;
  int k_max = 0;             // 0: number of qubits
  int stall_window = 3;
  double stall_eps = 1e-8;
  int max_iters = 0;         // 0: n^2
  Metric metric = Metric::FrobeniusDistance;
  std::optional<EdgeSet> constraint;
  std::uint64_t seed = 0;
  int restarts = 8;
  double closest_tol = 1e-12;
  int max_sweeps = 500;
  // Split max_iters evenly across block sizes k_init..k_max and grow once a
  // level has used its share, even without a stall.
  bool level_budget = true;
  // Uniform noise added to the weights while stalled at k_max (0 = off).
  double perturbation = 0.0;

  /// Copy with the n-dependent defaults filled in; throws InvalidConfig.
  EngineConfig resolved(int n) const {
    EngineConfig c = *this;
    if (c.k_max <= 0) c.k_max = n;
    if (c.max_iters <= 0) c.max_iters = n * n;
    if (n == 1) c.k_init = c.k_max = 1;
    c.validate(n);
    return c;
  }

  void validate(int n) const {
    auto bad = [](const std::string &m) { throw Error(ErrorCode::InvalidConfig, m); };
    if (!(epsilon > 0.0 && epsilon < 1.0)) bad("epsilon must lie in (0, 1)");
    if (n >= 2 && !(2 <= k_init && k_init <= k_max && k_max <= n))
      bad("need 2 <= k_init <= k_max <= n");
    if (max_iters < 1) bad("max_iters must be >= 1");
    if (stall_window < 1) bad("stall_window must be >= 1");
    if (restarts < 0) bad("restarts must be >= 0");
    if (perturbation < 0.0) bad("perturbation must be >= 0");
  }
};

struct IterationRecord {
  int j = 0;              // 1-based iteration index
  Partition partition;
  int k = 0;              // block size limit in force
  double cut = 0.0;       // graph cut of the partition
  double alpha = 0.0;
  double fidelity = 0.0;  // |<0|G_j>|^2
  double seconds = 0.0;
};

struct IterationTrace {
  std::vector<IterationRecord> records;

  std::vector<double> fidelities() const {
    std::vector<double> f;
    for (const auto &r : records) f.push_back(r.fidelity);
    return f;
  }
};

struct Layer {
  int iteration = 0;
  Partition partition;
  std::vector<BlockFactor> factors;
};

/// |psi> ~= W_1 ... W_r |0...0>, layers stored as W_1 first; preparation
/// applies them in reverse. A residual core, when present, is prepared
/// from |0...0> before any layer.
struct CircuitPlan {
  int n = 0;
  std::vector<Layer> layers;
  std::optional<StateVector> residual_core;
  IterationTrace trace;
  EngineConfig config;

  bool converged() const { return !residual_core.has_value(); }

  double final_fidelity() const {
    return trace.records.empty() ? 0.0 : trace.records.back().fidelity;
  }
  double final_loss() const { return 1.0 - final_fidelity(); }
};

/// True iff each of the last `window` iterations improved F by less than eps.
inline bool stall_check(std::span<const double> fidelities, int window, double eps) {
  if (window < 1) throw Error(ErrorCode::InvalidConfig, "stall window must be >= 1");
  const auto w = static_cast<std::size_t>(window);
  if (fidelities.size() < w + 1) return false;
  for (std::size_t t = fidelities.size() - w; t < fidelities.size(); ++t)
    if (fidelities[t] - fidelities[t - 1] >= eps) return false;
  return true;
}

inline bool stall_check(const IterationTrace &trace, int window, double eps) {
  const auto f = trace.fidelities();
  return stall_check(std::span<const double>(f), window, eps);
}

inline int grow(int k, const EngineConfig &cfg) {
  if (k >= cfg.k_max)
    throw Error(ErrorCode::AtMaxBlockSize, "block size already " + std::to_string(k));
  return k + 1;
}

inline bool is_identity(const CMatrix &m, double tol = 1e-12) {
  return m.rows() == m.cols() &&
         (m - CMatrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() <= tol;
}

/// Partition used at block size k. Pairs use the exact matching route.
inline Partition choose_partition(const CorrelationGraph &g, int k,
                                  const std::optional<EdgeSet> &constraint) {
  const int n = g.n;
  if (n == 1) {
    Partition p;
    p.block_size_max = 1;
    p.blocks.push_back(QubitSet{0});
    return p;
  }
  if (k == 2 && n % 2 == 0) return partition_pairs(g, constraint);
  return partition_blocks(g, k);
}

using ProgressCallback = std::function<void(const IterationRecord &)>;

/// Compiles `target` into a layered plan.
inline CircuitPlan run(const StateVector &target, const EngineConfig &config,
                       const ProgressCallback &progress = {}) {
  const int n = target.n();
  const EngineConfig cfg = config.resolved(n);

  CircuitPlan plan;
  plan.n = n;
  plan.config = cfg;

  std::mt19937_64 noise_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const int levels = cfg.k_max - cfg.k_init + 1;
  const int level_share = std::max(cfg.stall_window + 1, cfg.max_iters / std::max(levels, 1));

  StateVector core = target;
  int k = cfg.k_init;
  std::size_t level_start = 0; // index into fidelities of the level's baseline
  std::vector<double> fidelities{std::norm(core[0])};
  bool converged = false;
  bool stalled_at_max = false;

  for (int j = 1; j <= cfg.max_iters; ++j) {
    const auto t0 = std::chrono::steady_clock::now();

    CorrelationGraph graph = pair_weights(core, cfg.metric);
    if (stalled_at_max && cfg.perturbation > 0.0)
      graph = perturb_weights(std::move(graph), cfg.perturbation, noise_rng);
    const Partition partition = choose_partition(graph, k, cfg.constraint);

    TuckerConfig tc;
    tc.closest.restarts = cfg.restarts;
    tc.closest.tol = cfg.closest_tol;
    tc.closest.max_sweeps = cfg.max_sweeps;
    tc.closest.seed = cfg.seed + static_cast<std::uint64_t>(j) * 0x100000001b3ULL;
    TuckerStepResult step = tucker_step(core, partition, tc);

    IterationRecord rec;
    rec.j = j;
    rec.partition = partition;
    rec.k = k;
    rec.cut = cut_value(graph, partition);
    rec.alpha = step.alpha;
    rec.fidelity = step.fidelity_to_zero;

    const bool all_identity = std::all_of(step.factors.begin(), step.factors.end(),
                                          [](const BlockFactor &f) { return is_identity(f.matrix); });
    if (!all_identity) plan.layers.push_back(Layer{j, partition, std::move(step.factors)});
    core = std::move(step.new_core);
    fidelities.push_back(rec.fidelity);

    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    plan.trace.records.push_back(rec);
    if (progress) progress(rec);

    if (rec.fidelity >= 1.0 - cfg.epsilon) {
      converged = true;
      break;
    }

    const std::span<const double> level(fidelities.data() + level_start,
                                        fidelities.size() - level_start);
    const int level_iters = static_cast<int>(level.size()) - 1;
    const bool stalled = stall_check(level, cfg.stall_window, cfg.stall_eps);
    const bool budget_spent = cfg.level_budget && level_iters >= level_share;
    if ((stalled || budget_spent) && k < cfg.k_max) {
      k = grow(k, cfg);
      level_start = fidelities.size() - 1;
      stalled_at_max = false;
    } else if (stalled) {
      stalled_at_max = true;
    }
  }

  if (!converged) plan.residual_core = core;
  return plan;
}

} // namespace qtucker
