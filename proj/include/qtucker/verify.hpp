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

// Simulation of plans and circuits, a brute-force closest-product oracle,
// and trace auditing. Nothing here reuses the tucker module's optimizer.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qtucker/engine.hpp"
#include "qtucker/statevec.hpp"
#include "qtucker/synth.hpp"

namespace qtucker {

/// W_1 ... W_r applied to |0...0> (or to the residual core).
inline StateVector simulate_plan(const CircuitPlan &plan) {
  StateVector s = plan.residual_core ? *plan.residual_core : StateVector::zero(plan.n);
  if (s.n() != plan.n)
    throw Error(ErrorCode::DimensionMismatch, "residual core has " + std::to_string(s.n()) +
                                                  " qubits, plan has " + std::to_string(plan.n));
  for (auto layer = plan.layers.rbegin(); layer != plan.layers.rend(); ++layer)
    for (const auto &f : layer->factors) s = apply_block(s, f);
  return s;
}

inline StateVector simulate_gates(const GateCircuit &c) {
  c.validate();
  CVector amps = StateVector::zero(c.n).amps();
  for (const auto &g : c.gates) apply_gate(amps, c.n, g);
  return StateVector::from_normalized(std::move(amps));
}

struct OracleOptions {
  int budget = 64;
  double tol = 1e-10;
  int max_sweeps = 2000;
  std::uint64_t seed = 0x5eed;
};

inline constexpr int kOracleMaxQubits = 10;

namespace oracle_detail {

/// Local index of every global amplitude for each block.
inline std::vector<std::vector<int>> local_indices(int n, const Partition &p) {
  const std::size_t dim = std::size_t{1} << n;
  std::vector<std::vector<int>> out;
  for (const auto &b : p.blocks) {
    std::vector<int> loc(dim);
    for (std::size_t idx = 0; idx < dim; ++idx) {
      int l = 0;
      for (int q : b) l = (l << 1) | static_cast<int>((idx >> (n - 1 - q)) & 1U);
      loc[idx] = l;
    }
    out.push_back(std::move(loc));
  }
  return out;
}

/// v_i[b] = sum over amplitudes with block-i index b of psi * prod_{j != i} conj(u_j).
inline CVector environment(const CVector &psi, const std::vector<std::vector<int>> &loc,
                           const std::vector<CVector> &u, std::size_t i) {
  CVector v = CVector::Zero(u[i].size());
  for (Eigen::Index idx = 0; idx < psi.size(); ++idx) {
    cplx w = psi(idx);
    if (w == cplx(0.0)) continue;
    for (std::size_t j = 0; j < u.size(); ++j)
      if (j != i) w *= std::conj(u[j](loc[j][static_cast<std::size_t>(idx)]));
    v(loc[i][static_cast<std::size_t>(idx)]) += w;
  }
  return v;
}

inline double ascend(const CVector &psi, const std::vector<std::vector<int>> &loc,
                     std::vector<CVector> u, const OracleOptions &o) {
  double prev = -1.0, cur = 0.0;
  for (int s = 0; s < o.max_sweeps; ++s) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      const CVector v = environment(psi, loc, u, i);
      const double nv = v.norm();
      if (nv > 0.0) u[i] = v / nv;
      cur = nv;
    }
    if (cur - prev <= o.tol) break;
    prev = cur;
  }
  return cur;
}

} // namespace oracle_detail

/// Best block-product overlap found by multi-start alternating ascent; exact
/// (largest singular value) for two blocks. Throws TooLarge above 10 qubits.
inline double oracle_closest_product(const StateVector &state, const Partition &p,
                                     const OracleOptions &o = {}) {
  if (state.n() > kOracleMaxQubits)
    throw Error(ErrorCode::TooLarge, std::to_string(state.n()) + " qubits exceeds oracle limit");
  p.validate(state.n());
  if (p.blocks.size() == 1) return state.amps().norm();
  if (p.blocks.size() == 2) {
    Eigen::JacobiSVD<CMatrix> svd(unfolding(state, p.blocks[0]));
    return svd.singularValues()(0);
  }

  const auto loc = oracle_detail::local_indices(state.n(), p);
  const CVector &psi = state.amps();
  std::vector<std::vector<CVector>> seeds;

  std::vector<CVector> svd_seed, basis0, peak;
  Eigen::Index top = 0;
  psi.cwiseAbs().maxCoeff(&top);
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    const Eigen::Index d = Eigen::Index{1} << p.blocks[i].size();
    Eigen::JacobiSVD<CMatrix> svd(unfolding(state, p.blocks[i]), Eigen::ComputeThinU);
    svd_seed.push_back(svd.matrixU().col(0));
    basis0.push_back(CVector::Unit(d, 0));
    peak.push_back(CVector::Unit(d, loc[i][static_cast<std::size_t>(top)]));
  }
  seeds.push_back(svd_seed);
  seeds.push_back(basis0);
  seeds.push_back(peak);

  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> gauss;
  while (static_cast<int>(seeds.size()) < std::max(o.budget, 3)) {
    std::vector<CVector> r;
    for (const auto &b : p.blocks) {
      CVector v(Eigen::Index{1} << b.size());
      for (auto &z : v) z = cplx(gauss(rng), gauss(rng));
      r.push_back(v.normalized());
    }
    seeds.push_back(std::move(r));
  }

  double best = 0.0;
  for (const auto &s : seeds) best = std::max(best, oracle_detail::ascend(psi, loc, s, o));
  return best;
}

/// Largest Schmidt coefficient across every cut that separates whole blocks,
/// minimized over cuts.
inline double cut_ceiling(const StateVector &state, const Partition &p) {
  const std::size_t m = p.blocks.size();
  if (m < 2) return 1.0;
  if (m > 20) throw Error(ErrorCode::TooLarge, "too many blocks for exhaustive cuts");
  double beta = 1.0;
  // subsets containing block 0 enumerate each cut once
  for (std::uint32_t mask = 1; mask < (1U << m) - 1; mask += 2) {
    std::vector<int> side;
    for (std::size_t b = 0; b < m; ++b)
      if (mask & (1U << b)) side.insert(side.end(), p.blocks[b].begin(), p.blocks[b].end());
    std::sort(side.begin(), side.end());
    const RVector sv = schmidt_spectrum(state, QubitSet(side));
    beta = std::min(beta, sv(0));
  }
  return beta;
}

struct AuditOptions {
  double monotone_slack = 1e-9;
  double ceiling_slack = 1e-9;
  double gauge_tolerance = 1e-8;
  double final_tolerance = 1e-9;
  bool check_cut_ceiling = true;
};

struct Violation {
  std::string kind; // monotonicity | cut_ceiling | gauge_identity | final_fidelity
  int iteration = 0;
  double value = 0.0;
  double bound = 0.0;
};

struct IterationAudit {
  int j = 0;
  double recorded_fidelity = 0.0;
  double replayed_fidelity = 0.0;
  double ceiling = 0.0; // beta^2, negative when not computed
};

struct AuditReport {
  std::vector<Violation> violations;
  std::vector<IterationAudit> iterations;
  double simulated_fidelity = 0.0;
  double expected_fidelity = 0.0;

  bool clean() const { return violations.empty(); }
  int count(const std::string &kind) const {
    return static_cast<int>(std::count_if(violations.begin(), violations.end(),
                                          [&](const Violation &v) { return v.kind == kind; }));
  }
};

/// Replays the recorded layers against `target` and checks every iteration.
inline AuditReport audit_trace(const CircuitPlan &plan, const StateVector &target,
                               const AuditOptions &o = {}) {
  AuditReport rep;
  if (target.n() != plan.n) {
    rep.violations.push_back({"final_fidelity", 0, 0.0, 1.0});
    return rep;
  }

  StateVector core = target;
  double prev = std::norm(core[0]);
  std::size_t next_layer = 0;
  for (const auto &rec : plan.trace.records) {
    IterationAudit it;
    it.j = rec.j;
    it.recorded_fidelity = rec.fidelity;
    it.ceiling = -1.0;

    if (rec.fidelity < prev - o.monotone_slack)
      rep.violations.push_back({"monotonicity", rec.j, rec.fidelity, prev});

    bool partition_ok = true;
    try {
      rec.partition.validate(plan.n);
    } catch (const Error &) {
      partition_ok = false;
    }
    if (o.check_cut_ceiling && partition_ok) {
      const double b = cut_ceiling(core, rec.partition);
      it.ceiling = b * b;
      if (rec.fidelity > it.ceiling + o.ceiling_slack)
        rep.violations.push_back({"cut_ceiling", rec.j, rec.fidelity, it.ceiling});
    }

    if (next_layer < plan.layers.size() && plan.layers[next_layer].iteration == rec.j) {
      for (const auto &f : plan.layers[next_layer].factors) core = apply_block_adjoint(core, f);
      ++next_layer;
    }
    it.replayed_fidelity = std::norm(core[0]);
    if (std::abs(it.replayed_fidelity - rec.fidelity) > o.gauge_tolerance)
      rep.violations.push_back({"gauge_identity", rec.j, it.replayed_fidelity, rec.fidelity});

    prev = rec.fidelity;
    rep.iterations.push_back(it);
  }

  rep.simulated_fidelity = fidelity(simulate_plan(plan), target);
  rep.expected_fidelity = plan.residual_core ? 1.0 : plan.final_fidelity();
  if (plan.trace.records.empty()) rep.expected_fidelity = 1.0;
  if (std::abs(rep.simulated_fidelity - rep.expected_fidelity) > o.final_tolerance) {
    const int last = plan.trace.records.empty() ? 0 : plan.trace.records.back().j;
    rep.violations.push_back({"final_fidelity", last, rep.simulated_fidelity, rep.expected_fidelity});
  }
  return rep;
}

} // namespace qtucker
