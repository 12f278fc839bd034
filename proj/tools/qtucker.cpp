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

// qtucker: prepare | analyze | verify | bench

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "qtucker/qtucker.hpp"

namespace fs = std::filesystem;
using namespace qtucker;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitFlagged = 2;

struct InputArgs {
  std::string path;
  std::string format;
  int qubits = 0;

  StateVector load() const {
    const io::InputFormat f = format.empty() ? io::infer_input_format(path) : io::parse_input_format(format);
    const CVector raw = io::load_amplitudes(path, f);
    return io::embed(raw, qubits > 0 ? std::optional<int>(qubits) : std::nullopt);
  }
};

struct EngineArgs {
  double epsilon = 1e-9;
  int k_init = 2;
  int k_max = 0;
  int max_iters = 0;
  std::string metric = "frobenius";
  std::string constraint;
  std::uint64_t seed = 0;
  bool verbose = false;

  EngineConfig config() const {
    EngineConfig c;
    c.epsilon = epsilon;
    c.k_init = k_init;
    c.k_max = k_max;
    c.max_iters = max_iters;
    c.metric = io::parse_metric(metric);
    c.seed = seed;
    if (!constraint.empty()) {
      const bool inline_json = constraint.front() == '[' || constraint.front() == '{';
      c.constraint = io::parse_constraint(inline_json ? constraint : io::read_file(constraint));
    }
    return c;
  }
};

void add_input(CLI::App *cmd, InputArgs &in) {
  cmd->add_option("input", in.path, "Amplitude file")->required();
  cmd->add_option("--format", in.format, "csv_complex | json_complex | raw_f64le_pairs | image_pgm");
  cmd->add_option("--qubits", in.qubits, "Pad to this many qubits");
}

void add_engine(CLI::App *cmd, EngineArgs &e) {
  cmd->add_option("--epsilon", e.epsilon, "Stop once F >= 1 - epsilon");
  cmd->add_option("--k-init", e.k_init, "Initial block size");
  cmd->add_option("--k-max", e.k_max, "Largest block size (0: n)");
  cmd->add_option("--max-iters", e.max_iters, "Iteration cap (0: n^2)");
  cmd->add_option("--metric", e.metric, "frobenius | mi");
  cmd->add_option("--constraint", e.constraint, "Allowed pairs as JSON [[u,v],...] or a JSON file");
  cmd->add_option("--seed", e.seed, "Random seed");
  cmd->add_flag("--verbose", e.verbose, "Print per-iteration progress");
}

int thread_cap() {
  if (const char *env = std::getenv("QTUCKER_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

ProgressCallback progress_printer(bool verbose) {
  if (!verbose) return {};
  return [](const IterationRecord &r) {
    std::cerr << "iter " << r.j << " k=" << r.k << " F=" << io::fmt(r.fidelity) << " cut=" << io::fmt(r.cut)
              << "\n";
  };
}

int cmd_prepare(const InputArgs &in, const EngineArgs &ea, long long baseline_depth, const fs::path &out) {
  const StateVector target = in.load();
  const CircuitPlan plan = run(target, ea.config(), progress_printer(ea.verbose));
  const GateCircuit circuit = synthesize_plan(plan);

  fs::create_directories(out);
  io::write_file(out / "plan.json", io::plan_to_json(plan).dump(1) + "\n");
  io::write_file(out / "circuit.qasm", to_qasm(circuit));
  io::write_file(out / "circuit.json", io::circuit_to_json(circuit).dump(1) + "\n");
  io::write_file(out / "trace.csv", io::trace_csv(plan.trace));

  const long long baseline = baseline_depth > 0 ? baseline_depth : (1LL << (plan.n + 1));
  const long long depth = circuit.estimated_depth();
  std::cout << "qubits " << plan.n << "\n"
            << "iterations " << plan.trace.records.size() << "\n"
            << "layers " << plan.layers.size() << "\n"
            << "fidelity " << io::fmt(plan.final_fidelity()) << "\n"
            << "depth " << depth << (circuit.opaque_count() ? " (estimated)" : "") << "\n"
            << "cx " << circuit.estimated_cx_count() << "\n"
            << "baseline_depth " << baseline << (depth > baseline ? " No Use" : "") << "\n"
            << "status " << (plan.converged() ? "converged" : "residual_core") << "\n";
  return plan.converged() ? kExitOk : kExitFlagged;
}

int cmd_analyze(const InputArgs &in, const EngineArgs &ea, const fs::path &out) {
  const StateVector target = in.load();
  const EngineConfig cfg = ea.config().resolved(target.n());
  const CorrelationGraph g = pair_weights(target, cfg.metric);
  const Partition p = choose_partition(g, cfg.k_init, cfg.constraint);

  fs::create_directories(out);
  io::write_file(out / "weights.csv", io::weights_csv(g));
  io::write_file(out / "partition.json", io::partition_to_json(p).dump() + "\n");
  std::cout << "partition " << io::partition_to_json(p).dump() << "\n"
            << "cut " << io::fmt(cut_value(g, p)) << "\n";
  return kExitOk;
}

int cmd_verify(const std::string &plan_path, const InputArgs &in, const fs::path &out) {
  const CircuitPlan plan = io::load_plan(plan_path);
  const StateVector target = in.load();
  const AuditReport rep = audit_trace(plan, target);

  fs::create_directories(out);
  io::write_file(out / "audit.json", io::audit_to_json(rep).dump(1) + "\n");
  std::cout << "violations " << rep.violations.size() << "\n";
  for (const auto &v : rep.violations)
    std::cout << "  " << v.kind << " at j=" << v.iteration << ": " << io::fmt(v.value) << " vs "
              << io::fmt(v.bound) << "\n";
  std::cout << "simulated_fidelity " << io::fmt(rep.simulated_fidelity) << "\n";
  return rep.clean() ? kExitOk : kExitFlagged;
}

std::vector<int> parse_sizes(const std::string &s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception &) {
      throw Error(ErrorCode::Parse, "bad factor size '" + tok + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::Parse, "no factor sizes given");
  return out;
}

struct SweepRow {
  int k = 0;
  int iters = 0;
  long long depth = 0;
  long long cx = 0;
  double seconds = 0.0;
  double final_loss = 0.0;
};

int cmd_bench(const InputArgs &in, const EngineArgs &ea, const std::string &sizes_arg, double precision,
              const fs::path &out) {
  const StateVector target = in.load();
  const std::vector<int> sizes = parse_sizes(sizes_arg);
  for (int k : sizes)
    if (k < 2 || k > target.n())
      throw Error(ErrorCode::InvalidConfig, "factor size " + std::to_string(k) + " outside [2, " +
                                                std::to_string(target.n()) + "]");

  std::vector<SweepRow> rows(sizes.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < sizes.size(); i = next++) {
      EngineConfig cfg = ea.config();
      cfg.epsilon = precision;
      cfg.k_init = cfg.k_max = sizes[i];
      if (ea.max_iters <= 0) cfg.max_iters = 5000;
      const auto t0 = std::chrono::steady_clock::now();
      const CircuitPlan plan = run(target, cfg);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const GateCircuit c = synthesize_plan(plan);
      rows[i] = {sizes[i], static_cast<int>(plan.trace.records.size()), c.estimated_depth(),
                 c.estimated_cx_count(), secs, plan.final_loss()};
      if (ea.verbose) {
        std::lock_guard lock(log_mutex);
        std::cerr << "k=" << sizes[i] << " iters=" << rows[i].iters << " loss=" << io::fmt(rows[i].final_loss) << "\n";
      }
    }
  };
  const int threads = std::min<int>(thread_cap(), static_cast<int>(sizes.size()));
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      try {
        worker();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  for (auto &t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::string csv = "k,iters,depth,cx_count,seconds,final_loss\n";
  for (const auto &r : rows)
    csv += std::to_string(r.k) + "," + std::to_string(r.iters) + "," + std::to_string(r.depth) + "," +
           std::to_string(r.cx) + "," + io::fmt(r.seconds) + "," + io::fmt(r.final_loss) + "\n";
  fs::create_directories(out);
  io::write_file(out / "sweep.csv", csv);
  std::cout << csv;
  return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Tucker-based quantum state preparation compiler"};
  app.require_subcommand(1);

  InputArgs in;
  EngineArgs ea;
  std::string out_dir = ".";
  long long baseline_depth = 0;
  std::string plan_path;
  std::string factor_sizes = "2,3,4,5";
  double precision = 1e-6;

  auto *prepare = app.add_subcommand("prepare", "Compile a state into a circuit");
  add_input(prepare, in);
  add_engine(prepare, ea);
  prepare->add_option("--baseline-depth", baseline_depth, "Depth of the exact initializer (0: 2^(n+1))");
  prepare->add_option("--out-dir", out_dir, "Output directory");

  auto *analyze = app.add_subcommand("analyze", "Write correlation weights and the chosen partition");
  add_input(analyze, in);
  add_engine(analyze, ea);
  analyze->add_option("--out-dir", out_dir, "Output directory");

  auto *verify = app.add_subcommand("verify", "Audit a plan against its target");
  verify->add_option("plan", plan_path, "plan.json")->required();
  add_input(verify, in);
  verify->add_option("--out-dir", out_dir, "Output directory");

  auto *bench = app.add_subcommand("bench", "Iterations to precision per factor size");
  add_input(bench, in);
  add_engine(bench, ea);
  bench->add_option("--factor-sizes", factor_sizes, "Comma-separated block sizes");
  bench->add_option("--precision", precision, "Target loss");
  bench->add_option("--out-dir", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*prepare) return cmd_prepare(in, ea, baseline_depth, out_dir);
    if (*analyze) return cmd_analyze(in, ea, out_dir);
    if (*verify) return cmd_verify(plan_path, in, out_dir);
    if (*bench) return cmd_bench(in, ea, factor_sizes, precision, out_dir);
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const fs::filesystem_error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
