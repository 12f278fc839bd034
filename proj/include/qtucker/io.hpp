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

// File formats: amplitude inputs, plan/circuit/audit JSON, trace and
// weight CSV. Parse failures raise ErrorCode::Parse, file failures Io.

#pragma once

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qtucker/engine.hpp"
#include "qtucker/synth.hpp"
#include "qtucker/verify.hpp"

namespace qtucker::io {

using nlohmann::json;

/// Shortest text that parses back to the same double.
inline std::string fmt(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string read_file(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + p.string());
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::Io, "read failed for " + p.string());
  return s;
}

inline void write_file(const std::filesystem::path &p, const std::string &content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  out << content;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + p.string());
}

// ---------------------------------------------------------------------------
// Amplitude inputs

enum class InputFormat { CsvComplex, JsonComplex, RawF64lePairs, ImagePgm };

inline InputFormat parse_input_format(const std::string &s) {
  if (s == "csv_complex" || s == "csv") return InputFormat::CsvComplex;
  if (s == "json_complex" || s == "json") return InputFormat::JsonComplex;
  if (s == "raw_f64le_pairs" || s == "raw") return InputFormat::RawF64lePairs;
  if (s == "image_pgm" || s == "pgm") return InputFormat::ImagePgm;
  throw Error(ErrorCode::Parse, "unknown input format '" + s + "'");
}

inline InputFormat infer_input_format(const std::filesystem::path &p) {
  const std::string ext = p.extension().string();
  if (ext == ".csv" || ext == ".txt") return InputFormat::CsvComplex;
  if (ext == ".json") return InputFormat::JsonComplex;
  if (ext == ".pgm") return InputFormat::ImagePgm;
  if (ext == ".bin" || ext == ".raw" || ext == ".f64") return InputFormat::RawF64lePairs;
  throw Error(ErrorCode::Parse, "cannot infer input format from '" + p.string() + "'");
}

namespace detail {

inline double parse_number(const std::string &tok) {
  std::size_t used = 0;
  std::string t = tok;
  t.erase(0, t.find_first_not_of(" \t\r"));
  t.erase(t.find_last_not_of(" \t\r") + 1);
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception &) {
    throw Error(ErrorCode::Parse, "not a number: '" + tok + "'");
  }
  if (used != t.size()) throw Error(ErrorCode::Parse, "trailing characters in '" + tok + "'");
  return v;
}

} // namespace detail

/// One "re,im" (or bare "re") entry per line; ';' also separates entries.
inline CVector parse_csv_complex(const std::string &text) {
  std::vector<cplx> vals;
  std::string entry;
  auto flush = [&] {
    const auto first = entry.find_first_not_of(" \t\r");
    if (first == std::string::npos || entry[first] == '#') {
      entry.clear();
      return;
    }
    const auto comma = entry.find(',');
    if (comma == std::string::npos) {
      vals.emplace_back(detail::parse_number(entry), 0.0);
    } else {
      if (entry.find(',', comma + 1) != std::string::npos)
        throw Error(ErrorCode::Parse, "too many fields in '" + entry + "'");
      vals.emplace_back(detail::parse_number(entry.substr(0, comma)),
                        detail::parse_number(entry.substr(comma + 1)));
    }
    entry.clear();
  };
  for (char ch : text) {
    if (ch == '\n' || ch == ';') flush();
    else entry.push_back(ch);
  }
  flush();
  CVector v(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v(static_cast<Eigen::Index>(i)) = vals[i];
  return v;
}

/// [[re, im], ...], [re, ...] or {"re": [...], "im": [...]}.
inline CVector parse_json_complex(const std::string &text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception &e) {
    throw Error(ErrorCode::Parse, e.what());
  }
  std::vector<cplx> vals;
  try {
    if (j.is_object()) {
      const auto &re = j.at("re");
      const json im = j.contains("im") ? j.at("im") : json::array();
      if (!im.empty() && im.size() != re.size())
        throw Error(ErrorCode::Parse, "re/im length mismatch");
      for (std::size_t i = 0; i < re.size(); ++i)
        vals.emplace_back(re[i].get<double>(), im.empty() ? 0.0 : im[i].get<double>());
    } else if (j.is_array()) {
      for (const auto &e : j) {
        if (e.is_number()) vals.emplace_back(e.get<double>(), 0.0);
        else if (e.is_array() && e.size() == 2) vals.emplace_back(e[0].get<double>(), e[1].get<double>());
        else throw Error(ErrorCode::Parse, "entry is neither a number nor [re, im]");
      }
    } else {
      throw Error(ErrorCode::Parse, "expected an array or object");
    }
  } catch (const json::exception &e) {
    throw Error(ErrorCode::Parse, e.what());
  }
  CVector v(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v(static_cast<Eigen::Index>(i)) = vals[i];
  return v;
}

/// Interleaved little-endian doubles re0 im0 re1 im1 ...
inline CVector parse_raw_f64le(const std::string &bytes) {
  if (bytes.size() % 16 != 0)
    throw Error(ErrorCode::Parse, "raw input length " + std::to_string(bytes.size()) +
                                      " is not a multiple of 16");
  const std::size_t count = bytes.size() / 16;
  CVector v(static_cast<Eigen::Index>(count));
  auto read = [&](std::size_t off) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b)
      bits = (bits << 8) | static_cast<unsigned char>(bytes[off + static_cast<std::size_t>(b)]);
    return std::bit_cast<double>(bits);
  };
  for (std::size_t i = 0; i < count; ++i)
    v(static_cast<Eigen::Index>(i)) = cplx(read(16 * i), read(16 * i + 8));
  return v;
}

struct GrayImage {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::vector<int> pixels; // row-major
};

/// Binary (P5) or ASCII (P2) portable graymap.
inline GrayImage parse_pgm(const std::string &data) {
  std::size_t pos = 0;
  auto skip = [&] {
    while (pos < data.size()) {
      if (std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
      else if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else break;
    }
  };
  auto integer = [&] {
    skip();
    const std::size_t start = pos;
    while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) ++pos;
    if (start == pos) throw Error(ErrorCode::Parse, "malformed PGM header");
    return std::stoi(data.substr(start, pos - start));
  };
  if (data.size() < 2 || data[0] != 'P' || (data[1] != '5' && data[1] != '2'))
    throw Error(ErrorCode::Parse, "not a P2/P5 PGM image");
  const bool binary = data[1] == '5';
  pos = 2;
  GrayImage img;
  img.width = integer();
  img.height = integer();
  img.maxval = integer();
  if (img.width <= 0 || img.height <= 0 || img.maxval <= 0 || img.maxval > 65535)
    throw Error(ErrorCode::Parse, "invalid PGM dimensions");
  const std::size_t count = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  img.pixels.reserve(count);
  if (binary) {
    ++pos; // single whitespace after maxval
    const std::size_t bpp = img.maxval > 255 ? 2 : 1;
    if (data.size() < pos + count * bpp) throw Error(ErrorCode::Parse, "truncated PGM raster");
    for (std::size_t i = 0; i < count; ++i) {
      const auto *p = reinterpret_cast<const unsigned char *>(data.data() + pos + i * bpp);
      img.pixels.push_back(bpp == 2 ? (p[0] << 8) | p[1] : p[0]);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) img.pixels.push_back(integer());
  }
  return img;
}

inline CVector load_amplitudes(const std::filesystem::path &path, InputFormat fmt) {
  const std::string data = read_file(path);
  switch (fmt) {
  case InputFormat::CsvComplex: return parse_csv_complex(data);
  case InputFormat::JsonComplex: return parse_json_complex(data);
  case InputFormat::RawF64lePairs: return parse_raw_f64le(data);
  case InputFormat::ImagePgm: {
    const GrayImage img = parse_pgm(data);
    CVector v(static_cast<Eigen::Index>(img.pixels.size()));
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
      v(static_cast<Eigen::Index>(i)) = static_cast<double>(img.pixels[i]);
    return v;
  }
  }
  throw Error(ErrorCode::Parse, "unsupported format");
}

/// Zero-pads to 2^n (the smallest fitting power, or target_qubits) and normalizes.
inline StateVector embed(const CVector &raw, std::optional<int> target_qubits = std::nullopt) {
  if (raw.size() == 0) throw Error(ErrorCode::ZeroVector, "empty input");
  int n = 0;
  while ((Eigen::Index{1} << n) < raw.size()) ++n;
  if (target_qubits) {
    if (*target_qubits < n)
      throw Error(ErrorCode::DimensionMismatch, std::to_string(raw.size()) +
                                                    " amplitudes do not fit " +
                                                    std::to_string(*target_qubits) + " qubits");
    n = *target_qubits;
  }
  CVector v = CVector::Zero(Eigen::Index{1} << n);
  v.head(raw.size()) = raw;
  return normalize(v);
}

// ---------------------------------------------------------------------------
// JSON helpers

inline json matrix_to_json(const CMatrix &m) {
  json re = json::array(), im = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      re.push_back(m(r, c).real());
      im.push_back(m(r, c).imag());
    }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"re", re}, {"im", im}};
}

inline CMatrix matrix_from_json(const json &j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto &re = j.at("re");
  const auto &im = j.at("im");
  if (rows < 0 || cols < 0 || re.size() != static_cast<std::size_t>(rows * cols) || im.size() != re.size())
    throw Error(ErrorCode::Parse, "matrix entry count does not match its shape");
  CMatrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c, ++k) m(r, c) = cplx(re[k].get<double>(), im[k].get<double>());
  return m;
}

inline json partition_to_json(const Partition &p) {
  json a = json::array();
  for (const auto &b : p.blocks) a.push_back(b.members());
  return a;
}

inline Partition partition_from_json(const json &j) {
  Partition p;
  for (const auto &b : j) {
    p.blocks.emplace_back(b.get<std::vector<int>>());
    p.block_size_max = std::max(p.block_size_max, static_cast<int>(b.size()));
  }
  return p;
}

inline json edges_to_json(const EdgeSet &e) {
  json a = json::array();
  for (const auto &[u, v] : e) a.push_back({u, v});
  return a;
}

/// [[u, v], ...] or {"edges": [[u, v], ...]}.
inline EdgeSet edges_from_json(const json &j) {
  const json &arr = j.is_object() ? j.at("edges") : j;
  if (!arr.is_array()) throw Error(ErrorCode::Parse, "edge list must be an array");
  EdgeSet e;
  for (const auto &p : arr) {
    if (!p.is_array() || p.size() != 2) throw Error(ErrorCode::Parse, "edge must be [u, v]");
    e.emplace_back(p[0].get<int>(), p[1].get<int>());
  }
  return e;
}

inline EdgeSet parse_constraint(const std::string &text) {
  try {
    return edges_from_json(json::parse(text));
  } catch (const json::exception &e) {
    throw Error(ErrorCode::Parse, std::string("constraint: ") + e.what());
  }
}

inline Metric parse_metric(const std::string &s) {
  if (s == "frobenius" || s == "frobenius_distance") return Metric::FrobeniusDistance;
  if (s == "mi" || s == "mutual_information") return Metric::MutualInformation;
  throw Error(ErrorCode::Parse, "unknown metric '" + s + "'");
}

inline std::string metric_name(Metric m) {
  return m == Metric::MutualInformation ? "mi" : "frobenius";
}

// ---------------------------------------------------------------------------
// Plan

inline json config_to_json(const EngineConfig &c) {
  json j = {{"epsilon", c.epsilon},         {"k_init", c.k_init},
            {"k_max", c.k_max},             {"stall_window", c.stall_window},
            {"stall_eps", c.stall_eps},     {"max_iters", c.max_iters},
            {"metric", metric_name(c.metric)}, {"seed", c.seed},
            {"restarts", c.restarts},       {"closest_tol", c.closest_tol},
            {"max_sweeps", c.max_sweeps},   {"level_budget", c.level_budget},
            {"perturbation", c.perturbation}};
  j["constraint"] = c.constraint ? edges_to_json(*c.constraint) : json(nullptr);
  return j;
}

inline EngineConfig config_from_json(const json &j) {
  EngineConfig c;
  c.epsilon = j.at("epsilon").get<double>();
  c.k_init = j.at("k_init").get<int>();
  c.k_max = j.at("k_max").get<int>();
  c.stall_window = j.at("stall_window").get<int>();
  c.stall_eps = j.at("stall_eps").get<double>();
  c.max_iters = j.at("max_iters").get<int>();
  c.metric = parse_metric(j.at("metric").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.restarts = j.value("restarts", c.restarts);
  c.closest_tol = j.value("closest_tol", c.closest_tol);
  c.max_sweeps = j.value("max_sweeps", c.max_sweeps);
  c.level_budget = j.value("level_budget", c.level_budget);
  c.perturbation = j.value("perturbation", c.perturbation);
  if (j.contains("constraint") && !j.at("constraint").is_null())
    c.constraint = edges_from_json(j.at("constraint"));
  return c;
}

inline json plan_to_json(const CircuitPlan &plan) {
  json layers = json::array();
  for (const auto &l : plan.layers) {
    json factors = json::array();
    for (const auto &f : l.factors)
      factors.push_back({{"qubits", f.qubits.members()}, {"rank", f.rank}, {"matrix", matrix_to_json(f.matrix)}});
    layers.push_back({{"iteration", l.iteration}, {"partition", partition_to_json(l.partition)}, {"factors", factors}});
  }
  json trace = json::array();
  for (const auto &r : plan.trace.records)
    trace.push_back({{"j", r.j},
                     {"k", r.k},
                     {"partition", partition_to_json(r.partition)},
                     {"cut", r.cut},
                     {"alpha", r.alpha},
                     {"fidelity", r.fidelity}});
  json j = {{"format", "qtucker-plan"}, {"version", 1}, {"n", plan.n},
            {"converged", plan.converged()}, {"config", config_to_json(plan.config)},
            {"layers", layers}, {"trace", trace}};
  j["residual_core"] = plan.residual_core ? matrix_to_json(CMatrix(plan.residual_core->amps())) : json(nullptr);
  return j;
}

inline CircuitPlan plan_from_json(const json &j) {
  try {
    if (j.at("format").get<std::string>() != "qtucker-plan")
      throw Error(ErrorCode::Parse, "not a qtucker plan");
    CircuitPlan plan;
    plan.n = j.at("n").get<int>();
    if (plan.n < 1 || plan.n > 30) throw Error(ErrorCode::Parse, "qubit count out of range");
    plan.config = config_from_json(j.at("config"));
    for (const auto &l : j.at("layers")) {
      Layer layer;
      layer.iteration = l.at("iteration").get<int>();
      layer.partition = partition_from_json(l.at("partition"));
      for (const auto &f : l.at("factors")) {
        BlockFactor bf;
        bf.qubits = QubitSet(f.at("qubits").get<std::vector<int>>());
        bf.qubits.validate(plan.n);
        bf.rank = f.at("rank").get<int>();
        bf.matrix = matrix_from_json(f.at("matrix"));
        const Eigen::Index d = Eigen::Index{1} << bf.qubits.size();
        if (bf.matrix.rows() != d || bf.matrix.cols() != d)
          throw Error(ErrorCode::Parse, "factor matrix does not match its qubits");
        layer.factors.push_back(std::move(bf));
      }
      plan.layers.push_back(std::move(layer));
    }
    for (const auto &r : j.at("trace")) {
      IterationRecord rec;
      rec.j = r.at("j").get<int>();
      rec.k = r.at("k").get<int>();
      rec.partition = partition_from_json(r.at("partition"));
      rec.cut = r.at("cut").get<double>();
      rec.alpha = r.at("alpha").get<double>();
      rec.fidelity = r.at("fidelity").get<double>();
      plan.trace.records.push_back(std::move(rec));
    }
    if (!j.at("residual_core").is_null()) {
      const CMatrix m = matrix_from_json(j.at("residual_core"));
      if (m.cols() != 1 || m.rows() != (Eigen::Index{1} << plan.n))
        throw Error(ErrorCode::Parse, "residual core has the wrong shape");
      plan.residual_core = StateVector::from_normalized(m.col(0));
    }
    return plan;
  } catch (const json::exception &e) {
    throw Error(ErrorCode::Parse, e.what());
  } catch (const Error &e) {
    if (e.code() == ErrorCode::Parse) throw;
    throw Error(ErrorCode::Parse, e.what());
  }
}

inline CircuitPlan load_plan(const std::filesystem::path &p) {
  const std::string text = read_file(p);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception &e) {
    throw Error(ErrorCode::Parse, e.what());
  }
  return plan_from_json(j);
}

// ---------------------------------------------------------------------------
// Circuit

inline json circuit_to_json(const GateCircuit &c) {
  json gates = json::array();
  for (const auto &g : c.gates) {
    json e = {{"kind", std::string(to_string(g.kind))}, {"qubits", g.qubits}};
    if (g.is_rotation()) e["params"] = {g.angle};
    else if (g.kind == GateKind::CX) e["params"] = json::array();
    else {
      e["matrix"] = matrix_to_json(g.matrix);
      e["cx_estimate"] = g.cx_estimate;
    }
    gates.push_back(std::move(e));
  }
  return {{"n", c.n},
          {"depth", c.depth()},
          {"cx_count", c.cx_count()},
          {"estimated_cx_count", c.estimated_cx_count()},
          {"gates", gates}};
}

inline GateCircuit circuit_from_json(const json &j) {
  try {
    GateCircuit c;
    c.n = j.at("n").get<int>();
    for (const auto &e : j.at("gates")) {
      const std::string kind = e.at("kind").get<std::string>();
      const auto q = e.at("qubits").get<std::vector<int>>();
      if (kind == "rx" || kind == "ry" || kind == "rz") {
        const GateKind k = kind == "rx" ? GateKind::Rx : kind == "ry" ? GateKind::Ry : GateKind::Rz;
        if (q.size() != 1) throw Error(ErrorCode::Parse, "rotation needs one qubit");
        c.gates.push_back(Gate::rotation(k, q[0], e.at("params").at(0).get<double>()));
      } else if (kind == "cx") {
        if (q.size() != 2) throw Error(ErrorCode::Parse, "cx needs two qubits");
        c.gates.push_back(Gate::cx(q[0], q[1]));
      } else if (kind == "opaque") {
        CMatrix m = e.contains("matrix") ? matrix_from_json(e.at("matrix")) : CMatrix();
        c.gates.push_back(Gate::opaque(q, std::move(m), e.value("cx_estimate", 0LL)));
      } else {
        throw Error(ErrorCode::Parse, "unknown gate kind '" + kind + "'");
      }
    }
    c.validate();
    return c;
  } catch (const json::exception &e) {
    throw Error(ErrorCode::Parse, e.what());
  }
}

// ---------------------------------------------------------------------------
// Tables and reports

inline std::string partition_label(const Partition &p) {
  std::string s;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    if (b) s += '|';
    for (std::size_t i = 0; i < p.blocks[b].size(); ++i) {
      if (i) s += '-';
      s += std::to_string(p.blocks[b][i]);
    }
  }
  return s;
}

/// Per-iteration table; wall time is left out so equal runs give equal files.
inline std::string trace_csv(const IterationTrace &t) {
  std::string s = "j,k,cut,alpha,fidelity,loss,partition\n";
  for (const auto &r : t.records)
    s += std::to_string(r.j) + "," + std::to_string(r.k) + "," + fmt(r.cut) + "," + fmt(r.alpha) + "," +
         fmt(r.fidelity) + "," + fmt(1.0 - r.fidelity) + "," + partition_label(r.partition) + "\n";
  return s;
}

inline std::string weights_csv(const CorrelationGraph &g) {
  std::string s;
  for (Eigen::Index i = 0; i < g.weights.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.weights.cols(); ++j) {
      if (j) s += ',';
      s += fmt(g.weights(i, j));
    }
    s += '\n';
  }
  return s;
}

inline json audit_to_json(const AuditReport &r) {
  json v = json::array();
  for (const auto &x : r.violations)
    v.push_back({{"kind", x.kind}, {"iteration", x.iteration}, {"value", x.value}, {"bound", x.bound}});
  json it = json::array();
  for (const auto &x : r.iterations) {
    json e = {{"j", x.j}, {"recorded_fidelity", x.recorded_fidelity}, {"replayed_fidelity", x.replayed_fidelity}};
    e["ceiling"] = x.ceiling >= 0 ? json(x.ceiling) : json(nullptr);
    it.push_back(std::move(e));
  }
  return {{"clean", r.clean()},
          {"simulated_fidelity", r.simulated_fidelity},
          {"expected_fidelity", r.expected_fidelity},
          {"violations", v},
          {"iterations", it}};
}

} // namespace qtucker::io
