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

#include <cstring>

#include "catch_amalgamated.hpp"
#include "qtucker/io.hpp"
#include "support.hpp"

using namespace qt_test;
using Catch::Matchers::WithinAbs;
namespace qio = qtucker::io;

namespace {

ErrorCode code_of(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.code();
  }
  return ErrorCode::Io;
}

std::string raw_bytes(const std::vector<double> &vals) {
  std::string s(vals.size() * 8, '\0');
  for (std::size_t i = 0; i < vals.size(); ++i) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &vals[i], 8);
    for (int b = 0; b < 8; ++b) s[8 * i + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  return s;
}

} // namespace

TEST_CASE("fmt round-trips doubles", "[io]") {
  std::mt19937_64 rng(90);
  std::normal_distribution<double> g;
  for (int t = 0; t < 1000; ++t) {
    const double v = g(rng) * std::pow(10.0, static_cast<int>(t % 40) - 20);
    CHECK(std::strtod(qio::fmt(v).c_str(), nullptr) == v);
  }
  CHECK(qio::fmt(0.5) == "0.5");
  CHECK(qio::fmt(1.0) == "1");
}

TEST_CASE("csv complex parsing", "[io]") {
  const CVector a = qio::parse_csv_complex("0.5,0;0.5,0;0.5,0;0.5,0");
  REQUIRE(a.size() == 4);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(a(i) == cplx(0.5, 0.0));

  const CVector b = qio::parse_csv_complex("# header\n1, -2\n\n3\n 4.5e-1 ,1e3\r\n");
  REQUIRE(b.size() == 3);
  CHECK(b(0) == cplx(1, -2));
  CHECK(b(1) == cplx(3, 0));
  CHECK(b(2) == cplx(0.45, 1000));

  CHECK(code_of([] { qio::parse_csv_complex("1,2,3"); }) == ErrorCode::Parse);
  CHECK(code_of([] { qio::parse_csv_complex("abc"); }) == ErrorCode::Parse);
  CHECK(code_of([] { qio::parse_csv_complex("1.0x,0"); }) == ErrorCode::Parse);
}

TEST_CASE("json complex parsing", "[io]") {
  const CVector a = qio::parse_json_complex("[[1,2],[3,-4]]");
  REQUIRE(a.size() == 2);
  CHECK(a(1) == cplx(3, -4));
  const CVector b = qio::parse_json_complex("[1, 0.5]");
  CHECK(b(1) == cplx(0.5, 0));
  const CVector c = qio::parse_json_complex(R"({"re": [1, 2], "im": [0, -1]})");
  CHECK(c(1) == cplx(2, -1));
  CHECK(code_of([] { qio::parse_json_complex("[[1,2,3]]"); }) == ErrorCode::Parse);
  CHECK(code_of([] { qio::parse_json_complex("{"); }) == ErrorCode::Parse);
  CHECK(code_of([] { qio::parse_json_complex(R"({"re": [1], "im": [1, 2]})"); }) == ErrorCode::Parse);
  CHECK(code_of([] { qio::parse_json_complex("\"x\""); }) == ErrorCode::Parse);
}

TEST_CASE("raw little-endian pairs", "[io]") {
  const CVector v = qio::parse_raw_f64le(raw_bytes({1.5, -2.0, 0.0, 3.25}));
  REQUIRE(v.size() == 2);
  CHECK(v(0) == cplx(1.5, -2.0));
  CHECK(v(1) == cplx(0.0, 3.25));
  CHECK(code_of([] { qio::parse_raw_f64le(std::string(15, '\0')); }) == ErrorCode::Parse);
}

TEST_CASE("pgm parsing and embedding", "[io]") {
  const auto a = qio::parse_pgm("P2\n# c\n3 2\n255\n0 1 2\n3 4 255\n");
  CHECK(a.width == 3);
  CHECK(a.height == 2);
  CHECK(a.pixels == std::vector<int>{0, 1, 2, 3, 4, 255});

  std::string p5 = "P5 2 2 255\n";
  p5 += std::string{'\x00', '\x10', '\x20', '\xff'};
  CHECK(qio::parse_pgm(p5).pixels == std::vector<int>{0, 16, 32, 255});
  std::string wide = "P5 1 2 1000\n";
  wide += std::string{'\x03', '\xe8', '\x00', '\x01'};
  CHECK(qio::parse_pgm(wide).pixels == std::vector<int>{1000, 1});

  CHECK(code_of([] { qio::parse_pgm("P6 1 1 255\n\x01"); }) == ErrorCode::Parse);
  CHECK(code_of([] { qio::parse_pgm("P5 4 4 255\n\x01"); }) == ErrorCode::Parse);

  const auto img = qio::load_amplitudes(QTUCKER_TEST_DATA "/mnist_zero.pgm", qio::InputFormat::ImagePgm);
  CHECK(img.size() == 784);
  const StateVector s = qio::embed(img);
  CHECK(s.n() == 10);
  CHECK_THAT(s.amps().norm(), WithinAbs(1.0, 1e-12));
  for (Eigen::Index i = 784; i < 1024; ++i) CHECK(s.amps()(i) == cplx(0.0));
  // row-major flattening: amplitude ratio matches pixel ratio
  const auto raw = qio::parse_pgm(qio::read_file(QTUCKER_TEST_DATA "/mnist_zero.pgm"));
  const auto peak = std::max_element(raw.pixels.begin(), raw.pixels.end()) - raw.pixels.begin();
  CHECK_THAT(s.amps()(peak).real() / s.amps()(300).real(),
             WithinAbs(raw.pixels[static_cast<std::size_t>(peak)] / std::max(1.0, double(raw.pixels[300])), 1e-9 * 255));
}

TEST_CASE("embed pads and validates", "[io]") {
  CVector v(3);
  v << 3, 4, 0;
  const StateVector s = qio::embed(v);
  CHECK(s.n() == 2);
  CHECK_THAT(s[0].real(), WithinAbs(0.6, 1e-15));
  CHECK(qio::embed(v, 4).n() == 4);
  CHECK(code_of([&] { qio::embed(v, 1); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([] { qio::embed(CVector(CVector::Zero(4))); }) == ErrorCode::ZeroVector);
  CHECK(code_of([] { qio::embed(CVector()); }) == ErrorCode::ZeroVector);
}

TEST_CASE("input format names", "[io]") {
  CHECK(qio::parse_input_format("csv_complex") == qio::InputFormat::CsvComplex);
  CHECK(qio::parse_input_format("image_pgm") == qio::InputFormat::ImagePgm);
  CHECK(qio::infer_input_format("x/y.json") == qio::InputFormat::JsonComplex);
  CHECK(qio::infer_input_format("a.bin") == qio::InputFormat::RawF64lePairs);
  CHECK(code_of([] { qio::parse_input_format("png"); }) == ErrorCode::Parse);
  CHECK(code_of([] { qio::infer_input_format("a.png"); }) == ErrorCode::Parse);
  CHECK(code_of([] { qio::read_file("/nonexistent/definitely/missing"); }) == ErrorCode::Io);
}

TEST_CASE("constraint and metric parsing", "[io]") {
  const EdgeSet e = qio::parse_constraint("[[0,1],[3,2]]");
  CHECK(e.size() == 2);
  const EdgeSet f = qio::parse_constraint(R"({"edges": [[1, 2]]})");
  CHECK(f.size() == 1);
  CHECK(code_of([] { qio::parse_constraint("[[0]]"); }) == ErrorCode::Parse);
  CHECK(code_of([] { qio::parse_constraint("nope"); }) == ErrorCode::Parse);
  CHECK(qio::parse_metric("mi") == Metric::MutualInformation);
  CHECK(qio::parse_metric("frobenius") == Metric::FrobeniusDistance);
  CHECK(qio::metric_name(qio::parse_metric("mi")) == "mi");
  CHECK(code_of([] { qio::parse_metric("l2"); }) == ErrorCode::Parse);
}

TEST_CASE("plan json round trip", "[io]") {
  std::mt19937_64 rng(91);
  const StateVector s = random_state(5, rng);
  EngineConfig c;
  c.seed = 7;
  c.metric = Metric::MutualInformation;
  for (int iters : {0, 3}) {
    c.max_iters = iters;
    const CircuitPlan plan = run(s, c);
    const auto text = qio::plan_to_json(plan).dump();
    const CircuitPlan back = qio::plan_from_json(nlohmann::json::parse(text));
    CHECK(back.n == plan.n);
    CHECK(back.converged() == plan.converged());
    REQUIRE(back.layers.size() == plan.layers.size());
    for (std::size_t i = 0; i < plan.layers.size(); ++i) {
      CHECK(back.layers[i].iteration == plan.layers[i].iteration);
      CHECK(back.layers[i].partition == plan.layers[i].partition);
      for (std::size_t q = 0; q < plan.layers[i].factors.size(); ++q) {
        CHECK(max_abs(back.layers[i].factors[q].matrix - plan.layers[i].factors[q].matrix) == 0.0);
        CHECK(back.layers[i].factors[q].qubits.members() == plan.layers[i].factors[q].qubits.members());
      }
    }
    REQUIRE(back.trace.records.size() == plan.trace.records.size());
    for (std::size_t i = 0; i < plan.trace.records.size(); ++i) {
      CHECK(back.trace.records[i].fidelity == plan.trace.records[i].fidelity);
      CHECK(back.trace.records[i].alpha == plan.trace.records[i].alpha);
      CHECK(back.trace.records[i].k == plan.trace.records[i].k);
    }
    CHECK(back.config.seed == 7);
    CHECK(back.config.metric == Metric::MutualInformation);
    CHECK(audit_trace(back, s).clean());
    if (!plan.converged()) CHECK(max_abs(back.residual_core->amps() - plan.residual_core->amps()) == 0.0);
  }
  CHECK(code_of([] { qio::plan_from_json(nlohmann::json::parse(R"({"format":"qtucker-plan"})")); }) ==
        ErrorCode::Parse);
  CHECK(code_of([] { qio::plan_from_json(nlohmann::json::parse("[]")); }) == ErrorCode::Parse);
}

TEST_CASE("circuit json round trip", "[io]") {
  std::mt19937_64 rng(92);
  CircuitPlan plan = run(random_state(4, rng), {});
  plan.residual_core = random_state(4, rng);
  const GateCircuit c = synthesize_plan(plan);
  const auto j = qio::circuit_to_json(c);
  CHECK(j.at("cx_count").get<int>() == c.cx_count());
  CHECK(j.at("depth").get<int>() == c.depth());
  const GateCircuit back = qio::circuit_from_json(nlohmann::json::parse(j.dump()));
  REQUIRE(back.gates.size() == c.gates.size());
  for (std::size_t i = 0; i < c.gates.size(); ++i) {
    CHECK(back.gates[i].kind == c.gates[i].kind);
    CHECK(back.gates[i].qubits == c.gates[i].qubits);
    CHECK(back.gates[i].angle == c.gates[i].angle);
    CHECK(back.gates[i].cx_estimate == c.gates[i].cx_estimate);
  }
  CHECK_THAT(fidelity(simulate_gates(back), simulate_gates(c)), WithinAbs(1.0, 1e-14));
}

TEST_CASE("tables", "[io]") {
  IterationTrace t;
  t.records.push_back(IterationRecord{1, make_partition({{0, 1}, {2, 3}}), 2, 0.25, std::sqrt(0.5), 0.5, 3.0});
  CHECK(qio::trace_csv(t) == "j,k,cut,alpha,fidelity,loss,partition\n1,2,0.25,0.7071067811865476,0.5,0.5,0-1|2-3\n");

  const CorrelationGraph g = pair_weights(bell(), Metric::FrobeniusDistance);
  const std::string w = qio::weights_csv(g);
  CHECK(std::count(w.begin(), w.end(), '\n') == 2);
  CHECK(w.rfind("0,", 0) == 0);

  AuditReport r;
  r.violations.push_back({"monotonicity", 5, 0.1, 0.2});
  const auto a = qio::audit_to_json(r);
  CHECK_FALSE(a.at("clean").get<bool>());
  CHECK(a.at("violations")[0].at("iteration").get<int>() == 5);
}
