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

#include "catch_amalgamated.hpp"
#include "support.hpp"

using namespace qt_test;
using Catch::Matchers::WithinAbs;

namespace {

template <typename F>
ErrorCode code_of(F &&f) {
  try {
    f();
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("no exception");
  return ErrorCode::Io;
}

} // namespace

TEST_CASE("normalize scales to unit norm", "[statevec]") {
  CVector a(4);
  a << 2, 0, 0, 0;
  const StateVector s = normalize(a);
  CHECK(s.n() == 2);
  CHECK(std::abs(s[0] - cplx(1.0)) < 1e-15);

  CVector b = CVector::Ones(4);
  const StateVector t = normalize(b);
  for (std::size_t i = 0; i < 4; ++i) CHECK_THAT(t[i].real(), WithinAbs(0.5, 1e-15));
}

TEST_CASE("normalize rejects bad lengths and zero vectors", "[statevec]") {
  CHECK(code_of([] { normalize(CVector(CVector::Zero(3))); }) == ErrorCode::NotPowerOfTwo);
  CHECK(code_of([] { normalize(CVector(CVector::Zero(4))); }) == ErrorCode::ZeroVector);
  CHECK(code_of([] { StateVector::from_normalized(CVector(CVector::Ones(4))); }) == ErrorCode::NotNormalized);
}

TEST_CASE("qubit 0 is the most significant index bit", "[statevec]") {
  // |10> has index 2 when qubit 0 is the high-order bit
  const StateVector s = StateVector::basis(2, 2);
  const DensityMatrix r0 = reduced_density(s, QubitSet{0});
  const DensityMatrix r1 = reduced_density(s, QubitSet{1});
  CHECK_THAT(r0.elements(1, 1).real(), WithinAbs(1.0, 1e-15));
  CHECK_THAT(r1.elements(0, 0).real(), WithinAbs(1.0, 1e-15));

  // round trip through a block gather/scatter with a permuted block
  std::mt19937_64 rng(3);
  const StateVector r = random_state(4, rng);
  const BlockView view(4, QubitSet{2, 0});
  CVector out = CVector::Zero(16);
  view.scatter(view.gather(r.amps()), out);
  CHECK(max_abs(out - r.amps()) == 0.0);
  // row index of the unfolding reads qubit 2 as its high bit
  CHECK(view.block_offsets()[1] == 8);
  CHECK(view.block_offsets()[2] == 2);
}

TEST_CASE("fidelity", "[statevec]") {
  std::mt19937_64 rng(1);
  const StateVector s = random_state(3, rng);
  CHECK_THAT(fidelity(s, s), WithinAbs(1.0, 1e-14));
  CHECK(fidelity(StateVector::basis(2, 0), StateVector::basis(2, 3)) == 0.0);
  CHECK_THAT(fidelity(bell(), StateVector::zero(2)), WithinAbs(0.5, 1e-15));
  const StateVector t = random_state(3, rng);
  CHECK(fidelity(s, t) == fidelity(t, s));
  CHECK(code_of([&] { fidelity(s, bell()); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("reduced density examples", "[statevec]") {
  const DensityMatrix a = reduced_density(StateVector::zero(2), QubitSet{0});
  CHECK(max_abs(a.elements - (CMatrix(2, 2) << 1, 0, 0, 0).finished()) < 1e-15);

  const DensityMatrix b = reduced_density(bell(), QubitSet{0});
  CHECK(max_abs(b.elements - CMatrix::Identity(2, 2) * 0.5) < 1e-15);

  const DensityMatrix g = reduced_density(ghz(3), QubitSet{0, 1});
  CHECK(max_abs(g.elements - dense_marginal(ghz(3), {0, 1})) < 1e-15);
  CHECK_THAT(g.elements(0, 0).real(), WithinAbs(0.5, 1e-15));
  CHECK_THAT(g.elements(3, 3).real(), WithinAbs(0.5, 1e-15));
  CHECK(a.satisfies_invariants());
  CHECK(g.satisfies_invariants());

  CHECK(code_of([] { reduced_density(bell(), QubitSet{}); }) == ErrorCode::EmptySet);
  CHECK(code_of([] { reduced_density(bell(), QubitSet{0, 5}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("reduced density agrees with dense partial trace", "[statevec][property]") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const StateVector s = random_state(5, rng);
    for (const auto &keep : {std::vector<int>{3}, {4, 1}, {0, 2, 3}}) {
      const DensityMatrix r = reduced_density(s, QubitSet(keep));
      CHECK(max_abs(r.elements - dense_marginal(s, keep)) < 1e-13);
      CHECK(r.satisfies_invariants());
    }
  }
}

TEST_CASE("marginal consistency between one- and two-qubit marginals", "[statevec][property]") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 5; ++t) {
    const StateVector s = random_state(6, rng);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        if (i == j) continue;
        const CMatrix rij = reduced_density(s, QubitSet{i, j}).elements;
        CMatrix traced(2, 2); // trace out j (second local qubit)
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) traced(a, b) = rij(2 * a, 2 * b) + rij(2 * a + 1, 2 * b + 1);
        CHECK(max_abs(traced - reduced_density(s, QubitSet{i}).elements) < 1e-12);
      }
  }
}

TEST_CASE("entropy examples and bounds", "[statevec]") {
  CHECK_THAT(entropy(reduced_density(StateVector::zero(3), QubitSet{0, 1})), WithinAbs(0.0, 1e-12));
  CHECK_THAT(entropy(DensityMatrix{CMatrix::Identity(2, 2) * 0.5}), WithinAbs(1.0, 1e-12));
  CHECK_THAT(entropy(DensityMatrix{CMatrix::Identity(4, 4) * 0.25}), WithinAbs(2.0, 1e-12));

  std::mt19937_64 rng(4);
  for (int t = 0; t < 30; ++t) {
    const StateVector s = random_state(5, rng);
    const QubitSet keep{t % 5, (t + 2) % 5};
    const double e = entropy(reduced_density(s, keep));
    CHECK(e >= 0.0);
    CHECK(e <= 2.0 + 1e-12);
  }
}

TEST_CASE("schmidt spectrum examples", "[statevec]") {
  const RVector b = schmidt_spectrum(bell(), QubitSet{0});
  CHECK_THAT(b(0), WithinAbs(1 / std::sqrt(2.0), 1e-14));
  CHECK_THAT(b(1), WithinAbs(1 / std::sqrt(2.0), 1e-14));

  std::mt19937_64 rng(5);
  const StateVector p = random_product({1, 2, 1}, rng);
  const RVector ps = schmidt_spectrum(p, QubitSet{1, 2});
  CHECK_THAT(ps(0), WithinAbs(1.0, 1e-12));
  CHECK(ps.tail(ps.size() - 1).maxCoeff() < 1e-7);

  const RVector g = schmidt_spectrum(ghz(4), QubitSet{0, 1});
  Eigen::JacobiSVD<CMatrix> dense(Eigen::Map<const CMatrix>(ghz(4).amps().data(), 4, 4));
  CHECK((g - dense.singularValues()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THAT(g(0), WithinAbs(1 / std::sqrt(2.0), 1e-14));
  CHECK_THAT(g(2), WithinAbs(0.0, 1e-14));

  CHECK(code_of([] { schmidt_spectrum(bell(), QubitSet{}); }) == ErrorCode::EmptySet);
  CHECK(code_of([] { schmidt_spectrum(bell(), QubitSet{0, 1}); }) == ErrorCode::FullSet);
}

TEST_CASE("schmidt spectrum bounds product overlaps", "[statevec][property]") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 50; ++t) {
    const StateVector s = random_state(5, rng);
    const StateVector left = random_state(2, rng), right = random_state(3, rng);
    const StateVector p = kron(left, right);
    const double lam = schmidt_spectrum(s, QubitSet{0, 1})(0);
    CHECK(std::abs(inner(p, s)) <= lam + 1e-10);
    const RVector sv = schmidt_spectrum(s, QubitSet{0, 1});
    CHECK_THAT(sv.squaredNorm(), WithinAbs(1.0, 1e-10));
  }
}

TEST_CASE("apply_block_adjoint examples", "[statevec]") {
  std::mt19937_64 rng(7);
  const StateVector s = random_state(3, rng);
  const BlockFactor id{QubitSet{1}, CMatrix::Identity(2, 2), 2};
  CHECK(max_abs(apply_block_adjoint(s, id).amps() - s.amps()) == 0.0);

  CMatrix h(2, 2);
  h << 1, 1, 1, -1;
  h /= std::sqrt(2.0);
  CVector plus_zero(4);
  plus_zero << 1, 0, 1, 0;
  const StateVector pz = normalize(plus_zero);
  const StateVector back = apply_block_adjoint(pz, BlockFactor{QubitSet{0}, h, 2});
  CHECK(max_abs(back.amps() - StateVector::zero(2).amps()) < 1e-15);

  // a unitary whose first column is Bell maps Bell back to |00>
  CMatrix seed = CMatrix::Zero(4, 1);
  seed.col(0) = bell().amps();
  const CMatrix u = detail::complete_to_unitary(seed);
  REQUIRE(is_unitary(u, 1e-12));
  const StateVector z = apply_block_adjoint(bell(), BlockFactor{QubitSet{0, 1}, u, 4});
  CHECK(max_abs(z.amps() - (u.adjoint() * bell().amps())) < 1e-15);
  CHECK_THAT(std::abs(z[0]), WithinAbs(1.0, 1e-14));

  CHECK(code_of([&] { apply_block_adjoint(s, BlockFactor{QubitSet{0}, CMatrix::Identity(4, 4), 4}); }) ==
        ErrorCode::DimensionMismatch);
  CHECK(code_of([&] { apply_block_adjoint(s, BlockFactor{QubitSet{3}, CMatrix::Identity(2, 2), 2}); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("block application matches the dense operator", "[statevec][property]") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 200; ++t) {
    const int n = 3 + t % 3;
    const StateVector s = random_state(n, rng);
    std::vector<int> q(static_cast<std::size_t>(n));
    std::iota(q.begin(), q.end(), 0);
    std::shuffle(q.begin(), q.end(), rng);
    q.resize(static_cast<std::size_t>(1 + t % 2));
    const CMatrix u = haar_unitary(1 << q.size(), rng);
    const BlockFactor f{QubitSet(q), u, static_cast<int>(u.rows())};
    const StateVector out = apply_block_adjoint(s, f);
    CHECK_THAT(out.amps().norm(), WithinAbs(1.0, 1e-12));
    CHECK(max_abs(out.amps() - dense_operator(n, q, u).adjoint() * s.amps()) < 1e-13);
    CHECK(max_abs(apply_block(out, f).amps() - s.amps()) < 1e-13);
  }
}
