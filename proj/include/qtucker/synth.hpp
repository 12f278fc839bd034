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

// Lowering of block factors to {Rx, Ry, Rz, CX}. Gate lists are in time
// order (first element applied first). Global phase is dropped throughout.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qtucker/engine.hpp"
#include "qtucker/statevec.hpp"
#include "qtucker/tucker.hpp"

namespace qtucker {

enum class GateKind { Rx, Ry, Rz, CX, OpaqueUnitary };

inline std::string_view to_string(GateKind k) {
  switch (k) {
  case GateKind::Rx: return "rx";
  case GateKind::Ry: return "ry";
  case GateKind::Rz: return "rz";
  case GateKind::CX: return "cx";
  case GateKind::OpaqueUnitary: return "opaque";
  }
  return "unknown";
}

struct Gate {
  GateKind kind = GateKind::Rz;
  std::vector<int> qubits;
  double angle = 0.0;
  // Opaque only: a d x p matrix with orthonormal columns over `qubits`
  // (p < d means an isometry from the first p basis states).
  CMatrix matrix;
  long long cx_estimate = 0;

  static Gate rotation(GateKind k, int q, double theta) { return Gate{k, {q}, theta, {}, 0}; }
  static Gate cx(int control, int target) { return Gate{GateKind::CX, {control, target}, 0.0, {}, 0}; }
  static Gate opaque(std::vector<int> qubits, CMatrix m, long long estimate) {
    return Gate{GateKind::OpaqueUnitary, std::move(qubits), 0.0, std::move(m), estimate};
  }

  bool is_rotation() const {
    return kind == GateKind::Rx || kind == GateKind::Ry || kind == GateKind::Rz;
  }
};

/// CX count charged to an unsynthesized k-qubit unitary.
inline long long opaque_cx_estimate(int k) {
  const double v = 0.75 * std::pow(4.0, k) - 1.5 * std::pow(2.0, k);
  return std::max(0LL, std::llround(v));
}

struct GateCircuit {
  int n = 0;
  std::vector<Gate> gates;

  /// Greedy layering; every gate occupies one time step.
  int depth() const { return layered_depth(false); }

  /// As depth(), but an opaque gate occupies cx_estimate steps.
  long long estimated_depth() const { return layered_depth(true); }

  int cx_count() const {
    return static_cast<int>(std::count_if(gates.begin(), gates.end(),
                                          [](const Gate &g) { return g.kind == GateKind::CX; }));
  }

  long long estimated_cx_count() const {
    long long c = cx_count();
    for (const auto &g : gates)
      if (g.kind == GateKind::OpaqueUnitary) c += g.cx_estimate;
    return c;
  }

  int opaque_count() const {
    return static_cast<int>(std::count_if(gates.begin(), gates.end(), [](const Gate &g) {
      return g.kind == GateKind::OpaqueUnitary;
    }));
  }

  void validate() const {
    for (const auto &g : gates)
      QubitSet(g.qubits).validate(n);
  }

private:
  long long layered_depth(bool weighted) const {
    std::vector<long long> front(static_cast<std::size_t>(n), 0);
    long long d = 0;
    for (const auto &g : gates) {
      long long start = 0;
      for (int q : g.qubits) start = std::max(start, front[static_cast<std::size_t>(q)]);
      const long long w =
          (weighted && g.kind == GateKind::OpaqueUnitary) ? std::max(1LL, g.cx_estimate) : 1;
      for (int q : g.qubits) front[static_cast<std::size_t>(q)] = start + w;
      d = std::max(d, start + w);
    }
    return d;
  }
};

inline Eigen::Matrix2cd rx_matrix(double t) {
  const double c = std::cos(t / 2), s = std::sin(t / 2);
  Eigen::Matrix2cd m;
  m << c, cplx(0, -s), cplx(0, -s), c;
  return m;
}

inline Eigen::Matrix2cd ry_matrix(double t) {
  const double c = std::cos(t / 2), s = std::sin(t / 2);
  Eigen::Matrix2cd m;
  m << c, -s, s, c;
  return m;
}

inline Eigen::Matrix2cd rz_matrix(double t) {
  Eigen::Matrix2cd m;
  m << std::polar(1.0, -t / 2), 0.0, 0.0, std::polar(1.0, t / 2);
  return m;
}

inline Eigen::Matrix4cd cx_matrix() {
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1.0;
  return m;
}

inline Eigen::Matrix2cd rotation_matrix(const Gate &g) {
  switch (g.kind) {
  case GateKind::Rx: return rx_matrix(g.angle);
  case GateKind::Ry: return ry_matrix(g.angle);
  case GateKind::Rz: return rz_matrix(g.angle);
  default: throw Error(ErrorCode::InvalidConfig, "not a rotation gate");
  }
}

/// |<A, B>| / d: equals 1 iff A and B agree up to global phase.
inline double phase_invariant_overlap(const CMatrix &a, const CMatrix &b) {
  return std::abs((a.adjoint() * b).trace()) / static_cast<double>(a.rows());
}

namespace detail {

inline constexpr double kUnitaryTolerance = 1e-10;
inline constexpr double kAngleTolerance = 1e-12;

inline void require_unitary(const CMatrix &u, Eigen::Index d) {
  if (u.rows() != d || u.cols() != d)
    throw Error(ErrorCode::NotUnitary, "expected a " + std::to_string(d) + "x" +
                                           std::to_string(d) + " matrix");
  const double err = (u.adjoint() * u - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff();
  if (!(err <= kUnitaryTolerance))
    throw Error(ErrorCode::NotUnitary, "deviation " + std::to_string(err));
}

/// Into (-pi, pi].
inline double wrap_angle(double t) {
  constexpr double two_pi = 2 * std::numbers::pi;
  t = std::fmod(t, two_pi);
  if (t <= -std::numbers::pi) t += two_pi;
  if (t > std::numbers::pi) t -= two_pi;
  return t;
}

inline void push_rotation(std::vector<Gate> &out, GateKind k, int q, double t) {
  t = wrap_angle(t);
  if (std::abs(t) > kAngleTolerance) out.push_back(Gate::rotation(k, q, t));
}

} // namespace detail

/// U ~ Rz(a) Ry(b) Rz(c); emitted in time order Rz(c), Ry(b), Rz(a).
inline std::vector<Gate> zyz(const CMatrix &u, int qubit = 0) {
  detail::require_unitary(u, 2);
  const cplx det = u.determinant();
  const Eigen::Matrix2cd v = u / std::sqrt(det);
  const double ma = std::abs(v(0, 0)), mb = std::abs(v(1, 0));
  const double beta = 2.0 * std::atan2(mb, ma);
  double alpha = 0.0, gamma = 0.0;
  if (mb <= 1e-14) {
    alpha = -2.0 * std::arg(v(0, 0));
  } else if (ma <= 1e-14) {
    alpha = 2.0 * std::arg(v(1, 0));
  } else {
    const double sum = -2.0 * std::arg(v(0, 0)); // alpha + gamma
    const double diff = 2.0 * std::arg(v(1, 0));  // alpha - gamma
    alpha = (sum + diff) / 2;
    gamma = (sum - diff) / 2;
  }
  std::vector<Gate> out;
  if (std::abs(detail::wrap_angle(beta)) <= detail::kAngleTolerance) {
    detail::push_rotation(out, GateKind::Rz, qubit, alpha + gamma);
    return out;
  }
  detail::push_rotation(out, GateKind::Rz, qubit, gamma);
  detail::push_rotation(out, GateKind::Ry, qubit, beta);
  detail::push_rotation(out, GateKind::Rz, qubit, alpha);
  return out;
}

/// Full operator of a gate on its own qubits (listed order, first = MSB).
inline CMatrix gate_operator(const Gate &g) {
  switch (g.kind) {
  case GateKind::CX: return cx_matrix();
  case GateKind::OpaqueUnitary:
    if (g.matrix.size() == 0)
      throw Error(ErrorCode::OpaqueWithoutMatrix, "opaque gate carries no matrix");
    return g.matrix.cols() < g.matrix.rows() ? detail::complete_to_unitary(g.matrix) : g.matrix;
  default: return rotation_matrix(g);
  }
}

inline void apply_gate(CVector &amps, int n, const Gate &g) {
  const BlockView view(n, QubitSet(g.qubits));
  const CMatrix op = gate_operator(g);
  if (static_cast<std::size_t>(op.rows()) != view.block_dim())
    throw Error(ErrorCode::DimensionMismatch, "gate matrix does not match its qubits");
  view.scatter(op * view.gather(amps), amps);
}

/// Product of a time-ordered gate list on `n` qubits (qubit 0 = MSB).
inline CMatrix gates_matrix(const std::vector<Gate> &gates, int n) {
  const Eigen::Index d = Eigen::Index{1} << n;
  CMatrix total = CMatrix::Identity(d, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    CVector col = total.col(c);
    for (const auto &g : gates) apply_gate(col, n, g);
    total.col(c) = col;
  }
  return total;
}

namespace detail {

/// Magic basis: local SU(2) x SU(2) becomes real SO(4), the canonical gate
/// exp(i(x XX + y YY + z ZZ)) becomes diagonal.
inline Eigen::Matrix4cd magic_basis() {
  const double r = 1.0 / std::numbers::sqrt2;
  const cplx i(0, 1);
  Eigen::Matrix4cd b;
  b << 1, 0, 0, i,
       0, i, 1, 0,
       0, i, -1, 0,
       1, 0, 0, -i;
  return b * r;
}

inline Eigen::Matrix4cd canonical_gate(double x, double y, double z) {
  const std::array<double, 4> th{x - y + z, x + y - z, -x - y - z, -x + y + z};
  Eigen::Vector4cd d;
  for (int k = 0; k < 4; ++k) d(k) = std::polar(1.0, th[static_cast<std::size_t>(k)]);
  const Eigen::Matrix4cd b = magic_basis();
  return b * d.asDiagonal() * b.adjoint();
}

inline Eigen::Matrix4cd kron2(const Eigen::Matrix2cd &a, const Eigen::Matrix2cd &b) {
  Eigen::Matrix4cd k;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) k.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return k;
}

/// Splits a 4x4 local unitary into A (x) B, each unitary up to phase.
inline std::pair<Eigen::Matrix2cd, Eigen::Matrix2cd> split_local(const Eigen::Matrix4cd &k) {
  Eigen::Matrix4cd r; // r[(i,j),(k,l)] = K[(i,k),(j,l)] = A_ij B_kl
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) r(2 * i + j, 2 * a + b) = k(2 * i + a, 2 * j + b);
  Eigen::JacobiSVD<Eigen::Matrix4cd> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double s = std::sqrt(svd.singularValues()(0));
  Eigen::Matrix2cd a, b;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      a(i, j) = svd.matrixU()(2 * i + j, 0) * s;
      b(i, j) = std::conj(svd.matrixV()(2 * i + j, 0)) * s;
    }
  const double scale = std::sqrt(std::abs(a.determinant()));
  return {a / scale, b * scale};
}

inline Eigen::Matrix2cd pauli(char p) {
  Eigen::Matrix2cd m;
  switch (p) {
  case 'X': m << 0, 1, 1, 0; break;
  case 'Y': m << 0, cplx(0, -1), cplx(0, 1), 0; break;
  case 'Z': m << 1, 0, 0, -1; break;
  default: m.setIdentity();
  }
  return m;
}

struct KakParts {
  Eigen::Matrix4cd left;  // U ~ left * Can(x, y, z) * right
  Eigen::Matrix4cd right;
  double x = 0, y = 0, z = 0;
};

/// Cartan decomposition with (x, y, z) folded into pi/4 >= x >= y >= |z|.
inline KakParts kak_decompose(const Eigen::Matrix4cd &u) {
  const Eigen::Matrix4cd b = magic_basis();
  const Eigen::Matrix4cd v = u / std::pow(u.determinant(), 0.25);
  const Eigen::Matrix4cd up = b.adjoint() * v * b;
  const Eigen::Matrix4cd m = up.transpose() * up;

  // M is symmetric unitary, so Re M and Im M commute and share a real
  // orthogonal eigenbasis; a generic real combination separates it.
  Eigen::Matrix4d p;
  bool found = false;
  for (double mix : {0.7071067811865476, 1.3247179572447460, 0.4142135623730950, 2.718281828459045}) {
    Eigen::Matrix4d h = m.real() + mix * m.imag();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(h);
    p = es.eigenvectors();
    const Eigen::Matrix4cd dd = p.transpose().cast<cplx>() * m * p.cast<cplx>();
    Eigen::Matrix4cd off = dd;
    off.diagonal().setZero();
    if (off.cwiseAbs().maxCoeff() < 1e-9) {
      found = true;
      break;
    }
  }
  if (!found) throw Error(ErrorCode::NotUnitary, "failed to diagonalize magic-basis form");
  if (p.determinant() < 0) p.col(0) *= -1;

  const Eigen::Matrix4cd dd = p.transpose().cast<cplx>() * m * p.cast<cplx>();
  std::array<double, 4> th{};
  double sum = 0.0;
  for (int k = 0; k < 4; ++k) {
    th[static_cast<std::size_t>(k)] = std::arg(dd(k, k)) / 2;
    sum += th[static_cast<std::size_t>(k)];
  }
  th[0] -= sum; // makes sum exactly zero, so K1 lands in SO(4)

  Eigen::Vector4cd phase;
  for (int k = 0; k < 4; ++k) phase(k) = std::polar(1.0, -th[static_cast<std::size_t>(k)]);
  const Eigen::Matrix4cd k1m = up * p.cast<cplx>() * phase.asDiagonal();

  KakParts parts;
  parts.left = b * k1m * b.adjoint();
  parts.right = b * p.transpose().cast<cplx>() * b.adjoint();
  std::array<double, 3> c{(th[0] + th[1] - th[2] - th[3]) / 4,
                          (-th[0] + th[1] - th[2] + th[3]) / 4,
                          (th[0] - th[1] - th[2] + th[3]) / 4};

  const auto I2 = Eigen::Matrix2cd::Identity().eval();
  const double pi = std::numbers::pi;
  const char axis[3] = {'X', 'Y', 'Z'};
  Eigen::Matrix4cd &L = parts.left;
  Eigen::Matrix4cd &R = parts.right;

  // Can(v) = Can(v - pi/2 e_a) (i P_a P_a): shift coordinates into (-pi/4, pi/4].
  for (int a = 0; a < 3; ++a) {
    const double shifts = std::round(c[static_cast<std::size_t>(a)] / (pi / 2));
    c[static_cast<std::size_t>(a)] -= shifts * (pi / 2);
    if (static_cast<long long>(shifts) % 2 != 0) R = kron2(pauli(axis[a]), pauli(axis[a])) * R;
  }

  // Can(v) = G Can(v') G^dagger.
  auto conj_by = [&](const Eigen::Matrix4cd &g) {
    L = L * g;
    R = g.adjoint() * R;
  };
  const Eigen::Matrix2cd s_gate = rz_matrix(pi / 2);
  const Eigen::Matrix2cd rx_half = rx_matrix(pi / 2);
  const Eigen::Matrix2cd h_gate = (Eigen::Matrix2cd() << 1, 1, 1, -1).finished() / std::numbers::sqrt2;
  auto swap_coords = [&](int a, int bb) {
    if (a > bb) std::swap(a, bb);
    if (a == 0 && bb == 1) conj_by(kron2(s_gate, s_gate).adjoint());
    else if (a == 1 && bb == 2) conj_by(kron2(rx_half, rx_half).adjoint());
    else conj_by(kron2(h_gate, h_gate));
    std::swap(c[static_cast<std::size_t>(a)], c[static_cast<std::size_t>(bb)]);
  };
  auto negate_pair = [&](int a, int bb) {
    const int keep = 3 - a - bb; // the Pauli commuting with the kept axis
    conj_by(kron2(pauli(axis[keep]), I2));
    c[static_cast<std::size_t>(a)] = -c[static_cast<std::size_t>(a)];
    c[static_cast<std::size_t>(bb)] = -c[static_cast<std::size_t>(bb)];
  };

  // Sort by magnitude, descending.
  for (int pass = 0; pass < 2; ++pass)
    for (int a = 0; a < 2; ++a)
      if (std::abs(c[static_cast<std::size_t>(a)]) < std::abs(c[static_cast<std::size_t>(a + 1)]))
        swap_coords(a, a + 1);

  if (c[0] < 0 && c[1] < 0) negate_pair(0, 1);
  else if (c[0] < 0) negate_pair(0, 2);
  else if (c[1] < 0) negate_pair(1, 2);

  // On the x = pi/4 face, Can(pi/4, y, z) ~ Can(pi/4, y, -z).
  if (std::abs(c[0] - pi / 4) < 1e-12 && c[2] < 0) {
    negate_pair(0, 2);
    c[0] += pi / 2;
    R = kron2(pauli('X'), pauli('X')) * R;
  }

  parts.x = c[0];
  parts.y = c[1];
  parts.z = c[2];
  return parts;
}

inline void emit_local(std::vector<Gate> &out, const Eigen::Matrix2cd &m, int q) {
  auto g = zyz(CMatrix(m), q);
  out.insert(out.end(), g.begin(), g.end());
}

} // namespace detail

inline constexpr double kLocalClassTolerance = 1e-10;

/// Two-qubit synthesis on (q0, q1), q0 the high-order qubit of `u`.
/// At most 3 CX (control = lower index) and depth 12.
inline std::vector<Gate> kak(const CMatrix &u, int q0 = 0, int q1 = 1) {
  detail::require_unitary(u, 4);
  Eigen::Matrix4cd w = u;
  if (q0 > q1) {
    Eigen::Matrix4cd sw = Eigen::Matrix4cd::Zero();
    sw(0, 0) = sw(1, 2) = sw(2, 1) = sw(3, 3) = 1.0;
    w = sw * w * sw;
    std::swap(q0, q1);
  }
  const detail::KakParts parts = detail::kak_decompose(w);
  std::vector<Gate> out;
  const double x = parts.x, y = parts.y, z = parts.z;

  if (std::abs(x) < kLocalClassTolerance && std::abs(y) < kLocalClassTolerance &&
      std::abs(z) < kLocalClassTolerance) {
    const auto [a, b] = detail::split_local(parts.left * parts.right);
    detail::emit_local(out, a, q0);
    detail::emit_local(out, b, q1);
    return out;
  }

  const double pi = std::numbers::pi;
  const double t1 = pi / 2 - 2 * z, t2 = 2 * x - pi / 2, t3 = pi / 2 - 2 * y;
  const Eigen::Matrix2cd h = (Eigen::Matrix2cd() << 1, 1, 1, -1).finished() / std::numbers::sqrt2;
  using detail::kron2;
  const Eigen::Matrix4cd pre = kron2(rz_matrix(pi) * h * rz_matrix(-pi / 2), rx_matrix(pi) * h);
  const Eigen::Matrix4cd post = kron2(h * rz_matrix(pi), rz_matrix(pi / 2) * h * rx_matrix(pi));

  const auto [a_in, b_in] = detail::split_local(pre * parts.right);
  const auto [a_out, b_out] = detail::split_local(parts.left * post);

  detail::emit_local(out, a_in, q0);
  detail::emit_local(out, b_in, q1);
  out.push_back(Gate::cx(q0, q1));
  detail::push_rotation(out, GateKind::Ry, q0, pi / 2);
  detail::push_rotation(out, GateKind::Ry, q1, t3 - pi / 2);
  out.push_back(Gate::cx(q0, q1));
  detail::push_rotation(out, GateKind::Rz, q0, t1);
  detail::push_rotation(out, GateKind::Ry, q0, -pi / 2);
  detail::push_rotation(out, GateKind::Ry, q1, t2 + pi / 2);
  out.push_back(Gate::cx(q0, q1));
  detail::emit_local(out, a_out, q0);
  detail::emit_local(out, b_out, q1);
  return out;
}

/// Gates for one block factor; identity-close factors yield nothing.
inline std::vector<Gate> synthesize_factor(const BlockFactor &f) {
  if (is_identity(f.matrix)) return {};
  const auto &q = f.qubits.members();
  switch (q.size()) {
  case 1: return zyz(f.matrix, q[0]);
  case 2: return kak(f.matrix, q[0], q[1]);
  default: {
    std::vector<Gate> g;
    g.push_back(Gate::opaque(q, f.matrix, opaque_cx_estimate(static_cast<int>(q.size()))));
    return g;
  }
  }
}

/// Gates taking |0> on one qubit to `v` up to phase: Ry then Rz.
inline std::vector<Gate> prepare_qubit(const CVector &v, int qubit) {
  if (v.size() != 2) throw Error(ErrorCode::DimensionMismatch, "expected a one-qubit vector");
  std::vector<Gate> out;
  const double theta = 2.0 * std::atan2(std::abs(v(1)), std::abs(v(0)));
  const double phi = std::abs(v(1)) > 1e-14 && std::abs(v(0)) > 1e-14 ? std::arg(v(1)) - std::arg(v(0)) : 0.0;
  detail::push_rotation(out, GateKind::Ry, qubit, detail::wrap_angle(theta));
  detail::push_rotation(out, GateKind::Rz, qubit, detail::wrap_angle(phi));
  return out;
}

namespace detail {

/// Schmidt-form preparation of a two-qubit column on (hi, lo), hi the
/// high-order qubit of `u`.
inline std::vector<Gate> prepare_pair(const CVector &u, int hi, int lo) {
  Eigen::Matrix2cd m; // m(a, b): amplitude with qubit hi = a, lo = b
  m << u(0), u(1), u(2), u(3);
  if (hi > lo) {
    m.transposeInPlace();
    std::swap(hi, lo);
  }
  Eigen::JacobiSVD<Eigen::Matrix2cd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector2d sv = svd.singularValues();
  const Eigen::Matrix2cd a = svd.matrixU(), b = svd.matrixV().conjugate();
  std::vector<Gate> out;
  push_rotation(out, GateKind::Ry, hi, 2.0 * std::atan2(sv(1), sv(0)));
  out.push_back(Gate::cx(hi, lo));
  emit_local(out, a, hi);
  emit_local(out, b, lo);
  return out;
}

/// If qubit `pos` of the column factors out, returns its one-qubit state and
/// the column on the remaining qubits.
inline std::optional<std::pair<CVector, CVector>> split_qubit(const CVector &u, int m, int pos) {
  const Eigen::Index rest = Eigen::Index{1} << (m - 1);
  CMatrix mat(2, rest);
  const int shift = m - 1 - pos;
  for (Eigen::Index idx = 0; idx < u.size(); ++idx) {
    const Eigen::Index b = (idx >> shift) & 1;
    const Eigen::Index low = idx & ((Eigen::Index{1} << shift) - 1);
    const Eigen::Index r = ((idx >> (shift + 1)) << shift) | low;
    mat(b, r) = u(idx);
  }
  Eigen::JacobiSVD<CMatrix> svd(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues().size() > 1 && svd.singularValues()(1) > kLocalClassTolerance) return std::nullopt;
  CVector rest_vec = svd.matrixV().col(0).conjugate();
  return std::make_pair(CVector(svd.matrixU().col(0)), rest_vec);
}

} // namespace detail

/// Gates taking |0...0> on the factor's qubits to its first column, up to
/// phase. Qubits that factor out are prepared alone; a remaining pair uses
/// its Schmidt form (one CX); three or more entangled qubits stay opaque.
inline std::vector<Gate> prepare_factor(const BlockFactor &f) {
  std::vector<int> q = f.qubits.members();
  CVector u = f.matrix.col(0);
  std::vector<Gate> out;
  for (bool peeled = true; peeled && q.size() > 1;) {
    peeled = false;
    for (std::size_t pos = 0; pos < q.size(); ++pos) {
      auto split = detail::split_qubit(u, static_cast<int>(q.size()), static_cast<int>(pos));
      if (!split) continue;
      auto g = prepare_qubit(split->first, q[pos]);
      out.insert(out.end(), g.begin(), g.end());
      u = split->second;
      q.erase(q.begin() + static_cast<std::ptrdiff_t>(pos));
      peeled = true;
      break;
    }
  }
  std::vector<Gate> g;
  if (q.size() == 1) g = prepare_qubit(u, q[0]);
  else if (q.size() == 2) g = detail::prepare_pair(u, q[0], q[1]);
  else g.push_back(Gate::opaque(q, CMatrix(u), opaque_cx_estimate(static_cast<int>(q.size()))));
  out.insert(out.end(), g.begin(), g.end());
  return out;
}

/// Residual core first (as an n-qubit column isometry), then W_r ... W_1.
/// Without a residual core the first applied layer only ever sees
/// |0...0>, so its factors are lowered as state preparations.
inline GateCircuit synthesize_plan(const CircuitPlan &plan) {
  GateCircuit c;
  c.n = plan.n;
  if (plan.residual_core) {
    std::vector<int> all(static_cast<std::size_t>(plan.n));
    for (int q = 0; q < plan.n; ++q) all[static_cast<std::size_t>(q)] = q;
    c.gates.push_back(Gate::opaque(all, CMatrix(plan.residual_core->amps()), opaque_cx_estimate(plan.n)));
  }
  for (auto layer = plan.layers.rbegin(); layer != plan.layers.rend(); ++layer) {
    const bool from_zero = !plan.residual_core && layer == plan.layers.rbegin();
    for (const auto &f : layer->factors) {
      auto g = from_zero ? prepare_factor(f) : synthesize_factor(f);
      c.gates.insert(c.gates.end(), g.begin(), g.end());
    }
  }
  return c;
}

/// OpenQASM 2 text; opaque gates appear as comments only.
inline std::string to_qasm(const GateCircuit &c) {
  std::ostringstream os;
  os << "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[" << c.n << "];\n";
  char buf[64];
  for (const auto &g : c.gates) {
    if (g.is_rotation()) {
      std::snprintf(buf, sizeof buf, "%.17g", g.angle);
      os << to_string(g.kind) << "(" << buf << ") q[" << g.qubits[0] << "];\n";
    } else if (g.kind == GateKind::CX) {
      os << "cx q[" << g.qubits[0] << "],q[" << g.qubits[1] << "];\n";
    } else {
      os << "// opaque unitary on";
      for (int q : g.qubits) os << " q[" << q << "]";
      os << ", estimated cx " << g.cx_estimate << "\n";
    }
  }
  return os.str();
}

} // namespace qtucker
