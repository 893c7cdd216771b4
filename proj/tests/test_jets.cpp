#include <doctest.h>

#include "opequiv/jets.hpp"
#include "support/fixtures.hpp"

using namespace opequiv;
using namespace fixtures;

namespace {

// Independent application oracle via the map-based polynomial arithmetic.
MatPoly oracle_apply(const OperatorJet& op, const Jet& s) {
  const MatPoly sp = poly_from_jet(s);
  MatPoly out = poly_mul(poly_from_jet(op.c), sp, op.n);
  for (int i = 0; i < op.n; ++i) {
    out = poly_add(out, poly_mul(poly_from_jet(op.b[i]), poly_deriv(sp, i), op.n));
    for (int j = 0; j < op.n; ++j)
      out = poly_add(out, poly_mul(poly_from_jet(op.a_at(i, j)),
                                   poly_deriv(poly_deriv(sp, i), j), op.n));
  }
  return out;
}

Jet linear_function(int n, int order, const Eigen::VectorXd& coeffs) {
  Jet f = Jet::scalar(n, order, 0.0);
  for (int d = 0; d < n; ++d) f += coeffs(d) * Jet::variable(n, order, d);
  return f;
}

}  // namespace

TEST_CASE("monomial tables nest by order") {
  const MonomialTable& small = monomial_table(3, 2);
  const MonomialTable& big = monomial_table(3, 4);
  REQUIRE(small.size() <= big.size());
  for (int i = 0; i < small.size(); ++i) CHECK(small.exps[i] == big.exps[i]);
}

TEST_CASE("jet multiplication matches exact polynomial convolution") {
  std::mt19937_64 rng(61);
  for (int rep = 0; rep < 10; ++rep) {
    const Jet a = random_jet(2, 3, 2, 2, rng);
    const Jet b = random_jet(2, 3, 2, 2, rng);
    const Jet prod = a * b;
    const MatPoly oracle = poly_mul(poly_from_jet(a), poly_from_jet(b), 2);
    CHECK(poly_jet_distance(oracle, prod, 3) <= 1e-13);
  }
}

TEST_CASE("jet recentering agrees with exact evaluation") {
  std::mt19937_64 rng(62);
  const Jet j = random_jet(2, 3, 2, 2, rng);
  const Eigen::VectorXd p = Eigen::Vector2d(0.3, -0.7);
  const Jet shifted = j.shifted(p);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::VectorXd u = Eigen::Vector2d(uniform(rng, -0.2, 0.2), uniform(rng, -0.2, 0.2));
    CHECK((j.eval(p + u) - shifted.eval(u)).norm() <= 1e-12);
  }
}

TEST_CASE("jet inverse solves to working precision") {
  std::mt19937_64 rng(63);
  Jet a = random_jet(2, 3, 3, 3, rng, 0.3);
  a.coeff(0) = random_invertible(3, rng) + 2.0 * Mat::Identity(3, 3);
  const Jet inv = a.inverse();
  const Jet identity = Jet::constant(2, 3, Mat::Identity(3, 3));
  CHECK(jet_distance(a * inv, identity, 3) <= 1e-12);
  CHECK(jet_distance(inv * a, identity, 3) <= 1e-12);
}

TEST_CASE("jet inverse requires an invertible constant term") {
  Jet a(2, 2, 2, 2);  // zero jet
  CHECK_THROWS_AS(a.inverse(), Error);
}

TEST_CASE("apply: second derivative picks out monomial coefficients") {
  OperatorJet op(2, 2, 3);
  op.a_at(0, 0) = Jet::constant(2, 3, Mat::Identity(2, 2));
  Jet s(2, 3, 2, 1);
  s.set_coeff({2, 0}, Eigen::Vector2d(1.0, 2.0));  // x_0^2 (x) v
  const Jet out = apply(op, s);
  CHECK((out.value0() - Eigen::Vector2d(2.0, 4.0)).norm() <= 1e-15);
}

TEST_CASE("apply: zero-order operators multiply") {
  std::mt19937_64 rng(64);
  OperatorJet op(2, 2, 3);
  op.c = random_jet(2, 3, 2, 2, rng);
  const Jet s = random_jet(2, 3, 2, 1, rng);
  CHECK(jet_distance(apply(op, s), op.c * s, 1) <= 1e-14);
}

TEST_CASE("apply matches the symbolic differentiation oracle") {
  std::mt19937_64 rng(65);
  for (int rep = 0; rep < 10; ++rep) {
    const OperatorJet op = random_operator_jet(2, 2, 3, rng);
    const Jet s = random_jet(2, 3, 2, 1, rng);
    const Jet got = apply(op, s);
    CHECK(poly_jet_distance(oracle_apply(op, s), got, 1) <= 1e-12);
  }
}

TEST_CASE("delta_f of a first derivative against a coordinate is the identity") {
  OperatorJet op(1, 2, 3);
  op.b[0] = Jet::constant(2, 3, Mat::Identity(1, 1));  // d_0
  const Jet f = Jet::variable(2, 3, 0);
  const OperatorJet d = delta_f(op, f);
  for (const Jet& a : d.a) CHECK(a.norm() == 0.0);
  for (const Jet& b : d.b) CHECK(b.norm() == 0.0);
  CHECK((d.c.value0() - Mat::Identity(1, 1)).norm() <= 1e-15);
}

TEST_CASE("iterated delta_f extracts second-order coefficients") {
  OperatorJet op(1, 2, 3);
  op.a_at(0, 0) = Jet::constant(2, 3, Mat::Identity(1, 1));  // d_0^2
  const Jet f = Jet::variable(2, 3, 0);
  const OperatorJet d1 = delta_f(op, f);
  CHECK((d1.b[0].value0() - 2.0 * Mat::Identity(1, 1)).norm() <= 1e-15);
  CHECK(d1.b[1].norm() == 0.0);
  const OperatorJet d2 = delta_f(d1, f);
  CHECK((d2.c.value0() - 2.0 * Mat::Identity(1, 1)).norm() <= 1e-15);
}

TEST_CASE("delta_f annihilates second-order operators after three steps") {
  std::mt19937_64 rng(66);
  const OperatorJet op = random_operator_jet(2, 2, 3, rng);
  const Jet f = random_jet(2, 3, 1, 1, rng);
  const OperatorJet d3 = delta_f(delta_f(delta_f(op, f), f), f);
  for (const Jet& a : d3.a) CHECK(a.norm() == 0.0);
  for (const Jet& b : d3.b) CHECK(b.norm() == 0.0);
  CHECK(d3.c.norm() <= 1e-13);
}

TEST_CASE("delta_f satisfies the commutator identity on sections") {
  std::mt19937_64 rng(67);
  const OperatorJet op = random_operator_jet(2, 2, 4, rng);
  const Jet f = random_jet(2, 4, 1, 1, rng);
  const Jet s = random_jet(2, 4, 2, 1, rng);
  const Jet lhs = apply(delta_f(op, f), s);
  const Jet rhs = apply(op, f * s) - f * apply(op, s);
  CHECK(jet_distance(lhs, rhs, 2) <= 1e-12);
}

TEST_CASE("symbol_of reads off the second-order block") {
  OperatorJet op(2, 2, 3);
  op.a_at(0, 0) = Jet::constant(2, 3, Mat::Identity(2, 2));
  const SymbolTensor sigma = symbol_of(op).value0();
  CHECK((sigma.comp(0, 0) - Mat::Identity(2, 2)).norm() == 0.0);
  CHECK(sigma.comp(0, 1).norm() == 0.0);
  CHECK(sigma.comp(1, 1).norm() == 0.0);

  OperatorJet first_order(2, 2, 3);
  std::mt19937_64 rng(68);
  first_order.b[0] = random_jet(2, 3, 2, 2, rng);
  const SymbolTensor zero = symbol_of(first_order).value0();
  CHECK(zero.norm() == 0.0);
}

TEST_CASE("half delta_f^2 equals the symbol paired with df.df") {
  std::mt19937_64 rng(69);
  for (int rep = 0; rep < 5; ++rep) {
    const OperatorJet op = random_operator_jet(2, 2, 3, rng);
    const Eigen::VectorXd coeffs = Eigen::Vector2d(1.0, 2.0);
    const Jet f = linear_function(2, 3, coeffs);
    const OperatorJet d2 = delta_f(delta_f(op, f), f);
    // value_on(sigma, df.df) at the jet level: sum a^{ij} c_i c_j.
    Jet expected(2, 3, 2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        expected += (coeffs(i) * coeffs(j)) * op.a_at(i, j);
    CHECK(jet_distance(0.5 * d2.c, expected, 1) <= 1e-13);
  }
}

TEST_CASE("gauge transform with a constant gauge conjugates coefficients") {
  std::mt19937_64 rng(70);
  const OperatorJet op = random_operator_jet(2, 2, 3, rng);
  const Mat a0 = random_invertible(2, rng);
  const Jet gauge = Jet::constant(2, 3, a0);
  const OperatorJet moved = gauge_transform(op, gauge);
  const Mat a0i = a0.inverse();
  for (int i = 0; i < 2; ++i)
    for (int j = i; j < 2; ++j) {
      Jet expect = Jet::constant(2, 3, a0) * op.a_at(i, j) * Jet::constant(2, 3, a0i);
      CHECK(jet_distance(moved.a_at(i, j), expect, 3) <= 1e-12);
    }
  CHECK(jet_distance(moved.c, Jet::constant(2, 3, a0) * op.c * Jet::constant(2, 3, a0i), 3) <=
        1e-12);
}

TEST_CASE("gauge transform with the identity is the identity") {
  std::mt19937_64 rng(71);
  const OperatorJet op = random_operator_jet(2, 2, 3, rng);
  const OperatorJet moved = gauge_transform(op, Jet::constant(2, 3, Mat::Identity(2, 2)));
  CHECK(operator_distance(op, moved, 3, 3, 3) <= 1e-13);
}

TEST_CASE("gauge transform intertwines application") {
  std::mt19937_64 rng(72);
  for (int rep = 0; rep < 5; ++rep) {
    const OperatorJet op = random_operator_jet(2, 2, 4, rng);
    const Jet gauge = random_gauge_jet(2, 2, 4, rng);
    const Jet s = random_jet(2, 4, 2, 1, rng);
    const OperatorJet moved = gauge_transform(op, gauge);
    const Jet lhs = apply(moved, gauge * s);
    const Jet rhs = gauge * apply(op, s);
    CHECK(jet_distance(lhs, rhs, 2) <= 1e-11);
  }
}

TEST_CASE("gauge transform conjugates the symbol pointwise") {
  std::mt19937_64 rng(73);
  const OperatorJet op = random_operator_jet(2, 2, 3, rng);
  const Jet gauge = random_gauge_jet(2, 2, 3, rng);
  const OperatorJet moved = gauge_transform(op, gauge);
  const SymbolJet moved_symbol = symbol_of(moved);
  const Jet inv = gauge.inverse();
  const PairIndex pairs(2);
  for (int p = 0; p < pairs.size(); ++p) {
    auto [i, j] = pairs.pair(p);
    const Jet expect = gauge * symbol_of(op).at(i, j) * inv;
    CHECK(jet_distance(moved_symbol.at(i, j), expect, 3) <= 1e-11);
  }
}

TEST_CASE("gauge transform rejects singular gauges") {
  std::mt19937_64 rng(74);
  const OperatorJet op = random_operator_jet(2, 2, 3, rng);
  Jet gauge = random_jet(2, 3, 2, 2, rng);
  gauge.coeff(0) = Mat::Zero(2, 2);
  CHECK_THROWS_AS(gauge_transform(op, gauge), Error);
  try {
    gauge_transform(op, gauge);
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::NonInvertibleGauge);
  }
}

TEST_CASE("apply rejects sections of insufficient order") {
  OperatorJet op(2, 2, 3);
  const Jet s(2, 1, 2, 1);
  CHECK_THROWS_AS(apply(op, s), Error);
}
