#pragma once

// Shared generators and independent oracles for the test suites. Oracles here
// deliberately avoid the library code paths they are used to check.

#include <map>
#include <random>
#include <vector>

#include "opequiv/connections.hpp"
#include "opequiv/equivalence.hpp"
#include "opequiv/invariants.hpp"
#include "opequiv/jets.hpp"
#include "opequiv/models.hpp"
#include "opequiv/tensor.hpp"

namespace fixtures {

using namespace opequiv;

inline double uniform(std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Mat random_mat(int r, int c, std::mt19937_64& rng, double amp = 1.0) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = amp * uniform(rng);
  return m;
}

inline Mat random_invertible(int dim, std::mt19937_64& rng) {
  for (int tries = 0; tries < 1000; ++tries) {
    Mat m = random_mat(dim, dim, rng);
    if (std::abs(m.determinant()) >= 0.1) return m;
  }
  return Mat::Identity(dim, dim);
}

inline QuadFormDown random_quad_down(int n, std::mt19937_64& rng) {
  Mat s = random_mat(n, n, rng);
  return QuadFormDown{0.5 * (s + s.transpose())};
}

inline SymbolTensor random_symbol(int m, int n, std::mt19937_64& rng) {
  SymbolTensor sigma(m, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) sigma.set(i, j, random_mat(m, m, rng));
  return sigma;
}

inline SymbolTensor random_regular_symbol(int m, int n, std::mt19937_64& rng,
                                          double margin = 1e-6) {
  for (int tries = 0; tries < 1000; ++tries) {
    SymbolTensor sigma = random_symbol(m, n, rng);
    if (regularity_report(sigma, margin).overall) return sigma;
  }
  throw std::runtime_error("random_regular_symbol: no regular draw in 1000 tries");
}

// ---------------------------------------------------------------------------
// Independent polynomial arithmetic (map-based, no truncation) used as the
// oracle for jet computations.

using PolyKey = std::vector<int>;
using MatPoly = std::map<PolyKey, Mat>;

inline MatPoly poly_from_jet(const Jet& j) {
  const MonomialTable& table = monomial_table(j.nvars(), j.order());
  MatPoly p;
  for (int t = 0; t < j.terms(); ++t)
    if (j.coeff(t).norm() != 0.0) p[table.exps[t]] = j.coeff(t);
  return p;
}

inline MatPoly poly_mul(const MatPoly& a, const MatPoly& b, int nvars) {
  MatPoly out;
  for (const auto& [ka, va] : a)
    for (const auto& [kb, vb] : b) {
      PolyKey k(nvars);
      for (int d = 0; d < nvars; ++d) k[d] = ka[d] + kb[d];
      Mat prod;
      if (va.rows() == 1 && va.cols() == 1 && vb.rows() > 1)
        prod = va(0, 0) * vb;
      else if (vb.rows() == 1 && vb.cols() == 1 && va.rows() > 1)
        prod = vb(0, 0) * va;
      else
        prod = va * vb;
      auto it = out.find(k);
      if (it == out.end())
        out[k] = prod;
      else
        it->second += prod;
    }
  return out;
}

inline MatPoly poly_add(MatPoly a, const MatPoly& b) {
  for (const auto& [k, v] : b) {
    auto it = a.find(k);
    if (it == a.end())
      a[k] = v;
    else
      it->second += v;
  }
  return a;
}

inline MatPoly poly_deriv(const MatPoly& p, int var) {
  MatPoly out;
  for (const auto& [k, v] : p) {
    if (k[var] == 0) continue;
    PolyKey kd = k;
    kd[var] -= 1;
    out[kd] = static_cast<double>(k[var]) * v;
  }
  return out;
}

inline double poly_jet_distance(const MatPoly& p, const Jet& j, int up_to_order) {
  const MonomialTable& table = monomial_table(j.nvars(), j.order());
  double worst = 0.0;
  for (int t = 0; t < table.size(); ++t) {
    int deg = 0;
    for (int e : table.exps[t]) deg += e;
    if (deg > up_to_order) continue;
    auto it = p.find(table.exps[t]);
    const Mat expect =
        it == p.end() ? Mat::Zero(j.rows(), j.cols()).eval() : it->second;
    worst = std::max(worst, (expect - j.coeff(t)).norm());
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Random jet data.

inline Jet random_jet(int nvars, int order, int rows, int cols, std::mt19937_64& rng,
                      double amp = 0.5) {
  Jet j(nvars, order, rows, cols);
  for (int t = 0; t < j.terms(); ++t) j.coeff(t) = random_mat(rows, cols, rng, amp);
  return j;
}

inline OperatorJet random_operator_jet(int m, int n, int order, std::mt19937_64& rng,
                                       double amp = 0.5) {
  OperatorJet op(m, n, order);
  for (auto& j : op.a) j = random_jet(n, order, m, m, rng, amp);
  for (auto& j : op.b) j = random_jet(n, order, m, m, rng, amp);
  op.c = random_jet(n, order, m, m, rng, amp);
  return op;
}

// Operator whose symbol at the base point supports the associated-connection
// construction, with conditioning margins so the jet identities hold at
// rounding level in absolute terms.
inline OperatorJet random_decomposable_operator(int m, int n, int order,
                                                std::mt19937_64& rng) {
  for (int tries = 0; tries < 2000; ++tries) {
    OperatorJet op = random_operator_jet(m, n, order, rng);
    const SymbolTensor sigma = symbol_of(op).value0();
    const QuadFormUp g = trace_quadric(sigma);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g.m);
    if (svd.singularValues()(n - 1) < 0.15 * svd.singularValues()(0)) continue;
    if (regularity_iso(sigma).rcond < 3e-2) continue;
    return op;
  }
  throw std::runtime_error("random_decomposable_operator: no viable draw");
}

inline BundleConnection random_connection(int m, int n, int order, std::mt19937_64& rng,
                                          double amp = 0.5) {
  BundleConnection nabla;
  for (int i = 0; i < n; ++i) nabla.gamma.push_back(random_jet(n, order, m, m, rng, amp));
  return nabla;
}

inline Christoffels random_christoffels(int n, int order, std::mt19937_64& rng,
                                        double amp = 0.5) {
  Christoffels ch;
  for (int k = 0; k < n; ++k) {
    Jet g(n, order, n, n);
    for (int t = 0; t < g.terms(); ++t) {
      Mat s = random_mat(n, n, rng, amp);
      g.coeff(t) = 0.5 * (s + s.transpose());
    }
    ch.gamma.push_back(g);
  }
  return ch;
}

inline Christoffels zero_christoffels(int m, int n, int order) {
  (void)m;
  Christoffels ch;
  for (int k = 0; k < n; ++k) ch.gamma.push_back(Jet(n, order, n, n));
  return ch;
}

inline BundleConnection zero_connection(int m, int n, int order) {
  BundleConnection nabla;
  for (int i = 0; i < n; ++i) nabla.gamma.push_back(Jet(n, order, m, m));
  return nabla;
}

inline EndoOneForm random_one_form(int m, int n, int order, std::mt19937_64& rng,
                                   double amp = 0.5) {
  EndoOneForm alpha;
  for (int i = 0; i < n; ++i) alpha.alpha.push_back(random_jet(n, order, m, m, rng, amp));
  return alpha;
}

// Gauge with invertible value at the base point.
inline Jet random_gauge_jet(int m, int n, int order, std::mt19937_64& rng) {
  Jet a = random_jet(n, order, m, m, rng, 0.3);
  a.coeff(0) = random_invertible(m, rng) + 2.0 * Mat::Identity(m, m);
  return a;
}

// ---------------------------------------------------------------------------
// Chart-level operators (exact polynomial coefficients).

inline ChartOperator random_chart_operator(int m, int n, std::mt19937_64& rng) {
  ChartOperator op;
  op.box.lo = Eigen::VectorXd::Constant(n, -1.0);
  op.box.hi = Eigen::VectorXd::Constant(n, 1.0);
  op.poly = OperatorJet(m, n, 2);
  // Constant-dominant coefficients keep the symbol regular across the box.
  for (auto& j : op.poly.a) {
    j = random_jet(n, 2, m, m, rng, 0.08);
    j.coeff(0) = random_mat(m, m, rng, 1.0);
  }
  for (auto& j : op.poly.b) j = random_jet(n, 2, m, m, rng, 0.3);
  op.poly.c = random_jet(n, 2, m, m, rng, 0.3);
  return op;
}

// Quantitative regularity margins at every grid point; keeps the invariant
// fields well-scaled over the whole chart.
inline bool chart_margins_ok(const ChartOperator& op, const GridSpec& grid,
                             double margin = 1e-3) {
  for (int p = 0; p < grid.total(); ++p) {
    const OperatorJet local = op.poly.shifted(grid.point(p)).truncated(3);
    const SymbolTensor sigma = symbol_of(local).value0();
    const QuadFormUp g = trace_quadric(sigma);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g.m);
    if (svd.singularValues()(g.n() - 1) < 10.0 * margin * svd.singularValues()(0)) return false;
    const RegularityReport rep = regularity_report(sigma, margin);
    if (!rep.overall) return false;
    if (regularity_iso(sigma).rcond < margin) return false;
  }
  return true;
}

// Drawn until every grid point is regular with margin, so model building
// succeeds and the fields stay numerically tame.
inline ChartOperator random_model_operator(int m, int n, const GridSpec& grid,
                                           std::mt19937_64& rng) {
  const auto& words = basic_words(m, n, 3);
  for (int tries = 0; tries < 500; ++tries) {
    ChartOperator op = random_chart_operator(m, n, rng);
    if (!chart_margins_ok(op, grid)) continue;
    try {
      (void)invariant_fields(op, words, grid, kDefaultTol);
      return op;
    } catch (const Error&) {
      continue;
    }
  }
  throw std::runtime_error("random_model_operator: no viable draw");
}

// Polynomial gauge with constant determinant: C * (I + strictly lower) *
// (I + strictly upper), linear entries. Its inverse is again polynomial, so
// the transformed operator keeps exact polynomial coefficients.
inline Jet polynomial_gauge(int m, int n, int container_order, std::mt19937_64& rng) {
  Jet lower = Jet::constant(n, container_order, Mat::Identity(m, m));
  Jet upper = lower;
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) {
      if (r == c) continue;
      Jet entry = Jet::scalar(n, container_order, 0.2 * uniform(rng));
      for (int d = 0; d < n; ++d)
        entry += 0.2 * uniform(rng) * Jet::variable(n, container_order, d);
      Jet unit(n, container_order, m, m);
      unit.coeff(0) = Mat::Zero(m, m);
      // place the polynomial entry
      for (int t = 0; t < entry.terms(); ++t) {
        Mat mat = Mat::Zero(m, m);
        mat(r, c) = entry.coeff(t)(0, 0);
        unit.coeff(t) = mat;
      }
      if (r > c)
        lower += unit;
      else
        upper += unit;
    }
  const Jet constant = Jet::constant(n, container_order, random_invertible(m, rng));
  return constant * lower * upper;
}

inline ChartOperator gauge_chart_operator(const ChartOperator& op, const Jet& gauge) {
  const int big = gauge.order();
  ChartOperator out;
  out.box = op.box;
  OperatorJet lifted = op.poly.truncated(big);
  out.poly = gauge_transform(lifted, gauge);
  return out;
}

// ---------------------------------------------------------------------------
// Naive quadruple-loop oracle for value_on.

inline Mat oracle_value_on(const SymbolTensor& sigma, const QuadFormDown& theta) {
  Mat acc = Mat::Zero(sigma.m(), sigma.m());
  for (int i = 0; i < sigma.n(); ++i)
    for (int j = 0; j < sigma.n(); ++j)
      for (int u = 0; u < sigma.m(); ++u)
        for (int v = 0; v < sigma.m(); ++v)
          acc(u, v) += theta.m(i, j) * sigma.comp(i, j)(u, v);
  return acc;
}

inline double rel_err(double got, double expect) {
  return std::abs(got - expect) / std::max({1.0, std::abs(got), std::abs(expect)});
}

inline double symbol_distance(const SymbolTensor& a, const SymbolTensor& b) {
  double acc = 0.0;
  for (int i = 0; i < a.n(); ++i)
    for (int j = 0; j < a.n(); ++j) acc += (a.comp(i, j) - b.comp(i, j)).squaredNorm();
  return std::sqrt(acc);
}

}  // namespace fixtures
