#include "opequiv/jets.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace opequiv {

namespace {

void gen_exps(int nvars, int degree, int pos, std::vector<int>& current,
              std::vector<std::vector<int>>& out) {
  if (pos == nvars - 1) {
    current[pos] = degree;
    out.push_back(current);
    return;
  }
  for (int k = degree; k >= 0; --k) {
    current[pos] = k;
    gen_exps(nvars, degree - k, pos + 1, current, out);
  }
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

int MonomialTable::index_of(const std::vector<int>& alpha) const {
  int total = 0;
  for (int e : alpha) total += e;
  if (total > order) return -1;
  for (int i = 0; i < size(); ++i)
    if (exps[i] == alpha) return i;
  return -1;
}

const MonomialTable& monomial_table(int nvars, int order) {
  static std::map<std::pair<int, int>, MonomialTable> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_pair(nvars, order);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  MonomialTable table;
  table.nvars = nvars;
  table.order = order;
  std::vector<int> current(nvars, 0);
  for (int d = 0; d <= order; ++d) gen_exps(nvars, d, 0, current, table.exps);
  return cache.emplace(key, std::move(table)).first->second;
}

Jet::Jet(int nvars, int order, int rows, int cols)
    : nvars_(nvars), order_(order), rows_(rows), cols_(cols) {
  require(nvars >= 1 && order >= 0 && rows >= 1 && cols >= 1,
          Error::Kind::DimensionMismatch, "Jet: bad shape");
  c_.assign(monomial_table(nvars, order).size(), Eigen::MatrixXd::Zero(rows, cols));
}

Jet Jet::constant(int nvars, int order, const Eigen::MatrixXd& value) {
  Jet j(nvars, order, static_cast<int>(value.rows()), static_cast<int>(value.cols()));
  j.c_[0] = value;
  return j;
}

Jet Jet::scalar(int nvars, int order, double value) {
  return constant(nvars, order, Eigen::MatrixXd::Constant(1, 1, value));
}

Jet Jet::variable(int nvars, int order, int var) {
  require(order >= 1, Error::Kind::OrderUnderflow, "Jet::variable: needs order >= 1");
  require(var >= 0 && var < nvars, Error::Kind::DimensionMismatch, "Jet::variable: bad index");
  Jet j(nvars, order, 1, 1);
  std::vector<int> alpha(nvars, 0);
  alpha[var] = 1;
  j.set_coeff(alpha, Eigen::MatrixXd::Constant(1, 1, 1.0));
  return j;
}

const Eigen::MatrixXd& Jet::coeff(const std::vector<int>& alpha) const {
  const int idx = monomial_table(nvars_, order_).index_of(alpha);
  require(idx >= 0, Error::Kind::DimensionMismatch, "Jet::coeff: monomial out of range");
  return c_[idx];
}

void Jet::set_coeff(const std::vector<int>& alpha, const Eigen::MatrixXd& value) {
  const int idx = monomial_table(nvars_, order_).index_of(alpha);
  require(idx >= 0, Error::Kind::DimensionMismatch, "Jet::set_coeff: monomial out of range");
  require(value.rows() == rows_ && value.cols() == cols_, Error::Kind::DimensionMismatch,
          "Jet::set_coeff: coefficient shape mismatch");
  c_[idx] = value;
}

Jet Jet::truncated(int new_order) const {
  require(new_order >= 0, Error::Kind::OrderUnderflow, "Jet::truncated: negative order");
  if (new_order >= order_) {
    Jet j(nvars_, new_order, rows_, cols_);
    for (int i = 0; i < terms(); ++i) j.c_[i] = c_[i];
    return j;
  }
  Jet j(nvars_, new_order, rows_, cols_);
  for (int i = 0; i < j.terms(); ++i) j.c_[i] = c_[i];  // prefix property
  return j;
}

Jet Jet::deriv(int var) const {
  require(var >= 0 && var < nvars_, Error::Kind::DimensionMismatch, "Jet::deriv: bad index");
  require(order_ >= 1, Error::Kind::OrderUnderflow, "Jet::deriv: order underflow");
  const MonomialTable& src = monomial_table(nvars_, order_);
  const MonomialTable& dst = monomial_table(nvars_, order_ - 1);
  Jet j(nvars_, order_ - 1, rows_, cols_);
  for (int i = 0; i < src.size(); ++i) {
    if (src.exps[i][var] == 0) continue;
    std::vector<int> alpha = src.exps[i];
    const int e = alpha[var];
    alpha[var] -= 1;
    const int idx = dst.index_of(alpha);
    if (idx >= 0) j.c_[idx] += static_cast<double>(e) * c_[i];
  }
  return j;
}

Jet Jet::shifted(const Eigen::VectorXd& point) const {
  require(point.size() == nvars_, Error::Kind::DimensionMismatch, "Jet::shifted: bad point");
  const MonomialTable& table = monomial_table(nvars_, order_);
  std::vector<Eigen::MatrixXd> cur = c_;
  // One variable at a time: substitute x_d -> u_d + p_d exactly.
  for (int d = 0; d < nvars_; ++d) {
    const double p = point(d);
    if (p == 0.0) continue;
    std::vector<Eigen::MatrixXd> next(cur.size(), Eigen::MatrixXd::Zero(rows_, cols_));
    for (size_t i = 0; i < cur.size(); ++i) {
      const int e = table.exps[i][d];
      std::vector<int> alpha = table.exps[i];
      double pw = 1.0;
      for (int k = e; k >= 0; --k) {
        alpha[d] = k;
        const int idx = table.index_of(alpha);
        next[idx] += binom(e, k) * pw * cur[i];
        pw *= p;
      }
    }
    cur = std::move(next);
  }
  Jet j(nvars_, order_, rows_, cols_);
  j.c_ = std::move(cur);
  return j;
}

Jet Jet::transpose() const {
  Jet j(nvars_, order_, cols_, rows_);
  for (int i = 0; i < terms(); ++i) j.c_[i] = c_[i].transpose();
  return j;
}

Jet Jet::inverse() const {
  require(rows_ == cols_, Error::Kind::DimensionMismatch, "Jet::inverse: not square");
  const Eigen::MatrixXd a0 = c_[0];
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a0);
  require(lu.isInvertible(), Error::Kind::Degenerate,
          "Jet::inverse: constant term is singular");
  Jet inv = Jet::constant(nvars_, order_, lu.inverse());
  const Jet identity = Jet::constant(nvars_, order_, Eigen::MatrixXd::Identity(rows_, rows_));
  // Newton iteration squares the vanishing order of the defect each step.
  int steps = 1;
  while ((1 << steps) <= order_) ++steps;
  for (int s = 0; s <= steps; ++s) inv = inv * (2.0 * identity - (*this) * inv);
  return inv;
}

Eigen::MatrixXd Jet::eval(const Eigen::VectorXd& point) const {
  require(point.size() == nvars_, Error::Kind::DimensionMismatch, "Jet::eval: bad point");
  const MonomialTable& table = monomial_table(nvars_, order_);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows_, cols_);
  for (int i = 0; i < terms(); ++i) {
    double w = 1.0;
    for (int d = 0; d < nvars_; ++d)
      for (int e = 0; e < table.exps[i][d]; ++e) w *= point(d);
    out += w * c_[i];
  }
  return out;
}

double Jet::norm() const {
  double w = 0.0;
  for (const auto& m : c_) w = std::max(w, m.norm());
  return w;
}

Jet Jet::operator-() const {
  Jet j = *this;
  for (auto& m : j.c_) m = -m;
  return j;
}

Jet& Jet::operator+=(const Jet& o) {
  require(nvars_ == o.nvars_, Error::Kind::DimensionMismatch, "Jet +: nvars mismatch");
  require(rows_ == o.rows_ && cols_ == o.cols_, Error::Kind::DimensionMismatch,
          "Jet +: shape mismatch");
  if (o.order_ < order_) *this = truncated(o.order_);
  for (int i = 0; i < std::min(terms(), o.terms()); ++i) c_[i] += o.c_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) { return *this += -o; }

Jet operator*(const Jet& a, const Jet& b) {
  require(a.nvars_ == b.nvars_, Error::Kind::DimensionMismatch, "Jet *: nvars mismatch");
  int rows, cols;
  enum { kMatMat, kScalarLeft, kScalarRight } mode;
  if (a.scalar_shaped() && !b.scalar_shaped()) {
    mode = kScalarLeft;
    rows = b.rows_;
    cols = b.cols_;
  } else if (b.scalar_shaped() && !a.scalar_shaped()) {
    mode = kScalarRight;
    rows = a.rows_;
    cols = a.cols_;
  } else {
    require(a.cols_ == b.rows_, Error::Kind::DimensionMismatch, "Jet *: inner dim mismatch");
    mode = kMatMat;
    rows = a.rows_;
    cols = b.cols_;
  }
  const int order = std::min(a.order_, b.order_);
  const MonomialTable& ta = monomial_table(a.nvars_, a.order_);
  const MonomialTable& tb = monomial_table(b.nvars_, b.order_);
  const MonomialTable& tr = monomial_table(a.nvars_, order);
  Jet out(a.nvars_, order, rows, cols);
  for (int i = 0; i < ta.size(); ++i) {
    int deg_i = 0;
    for (int e : ta.exps[i]) deg_i += e;
    if (deg_i > order) continue;
    for (int j = 0; j < tb.size(); ++j) {
      std::vector<int> alpha(a.nvars_);
      int total = deg_i;
      for (int d = 0; d < a.nvars_; ++d) {
        alpha[d] = ta.exps[i][d] + tb.exps[j][d];
        total += tb.exps[j][d];
      }
      if (total > order) continue;
      const int idx = tr.index_of(alpha);
      switch (mode) {
        case kMatMat:
          out.c_[idx] += a.c_[i] * b.c_[j];
          break;
        case kScalarLeft:
          out.c_[idx] += a.c_[i](0, 0) * b.c_[j];
          break;
        case kScalarRight:
          out.c_[idx] += b.c_[j](0, 0) * a.c_[i];
          break;
      }
    }
  }
  return out;
}

double jet_distance(const Jet& a, const Jet& b, int up_to_order) {
  require(a.nvars() == b.nvars() && a.rows() == b.rows() && a.cols() == b.cols(),
          Error::Kind::DimensionMismatch, "jet_distance: shape mismatch");
  const int order = std::min({up_to_order, a.order(), b.order()});
  const Jet ta = a.truncated(order);
  const Jet tb = b.truncated(order);
  double worst = 0.0;
  for (int i = 0; i < ta.terms(); ++i) worst = std::max(worst, (ta.coeff(i) - tb.coeff(i)).norm());
  return worst;
}

SymbolTensor SymbolJet::value0() const {
  SymbolTensor out(m, n);
  PairIndex pairs(n);
  for (int p = 0; p < pairs.size(); ++p) {
    auto [i, j] = pairs.pair(p);
    out.set(i, j, comp[p].value0());
  }
  return out;
}

SymbolJet SymbolJet::constant(const SymbolTensor& sigma, int order) {
  SymbolJet out;
  out.m = sigma.m();
  out.n = sigma.n();
  const PairIndex& pairs = sigma.pairs();
  for (int p = 0; p < pairs.size(); ++p) {
    auto [i, j] = pairs.pair(p);
    out.comp.push_back(Jet::constant(sigma.n(), order, sigma.comp(i, j)));
  }
  return out;
}

OperatorJet::OperatorJet(int m_, int n_, int order) : m(m_), n(n_) {
  PairIndex pairs(n_);
  a.assign(pairs.size(), Jet(n_, order, m_, m_));
  b.assign(n_, Jet(n_, order, m_, m_));
  c = Jet(n_, order, m_, m_);
}

OperatorJet OperatorJet::shifted(const Eigen::VectorXd& point) const {
  OperatorJet out = *this;
  for (auto& j : out.a) j = j.shifted(point);
  for (auto& j : out.b) j = j.shifted(point);
  out.c = out.c.shifted(point);
  return out;
}

OperatorJet OperatorJet::truncated(int new_order) const {
  OperatorJet out = *this;
  for (auto& j : out.a) j = j.truncated(new_order);
  for (auto& j : out.b) j = j.truncated(new_order);
  out.c = out.c.truncated(new_order);
  return out;
}

Jet apply(const OperatorJet& op, const Jet& s) {
  require(s.rows() == op.m && s.cols() == 1, Error::Kind::DimensionMismatch,
          "apply: section shape mismatch");
  require(s.order() >= 2, Error::Kind::OrderUnderflow, "apply: section order must be >= 2");
  std::vector<Jet> ds;
  ds.reserve(op.n);
  for (int i = 0; i < op.n; ++i) ds.push_back(s.deriv(i));
  Jet out = op.c * s;
  for (int i = 0; i < op.n; ++i) {
    out += op.b[i] * ds[i];
    for (int j = 0; j < op.n; ++j) out += op.a_at(i, j) * ds[i].deriv(j);
  }
  return out;
}

OperatorJet delta_f(const OperatorJet& op, const Jet& f) {
  require(f.scalar_shaped(), Error::Kind::DimensionMismatch, "delta_f: f must be scalar");
  std::vector<Jet> df;
  df.reserve(op.n);
  for (int i = 0; i < op.n; ++i) df.push_back(f.deriv(i));

  OperatorJet out;
  out.m = op.m;
  out.n = op.n;
  // Second-order part vanishes; first- and zero-order parts follow the
  // commutator op o f - f o op.
  for (int i = 0; i < op.n; ++i)
    for (int j = i; j < op.n; ++j) {
      Jet z = op.a_at(i, j) * df[i];  // shape/order template
      for (auto t = 0; t < z.terms(); ++t) z.coeff(t).setZero();
      out.a.push_back(z);
    }
  for (int j = 0; j < op.n; ++j) {
    Jet acc = op.a_at(0, j) * df[0];
    for (int i = 1; i < op.n; ++i) acc += op.a_at(i, j) * df[i];
    out.b.push_back(2.0 * acc);
  }
  Jet c = op.b[0] * df[0];
  for (int i = 1; i < op.n; ++i) c += op.b[i] * df[i];
  for (int i = 0; i < op.n; ++i)
    for (int j = 0; j < op.n; ++j) c += op.a_at(i, j) * df[i].deriv(j);
  out.c = c;
  return out;
}

SymbolJet symbol_of(const OperatorJet& op) {
  SymbolJet out;
  out.m = op.m;
  out.n = op.n;
  out.comp = op.a;
  return out;
}

OperatorJet gauge_transform(const OperatorJet& op, const Jet& a, double tol) {
  require(a.rows() == op.m && a.cols() == op.m, Error::Kind::DimensionMismatch,
          "gauge_transform: gauge shape mismatch");
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.value0());
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(op.m - 1);
    require(smax > 0 && smin / smax >= tol, Error::Kind::NonInvertibleGauge,
            "gauge_transform: gauge is singular at the base point");
  }
  const Jet b = a.inverse();
  std::vector<Jet> db;
  db.reserve(op.n);
  for (int i = 0; i < op.n; ++i) db.push_back(b.deriv(i));

  OperatorJet out;
  out.m = op.m;
  out.n = op.n;
  for (int i = 0; i < op.n; ++i)
    for (int j = i; j < op.n; ++j) out.a.push_back(a * op.a_at(i, j) * b);
  for (int k = 0; k < op.n; ++k) {
    Jet acc = op.b[k] * b;
    for (int j = 0; j < op.n; ++j) acc += 2.0 * (op.a_at(k, j) * db[j]);
    out.b.push_back(a * acc);
  }
  Jet c = op.c * b;
  for (int i = 0; i < op.n; ++i) {
    c += op.b[i] * db[i];
    for (int j = 0; j < op.n; ++j) c += op.a_at(i, j) * db[i].deriv(j);
  }
  out.c = a * c;
  return out;
}

double operator_distance(const OperatorJet& p, const OperatorJet& q,
                         int a_order, int b_order, int c_order) {
  require(p.m == q.m && p.n == q.n, Error::Kind::DimensionMismatch,
          "operator_distance: shape mismatch");
  double worst = 0.0;
  for (size_t i = 0; i < p.a.size(); ++i)
    worst = std::max(worst, jet_distance(p.a[i], q.a[i], a_order));
  for (int i = 0; i < p.n; ++i)
    worst = std::max(worst, jet_distance(p.b[i], q.b[i], b_order));
  worst = std::max(worst, jet_distance(p.c, q.c, c_order));
  return worst;
}

}  // namespace opequiv
