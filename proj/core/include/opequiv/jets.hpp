#pragma once

#include <Eigen/Dense>
#include <vector>

#include "opequiv/tensor.hpp"

namespace opequiv {

// Monomials x^alpha with |alpha| <= order, listed by (degree, then a fixed
// enumeration). The listing for a smaller order is a prefix of the listing for
// a larger one, so truncation is a vector prefix.
struct MonomialTable {
  int nvars = 0;
  int order = 0;
  std::vector<std::vector<int>> exps;

  int size() const { return static_cast<int>(exps.size()); }
  // Index of an exponent tuple, or -1 when |alpha| > order.
  int index_of(const std::vector<int>& alpha) const;
};

const MonomialTable& monomial_table(int nvars, int order);

// A matrix-valued polynomial truncated at a fixed total degree; the base point
// is the origin of the chart. All arithmetic is exact in the quotient algebra
// R[x]/m^(order+1) up to floating-point roundoff.
class Jet {
public:
  Jet() = default;
  Jet(int nvars, int order, int rows, int cols);

  static Jet constant(int nvars, int order, const Eigen::MatrixXd& value);
  static Jet scalar(int nvars, int order, double value);
  static Jet variable(int nvars, int order, int var);  // 1x1 jet of x_var

  int nvars() const { return nvars_; }
  int order() const { return order_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int terms() const { return static_cast<int>(c_.size()); }
  bool scalar_shaped() const { return rows_ == 1 && cols_ == 1; }

  const Eigen::MatrixXd& coeff(int idx) const { return c_[idx]; }
  Eigen::MatrixXd& coeff(int idx) { return c_[idx]; }
  const Eigen::MatrixXd& coeff(const std::vector<int>& alpha) const;
  void set_coeff(const std::vector<int>& alpha, const Eigen::MatrixXd& value);

  Jet truncated(int new_order) const;
  Jet deriv(int var) const;                      // order drops by one
  Jet shifted(const Eigen::VectorXd& point) const;  // exact Taylor recentering
  Jet transpose() const;
  Jet inverse() const;  // square shape, invertible constant term

  Eigen::MatrixXd value0() const { return c_[0]; }
  Eigen::MatrixXd eval(const Eigen::VectorXd& point) const;

  double norm() const;  // max Frobenius norm over coefficients

  Jet operator-() const;
  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator*(double s, Jet a) {
    for (auto& m : a.c_) m *= s;
    return a;
  }

private:
  int nvars_ = 0, order_ = 0, rows_ = 0, cols_ = 0;
  std::vector<Eigen::MatrixXd> c_;
};

// Largest coefficient difference between two jets up to the given degree.
double jet_distance(const Jet& a, const Jet& b, int up_to_order);

// Symbol field over a chart: an n x n symmetric array (pair storage) of
// m x m coefficient jets.
struct SymbolJet {
  int m = 0, n = 0;
  std::vector<Jet> comp;  // PairIndex(n) order

  const Jet& at(int i, int j) const { return comp[PairIndex(n).index(i, j)]; }
  SymbolTensor value0() const;
  static SymbolJet constant(const SymbolTensor& sigma, int order);
};

// Second-order operator on a chart: Delta s = sum a^{ij} d_i d_j s
// + sum b^i d_i s + c s, with matrix-valued truncated-polynomial coefficients.
struct OperatorJet {
  int m = 0, n = 0;
  std::vector<Jet> a;  // PairIndex(n) order, m x m jets
  std::vector<Jet> b;  // n entries
  Jet c;

  OperatorJet() = default;
  OperatorJet(int m_, int n_, int order);

  const Jet& a_at(int i, int j) const { return a[PairIndex(n).index(i, j)]; }
  Jet& a_at(int i, int j) { return a[PairIndex(n).index(i, j)]; }

  OperatorJet shifted(const Eigen::VectorXd& point) const;
  OperatorJet truncated(int new_order) const;
};

Jet apply(const OperatorJet& op, const Jet& s);

// delta_f(op) = op o f - f o op; an operator of order one less.
OperatorJet delta_f(const OperatorJet& op, const Jet& f);

SymbolJet symbol_of(const OperatorJet& op);

// A o op o A^-1 for a pointwise-invertible matrix-valued gauge A(x).
OperatorJet gauge_transform(const OperatorJet& op, const Jet& a, double tol = kDefaultTol);

double operator_distance(const OperatorJet& p, const OperatorJet& q,
                         int a_order, int b_order, int c_order);

}  // namespace opequiv
