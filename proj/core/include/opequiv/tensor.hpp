#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "opequiv/errors.hpp"

namespace opequiv {

using Mat = Eigen::MatrixXd;    // element of End(E), m x m
using CMat = Eigen::MatrixXcd;  // End(E) over C
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

inline constexpr double kDefaultTol = 1e-9;
inline constexpr unsigned long kDefaultSeed = 0x5eedUL;

// Bijection between unordered index pairs {i,j}, 0 <= i <= j < n, and the
// flat range 0..n(n+1)/2-1, in lexicographic order.
class PairIndex {
public:
  explicit PairIndex(int n) : n_(n) {
    require(n >= 1, Error::Kind::DimensionMismatch, "PairIndex: n must be positive");
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) pairs_.push_back({i, j});
  }

  int n() const { return n_; }
  int size() const { return static_cast<int>(pairs_.size()); }

  int index(int i, int j) const {
    if (i > j) std::swap(i, j);
    return i * n_ - i * (i - 1) / 2 + (j - i);
  }
  std::pair<int, int> pair(int p) const { return pairs_[p]; }
  // Multiplicity of the pair inside a full double sum over (i, j).
  double weight(int p) const { return pairs_[p].first == pairs_[p].second ? 1.0 : 2.0; }

private:
  int n_;
  std::vector<std::pair<int, int>> pairs_;
};

// Symmetric bilinear form on T* (an element of S^2 T), e.g. g_sigma.
struct QuadFormUp {
  Eigen::MatrixXd m;
  int n() const { return static_cast<int>(m.rows()); }
};

// Symmetric bilinear form on T (an element of S^2 T*), e.g. a covector square
// or the inverse quadric.
struct QuadFormDown {
  Eigen::MatrixXd m;
  int n() const { return static_cast<int>(m.rows()); }
};

QuadFormUp make_quad_up(const Eigen::MatrixXd& m, double tol = 1e-12);
QuadFormDown make_quad_down(const Eigen::MatrixXd& m, double tol = 1e-12);

// sigma in End(E) (x) S^2 T at a point: a symmetric n x n array of m x m
// matrices. Only the i <= j entries are stored; symmetry holds by construction.
class SymbolTensor {
public:
  SymbolTensor(int m, int n)
      : m_(m), n_(n), pairs_(n), comp_(pairs_.size(), Mat::Zero(m, m)) {
    require(m >= 1 && n >= 1, Error::Kind::DimensionMismatch, "SymbolTensor: bad dimensions");
  }

  int m() const { return m_; }
  int n() const { return n_; }
  const PairIndex& pairs() const { return pairs_; }

  const Mat& comp(int i, int j) const { return comp_[pairs_.index(i, j)]; }
  void set(int i, int j, const Mat& value) {
    require(value.rows() == m_ && value.cols() == m_, Error::Kind::DimensionMismatch,
            "SymbolTensor::set: component shape mismatch");
    comp_[pairs_.index(i, j)] = value;
  }

  double norm() const {
    double s = 0;
    for (int p = 0; p < pairs_.size(); ++p) {
      auto [i, j] = pairs_.pair(p);
      s += pairs_.weight(p) * comp_[p].squaredNorm();
    }
    return std::sqrt(s);
  }

  bool same_shape(const SymbolTensor& o) const { return m_ == o.m_ && n_ == o.n_; }

private:
  int m_, n_;
  PairIndex pairs_;
  std::vector<Mat> comp_;
};

// Raw eigendata of a real n x n matrix: eigenvalues sorted by
// (Re, |Im|, +Im first), conjugate pairs adjacent; unit eigenvectors as
// columns, sign-fixed deterministically.
struct EigenPairs {
  CVec values;
  CMat vectors;
};

// sigma_theta = sum_{i,j} theta_ij sigma^{ij}.
Mat value_on(const SymbolTensor& sigma, const QuadFormDown& theta);

// g_sigma = (Tr (x) id) sigma.
QuadFormUp trace_quadric(const SymbolTensor& sigma);

// Matrix inverse of a nondegenerate quadric; Degenerate if rcond < tol.
QuadFormDown invert_quadric(const QuadFormUp& g, double tol = kDefaultTol);

// Eigenvalues and eigencovectors of a real matrix acting on T*.
// tol == 0 skips the NearDefective gap check (used when the caller wants the
// raw frame of a possibly non-regular operator).
EigenPairs eigen_covectors(const Eigen::MatrixXd& a, double tol = kDefaultTol);

// The G = GL(E) x GL(T) action: sigma^{kl} -> sum_{pq} B_kp B_lq A sigma^{pq} A^-1.
SymbolTensor symbol_act(const SymbolTensor& sigma, const Mat& a, const Eigen::MatrixXd& b);

// Full contraction <q, theta> = sum_{ij} q^{ij} theta_ij.
double quad_pair(const QuadFormUp& q, const QuadFormDown& theta);

}  // namespace opequiv
