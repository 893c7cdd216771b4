#include "opequiv/tensor.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace opequiv {

namespace {

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  require(m.allFinite(), Error::Kind::DimensionMismatch,
          std::string(what) + ": non-finite entries");
}

}  // namespace

QuadFormUp make_quad_up(const Eigen::MatrixXd& m, double tol) {
  check_finite(m, "QuadFormUp");
  require(m.rows() == m.cols(), Error::Kind::DimensionMismatch, "QuadFormUp: not square");
  require((m - m.transpose()).norm() <= tol * std::max(1.0, m.norm()),
          Error::Kind::DimensionMismatch, "QuadFormUp: not symmetric");
  return QuadFormUp{0.5 * (m + m.transpose())};
}

QuadFormDown make_quad_down(const Eigen::MatrixXd& m, double tol) {
  check_finite(m, "QuadFormDown");
  require(m.rows() == m.cols(), Error::Kind::DimensionMismatch, "QuadFormDown: not square");
  require((m - m.transpose()).norm() <= tol * std::max(1.0, m.norm()),
          Error::Kind::DimensionMismatch, "QuadFormDown: not symmetric");
  return QuadFormDown{0.5 * (m + m.transpose())};
}

Mat value_on(const SymbolTensor& sigma, const QuadFormDown& theta) {
  require(theta.n() == sigma.n(), Error::Kind::DimensionMismatch,
          "value_on: theta dimension mismatch");
  Mat out = Mat::Zero(sigma.m(), sigma.m());
  for (int i = 0; i < sigma.n(); ++i)
    for (int j = 0; j < sigma.n(); ++j) out += theta.m(i, j) * sigma.comp(i, j);
  return out;
}

QuadFormUp trace_quadric(const SymbolTensor& sigma) {
  Eigen::MatrixXd g(sigma.n(), sigma.n());
  for (int i = 0; i < sigma.n(); ++i)
    for (int j = i; j < sigma.n(); ++j) {
      g(i, j) = sigma.comp(i, j).trace();
      g(j, i) = g(i, j);
    }
  return QuadFormUp{g};
}

QuadFormDown invert_quadric(const QuadFormUp& g, double tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g.m);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(g.n() - 1);
  if (smax <= 0.0 || smin / smax < tol) {
    std::ostringstream os;
    os << "invert_quadric: quadric is degenerate (rcond="
       << (smax > 0 ? smin / smax : 0.0) << ", tol=" << tol << ")";
    fail(Error::Kind::Degenerate, os.str());
  }
  Eigen::MatrixXd inv = g.m.inverse();
  return QuadFormDown{0.5 * (inv + inv.transpose())};
}

EigenPairs eigen_covectors(const Eigen::MatrixXd& a, double tol) {
  check_finite(a, "eigen_covectors");
  require(a.rows() == a.cols(), Error::Kind::DimensionMismatch, "eigen_covectors: not square");
  const int n = static_cast<int>(a.rows());
  Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  require(es.info() == Eigen::Success, Error::Kind::NearDefective,
          "eigen_covectors: eigensolver failed to converge");

  CVec values = es.eigenvalues();
  CMat vectors = es.eigenvectors();

  // Sort by (Re, |Im|), conjugate partner with positive imaginary part first.
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  auto key_less = [&](int p, int q) {
    const auto& u = values(p);
    const auto& v = values(q);
    if (u.real() != v.real()) return u.real() < v.real();
    if (std::abs(u.imag()) != std::abs(v.imag()))
      return std::abs(u.imag()) < std::abs(v.imag());
    return u.imag() > v.imag();
  };
  std::stable_sort(perm.begin(), perm.end(), key_less);

  EigenPairs out;
  out.values = CVec(n);
  out.vectors = CMat(n, n);
  for (int k = 0; k < n; ++k) {
    out.values(k) = values(perm[k]);
    out.vectors.col(k) = vectors.col(perm[k]).normalized();
  }

  // Deterministic sign fix: the first significant component gets a positive
  // real part (imaginary part breaking ties).
  for (int k = 0; k < n; ++k) {
    for (int r = 0; r < n; ++r) {
      const std::complex<double> z = out.vectors(r, k);
      if (std::abs(z) > 1e-12) {
        const double s = std::abs(z.real()) > 1e-12 * std::abs(z) ? z.real() : z.imag();
        if (s < 0) out.vectors.col(k) = -out.vectors.col(k);
        break;
      }
    }
  }

  const double scale = std::max(a.norm(), 0.0);
  if (tol > 0.0) {
    double min_gap = std::numeric_limits<double>::infinity();
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q)
        min_gap = std::min(min_gap, std::abs(out.values(p) - out.values(q)));
    if (!(min_gap >= tol * std::max(scale, 1e-300))) {
      std::ostringstream os;
      os << "eigen_covectors: nearly defective spectrum (min gap " << min_gap
         << " < " << tol << " * " << scale << ")";
      fail(Error::Kind::NearDefective, os.str());
    }
    for (int k = 0; k < n; ++k) {
      const double resid = (a * out.vectors.col(k) - out.values(k) * out.vectors.col(k)).norm();
      require(resid <= std::max(tol, 1e3 * std::numeric_limits<double>::epsilon()) *
                           std::max(scale, 1.0),
              Error::Kind::NearDefective, "eigen_covectors: eigenvector residual too large");
    }
  }
  return out;
}

SymbolTensor symbol_act(const SymbolTensor& sigma, const Mat& a, const Eigen::MatrixXd& b) {
  require(a.rows() == sigma.m() && a.cols() == sigma.m(), Error::Kind::DimensionMismatch,
          "symbol_act: GL(E) element shape mismatch");
  require(b.rows() == sigma.n() && b.cols() == sigma.n(), Error::Kind::DimensionMismatch,
          "symbol_act: GL(T) element shape mismatch");
  const Mat a_inv = a.inverse();
  const int n = sigma.n();
  SymbolTensor out(sigma.m(), n);
  for (int k = 0; k < n; ++k)
    for (int l = k; l < n; ++l) {
      Mat acc = Mat::Zero(sigma.m(), sigma.m());
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) acc += b(k, p) * b(l, q) * sigma.comp(p, q);
      out.set(k, l, a * acc * a_inv);
    }
  return out;
}

double quad_pair(const QuadFormUp& q, const QuadFormDown& theta) {
  require(q.n() == theta.n(), Error::Kind::DimensionMismatch, "quad_pair: dimension mismatch");
  return (q.m.array() * theta.m.array()).sum();
}

}  // namespace opequiv
