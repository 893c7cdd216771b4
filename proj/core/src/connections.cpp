#include "opequiv/connections.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <sstream>

namespace opequiv {

namespace {

// Scalar jet of one matrix entry.
Jet entry(const Jet& j, int r, int c) {
  Jet out(j.nvars(), j.order(), 1, 1);
  for (int t = 0; t < j.terms(); ++t)
    out.coeff(t)(0, 0) = j.coeff(t)(r, c);
  return out;
}

double rcond_of(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const double smax = svd.singularValues()(0);
  if (smax <= 0.0) return 0.0;
  return svd.singularValues()(svd.singularValues().size() - 1) / smax;
}

}  // namespace

Jet trace_quadric_jet(const SymbolJet& sigma) {
  const int n = sigma.n;
  const Jet& first = sigma.comp[0];
  Jet g(n, first.order(), n, n);
  for (int t = 0; t < first.terms(); ++t) {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        m(i, j) = sigma.at(i, j).coeff(t).trace();
        m(j, i) = m(i, j);
      }
    g.coeff(t) = m;
  }
  return g;
}

Christoffels levi_civita(const Jet& cometric, double tol) {
  const int n = cometric.rows();
  require(cometric.cols() == n, Error::Kind::DimensionMismatch, "levi_civita: not square");
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(cometric.value0());
    const double smax = svd.singularValues()(0);
    if (!(smax > 0.0) || svd.singularValues()(n - 1) / smax < tol)
      fail(Error::Kind::Degenerate, "levi_civita: cometric is degenerate at the base point");
  }
  const Jet metric = cometric.inverse();
  std::vector<Jet> dlow;  // dlow[d] = d_d metric
  dlow.reserve(n);
  for (int d = 0; d < n; ++d) dlow.push_back(metric.deriv(d));

  Christoffels out;
  out.gamma.reserve(n);
  const int ord = metric.order() - 1;
  for (int k = 0; k < n; ++k) {
    Jet gk(n, ord, n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        Jet acc(n, ord, 1, 1);
        for (int l = 0; l < n; ++l) {
          Jet term = entry(dlow[i], l, j) + entry(dlow[j], l, i) - entry(dlow[l], i, j);
          acc += entry(cometric, k, l).truncated(ord) * term;
        }
        acc = 0.5 * acc;
        for (int t = 0; t < gk.terms(); ++t) {
          gk.coeff(t)(i, j) = acc.coeff(t)(0, 0);
          gk.coeff(t)(j, i) = acc.coeff(t)(0, 0);
        }
      }
    out.gamma.push_back(gk);
  }
  return out;
}

std::vector<Jet> covariant_square(const Jet& s, const BundleConnection& nabla,
                                  const Christoffels& nabla_c) {
  const int n = static_cast<int>(nabla.gamma.size());
  require(s.order() >= 2, Error::Kind::OrderUnderflow, "covariant_square: section order < 2");
  // First covariant differential.
  std::vector<Jet> phi;
  phi.reserve(n);
  for (int i = 0; i < n; ++i) phi.push_back(s.deriv(i) + nabla.gamma[i] * s);

  PairIndex pairs(n);
  std::vector<Jet> out;
  out.reserve(pairs.size());
  for (int p = 0; p < pairs.size(); ++p) {
    auto [i, j] = pairs.pair(p);
    Jet term = 0.5 * (phi[j].deriv(i) + phi[i].deriv(j) + nabla.gamma[i] * phi[j] +
                      nabla.gamma[j] * phi[i]);
    for (int k = 0; k < n; ++k) term -= entry(nabla_c.gamma[k], i, j) * phi[k];
    out.push_back(term);
  }
  return out;
}

OperatorJet quantize(const SymbolJet& sigma, const BundleConnection& nabla,
                     const Christoffels& nabla_c) {
  const int n = sigma.n;
  OperatorJet out;
  out.m = sigma.m;
  out.n = n;
  out.a = sigma.comp;

  for (int k = 0; k < n; ++k) {
    Jet bk = 2.0 * (sigma.at(k, 0) * nabla.gamma[0]);
    for (int j = 1; j < n; ++j) bk += 2.0 * (sigma.at(k, j) * nabla.gamma[j]);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        bk -= entry(nabla_c.gamma[k], i, j) * sigma.at(i, j);
    out.b.push_back(bk);
  }

  Jet c;
  bool first = true;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Jet term = sigma.at(i, j) * (nabla.gamma[j].deriv(i) + nabla.gamma[i] * nabla.gamma[j]);
      for (int k = 0; k < n; ++k)
        term -= entry(nabla_c.gamma[k], i, j) * (sigma.at(i, j) * nabla.gamma[k]);
      if (first) {
        c = term;
        first = false;
      } else {
        c += term;
      }
    }
  out.c = c;
  return out;
}

EndoOneForm pairing_sigma_alpha(const SymbolJet& sigma, const EndoOneForm& alpha) {
  const int n = sigma.n;
  require(static_cast<int>(alpha.alpha.size()) == n, Error::Kind::DimensionMismatch,
          "pairing_sigma_alpha: wrong form length");
  EndoOneForm out;
  out.alpha.reserve(n);
  for (int j = 0; j < n; ++j) {
    Jet acc = 2.0 * (sigma.at(0, j) * alpha.alpha[0]);
    for (int i = 1; i < n; ++i) acc += 2.0 * (sigma.at(i, j) * alpha.alpha[i]);
    out.alpha.push_back(acc);
  }
  return out;
}

std::vector<Mat> pairing_sigma_alpha(const SymbolTensor& sigma, const std::vector<Mat>& alpha) {
  const int n = sigma.n();
  require(static_cast<int>(alpha.size()) == n, Error::Kind::DimensionMismatch,
          "pairing_sigma_alpha: wrong form length");
  std::vector<Mat> out(n, Mat::Zero(sigma.m(), sigma.m()));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) out[j] += 2.0 * sigma.comp(i, j) * alpha[i];
  return out;
}

EndoOneForm sigma1_of(const OperatorJet& op, const BundleConnection& nabla,
                      const Christoffels& nabla_c) {
  const OperatorJet q = quantize(symbol_of(op), nabla, nabla_c);
  EndoOneForm out;
  out.alpha.reserve(op.n);
  for (int k = 0; k < op.n; ++k) out.alpha.push_back(op.b[k] - q.b[k]);
  return out;
}

double subsymbol_shift_check(const OperatorJet& op, const BundleConnection& nabla,
                             const EndoOneForm& alpha, const Christoffels& nabla_c) {
  BundleConnection shifted;
  shifted.gamma.reserve(op.n);
  for (int i = 0; i < op.n; ++i) shifted.gamma.push_back(nabla.gamma[i] + alpha.alpha[i]);

  const EndoOneForm s1 = sigma1_of(op, nabla, nabla_c);
  const EndoOneForm s1_shifted = sigma1_of(op, shifted, nabla_c);
  const EndoOneForm pair = pairing_sigma_alpha(symbol_of(op), alpha);

  double worst = 0.0;
  for (int k = 0; k < op.n; ++k) {
    const Jet resid = s1.alpha[k] - s1_shifted.alpha[k] - pair.alpha[k];
    worst = std::max(worst, resid.norm());
  }
  return worst;
}

RegularityIso regularity_iso(const SymbolTensor& sigma) {
  const int m = sigma.m();
  const int n = sigma.n();
  const int mm = m * m;
  RegularityIso out;
  out.matrix = Eigen::MatrixXd::Zero(mm * n, mm * n);
  // Column block i, row block j: alpha_i -> 2 sigma^{ij} alpha_i, column-major
  // vec so vec(S a) = (I (x) S) vec(a).
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Mat& s = sigma.comp(i, j);
      for (int col = 0; col < m; ++col)
        out.matrix.block(j * mm + col * m, i * mm + col * m, m, m) += 2.0 * s;
    }
  out.rcond = rcond_of(out.matrix);
  return out;
}

AssociatedConnection associated_connection(const OperatorJet& op, double tol) {
  const int m = op.m;
  const int n = op.n;
  const SymbolJet sigma = symbol_of(op);

  AssociatedConnection out;
  out.nabla_c = levi_civita(trace_quadric_jet(sigma), tol);

  const RegularityIso iso = regularity_iso(sigma.value0());
  if (iso.rcond < tol) {
    std::ostringstream os;
    os << "associated_connection: the pairing map of the symbol is singular (rcond="
       << iso.rcond << ")";
    fail(Error::Kind::NotRegular, os.str());
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> solver(iso.matrix);

  // rho^k = b^k + sum_ij Gamma^k_ij sigma^{ij}; then solve <sigma, Gamma> = rho
  // degree by degree (the system is triangular in the jet grading).
  std::vector<Jet> rho;
  rho.reserve(n);
  for (int k = 0; k < n; ++k) {
    Jet r = op.b[k];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        r += entry(out.nabla_c.gamma[k], i, j) * sigma.at(i, j);
    rho.push_back(r);
  }
  const int ord = rho[0].order();
  const MonomialTable& table = monomial_table(n, ord);

  EndoOneForm gamma;
  for (int k = 0; k < n; ++k) gamma.alpha.push_back(Jet(n, ord, m, m));

  // Two sweeps: the second one is iterative refinement, pushing the defect to
  // rounding level even when the pairing matrix is moderately conditioned.
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (int d = 0; d <= ord; ++d) {
      const EndoOneForm lhs = pairing_sigma_alpha(sigma, gamma);
      for (int t = 0; t < table.size(); ++t) {
        int deg = 0;
        for (int e : table.exps[t]) deg += e;
        if (deg != d) continue;
        Eigen::VectorXd rhs(m * m * n);
        for (int k = 0; k < n; ++k) {
          const Eigen::MatrixXd defect = rho[k].coeff(t) - lhs.alpha[k].coeff(t);
          for (int col = 0; col < m; ++col)
            rhs.segment(k * m * m + col * m, m) = defect.col(col);
        }
        const Eigen::VectorXd sol = solver.solve(rhs);
        for (int k = 0; k < n; ++k) {
          Eigen::MatrixXd g(m, m);
          for (int col = 0; col < m; ++col) g.col(col) = sol.segment(k * m * m + col * m, m);
          gamma.alpha[k].coeff(t) += g;
        }
      }
    }
  }
  out.nabla.gamma = gamma.alpha;
  return out;
}

Decomposition decompose(const OperatorJet& op, double tol) {
  Decomposition out;
  AssociatedConnection conn = associated_connection(op, tol);
  out.nabla = conn.nabla;
  out.nabla_c = conn.nabla_c;
  out.total.sigma2 = symbol_of(op);

  const OperatorJet q = quantize(out.total.sigma2, out.nabla, out.nabla_c);
  const int b_order = q.b[0].order();
  const int c_order = q.c.order();

  EndoOneForm s1;
  for (int k = 0; k < op.n; ++k) s1.alpha.push_back(op.b[k].truncated(b_order) - q.b[k]);
  out.total.sigma1 = s1;
  out.total.sigma0 = op.c.truncated(c_order) - q.c;

  // Recombination: a-parts agree identically, c-parts by construction; the
  // meaningful residual is the first-order defect of the solved connection,
  // measured relative to the size of the data that produced it.
  OperatorJet recombined = q;
  recombined.c += out.total.sigma0;
  double scale = 1.0;
  for (const Jet& g : out.nabla.gamma) scale = std::max(scale, g.norm());
  for (const Jet& a : op.a) scale = std::max(scale, a.norm());
  for (const Jet& b : op.b) scale = std::max(scale, b.norm());
  scale = std::max(scale, op.c.norm());
  out.recombination_residual =
      operator_distance(op, recombined, op.a[0].order(), b_order, c_order) / scale;
  return out;
}

BundleConnection gauge_transform_connection(const BundleConnection& nabla, const Jet& a) {
  const Jet b = a.inverse();
  BundleConnection out;
  out.gamma.reserve(nabla.gamma.size());
  for (size_t i = 0; i < nabla.gamma.size(); ++i)
    out.gamma.push_back(a * nabla.gamma[i] * b - a.deriv(static_cast<int>(i)) * b);
  return out;
}

}  // namespace opequiv
