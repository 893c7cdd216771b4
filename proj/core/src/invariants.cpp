#include "opequiv/invariants.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace opequiv {

namespace {

double rcond_of(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const double smax = svd.singularValues()(0);
  if (smax <= 0.0) return 0.0;
  return svd.singularValues()(svd.singularValues().size() - 1) / smax;
}

double min_pairwise_gap(const CVec& values) {
  double gap = std::numeric_limits<double>::infinity();
  for (int p = 0; p < values.size(); ++p)
    for (int q = p + 1; q < values.size(); ++q)
      gap = std::min(gap, std::abs(values(p) - values(q)));
  return gap;
}

Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd s(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      s(i, j) = u(rng);
      s(j, i) = s(i, j);
    }
  return s;
}

}  // namespace

double artin_procesi_tensor(const SymbolTensor& sigma,
                            const std::vector<QuadFormDown>& thetas,
                            const std::vector<int>& order) {
  require(thetas.size() == order.size(), Error::Kind::DimensionMismatch,
          "artin_procesi_tensor: |thetas| != |order|");
  require(!order.empty(), Error::Kind::DimensionMismatch, "artin_procesi_tensor: empty word");
  Mat prod = Mat::Identity(sigma.m(), sigma.m());
  for (int idx : order) {
    require(idx >= 0 && idx < static_cast<int>(thetas.size()), Error::Kind::DimensionMismatch,
            "artin_procesi_tensor: index out of range");
    prod = prod * value_on(sigma, thetas[idx]);
  }
  return prod.trace();
}

SymmetricMoments h2_h3(const SymbolTensor& sigma) {
  const PairIndex& pairs = sigma.pairs();
  const int np = pairs.size();
  SymmetricMoments out;
  out.n_pairs = np;
  out.h2 = Eigen::MatrixXd(np, np);
  out.h3.assign(static_cast<size_t>(np) * np * np, 0.0);

  std::vector<Mat> comp(np);
  for (int p = 0; p < np; ++p) {
    auto [i, j] = pairs.pair(p);
    comp[p] = sigma.comp(i, j);
  }
  std::vector<std::vector<Mat>> prod2(np, std::vector<Mat>(np));
  for (int p = 0; p < np; ++p)
    for (int q = 0; q < np; ++q) {
      prod2[p][q] = comp[p] * comp[q];
      out.h2(p, q) = prod2[p][q].trace();
    }
  for (int p = 0; p < np; ++p)
    for (int q = 0; q < np; ++q)
      for (int r = 0; r < np; ++r)
        out.h3[(static_cast<size_t>(p) * np + q) * np + r] = (prod2[p][q] * comp[r]).trace();
  return out;
}

DerivedQuadrics derived_quadrics(const SymbolTensor& sigma, double tol) {
  const int n = sigma.n();
  DerivedQuadrics dq;
  dq.g = trace_quadric(sigma);
  dq.g_inv = invert_quadric(dq.g, tol);

  const Mat s1 = value_on(sigma, dq.g_inv);
  Eigen::MatrixXd g1(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = k; l < n; ++l) {
      g1(k, l) = (s1 * sigma.comp(k, l)).trace();
      g1(l, k) = g1(k, l);
    }
  dq.g1 = QuadFormUp{g1};

  // Second derived quadric. The plain double contraction of h3 collapses into
  // span{g, g1} when m = 2 (Cayley-Hamilton kills Tr(M^2 sigma_theta)), which
  // would make the lambda-tilde family rank-deficient. Mixing in the h2-route
  // quadric contracted with the lowered g1 keeps the same naturality and
  // scaling weight while staying generic for every m >= 2.
  const Eigen::MatrixXd beta = dq.g_inv.m * g1 * dq.g_inv.m;
  const Mat s_beta = value_on(sigma, QuadFormDown{0.5 * (beta + beta.transpose())});
  const Mat kernel = s1 * s1 + s_beta;
  Eigen::MatrixXd g2(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = k; l < n; ++l) {
      g2(k, l) = (kernel * sigma.comp(k, l)).trace();
      g2(l, k) = g2(k, l);
    }
  require((g2 - g2.transpose()).norm() <= 1e-10 * std::max(1.0, g2.norm()),
          Error::Kind::DimensionMismatch, "derived_quadrics: g2 is not symmetric");
  dq.g2 = QuadFormUp{g2};
  return dq;
}

Eigen::MatrixXd g1_operator(const DerivedQuadrics& dq) {
  return dq.g_inv.m * dq.g1.m;
}

Eigen::MatrixXd sym_square_operator(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  PairIndex pairs(n);
  const int np = pairs.size();
  Eigen::MatrixXd s(np, np);
  for (int col = 0; col < np; ++col) {
    auto [i, j] = pairs.pair(col);
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(n, n);
    basis(i, j) += 1.0;
    basis(j, i) += (i == j) ? 0.0 : 1.0;
    const Eigen::MatrixXd image = a * basis * a.transpose();
    for (int row = 0; row < np; ++row) {
      auto [k, l] = pairs.pair(row);
      s(row, col) = image(k, l);
    }
  }
  return s;
}

QuadFormDown sym_square_apply(const Eigen::MatrixXd& a, const QuadFormDown& theta) {
  return QuadFormDown{a * theta.m * a.transpose()};
}

EigenFrame eigenframe(const SymbolTensor& sigma, const DerivedQuadrics& dq, double tol) {
  (void)sigma;
  const Eigen::MatrixXd a = g1_operator(dq);
  const int n = static_cast<int>(a.rows());
  EigenPairs raw = eigen_covectors(a, tol);

  const Eigen::MatrixXd& g = dq.g.m;
  const double g_scale = std::max(1.0, g.norm());

  EigenFrame frame;
  frame.lambda = raw.values;
  frame.estar = raw.vectors;
  frame.norms.assign(n, 1);

  auto sign_fix = [&](int k) {
    for (int r = 0; r < n; ++r) {
      const std::complex<double> z = frame.estar(r, k);
      if (std::abs(z) > 1e-12) {
        const double s = std::abs(z.real()) > 1e-12 * std::abs(z) ? z.real() : z.imag();
        if (s < 0) frame.estar.col(k) = -frame.estar.col(k);
        return;
      }
    }
  };

  int k = 0;
  while (k < n) {
    const CVec v = frame.estar.col(k);
    const std::complex<double> c = (v.transpose() * g.cast<std::complex<double>>() * v)(0, 0);
    const bool conj_pair = frame.lambda(k).imag() > 0.0 && k + 1 < n &&
                           std::abs(frame.lambda(k + 1) - std::conj(frame.lambda(k))) <=
                               1e-12 * std::max(1.0, std::abs(frame.lambda(k)));
    if (tol > 0.0 && std::abs(c) < tol * g_scale) {
      std::ostringstream os;
      os << "eigenframe: isotropic eigencovector, |g(e*,e*)| = " << std::abs(c)
         << " below " << tol * g_scale;
      fail(Error::Kind::NullNorm, os.str());
    }
    if (frame.lambda(k).imag() == 0.0 && std::abs(c.imag()) <= 1e-10 * std::abs(c)) {
      // Real eigenvalue: keep the covector real, record the sign of the norm.
      const double cr = c.real();
      const double scale = std::sqrt(std::max(std::abs(cr), 1e-300));
      frame.estar.col(k) /= scale;
      frame.norms[k] = cr >= 0 ? 1 : -1;
      sign_fix(k);
      ++k;
    } else {
      // Complex: normalize to g(e*,e*) = 1 with the principal square root and
      // force the conjugate partner to be the exact conjugate.
      const std::complex<double> root = std::sqrt(c);
      frame.estar.col(k) /= root;
      frame.norms[k] = 1;
      sign_fix(k);
      if (conj_pair) {
        frame.estar.col(k + 1) = frame.estar.col(k).conjugate();
        frame.norms[k + 1] = 1;
        k += 2;
      } else {
        ++k;
      }
    }
  }

  frame.edual = frame.estar.transpose().inverse();
  return frame;
}

std::vector<CMat> lambda_tilde_forms(const DerivedQuadrics& dq, const EigenFrame& frame) {
  const int n = static_cast<int>(frame.lambda.size());
  const int count = n * (n + 1) / 2;
  const CMat v = frame.estar;
  const CMat w = v.transpose() * dq.g2.m.cast<std::complex<double>>() * v;

  std::vector<CMat> out;
  out.reserve(count);
  CVec powers = CVec::Ones(n);
  for (int l = 0; l < count; ++l) {
    CMat core = powers.asDiagonal() * w * powers.asDiagonal();
    out.push_back(v * core * v.transpose());
    for (int i = 0; i < n; ++i) powers(i) *= frame.lambda(i);
  }
  return out;
}

RFamily r_family(const SymbolTensor& sigma, const DerivedQuadrics& dq,
                 const EigenFrame& frame, double tol) {
  const int n = sigma.n();
  const int m = sigma.m();
  const int count = n * (n + 1) / 2;
  const CMat& v = frame.estar;
  const CMat w = v.transpose() * dq.g2.m.cast<std::complex<double>>() * v;

  // Components of sigma in the eigen dual basis: sigma_ij = v_i^T [sigma] v_j.
  std::vector<std::vector<CMat>> sij(n, std::vector<CMat>(n));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      CMat acc = CMat::Zero(m, m);
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
          acc += v(p, i) * v(q, j) * sigma.comp(p, q).cast<std::complex<double>>();
      sij[i][j] = acc;
      if (i != j) sij[j][i] = acc;
    }

  RFamily out;
  out.r.reserve(count);
  CVec powers = CVec::Ones(n);
  double worst = 0.0;
  for (int l = 0; l < count; ++l) {
    CMat acc = CMat::Zero(m, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) acc += powers(i) * powers(j) * w(i, j) * sij[i][j];
    const double re_norm = acc.real().norm();
    const double im_norm = acc.imag().norm();
    worst = std::max(worst, im_norm / std::max(1.0, re_norm));
    out.r.push_back(acc.real());
    for (int i = 0; i < n; ++i) powers(i) *= frame.lambda(i);
  }
  out.imag_residual = worst;
  if (tol > 0.0 && worst > tol) {
    std::ostringstream os;
    os << "r_family: relative imaginary residual " << worst << " exceeds " << tol;
    fail(Error::Kind::RealityViolation, os.str());
  }
  return out;
}

namespace {

bool is_canonical_rotation(const std::vector<int>& w) {
  const size_t len = w.size();
  for (size_t s = 1; s < len; ++s) {
    for (size_t t = 0; t < len; ++t) {
      const int a = w[(t + s) % len];
      if (a != w[t]) {
        if (a < w[t]) return false;
        break;
      }
    }
  }
  return true;
}

}  // namespace

Fingerprint fingerprint(const RFamily& rs, const std::optional<Mat>& extra, int max_len,
                        int m, int n) {
  require(max_len >= 1, Error::Kind::DimensionMismatch, "fingerprint: word length must be >= 1");
  std::vector<const Mat*> letters;
  for (const Mat& r : rs.r) letters.push_back(&r);
  if (extra) letters.push_back(&*extra);
  const int a = static_cast<int>(letters.size());

  std::vector<double> letter_norms(a);
  for (int i = 0; i < a; ++i) letter_norms[i] = letters[i]->norm();

  Fingerprint fp;
  fp.m = m;
  fp.n = n;
  fp.max_len = max_len;
  fp.alphabet = a;
  fp.has_extra = extra.has_value();

  std::vector<int> word;
  for (int len = 1; len <= max_len; ++len) {
    word.assign(len, 0);
    while (true) {
      if (is_canonical_rotation(word)) {
        Mat prod = *letters[word[0]];
        double scale = letter_norms[word[0]];
        for (int t = 1; t < len; ++t) {
          prod = prod * *letters[word[t]];
          scale *= letter_norms[word[t]];
        }
        fp.words.push_back(word);
        fp.values.push_back(prod.trace());
        fp.scales.push_back(scale);
      }
      int pos = len - 1;
      while (pos >= 0 && word[pos] == a - 1) word[pos--] = 0;
      if (pos < 0) break;
      ++word[pos];
    }
  }
  return fp;
}

RegularityReport regularity_report(const SymbolTensor& sigma, double tol, unsigned long seed) {
  RegularityReport rep;
  const int n = sigma.n();

  // Condition 1: g_sigma nondegenerate.
  const QuadFormUp g = trace_quadric(sigma);
  rep.cond1.value = rcond_of(g.m);
  rep.cond1.pass = rep.cond1.value >= tol;

  DerivedQuadrics dq;
  bool have_dq = false;
  if (rep.cond1.pass) {
    dq = derived_quadrics(sigma, tol);
    have_dq = true;
  }

  // Condition 2: distinct spectra for the associated operator and its
  // symmetric square, plus cyclicity of g2 under S*.
  if (have_dq) {
    const Eigen::MatrixXd a = g1_operator(dq);
    const double a_scale = std::max(1.0, a.norm());
    const Eigen::ComplexEigenSolver<CMat> es_a(a.cast<std::complex<double>>());
    const double gap_a = min_pairwise_gap(es_a.eigenvalues()) / a_scale;

    const Eigen::MatrixXd s = sym_square_operator(a);
    const double s_scale = std::max(1.0, s.norm());
    const Eigen::ComplexEigenSolver<CMat> es_s(s.cast<std::complex<double>>());
    const double gap_s = min_pairwise_gap(es_s.eigenvalues()) / s_scale;

    // Krylov rows g2, S*(g2), ..., (S*)^N(g2) in pair coordinates, row-normalized.
    PairIndex pairs(n);
    const int np = pairs.size();
    Eigen::MatrixXd krylov(np, np);
    Eigen::MatrixXd q = dq.g2.m;
    for (int row = 0; row < np; ++row) {
      for (int p = 0; p < np; ++p) {
        auto [i, j] = pairs.pair(p);
        krylov(row, p) = q(i, j);
      }
      const double rn = krylov.row(row).norm();
      if (rn > 0) krylov.row(row) /= rn;
      q = a.transpose() * q * a;  // S* on S^2 T
    }
    const double krylov_rcond = rcond_of(krylov);

    rep.cond2.value = std::min({gap_a, gap_s, krylov_rcond});
    rep.cond2.pass = rep.cond2.value >= tol;
  }

  // Condition 3: no isotropic eigencovectors (checked on unit covectors).
  if (have_dq) {
    try {
      const EigenFrame lenient = eigenframe(sigma, dq, 0.0);
      const double g_scale = std::max(1.0, dq.g.m.norm());
      double worst = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        CVec v = lenient.estar.col(i);
        v.normalize();
        const std::complex<double> c =
            (v.transpose() * dq.g.m.cast<std::complex<double>>() * v)(0, 0);
        worst = std::min(worst, std::abs(c) / g_scale);
      }
      rep.cond3.value = worst;
      rep.cond3.pass = worst >= tol;
    } catch (const Error&) {
      rep.cond3.value = 0.0;
      rep.cond3.pass = false;
    }
  }

  // Condition 4: sampled values of the symbol have distinct eigenvalues and do
  // not commute. "Almost all" is read as "every sample".
  {
    std::mt19937_64 rng(seed);
    const int samples = 20;
    double worst_comm = std::numeric_limits<double>::infinity();
    bool all_distinct = true;
    for (int t = 0; t < samples; ++t) {
      const QuadFormDown t1{random_symmetric(n, rng)};
      const QuadFormDown t2{random_symmetric(n, rng)};
      const Mat s1 = value_on(sigma, t1);
      const Mat s2 = value_on(sigma, t2);
      for (const Mat* s : {&s1, &s2}) {
        const Eigen::ComplexEigenSolver<CMat> es(s->cast<std::complex<double>>());
        if (min_pairwise_gap(es.eigenvalues()) < tol * std::max(1.0, s->norm()))
          all_distinct = false;
      }
      const double comm = (s1 * s2 - s2 * s1).norm() /
                          (std::max(1.0, s1.norm()) * std::max(1.0, s2.norm()));
      worst_comm = std::min(worst_comm, comm);
    }
    rep.cond4.value = worst_comm;
    rep.cond4.pass = all_distinct && worst_comm >= tol;
  }

  rep.overall = rep.cond1.pass && rep.cond2.pass && rep.cond3.pass && rep.cond4.pass;
  return rep;
}

int g_action_rank(const SymbolTensor& sigma, double rank_tol) {
  const int m = sigma.m();
  const int n = sigma.n();
  const PairIndex& pairs = sigma.pairs();
  const int np = pairs.size();
  const int cols = m * m * np;
  Eigen::MatrixXd gen(m * m + n * n, cols);

  auto flatten = [&](const std::vector<Mat>& delta, int row) {
    int c = 0;
    for (int p = 0; p < np; ++p)
      for (int u = 0; u < m; ++u)
        for (int v = 0; v < m; ++v) gen(row, c++) = delta[p](u, v);
  };

  int row = 0;
  // gl(E) direction: sigma^{kl} -> [E_uv, sigma^{kl}].
  for (int u = 0; u < m; ++u)
    for (int v = 0; v < m; ++v) {
      Mat e = Mat::Zero(m, m);
      e(u, v) = 1.0;
      std::vector<Mat> delta(np);
      for (int p = 0; p < np; ++p) {
        auto [k, l] = pairs.pair(p);
        delta[p] = e * sigma.comp(k, l) - sigma.comp(k, l) * e;
      }
      flatten(delta, row++);
    }
  // gl(T) direction: sigma^{kl} -> delta_kp sigma^{ql} + delta_lp sigma^{kq}.
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      std::vector<Mat> delta(np);
      for (int pp = 0; pp < np; ++pp) {
        auto [k, l] = pairs.pair(pp);
        Mat d = Mat::Zero(m, m);
        if (k == p) d += sigma.comp(q, l);
        if (l == p) d += sigma.comp(k, q);
        delta[pp] = d;
      }
      flatten(delta, row++);
    }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(gen);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > rank_tol * std::max(smax, 1e-300)) ++rank;
  return rank;
}

}  // namespace opequiv
