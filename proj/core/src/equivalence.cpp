#include "opequiv/equivalence.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace opequiv {

SymbolTensor reconstruct_symbol(const RFamily& rs, const DerivedQuadrics& dq,
                                const EigenFrame& frame, double tol) {
  const int n = static_cast<int>(frame.lambda.size());
  const int m = static_cast<int>(rs.r.empty() ? 0 : rs.r[0].rows());
  PairIndex pairs(n);
  const int np = pairs.size();
  require(static_cast<int>(rs.r.size()) == np, Error::Kind::DimensionMismatch,
          "reconstruct_symbol: wrong family length");

  const std::vector<CMat> forms = lambda_tilde_forms(dq, frame);

  // <sigma, lambda~_l> = sum over pairs with multiplicity; solve for the pair
  // components of sigma, one right-hand side per End(E) entry.
  CMat system(np, np);
  for (int l = 0; l < np; ++l)
    for (int p = 0; p < np; ++p) {
      auto [i, j] = pairs.pair(p);
      system(l, p) = pairs.weight(p) * forms[l](i, j);
    }

  CMat rhs(np, m * m);
  for (int l = 0; l < np; ++l)
    for (int u = 0; u < m; ++u)
      for (int v = 0; v < m; ++v) rhs(l, u * m + v) = rs.r[l](u, v);

  // Row equilibration keeps the lambda-power growth out of the conditioning.
  for (int l = 0; l < np; ++l) {
    const double s = system.row(l).norm();
    if (s > 0) {
      system.row(l) /= s;
      rhs.row(l) /= s;
    }
  }

  Eigen::JacobiSVD<CMat> svd(system, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(np - 1);
  if (!(smax > 0.0) || smin / smax < tol) {
    std::ostringstream os;
    os << "reconstruct_symbol: lambda-tilde forms do not span S^2 T* (rcond="
       << (smax > 0 ? smin / smax : 0.0) << ")";
    fail(Error::Kind::SingularBasis, os.str());
  }
  const CMat sol = svd.solve(rhs);

  double imag_worst = 0.0;
  SymbolTensor out(m, n);
  for (int p = 0; p < np; ++p) {
    auto [i, j] = pairs.pair(p);
    Mat comp(m, m);
    for (int u = 0; u < m; ++u)
      for (int v = 0; v < m; ++v) {
        const std::complex<double> z = sol(p, u * m + v);
        comp(u, v) = z.real();
        imag_worst = std::max(imag_worst, std::abs(z.imag()));
      }
    out.set(i, j, comp);
  }
  const double scale = std::max(1.0, out.norm());
  require(imag_worst <= 1e-6 * scale, Error::Kind::RealityViolation,
          "reconstruct_symbol: solution has a non-negligible imaginary part");
  return out;
}

Separation trace_separation(const Fingerprint& f1, const Fingerprint& f2, double rtol) {
  require(f1.m == f2.m && f1.n == f2.n && f1.max_len == f2.max_len &&
              f1.alphabet == f2.alphabet && f1.words == f2.words,
          Error::Kind::DimensionMismatch, "trace_separation: fingerprint shape mismatch");
  for (size_t k = 0; k < f1.values.size(); ++k) {
    const double a = f1.values[k];
    const double b = f2.values[k];
    const double yard = std::max({std::abs(a), std::abs(b), f1.scales[k], f2.scales[k]});
    if (std::abs(a - b) > rtol * std::max(yard, 1e-300)) return Separation::Distinct;
  }
  return Separation::Equal;
}

ConjugacyCertificate simultaneous_conjugacy(const std::vector<Mat>& rs,
                                            const std::vector<Mat>& rs2,
                                            double tol) {
  require(rs.size() == rs2.size() && !rs.empty(), Error::Kind::DimensionMismatch,
          "simultaneous_conjugacy: family length mismatch");
  const int m = static_cast<int>(rs[0].rows());
  for (size_t l = 0; l < rs.size(); ++l)
    require(rs[l].rows() == m && rs[l].cols() == m && rs2[l].rows() == m && rs2[l].cols() == m,
            Error::Kind::DimensionMismatch, "simultaneous_conjugacy: matrix shape mismatch");

  const int mm = m * m;
  const int count = static_cast<int>(rs.size());
  Eigen::MatrixXd stacked(count * mm, mm);
  std::vector<double> block_scale(count);
  for (int l = 0; l < count; ++l) {
    block_scale[l] = std::max({rs[l].norm(), rs2[l].norm(), 1e-300});
    // vec(X R) = (R^T (x) I) vec(X), vec(R' X) = (I (x) R') vec(X), column-major.
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(mm, mm);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) {
          block(j * m + i, k * m + i) += rs[l](k, j);    // (R^T (x) I)
          block(j * m + i, j * m + k) -= rs2[l](i, k);   // -(I (x) R')
        }
    stacked.block(l * mm, 0, mm, mm) = block / block_scale[l];
  }

  ConjugacyCertificate cert;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  cert.min_rel_sv = smax > 0 ? sv(mm - 1) / smax : 0.0;

  int nullity = 0;
  if (smax <= 1e-300) {
    nullity = mm;  // zero families: everything intertwines
  } else {
    for (int i = 0; i < mm; ++i)
      if (sv(i) <= tol * smax) ++nullity;
  }
  cert.nullity = nullity;

  if (nullity == 0) {
    if (cert.min_rel_sv <= 100.0 * tol) {
      cert.verdict = Verdict::Inconclusive;
      cert.detail = "intertwiner system is borderline rank-deficient";
    } else {
      cert.verdict = Verdict::Inequivalent;
      cert.detail = "no nonzero intertwiner";
    }
    return cert;
  }

  Eigen::MatrixXd basis = svd.matrixV().rightCols(nullity);
  std::mt19937_64 rng(kDefaultSeed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  bool found_invertible = false;
  for (int draw = 0; draw < 16; ++draw) {
    Eigen::VectorXd coeff(nullity);
    for (int k = 0; k < nullity; ++k) coeff[k] = u(rng);
    Eigen::VectorXd xv = basis * coeff;
    if (xv.norm() <= 1e-300) continue;
    Mat x = Eigen::Map<Mat>(xv.data(), m, m);
    x *= std::sqrt(static_cast<double>(m)) / x.norm();
    if (std::abs(x.determinant()) < tol) continue;
    found_invertible = true;

    double worst = 0.0;
    for (int l = 0; l < count; ++l)
      worst = std::max(worst, (x * rs[l] - rs2[l] * x).norm() / (x.norm() * block_scale[l]));
    if (worst <= std::max(tol, 1e-8)) {
      cert.verdict = Verdict::Equivalent;
      cert.x = x;
      cert.residual = worst;
      return cert;
    }
    cert.residual = worst;
  }

  if (!found_invertible) {
    cert.verdict = Verdict::Inequivalent;
    cert.detail = "intertwiner space contains no invertible element (sampled det == 0)";
  } else {
    cert.verdict = Verdict::Inconclusive;
    cert.detail = "invertible intertwiner found but residual check failed";
  }
  return cert;
}

namespace {

// Sign/permutation candidates for matching two normalized eigenframes. Signs
// are shared inside a conjugate pair so the T-side map stays real.
struct FrameGroups {
  std::vector<std::vector<int>> groups;  // singleton or conjugate pair
};

FrameGroups frame_groups(const EigenFrame& f) {
  FrameGroups out;
  int k = 0;
  const int n = static_cast<int>(f.lambda.size());
  while (k < n) {
    if (f.lambda(k).imag() > 0.0 && k + 1 < n &&
        std::abs(f.lambda(k + 1) - std::conj(f.lambda(k))) <=
            1e-10 * std::max(1.0, std::abs(f.lambda(k)))) {
      out.groups.push_back({k, k + 1});
      k += 2;
    } else {
      out.groups.push_back({k});
      ++k;
    }
  }
  return out;
}

}  // namespace

SymbolEquivalence symbols_equivalent(const SymbolTensor& sigma1, const SymbolTensor& sigma2,
                                     double tol, int word_len) {
  require(sigma1.same_shape(sigma2), Error::Kind::DimensionMismatch,
          "symbols_equivalent: shape mismatch");
  SymbolEquivalence out;

  for (const SymbolTensor* s : {&sigma1, &sigma2}) {
    const RegularityReport rep = regularity_report(*s, tol);
    if (!rep.overall) {
      std::ostringstream os;
      os << "symbols_equivalent: symbol is not regular (";
      if (!rep.cond1.pass) os << "condition 1 ";
      if (!rep.cond2.pass) os << "condition 2 ";
      if (!rep.cond3.pass) os << "condition 3 ";
      if (!rep.cond4.pass) os << "condition 4 ";
      os << "failed)";
      fail(Error::Kind::NotRegular, os.str());
    }
  }

  const double rtol_sep = std::max(1e-7, 100.0 * tol);
  const int n = sigma1.n();

  const DerivedQuadrics dq1 = derived_quadrics(sigma1, tol);
  const DerivedQuadrics dq2 = derived_quadrics(sigma2, tol);
  const EigenFrame f1 = eigenframe(sigma1, dq1, tol);
  const EigenFrame f2 = eigenframe(sigma2, dq2, tol);

  // The spectrum of the associated operator is itself an invariant.
  double lambda_scale = 1.0;
  for (int i = 0; i < n; ++i)
    lambda_scale = std::max(lambda_scale, std::abs(f1.lambda(i)));
  bool spectra_match = true;
  for (int i = 0; i < n; ++i)
    if (std::abs(f1.lambda(i) - f2.lambda(i)) > rtol_sep * lambda_scale) spectra_match = false;
  if (!spectra_match) {
    out.verdict = Verdict::Inequivalent;
    out.detail = "spectra of the associated operators differ";
    return out;
  }

  const RFamily r1 = r_family(sigma1, dq1, f1, tol > 0 ? 1e-6 : 0.0);
  const RFamily r2 = r_family(sigma2, dq2, f2, tol > 0 ? 1e-6 : 0.0);

  const Fingerprint fp1 = fingerprint(r1, std::nullopt, word_len, sigma1.m(), n);
  const Fingerprint fp2 = fingerprint(r2, std::nullopt, word_len, sigma2.m(), n);
  if (trace_separation(fp1, fp2, rtol_sep) == Separation::Distinct) {
    out.verdict = Verdict::Inequivalent;
    out.detail = "Artin-Procesi fingerprints differ";
    return out;
  }

  out.certificate = simultaneous_conjugacy(r1.r, r2.r, tol);
  if (out.certificate.verdict != Verdict::Equivalent) {
    out.verdict = out.certificate.verdict;
    out.detail = out.certificate.detail;
    return out;
  }

  // Constructive check: search the finite frame-matching freedom on the T side
  // and verify that (X, B) actually maps sigma1 to sigma2.
  const FrameGroups groups = frame_groups(f1);
  const int g = static_cast<int>(groups.groups.size());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  const double sigma_scale = std::max(sigma2.norm(), 1e-300);
  double best_residual = std::numeric_limits<double>::infinity();

  std::vector<int> identity_perm = perm;
  std::vector<std::vector<int>> perms;
  do {
    bool ok = true;
    for (int i = 0; i < n && ok; ++i)
      if (std::abs(f1.lambda(i) - f2.lambda(perm[i])) > rtol_sep * lambda_scale) ok = false;
    if (ok) perms.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));

  for (const auto& p : perms) {
    for (int mask = 0; mask < (1 << g); ++mask) {
      CMat v2s(n, n);
      for (int gi = 0; gi < g; ++gi) {
        const double s = (mask >> gi) & 1 ? -1.0 : 1.0;
        for (int idx : groups.groups[gi]) v2s.col(idx) = s * f2.estar.col(p[idx]);
      }
      // B acts on covectors by B^-T = V2' V1^-1.
      const CMat b_cov = v2s * f1.estar.inverse();
      const CMat b_c = b_cov.inverse().transpose();
      if (b_c.imag().norm() > 1e-6 * std::max(1.0, b_c.real().norm())) continue;
      const Eigen::MatrixXd b = b_c.real();
      const SymbolTensor moved = symbol_act(sigma1, out.certificate.x, b);
      double diff = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          const double w = (i == j) ? 1.0 : 2.0;
          diff += w * (moved.comp(i, j) - sigma2.comp(i, j)).squaredNorm();
        }
      const double residual = std::sqrt(diff) / sigma_scale;
      if (residual < best_residual) {
        best_residual = residual;
        out.gl_t = b;
      }
    }
  }

  out.transform_residual = best_residual;
  if (best_residual <= std::max(1e-6, 100.0 * tol)) {
    out.verdict = Verdict::Equivalent;
  } else {
    out.verdict = Verdict::Inconclusive;
    out.detail = "conjugacy certificate found but no frame matching maps sigma1 to sigma2";
  }
  return out;
}

}  // namespace opequiv
