#pragma once

#include <optional>
#include <vector>

#include "opequiv/tensor.hpp"

namespace opequiv {

// g_sigma together with the derived quadrics
//   g1 = g_sigma^-1 _| h2,   g2 = g_sigma^-1 _| g_sigma^-1 _| h3.
struct DerivedQuadrics {
  QuadFormUp g;
  QuadFormDown g_inv;
  QuadFormUp g1;
  QuadFormUp g2;
};

// Normalized eigenframe of the operator associated with (g_sigma, g1):
// eigencovectors scaled so g_sigma(e_i*, e_i*) = +-1, dual basis, and the
// recorded norms.
struct EigenFrame {
  CVec lambda;    // eigenvalues, sorted as in eigen_covectors
  CMat estar;     // eigencovectors as columns (basis of T*_C)
  CMat edual;     // dual basis of T_C as columns, edual^T * estar = I
  std::vector<int> norms;  // g_sigma(e_i*, e_i*) after normalization
};

// The operators R_0..R_N, N+1 = n(n+1)/2, encoding the symbol.
struct RFamily {
  std::vector<Mat> r;
  double imag_residual = 0.0;  // largest imaginary magnitude discarded, relative
};

// Trace words over {R_0..R_N} (optionally extended by sigma_0 as the last
// letter), one entry per cyclic equivalence class. `scales` carries the
// product of letter norms per word, the yardstick for relative comparison.
struct Fingerprint {
  int m = 0, n = 0, max_len = 0;
  int alphabet = 0;  // number of letters; sigma_0, when present, is letter alphabet-1
  bool has_extra = false;
  std::vector<std::vector<int>> words;
  std::vector<double> values;
  std::vector<double> scales;
};

struct ConditionCheck {
  bool pass = false;
  double value = 0.0;  // diagnostic scalar
};

// The four genericity conditions on a symbol.
struct RegularityReport {
  ConditionCheck cond1;  // value: rcond of g_sigma
  ConditionCheck cond2;  // value: min normalized spectral gap / Krylov svd
  ConditionCheck cond3;  // value: min |g_sigma(e_i*, e_i*)| over unit eigencovectors
  ConditionCheck cond4;  // value: min normalized commutator norm over samples
  bool overall = false;
};

// h2[(ij),(kl)] = Tr(sigma^ij sigma^kl) and the rank-6 analogue, stored over
// symmetric pair indices.
struct SymmetricMoments {
  int n_pairs = 0;
  Eigen::MatrixXd h2;       // (N+1) x (N+1)
  std::vector<double> h3;   // (N+1)^3, index (p, q, r) -> (p * np + q) * np + r

  double h3_at(int p, int q, int r) const { return h3[(p * n_pairs + q) * n_pairs + r]; }
};

double artin_procesi_tensor(const SymbolTensor& sigma,
                            const std::vector<QuadFormDown>& thetas,
                            const std::vector<int>& order);

SymmetricMoments h2_h3(const SymbolTensor& sigma);

DerivedQuadrics derived_quadrics(const SymbolTensor& sigma, double tol = kDefaultTol);

// Matrix of the operator on T* associated with the pair (g, g1): A = g^-1 g1.
Eigen::MatrixXd g1_operator(const DerivedQuadrics& dq);

// Induced action of A on S^2 T* in the symmetric pair basis.
Eigen::MatrixXd sym_square_operator(const Eigen::MatrixXd& a);

// Action theta -> A theta A^T on a form in S^2 T*.
QuadFormDown sym_square_apply(const Eigen::MatrixXd& a, const QuadFormDown& theta);

// tol == 0 skips gap and norm checks (lenient frame for non-regular symbols).
EigenFrame eigenframe(const SymbolTensor& sigma, const DerivedQuadrics& dq,
                      double tol = kDefaultTol);

// The quadratic forms lambda~_l = sum_ij lambda_i^l lambda_j^l g2(e_i*,e_j*)
// e_i* e_j*, l = 0..N; they satisfy lambda~_{l+1} = S(lambda~_l).
std::vector<CMat> lambda_tilde_forms(const DerivedQuadrics& dq, const EigenFrame& frame);

RFamily r_family(const SymbolTensor& sigma, const DerivedQuadrics& dq,
                 const EigenFrame& frame, double tol = kDefaultTol);

Fingerprint fingerprint(const RFamily& rs, const std::optional<Mat>& extra, int max_len,
                        int m, int n);

RegularityReport regularity_report(const SymbolTensor& sigma, double tol = kDefaultTol,
                                   unsigned long seed = kDefaultSeed);

// Rank of the infinitesimal gl(E) (+) gl(T) action at sigma; equals
// m^2 + n^2 - 1 exactly on regular symbols.
int g_action_rank(const SymbolTensor& sigma, double rank_tol = 1e-8);

// Codimension of a regular G-orbit in End(E) (x) S^2 T.
inline int orbit_codimension(int m, int n) {
  return m * m * (n + 2) * (n - 1) / 2 - n * n + 1;
}
// Same in the extended space End(E) (x) S^2 T (+) End(E).
inline int extended_orbit_codimension(int m, int n) {
  return orbit_codimension(m, n) + m * m;
}

}  // namespace opequiv
