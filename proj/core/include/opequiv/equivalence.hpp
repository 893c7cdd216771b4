#pragma once

#include <string>
#include <vector>

#include "opequiv/invariants.hpp"

namespace opequiv {

enum class Verdict { Equivalent, Inequivalent, Inconclusive };

enum class Separation { Equal, Distinct };

// Certificate for GL(E)-equivalence of two matrix families: an invertible X
// with X R_l = R'_l X for all l, or the reason none exists.
struct ConjugacyCertificate {
  Verdict verdict = Verdict::Inconclusive;
  Mat x;                   // valid when verdict == Equivalent
  double residual = 0.0;   // max_l |X R_l - R'_l X| / (|X| max(|R_l|, |R'_l|))
  double min_rel_sv = 0.0; // smallest relative singular value of the intertwiner system
  int nullity = 0;
  std::string detail;
};

// Full verdict for pointwise G-equivalence of two symbols.
struct SymbolEquivalence {
  Verdict verdict = Verdict::Inconclusive;
  ConjugacyCertificate certificate;   // GL(E) part
  Eigen::MatrixXd gl_t;               // GL(T) part (valid when Equivalent)
  double transform_residual = 0.0;    // |(X,B) . sigma1 - sigma2| / |sigma2|
  std::string detail;
};

// Lemma-1 inverse: the unique symbol with <sigma, lambda~_l> = R_l for all l.
SymbolTensor reconstruct_symbol(const RFamily& rs, const DerivedQuadrics& dq,
                                const EigenFrame& frame, double tol = kDefaultTol);

Separation trace_separation(const Fingerprint& f1, const Fingerprint& f2, double rtol);

ConjugacyCertificate simultaneous_conjugacy(const std::vector<Mat>& rs,
                                            const std::vector<Mat>& rs2,
                                            double tol = kDefaultTol);

SymbolEquivalence symbols_equivalent(const SymbolTensor& sigma1, const SymbolTensor& sigma2,
                                     double tol = kDefaultTol, int word_len = 4);

}  // namespace opequiv
