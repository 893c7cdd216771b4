#pragma once

#include "opequiv/jets.hpp"

namespace opequiv {

// Connection in the bundle: d_nabla s = ds + Gamma_i s dx^i.
struct BundleConnection {
  std::vector<Jet> gamma;  // n entries, m x m jets
};

// Torsion-free connection in the cotangent bundle: gamma[k] is the n x n
// scalar-entry jet of Christoffel symbols Gamma^k_{ij}, symmetric in (i, j).
struct Christoffels {
  std::vector<Jet> gamma;
};

// alpha in End(pi) (x) Sigma^1.
struct EndoOneForm {
  std::vector<Jet> alpha;  // n entries, m x m jets
};

// Total symbol of a second-order operator relative to the associated
// connection pair: sigma1 vanishes by construction.
struct TotalSymbol {
  SymbolJet sigma2;
  EndoOneForm sigma1;
  Jet sigma0;
};

struct RegularityIso {
  Eigen::MatrixXd matrix;  // (m^2 n) x (m^2 n), alpha -> <sigma, alpha>
  double rcond = 0.0;
};

struct AssociatedConnection {
  BundleConnection nabla;
  Christoffels nabla_c;
};

struct Decomposition {
  TotalSymbol total;
  BundleConnection nabla;
  Christoffels nabla_c;
  double recombination_residual = 0.0;
};

// g_sigma as a jet: entrywise trace of the symbol jet.
Jet trace_quadric_jet(const SymbolJet& sigma);

// Levi-Civita connection of the metric whose *inverse* is the given cometric jet.
Christoffels levi_civita(const Jet& cometric, double tol = kDefaultTol);

// Symmetrized second covariant differential of a section; one m x 1 jet per
// symmetric index pair.
std::vector<Jet> covariant_square(const Jet& s, const BundleConnection& nabla,
                                  const Christoffels& nabla_c);

// Q(sigma)(s) = sum_ij sigma^{ij} (d^2 s)_{ij}; symbol_of(quantize(sigma)) == sigma.
OperatorJet quantize(const SymbolJet& sigma, const BundleConnection& nabla,
                     const Christoffels& nabla_c);

// <sigma, alpha>^j = sum_i (sigma^{ij} + sigma^{ji}) o alpha_i, the shift that
// appears when the bundle connection moves by alpha.
EndoOneForm pairing_sigma_alpha(const SymbolJet& sigma, const EndoOneForm& alpha);
std::vector<Mat> pairing_sigma_alpha(const SymbolTensor& sigma, const std::vector<Mat>& alpha);

// First-order subsymbol of op relative to (nabla, nabla_c).
EndoOneForm sigma1_of(const OperatorJet& op, const BundleConnection& nabla,
                      const Christoffels& nabla_c);

// | sigma1(op, nabla) - sigma1(op, nabla + alpha) - <sigma2, alpha> |; zero on
// exact jets.
double subsymbol_shift_check(const OperatorJet& op, const BundleConnection& nabla,
                             const EndoOneForm& alpha, const Christoffels& nabla_c);

RegularityIso regularity_iso(const SymbolTensor& sigma);

// Theorem-2 connection: the unique nabla with sigma1(op, nabla) = 0, taken with
// the Levi-Civita connection of g_sigma.
AssociatedConnection associated_connection(const OperatorJet& op, double tol = kDefaultTol);

Decomposition decompose(const OperatorJet& op, double tol = kDefaultTol);

// Gauge action on bundle connections: Gamma_i -> A Gamma_i A^-1 - (d_i A) A^-1.
BundleConnection gauge_transform_connection(const BundleConnection& nabla, const Jet& a);

}  // namespace opequiv
