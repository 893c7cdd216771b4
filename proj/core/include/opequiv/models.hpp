#pragma once

#include <string>
#include <vector>

#include "opequiv/connections.hpp"
#include "opequiv/equivalence.hpp"
#include "opequiv/jets.hpp"

namespace opequiv {

struct Box {
  Eigen::VectorXd lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
};

struct GridSpec {
  Box box;
  std::vector<int> shape;  // points per axis, each >= 2

  int total() const {
    int t = 1;
    for (int s : shape) t *= s;
    return t;
  }
  Eigen::VectorXd point(int flat) const;
  std::vector<int> coords_of(int flat) const;
  int flat_of(const std::vector<int>& idx) const;
  double spacing(int axis) const {
    return (box.hi(axis) - box.lo(axis)) / (shape[axis] - 1);
  }
};

// Operator with exact polynomial coefficients over a chart box.
struct ChartOperator {
  OperatorJet poly;
  Box box;
};

// One invariant word sampled over the grid (row-major flat order). Word
// letters 0..N name R_0..R_N; letter N+1 names sigma_0.
struct InvariantField {
  std::vector<int> word;
  std::vector<double> samples;
};

struct CoordinateChoice {
  std::vector<int> selected;  // indices into the field list
  double jacobian_min = 0.0;
};

// The model of an operator over a chart: natural coordinates, the sampled
// image cloud, and the graphs of the remaining basic invariants.
struct Model {
  int m = 0, n = 0;
  int r_count = 0;  // alphabet is {R_0..R_{r_count-1}, sigma_0}
  std::vector<std::vector<int>> coord_words;
  std::vector<std::vector<int>> graph_words;
  GridSpec grid;
  double jacobian_min = 0.0;
  double radius = 0.0;                 // matching radius in scaled coordinates
  Eigen::VectorXd coord_scales;        // per-axis ranges used for scaling
  std::vector<Eigen::VectorXd> coords;  // one point per grid sample, raw values
  std::vector<Eigen::VectorXd> values;  // graph-word values per sample, raw
  double tol = 0.0;
  unsigned long seed = 0;
};

struct ModelVerdict {
  Verdict verdict = Verdict::Inconclusive;
  double worst_deviation = 0.0;
  std::vector<double> per_word;  // deviation per graph word
  std::string detail;
};

// The deterministic list of basic invariant words for bundle rank m over an
// n-dimensional chart: canonical cyclic words of length <= max_len, kept in
// enumeration order while they stay algebraically independent, capped at
// nu_0 = nu + m^2. Memoized; independent of any particular operator.
const std::vector<std::vector<int>>& basic_words(int m, int n, int max_len);

// Evaluate trace words of {R_l(sigma(p)), sigma_0(p)} at every grid point.
// Throws RegularityHole listing the failing points if any point fails.
std::vector<InvariantField> invariant_fields(const ChartOperator& op,
                                             const std::vector<std::vector<int>>& words,
                                             const GridSpec& grid,
                                             double tol = kDefaultTol);

CoordinateChoice select_natural_coordinates(const std::vector<InvariantField>& fields,
                                            const GridSpec& grid, double tol = 1e-6);

Model build_model(const ChartOperator& op, const GridSpec& grid, int word_budget,
                  double tol = kDefaultTol, unsigned long seed = kDefaultSeed);

// Fails with NotAFunction when two samples share coordinates but disagree on a
// graphed invariant; run by build_model and exposed for direct checks.
void verify_graphs_are_functions(const Model& model);

ModelVerdict compare_models(const Model& a, const Model& b, double tol = 1e-6);

// Number of worker threads honoring OPEQUIV_THREADS.
int worker_threads();

}  // namespace opequiv
