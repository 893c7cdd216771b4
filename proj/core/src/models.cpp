#include "opequiv/models.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace opequiv {

namespace {

constexpr int kWorkOrder = 3;
constexpr unsigned long kBasicWordsSeed = 0xba51cUL;

std::vector<std::vector<int>> canonical_words(int alphabet, int max_len) {
  auto is_canonical = [](const std::vector<int>& w) {
    const size_t len = w.size();
    for (size_t s = 1; s < len; ++s)
      for (size_t t = 0; t < len; ++t) {
        const int a = w[(t + s) % len];
        if (a != w[t]) {
          if (a < w[t]) return false;
          break;
        }
      }
    return true;
  };
  std::vector<std::vector<int>> out;
  std::vector<int> word;
  for (int len = 1; len <= max_len; ++len) {
    word.assign(len, 0);
    while (true) {
      if (is_canonical(word)) out.push_back(word);
      int pos = len - 1;
      while (pos >= 0 && word[pos] == alphabet - 1) word[pos--] = 0;
      if (pos < 0) break;
      ++word[pos];
    }
  }
  return out;
}

double word_trace(const std::vector<Mat>& letters, const std::vector<int>& word) {
  Mat prod = letters[word[0]];
  for (size_t t = 1; t < word.size(); ++t) prod = prod * letters[word[t]];
  return prod.trace();
}

// R_0..R_N and sigma_0 of a (symbol, endomorphism) pair; the letters every
// invariant word is built from.
std::vector<Mat> letter_matrices(const SymbolTensor& sigma, const Mat& sigma0, double tol) {
  const DerivedQuadrics dq = derived_quadrics(sigma, tol);
  const EigenFrame frame = eigenframe(sigma, dq, tol);
  const RFamily rf = r_family(sigma, dq, frame, 1e-6);
  std::vector<Mat> letters = rf.r;
  letters.push_back(sigma0);
  return letters;
}

struct PointEval {
  bool ok = false;
  std::string reason;
  std::vector<Mat> letters;
};

PointEval eval_point(const ChartOperator& op, const Eigen::VectorXd& p, double tol,
                     unsigned long seed) {
  PointEval out;
  try {
    const OperatorJet local = op.poly.shifted(p).truncated(kWorkOrder);
    const SymbolTensor sigma = symbol_of(local).value0();
    const RegularityReport rep = regularity_report(sigma, tol, seed);
    if (!rep.overall) {
      std::ostringstream os;
      os << "symbol not regular (cond1=" << rep.cond1.pass << " cond2=" << rep.cond2.pass
         << " cond3=" << rep.cond3.pass << " cond4=" << rep.cond4.pass << ")";
      out.reason = os.str();
      return out;
    }
    const Decomposition dec = decompose(local, tol);
    out.letters = letter_matrices(sigma, dec.total.sigma0.value0(), tol);
    out.ok = true;
  } catch (const Error& e) {
    out.reason = e.what();
  }
  return out;
}

void parallel_points(int total, const std::function<void(int)>& fn) {
  const int threads = std::min(worker_threads(), total);
  if (threads <= 1) {
    for (int i = 0; i < total; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      int i;
      while ((i = next.fetch_add(1)) < total) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

int worker_threads() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  if (const char* env = std::getenv("OPEQUIV_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) hw = std::min(hw, cap);
  }
  return hw;
}

Eigen::VectorXd GridSpec::point(int flat) const {
  const std::vector<int> idx = coords_of(flat);
  Eigen::VectorXd p(box.dim());
  for (int d = 0; d < box.dim(); ++d) {
    const double t = shape[d] > 1 ? static_cast<double>(idx[d]) / (shape[d] - 1) : 0.0;
    p(d) = box.lo(d) + t * (box.hi(d) - box.lo(d));
  }
  return p;
}

std::vector<int> GridSpec::coords_of(int flat) const {
  std::vector<int> idx(shape.size());
  for (int d = static_cast<int>(shape.size()) - 1; d >= 0; --d) {
    idx[d] = flat % shape[d];
    flat /= shape[d];
  }
  return idx;
}

int GridSpec::flat_of(const std::vector<int>& idx) const {
  int flat = 0;
  for (size_t d = 0; d < shape.size(); ++d) flat = flat * shape[d] + idx[d];
  return flat;
}

std::vector<InvariantField> invariant_fields(const ChartOperator& op,
                                             const std::vector<std::vector<int>>& words,
                                             const GridSpec& grid, double tol) {
  require(grid.box.dim() == op.poly.n, Error::Kind::DimensionMismatch,
          "invariant_fields: grid dimension mismatch");
  const int total = grid.total();
  std::vector<PointEval> evals(total);
  parallel_points(total, [&](int i) { evals[i] = eval_point(op, grid.point(i), tol, kDefaultSeed); });

  std::vector<int> holes;
  for (int i = 0; i < total; ++i)
    if (!evals[i].ok) holes.push_back(i);
  if (!holes.empty()) {
    std::ostringstream os;
    os << "invariant_fields: " << holes.size() << "/" << total
       << " grid points fail regularity; first failures:";
    for (size_t k = 0; k < holes.size() && k < 4; ++k)
      os << " [point " << holes[k] << ": " << evals[holes[k]].reason << "]";
    fail(Error::Kind::RegularityHole, os.str());
  }

  std::vector<InvariantField> fields(words.size());
  for (size_t w = 0; w < words.size(); ++w) {
    fields[w].word = words[w];
    fields[w].samples.resize(total);
  }
  for (int i = 0; i < total; ++i)
    for (size_t w = 0; w < words.size(); ++w)
      fields[w].samples[i] = word_trace(evals[i].letters, words[w]);
  return fields;
}

namespace {

// Finite-difference gradients of a normalized field over the grid.
std::vector<Eigen::VectorXd> field_gradients(const InvariantField& field, const GridSpec& grid) {
  const int n = grid.box.dim();
  const int total = grid.total();
  double scale = 0.0;
  for (double v : field.samples) scale = std::max(scale, std::abs(v));
  scale = std::max(scale, 1e-300);

  std::vector<Eigen::VectorXd> grads(total, Eigen::VectorXd::Zero(n));
  for (int i = 0; i < total; ++i) {
    const std::vector<int> idx = grid.coords_of(i);
    for (int d = 0; d < n; ++d) {
      const double h = grid.spacing(d);
      std::vector<int> up = idx, dn = idx;
      double num, den;
      if (idx[d] + 1 < grid.shape[d] && idx[d] - 1 >= 0) {
        up[d] += 1;
        dn[d] -= 1;
        num = field.samples[grid.flat_of(up)] - field.samples[grid.flat_of(dn)];
        den = 2.0 * h;
      } else if (idx[d] + 1 < grid.shape[d]) {
        up[d] += 1;
        num = field.samples[grid.flat_of(up)] - field.samples[i];
        den = h;
      } else {
        dn[d] -= 1;
        num = field.samples[i] - field.samples[grid.flat_of(dn)];
        den = h;
      }
      grads[i](d) = num / (den * scale);
    }
  }
  return grads;
}

double min_sv_over_grid(const std::vector<const std::vector<Eigen::VectorXd>*>& rows,
                        int total, int n) {
  double worst = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd jac(static_cast<int>(rows.size()), n);
  for (int p = 0; p < total; ++p) {
    for (size_t r = 0; r < rows.size(); ++r) jac.row(static_cast<int>(r)) = (*rows[r])[p];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
    worst = std::min(worst, svd.singularValues()(svd.singularValues().size() - 1));
  }
  return worst;
}

}  // namespace

CoordinateChoice select_natural_coordinates(const std::vector<InvariantField>& fields,
                                            const GridSpec& grid, double tol) {
  const int n = grid.box.dim();
  require(static_cast<int>(fields.size()) >= n, Error::Kind::NoIndependentInvariants,
          "select_natural_coordinates: fewer fields than chart dimensions");
  const int total = grid.total();

  std::vector<std::vector<Eigen::VectorXd>> grads(fields.size());
  for (size_t f = 0; f < fields.size(); ++f) grads[f] = field_gradients(fields[f], grid);

  CoordinateChoice choice;
  std::vector<bool> used(fields.size(), false);
  for (int round = 0; round < n; ++round) {
    std::vector<double> scores(fields.size(), -1.0);
    for (size_t f = 0; f < fields.size(); ++f) {
      if (used[f]) continue;
      std::vector<const std::vector<Eigen::VectorXd>*> rows;
      for (int s : choice.selected) rows.push_back(&grads[s]);
      rows.push_back(&grads[f]);
      scores[f] = min_sv_over_grid(rows, total, n);
    }
    double best = -1.0;
    for (double s : scores) best = std::max(best, s);
    int pick = -1;
    for (size_t f = 0; f < fields.size(); ++f)
      if (!used[f] && scores[f] >= best * (1.0 - 1e-6)) {
        pick = static_cast<int>(f);
        break;
      }
    choice.selected.push_back(pick);
    used[pick] = true;
    choice.jacobian_min = best;
  }

  if (!(choice.jacobian_min >= tol)) {
    std::ostringstream os;
    os << "select_natural_coordinates: no n-subset of invariants has independent "
          "differentials on the grid (best jacobian_min = "
       << choice.jacobian_min << ")";
    fail(Error::Kind::NoIndependentInvariants, os.str());
  }
  return choice;
}

namespace {

struct ExtendedPoint {
  SymbolTensor sigma;
  Mat sigma0;
  ExtendedPoint(int m, int n) : sigma(m, n), sigma0(Mat::Zero(m, m)) {}
};

int param_count(int m, int n) { return (n * (n + 1) / 2 + 1) * m * m; }

double get_param(const ExtendedPoint& x, int k) {
  const int m = x.sigma.m();
  const PairIndex& pairs = x.sigma.pairs();
  const int per = m * m;
  const int block = k / per;
  const int off = k % per;
  if (block < pairs.size()) {
    auto [i, j] = pairs.pair(block);
    return x.sigma.comp(i, j)(off / m, off % m);
  }
  return x.sigma0(off / m, off % m);
}

void set_param(ExtendedPoint& x, int k, double v) {
  const int m = x.sigma.m();
  const PairIndex& pairs = x.sigma.pairs();
  const int per = m * m;
  const int block = k / per;
  const int off = k % per;
  if (block < pairs.size()) {
    auto [i, j] = pairs.pair(block);
    Mat c = x.sigma.comp(i, j);
    c(off / m, off % m) = v;
    x.sigma.set(i, j, c);
  } else {
    x.sigma0(off / m, off % m) = v;
  }
}

std::vector<double> eval_all_words(const ExtendedPoint& x,
                                   const std::vector<std::vector<int>>& words) {
  const std::vector<Mat> letters = letter_matrices(x.sigma, x.sigma0, 1e-12);
  std::vector<double> out(words.size());
  for (size_t w = 0; w < words.size(); ++w) out[w] = word_trace(letters, words[w]);
  return out;
}

}  // namespace

const std::vector<std::vector<int>>& basic_words(int m, int n, int max_len) {
  static std::map<std::tuple<int, int, int>, std::vector<std::vector<int>>> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  const auto key = std::make_tuple(m, n, max_len);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  const int np = n * (n + 1) / 2;
  const int alphabet = np + 1;
  const int nu0 = extended_orbit_codimension(m, n);
  const std::vector<std::vector<int>> candidates = canonical_words(alphabet, max_len);

  // Numerical independence test: gradients of the word values over the
  // extended symbol space at generic base points.
  std::mt19937_64 rng(kBasicWordsSeed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int params = param_count(m, n);
  const int bases = 2;
  const double h = 1e-5;

  std::vector<ExtendedPoint> base_points;
  while (static_cast<int>(base_points.size()) < bases) {
    ExtendedPoint x(m, n);
    for (int k = 0; k < params; ++k) set_param(x, k, u(rng));
    const RegularityReport rep = regularity_report(x.sigma, 1e-3);
    if (rep.overall) base_points.push_back(x);
  }

  Eigen::MatrixXd grad(static_cast<int>(candidates.size()), bases * params);
  for (int bp = 0; bp < bases; ++bp)
    for (int k = 0; k < params; ++k) {
      ExtendedPoint up = base_points[bp];
      ExtendedPoint dn = base_points[bp];
      set_param(up, k, get_param(up, k) + h);
      set_param(dn, k, get_param(dn, k) - h);
      const std::vector<double> vu = eval_all_words(up, candidates);
      const std::vector<double> vd = eval_all_words(dn, candidates);
      for (size_t w = 0; w < candidates.size(); ++w)
        grad(static_cast<int>(w), bp * params + k) = (vu[w] - vd[w]) / (2.0 * h);
    }
  for (int w = 0; w < grad.rows(); ++w) {
    const double s = grad.row(w).norm();
    if (s > 0) grad.row(w) /= s;
  }

  std::vector<std::vector<int>> accepted;
  std::vector<int> accepted_rows;
  for (size_t w = 0; w < candidates.size() && static_cast<int>(accepted.size()) < nu0; ++w) {
    Eigen::MatrixXd stack(static_cast<int>(accepted_rows.size()) + 1, bases * params);
    for (size_t r = 0; r < accepted_rows.size(); ++r)
      stack.row(static_cast<int>(r)) = grad.row(accepted_rows[r]);
    stack.row(stack.rows() - 1) = grad.row(static_cast<int>(w));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(stack);
    if (svd.singularValues()(svd.singularValues().size() - 1) > 1e-6) {
      accepted.push_back(candidates[w]);
      accepted_rows.push_back(static_cast<int>(w));
    }
  }
  return cache.emplace(key, std::move(accepted)).first->second;
}

namespace {

double median_nn_distance(const std::vector<Eigen::VectorXd>& cloud) {
  std::vector<double> nn;
  nn.reserve(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < cloud.size(); ++j)
      if (i != j) best = std::min(best, (cloud[i] - cloud[j]).norm());
    nn.push_back(best);
  }
  std::sort(nn.begin(), nn.end());
  return nn.empty() ? 0.0 : nn[nn.size() / 2];
}

}  // namespace

Model build_model(const ChartOperator& op, const GridSpec& grid, int word_budget,
                  double tol, unsigned long seed) {
  const int m = op.poly.m;
  const int n = op.poly.n;
  const std::vector<std::vector<int>>& words = basic_words(m, n, word_budget);
  require(static_cast<int>(words.size()) >= n, Error::Kind::NoIndependentInvariants,
          "build_model: not enough independent basic invariants");

  const std::vector<InvariantField> fields = invariant_fields(op, words, grid, tol);
  const CoordinateChoice choice =
      select_natural_coordinates(fields, grid, std::max(tol, 1e-6));

  Model model;
  model.m = m;
  model.n = n;
  model.r_count = n * (n + 1) / 2;
  model.grid = grid;
  model.jacobian_min = choice.jacobian_min;
  model.tol = tol;
  model.seed = seed;

  std::vector<int> graph_idx;
  for (size_t f = 0; f < fields.size(); ++f)
    if (std::find(choice.selected.begin(), choice.selected.end(), static_cast<int>(f)) ==
        choice.selected.end())
      graph_idx.push_back(static_cast<int>(f));
  for (int s : choice.selected) model.coord_words.push_back(words[s]);
  for (int gidx : graph_idx) model.graph_words.push_back(words[gidx]);

  const int total = grid.total();
  model.coords.resize(total, Eigen::VectorXd(n));
  model.values.resize(total, Eigen::VectorXd(static_cast<int>(graph_idx.size())));
  for (int p = 0; p < total; ++p) {
    for (int d = 0; d < n; ++d) model.coords[p](d) = fields[choice.selected[d]].samples[p];
    for (size_t g = 0; g < graph_idx.size(); ++g)
      model.values[p](static_cast<int>(g)) = fields[graph_idx[g]].samples[p];
  }

  model.coord_scales = Eigen::VectorXd(n);
  for (int d = 0; d < n; ++d) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int p = 0; p < total; ++p) {
      lo = std::min(lo, model.coords[p](d));
      hi = std::max(hi, model.coords[p](d));
    }
    model.coord_scales(d) = std::max(hi - lo, 1e-300);
  }

  std::vector<Eigen::VectorXd> scaled(total);
  for (int p = 0; p < total; ++p)
    scaled[p] = model.coords[p].cwiseQuotient(model.coord_scales);
  model.radius = 2.5 * median_nn_distance(scaled);

  verify_graphs_are_functions(model);
  return model;
}

void verify_graphs_are_functions(const Model& model) {
  const int total = static_cast<int>(model.coords.size());
  const int g = static_cast<int>(model.graph_words.size());
  std::vector<Eigen::VectorXd> scaled(total);
  for (int p = 0; p < total; ++p)
    scaled[p] = model.coords[p].cwiseQuotient(model.coord_scales);
  std::vector<double> value_scale(g, 1e-300);
  for (int p = 0; p < total; ++p)
    for (int k = 0; k < g; ++k)
      value_scale[k] = std::max(value_scale[k], std::abs(model.values[p](k)));
  const double dup_radius = 1e-9 * std::sqrt(static_cast<double>(model.n));
  for (int p = 0; p < total; ++p)
    for (int q = p + 1; q < total; ++q) {
      if ((scaled[p] - scaled[q]).norm() > dup_radius) continue;
      for (int k = 0; k < g; ++k) {
        if (std::abs(model.values[p](k) - model.values[q](k)) > 1e-6 * value_scale[k]) {
          std::ostringstream os;
          os << "model graphs: samples " << p << " and " << q
             << " share coordinates but disagree on invariant " << k;
          fail(Error::Kind::NotAFunction, os.str());
        }
      }
    }
}

ModelVerdict compare_models(const Model& a, const Model& b, double tol) {
  require(a.m == b.m && a.n == b.n && a.r_count == b.r_count, Error::Kind::IncompatibleWords,
          "compare_models: bundle or chart dimensions differ");
  require(a.coord_words == b.coord_words && a.graph_words == b.graph_words,
          Error::Kind::IncompatibleWords,
          "compare_models: models are built from different basic invariants");

  ModelVerdict out;
  const int n = a.n;
  const int g = static_cast<int>(a.graph_words.size());
  Eigen::VectorXd scale(n);
  for (int d = 0; d < n; ++d) scale(d) = std::max(a.coord_scales(d), b.coord_scales(d));

  auto scaled_cloud = [&](const Model& mo) {
    std::vector<Eigen::VectorXd> cloud(mo.coords.size());
    for (size_t p = 0; p < mo.coords.size(); ++p) cloud[p] = mo.coords[p].cwiseQuotient(scale);
    return cloud;
  };
  const std::vector<Eigen::VectorXd> ca = scaled_cloud(a);
  const std::vector<Eigen::VectorXd> cb = scaled_cloud(b);
  const double radius = 2.5 * std::max(median_nn_distance(ca), median_nn_distance(cb));

  std::vector<double> value_scale(g, 1e-300);
  for (const Model* mo : {&a, &b})
    for (const auto& v : mo->values)
      for (int k = 0; k < g; ++k) value_scale[k] = std::max(value_scale[k], std::abs(v(k)));

  out.per_word.assign(g, 0.0);
  int matched = 0, unmatched = 0;
  double worst_unmatched = 0.0;

  auto sweep = [&](const std::vector<Eigen::VectorXd>& from_cloud,
                   const std::vector<Eigen::VectorXd>& from_values,
                   const std::vector<Eigen::VectorXd>& to_cloud,
                   const std::vector<Eigen::VectorXd>& to_values) {
    for (size_t p = 0; p < from_cloud.size(); ++p) {
      double wsum = 0.0;
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(g);
      double nearest = std::numeric_limits<double>::infinity();
      for (size_t q = 0; q < to_cloud.size(); ++q) {
        const double d = (from_cloud[p] - to_cloud[q]).norm();
        nearest = std::min(nearest, d);
        if (d <= radius) {
          const double w = 1.0 / (d * d + 1e-24);
          wsum += w;
          acc += w * to_values[q];
        }
      }
      if (wsum <= 0.0) {
        ++unmatched;
        worst_unmatched = std::max(worst_unmatched, nearest);
        continue;
      }
      ++matched;
      acc /= wsum;
      for (int k = 0; k < g; ++k) {
        const double dev = std::abs(from_values[p](k) - acc(k)) / value_scale[k];
        out.per_word[k] = std::max(out.per_word[k], dev);
      }
    }
  };
  sweep(ca, a.values, cb, b.values);
  sweep(cb, b.values, ca, a.values);

  double worst_graph = 0.0;
  for (double d : out.per_word) worst_graph = std::max(worst_graph, d);

  if (matched == 0) {
    // No point of either image lies near the other. Disjoint bounding boxes
    // mean the images genuinely differ; interleaved-but-sparse sampling is
    // undecidable at this resolution.
    bool disjoint = false;
    for (int d = 0; d < n; ++d) {
      double alo = std::numeric_limits<double>::infinity(), ahi = -alo;
      double blo = alo, bhi = -alo;
      for (const auto& p : ca) {
        alo = std::min(alo, p(d));
        ahi = std::max(ahi, p(d));
      }
      for (const auto& p : cb) {
        blo = std::min(blo, p(d));
        bhi = std::max(bhi, p(d));
      }
      if (ahi < blo - radius || bhi < alo - radius) disjoint = true;
    }
    out.worst_deviation = worst_unmatched;
    if (disjoint) {
      out.verdict = Verdict::Inequivalent;
      out.detail = "coordinate images are disjoint";
    } else {
      out.verdict = Verdict::Inconclusive;
      out.detail = "coordinate images overlap but share no nearby samples";
    }
    return out;
  }

  if (unmatched > 0) {
    out.verdict = Verdict::Inequivalent;
    out.worst_deviation = std::max(worst_graph, worst_unmatched);
    std::ostringstream os;
    os << unmatched << " samples have no counterpart within the matching radius";
    out.detail = os.str();
    return out;
  }

  out.worst_deviation = worst_graph;
  if (worst_graph <= tol) {
    out.verdict = Verdict::Equivalent;
  } else {
    out.verdict = Verdict::Inequivalent;
    out.detail = "invariant graphs deviate beyond tolerance";
  }
  return out;
}

}  // namespace opequiv
