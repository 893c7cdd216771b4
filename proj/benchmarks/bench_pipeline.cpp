#include <benchmark/benchmark.h>

#include <random>

#include "opequiv/connections.hpp"
#include "opequiv/equivalence.hpp"
#include "opequiv/invariants.hpp"
#include "opequiv/models.hpp"

using namespace opequiv;

namespace {

Mat random_mat(int r, int c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

SymbolTensor regular_symbol(int m, int n, unsigned long seed) {
  std::mt19937_64 rng(seed);
  while (true) {
    SymbolTensor sigma(m, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) sigma.set(i, j, random_mat(m, m, rng));
    if (regularity_report(sigma).overall) return sigma;
  }
}

OperatorJet decomposable_operator(int m, int n, unsigned long seed) {
  std::mt19937_64 rng(seed);
  while (true) {
    OperatorJet op(m, n, 3);
    auto fill = [&](Jet& j) {
      for (int t = 0; t < j.terms(); ++t) j.coeff(t) = 0.5 * random_mat(m, m, rng);
    };
    for (auto& j : op.a) fill(j);
    for (auto& j : op.b) fill(j);
    fill(op.c);
    const SymbolTensor sigma = symbol_of(op).value0();
    const QuadFormUp g = trace_quadric(sigma);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g.m);
    if (svd.singularValues()(n - 1) < 0.15 * svd.singularValues()(0)) continue;
    if (regularity_iso(sigma).rcond < 3e-2) continue;
    return op;
  }
}

void bm_fingerprint(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const int n = static_cast<int>(state.range(1));
  const SymbolTensor sigma = regular_symbol(m, n, 42);
  for (auto _ : state) {
    const DerivedQuadrics dq = derived_quadrics(sigma);
    const EigenFrame frame = eigenframe(sigma, dq);
    const RFamily rf = r_family(sigma, dq, frame, 1e-6);
    benchmark::DoNotOptimize(fingerprint(rf, std::nullopt, 4, m, n));
  }
}

void bm_symbols_equivalent(benchmark::State& state) {
  std::mt19937_64 rng(7);
  const SymbolTensor s1 = regular_symbol(2, 2, 42);
  Mat a = random_mat(2, 2, rng);
  while (std::abs(a.determinant()) < 0.1) a = random_mat(2, 2, rng);
  Eigen::MatrixXd b = random_mat(2, 2, rng);
  while (std::abs(b.determinant()) < 0.1) b = random_mat(2, 2, rng);
  const SymbolTensor s2 = symbol_act(s1, a, b);
  for (auto _ : state) benchmark::DoNotOptimize(symbols_equivalent(s1, s2));
}

void bm_decompose(benchmark::State& state) {
  const OperatorJet op = decomposable_operator(2, 2, 42);
  for (auto _ : state) benchmark::DoNotOptimize(decompose(op));
}

void bm_reconstruct(benchmark::State& state) {
  const SymbolTensor sigma = regular_symbol(2, 2, 42);
  const DerivedQuadrics dq = derived_quadrics(sigma);
  const EigenFrame frame = eigenframe(sigma, dq);
  const RFamily rf = r_family(sigma, dq, frame, 1e-6);
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct_symbol(rf, dq, frame));
}

BENCHMARK(bm_fingerprint)->Args({2, 2})->Args({2, 3})->Args({3, 2});
BENCHMARK(bm_symbols_equivalent);
BENCHMARK(bm_decompose);
BENCHMARK(bm_reconstruct);

}  // namespace

BENCHMARK_MAIN();
