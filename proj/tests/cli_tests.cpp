// Exit-code and document contract checks for the command-line tool.
// argv[1] = path to the binary.

#include <cstdlib>
#include <iostream>
#include <string>

#include <json.hpp>

#include "opequiv/connections.hpp"
#include "opequiv/equivalence.hpp"
#include "opequiv/io.hpp"
#include "opequiv/models.hpp"
#include "support/fixtures.hpp"

using namespace opequiv;
using namespace fixtures;
using json = nlohmann::json;

namespace {

int g_failures = 0;

#define REQUIRE_CLI(cond, msg)                                               \
  do {                                                                       \
    if (!(cond)) {                                                           \
      std::cerr << "[FAIL] " << __FILE__ << ":" << __LINE__ << " " << (msg) \
                << std::endl;                                                \
      ++g_failures;                                                          \
    }                                                                        \
  } while (0)

std::string g_cli;
std::string g_dir;

int run(const std::string& args, const std::string& out_name = "out.json") {
  const std::string cmd =
      g_cli + " " + args + " > " + g_dir + "/" + out_name + " 2> " + g_dir + "/err.txt";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

json out_json(const std::string& out_name = "out.json") {
  return json::parse(read_file(g_dir + "/" + out_name));
}

void test_invariants_command() {
  std::mt19937_64 rng(301);
  const SymbolTensor sigma = random_regular_symbol(2, 2, rng);
  const std::string sym = g_dir + "/sym.json";
  save_symbol(sym, sigma, "cli-fixture");

  REQUIRE_CLI(run("invariants " + sym) == 0, "regular symbol should exit 0");
  json rep = out_json();
  REQUIRE_CLI(rep["regularity"]["overall"] == true, "report should say regular");
  // Single-letter words come first: n(n+1)/2 of them.
  const auto& words = rep["fingerprint"]["words"];
  REQUIRE_CLI(words.size() >= 3, "fingerprint missing words");
  for (int l = 0; l < 3; ++l)
    REQUIRE_CLI(words[l].size() == 1 && words[l][0] == l, "single-letter words lead");

  // Scalar symbol: regularity failure, exit 2, conditions 2 and 4 flagged.
  Eigen::Matrix2d g;
  g << 2, 1, 1, 3;
  SymbolTensor scalar(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = i; j < 2; ++j) scalar.set(i, j, g(i, j) * Mat::Identity(2, 2));
  const std::string scal = g_dir + "/scalar.json";
  save_symbol(scal, scalar);
  REQUIRE_CLI(run("invariants " + scal) == 2, "scalar symbol should exit 2");
  rep = out_json();
  REQUIRE_CLI(rep["regularity"]["cond2"]["pass"] == false, "cond2 should fail");
  REQUIRE_CLI(rep["regularity"]["cond4"]["pass"] == false, "cond4 should fail");

  // Malformed input: exit 1.
  write_file(g_dir + "/bad.json", "{ not json");
  REQUIRE_CLI(run("invariants " + g_dir + "/bad.json") == 1, "malformed JSON should exit 1");

  // CSV mode emits condition lines.
  REQUIRE_CLI(run("invariants " + sym + " --csv", "out.csv") == 0, "csv mode should exit 0");
  REQUIRE_CLI(read_file(g_dir + "/out.csv").find("cond1,") != std::string::npos,
              "csv should list conditions");
}

void test_equiv_command() {
  std::mt19937_64 rng(302);
  const SymbolTensor s1 = random_regular_symbol(2, 2, rng);
  const SymbolTensor moved = symbol_act(s1, random_invertible(2, rng), random_invertible(2, rng));
  const SymbolTensor other = random_regular_symbol(2, 2, rng);
  save_symbol(g_dir + "/a.json", s1);
  save_symbol(g_dir + "/b.json", moved);
  save_symbol(g_dir + "/c.json", other);

  REQUIRE_CLI(run("equiv-symbols " + g_dir + "/a.json " + g_dir + "/b.json") == 0,
              "gauge copy should exit 0");
  json rep = out_json();
  REQUIRE_CLI(rep["verdict"] == "equivalent", "verdict should be equivalent");
  REQUIRE_CLI(rep["certificate"].contains("gl_e"), "certificate should carry the GL(E) part");

  REQUIRE_CLI(run("equiv-symbols " + g_dir + "/a.json " + g_dir + "/c.json") == 3,
              "independent symbol should exit 3");

  // Near-degenerate pair: fingerprints agree at the separation tolerance but
  // the intertwiner system is borderline, so the verdict is inconclusive.
  // The perturbation is searched once over a small ladder and frozen by seed.
  bool made_inconclusive = false;
  for (double eps : {1e-10, 3e-10, 3e-11, 1e-9, 1e-8}) {
    SymbolTensor bumped = moved;
    std::mt19937_64 rng2(303);
    for (int i = 0; i < 2; ++i)
      for (int j = i; j < 2; ++j)
        bumped.set(i, j,
                   bumped.comp(i, j) + eps * moved.norm() * random_mat(2, 2, rng2));
    try {
      if (symbols_equivalent(s1, bumped).verdict != Verdict::Inconclusive) continue;
    } catch (const Error&) {
      continue;
    }
    save_symbol(g_dir + "/near.json", bumped);
    REQUIRE_CLI(run("equiv-symbols " + g_dir + "/a.json " + g_dir + "/near.json") == 4,
                "borderline pair should exit 4");
    made_inconclusive = true;
    break;
  }
  REQUIRE_CLI(made_inconclusive, "no borderline fixture found for the inconclusive path");

  // Shape mismatch is an input error.
  std::mt19937_64 rng3(304);
  save_symbol(g_dir + "/wide.json", random_regular_symbol(2, 3, rng3));
  REQUIRE_CLI(run("equiv-symbols " + g_dir + "/a.json " + g_dir + "/wide.json") == 1,
              "shape mismatch should exit 1");
}

void test_decompose_command() {
  std::mt19937_64 rng(305);
  // Quantized fixture: subsymbol identically zero, residual at rounding level.
  const OperatorJet seed_op = random_decomposable_operator(2, 2, 3, rng);
  const SymbolJet sigma = symbol_of(seed_op);
  const Christoffels ch = levi_civita(trace_quadric_jet(sigma));
  const BundleConnection target = random_connection(2, 2, 3, rng);
  ChartOperator fixture;
  fixture.box.lo = Eigen::VectorXd::Constant(2, -1.0);
  fixture.box.hi = Eigen::VectorXd::Constant(2, 1.0);
  fixture.poly = quantize(sigma, target, ch);
  save_operator(g_dir + "/op.json", fixture);

  REQUIRE_CLI(run("decompose " + g_dir + "/op.json") == 0, "decompose should exit 0");
  json rep = out_json();
  REQUIRE_CLI(rep["recombination_residual"].get<double>() <= 1e-10, "residual above 1e-10");
  REQUIRE_CLI(rep["subsymbol"].is_array(), "report should dump the subsymbol jet");
  double s0_norm = 0.0;
  for (const auto& term : rep["subsymbol"])
    for (const auto& row : term["matrix"])
      for (const auto& v : row) s0_norm = std::max(s0_norm, std::abs(v.get<double>()));
  REQUIRE_CLI(s0_norm <= 1e-9, "subsymbol of a quantized operator should vanish");

  // Adding a constant endomorphism shows up as the subsymbol.
  const Mat c0 = random_mat(2, 2, rng);
  ChartOperator shifted = fixture;
  shifted.poly.c += Jet::constant(2, shifted.poly.c.order(), c0);
  save_operator(g_dir + "/op_shift.json", shifted);
  REQUIRE_CLI(run("decompose " + g_dir + "/op_shift.json") == 0, "decompose should exit 0");
  rep = out_json();
  Mat got = Mat::Zero(2, 2);
  for (const auto& term : rep["subsymbol"]) {
    bool constant = true;
    for (const auto& e : term["multi_index"])
      if (e.get<int>() != 0) constant = false;
    if (!constant) continue;
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) got(r, c) = term["matrix"][r][c].get<double>();
  }
  REQUIRE_CLI((got - c0).norm() <= 1e-9, "constant subsymbol should equal the added term");

  // Scalar-symbol operator: regularity failure.
  ChartOperator scalar;
  scalar.box = fixture.box;
  scalar.poly = OperatorJet(2, 2, 2);
  Eigen::Matrix2d g;
  g << 2, 1, 1, 3;
  PairIndex pairs(2);
  for (int p = 0; p < pairs.size(); ++p) {
    auto [i, j] = pairs.pair(p);
    scalar.poly.a[p].coeff(0) = g(i, j) * Mat::Identity(2, 2);
  }
  // Scalar symbols keep the pairing map invertible, so force a degenerate
  // trace quadric instead to hit the regularity exit.
  ChartOperator degenerate = scalar;
  degenerate.poly.a[pairs.index(1, 1)].coeff(0) = Mat::Zero(2, 2);
  degenerate.poly.a[pairs.index(0, 1)].coeff(0) = Mat::Zero(2, 2);
  save_operator(g_dir + "/op_degenerate.json", degenerate);
  REQUIRE_CLI(run("decompose " + g_dir + "/op_degenerate.json") == 2,
              "degenerate operator should exit 2");
}

void test_model_commands() {
  std::mt19937_64 rng(306);
  GridSpec grid;
  grid.box.lo = Eigen::VectorXd::Constant(2, -1.0);
  grid.box.hi = Eigen::VectorXd::Constant(2, 1.0);
  grid.shape = {4, 4};
  const ChartOperator op = random_model_operator(2, 2, grid, rng);
  const Jet gauge = polynomial_gauge(2, 2, 9, rng);
  const ChartOperator moved = gauge_chart_operator(op, gauge);
  save_operator(g_dir + "/mop.json", op);
  save_operator(g_dir + "/mop_gauged.json", moved);

  REQUIRE_CLI(run("model " + g_dir + "/mop.json --grid 4,4 --out " + g_dir + "/m1.json") == 0,
              "model build should exit 0");
  REQUIRE_CLI(
      run("model " + g_dir + "/mop_gauged.json --grid 4,4 --out " + g_dir + "/m2.json") == 0,
      "gauged model build should exit 0");

  REQUIRE_CLI(run("compare-models " + g_dir + "/m1.json " + g_dir + "/m1.json") == 0,
              "model vs itself should exit 0");
  REQUIRE_CLI(run("compare-models " + g_dir + "/m1.json " + g_dir + "/m2.json") == 0,
              "gauge-pair models should exit 0");

  // Unrelated operator: expect separation (exit 3), wheither through graph
  // deviations or through different natural coordinates.
  const ChartOperator other = random_model_operator(2, 2, grid, rng);
  save_operator(g_dir + "/mop_other.json", other);
  REQUIRE_CLI(
      run("model " + g_dir + "/mop_other.json --grid 4,4 --out " + g_dir + "/m3.json") == 0,
      "other model build should exit 0");
  REQUIRE_CLI(run("compare-models " + g_dir + "/m1.json " + g_dir + "/m3.json") == 3,
              "unrelated models should exit 3");

  // Constant-coefficient operator: no natural coordinates, exit 2.
  for (int tries = 0; tries < 50; ++tries) {
    ChartOperator constant;
    constant.box = grid.box;
    constant.poly = OperatorJet(2, 2, 2);
    for (auto& j : constant.poly.a) j.coeff(0) = random_mat(2, 2, rng);
    for (auto& j : constant.poly.b) j.coeff(0) = random_mat(2, 2, rng);
    constant.poly.c.coeff(0) = random_mat(2, 2, rng);
    if (!chart_margins_ok(constant, grid)) continue;
    save_operator(g_dir + "/mop_const.json", constant);
    REQUIRE_CLI(run("model " + g_dir + "/mop_const.json --grid 4,4 --out " + g_dir +
                    "/m4.json") == 2,
                "constant-coefficient operator should exit 2");
    return;
  }
  REQUIRE_CLI(false, "no regular constant operator found");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: cli_tests <path-to-binary>" << std::endl;
    return 2;
  }
  g_cli = argv[1];
  g_dir = "/tmp/opequiv_cli_tests";
  std::system(("rm -rf " + g_dir + " && mkdir -p " + g_dir).c_str());

  test_invariants_command();
  test_equiv_command();
  test_decompose_command();
  test_model_commands();

  if (g_failures > 0) {
    std::cerr << g_failures << " CLI check(s) failed" << std::endl;
    return 1;
  }
  std::cout << "all CLI checks passed" << std::endl;
  return 0;
}
