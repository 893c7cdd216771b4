// Command-line front end: invariants, pointwise equivalence, operator
// decomposition, and chart models with reproducible JSON reports.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "opequiv/connections.hpp"
#include "opequiv/equivalence.hpp"
#include "opequiv/invariants.hpp"
#include "opequiv/io.hpp"
#include "opequiv/models.hpp"

using json = nlohmann::json;
using namespace opequiv;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitNotRegular = 2;
constexpr int kExitInequivalent = 3;
constexpr int kExitInconclusive = 4;

struct CommonFlags {
  double tol = kDefaultTol;
  int words = 4;
  unsigned long seed = 0;
  bool csv = false;
  bool json_out = false;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--tol", flags.tol, "numerical tolerance");
  cmd->add_option("--seed", flags.seed, "seed recorded in the report");
  auto* js = cmd->add_flag("--json", flags.json_out, "JSON output (default)");
  cmd->add_flag("--csv", flags.csv, "CSV output")->excludes(js);
  cmd->add_option("--out", flags.out, "also write the JSON report to this path");
}

json report_base(const std::string& command, const CommonFlags& flags) {
  json rep;
  rep["schema_version"] = kSchemaVersion;
  rep["kind"] = "report";
  rep["command"] = command;
  rep["reproducibility"] = {
      {"seed", flags.seed}, {"tol", flags.tol}, {"version", kVersion}};
  return rep;
}

json regularity_json(const RegularityReport& rep) {
  auto cond = [](const ConditionCheck& c) {
    return json{{"pass", c.pass}, {"value", c.value}};
  };
  return json{{"cond1", cond(rep.cond1)},
              {"cond2", cond(rep.cond2)},
              {"cond3", cond(rep.cond3)},
              {"cond4", cond(rep.cond4)},
              {"overall", rep.overall}};
}

json fingerprint_json(const Fingerprint& fp) {
  return json{{"m", fp.m},           {"n", fp.n},
              {"max_len", fp.max_len}, {"alphabet", fp.alphabet},
              {"words", fp.words},   {"values", fp.values},
              {"scales", fp.scales}};
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Equivalent: return "equivalent";
    case Verdict::Inequivalent: return "inequivalent";
    default: return "inconclusive";
  }
}

int verdict_exit(Verdict v) {
  switch (v) {
    case Verdict::Equivalent: return kExitOk;
    case Verdict::Inequivalent: return kExitInequivalent;
    default: return kExitInconclusive;
  }
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

void emit(const json& rep, const CommonFlags& flags,
          const std::function<void(std::ostream&)>& csv_writer) {
  if (flags.csv) {
    csv_writer(std::cout);
  } else {
    std::cout << rep.dump(2) << "\n";
  }
  if (!flags.out.empty()) write_file(flags.out, rep.dump(2) + "\n");
}

std::string word_key(const std::vector<int>& w) {
  std::string s;
  for (size_t i = 0; i < w.size(); ++i) {
    if (i) s += '.';
    s += std::to_string(w[i]);
  }
  return s;
}

int cmd_invariants(const std::string& path, const CommonFlags& flags) {
  std::string label;
  const SymbolTensor sigma = load_symbol(path, &label);
  json rep = report_base("invariants", flags);
  rep["input"] = path;
  if (!label.empty()) rep["label"] = label;

  const RegularityReport reg = regularity_report(sigma, flags.tol, kDefaultSeed + flags.seed);
  rep["regularity"] = regularity_json(reg);

  std::optional<Fingerprint> fp;
  if (reg.overall) {
    const DerivedQuadrics dq = derived_quadrics(sigma, flags.tol);
    const EigenFrame frame = eigenframe(sigma, dq, flags.tol);
    const RFamily rf = r_family(sigma, dq, frame, 1e-6);
    fp = fingerprint(rf, std::nullopt, flags.words, sigma.m(), sigma.n());
    rep["fingerprint"] = fingerprint_json(*fp);
    rep["imag_residual"] = rf.imag_residual;
  }
  rep["exit_code"] = reg.overall ? kExitOk : kExitNotRegular;

  emit(rep, flags, [&](std::ostream& os) {
    os << "condition,pass,value\n";
    os << "cond1," << reg.cond1.pass << "," << reg.cond1.value << "\n";
    os << "cond2," << reg.cond2.pass << "," << reg.cond2.value << "\n";
    os << "cond3," << reg.cond3.pass << "," << reg.cond3.value << "\n";
    os << "cond4," << reg.cond4.pass << "," << reg.cond4.value << "\n";
    if (fp) {
      os << "word,value\n";
      for (size_t i = 0; i < fp->words.size(); ++i)
        os << word_key(fp->words[i]) << "," << fp->values[i] << "\n";
    }
  });
  return reg.overall ? kExitOk : kExitNotRegular;
}

int cmd_equiv_symbols(const std::string& a, const std::string& b, const CommonFlags& flags) {
  const SymbolTensor s1 = load_symbol(a);
  const SymbolTensor s2 = load_symbol(b);
  require(s1.same_shape(s2), Error::Kind::DimensionMismatch,
          "equiv-symbols: documents have different (m, n)");
  json rep = report_base("equiv-symbols", flags);
  rep["inputs"] = {a, b};

  const SymbolEquivalence eq = symbols_equivalent(s1, s2, flags.tol, flags.words);
  rep["verdict"] = verdict_name(eq.verdict);
  rep["detail"] = eq.detail;
  if (eq.verdict == Verdict::Equivalent) {
    rep["certificate"] = {{"gl_e", matrix_json(eq.certificate.x)},
                          {"gl_t", matrix_json(eq.gl_t)},
                          {"residual", eq.certificate.residual},
                          {"transform_residual", eq.transform_residual}};
  }
  rep["conjugacy"] = {{"min_rel_sv", eq.certificate.min_rel_sv},
                      {"nullity", eq.certificate.nullity}};
  rep["exit_code"] = verdict_exit(eq.verdict);

  emit(rep, flags, [&](std::ostream& os) {
    os << "verdict," << verdict_name(eq.verdict) << "\n";
    os << "transform_residual," << eq.transform_residual << "\n";
  });
  return verdict_exit(eq.verdict);
}

int cmd_decompose(const std::string& path, const CommonFlags& flags) {
  const ChartOperator op = load_operator(path);
  json rep = report_base("decompose", flags);
  rep["input"] = path;

  // Decompose at the chart center.
  Eigen::VectorXd center = 0.5 * (op.box.lo + op.box.hi);
  const OperatorJet local = op.poly.shifted(center).truncated(3);
  const Decomposition dec = decompose(local, flags.tol);

  json gammas = json::array();
  for (const Jet& g : dec.nabla.gamma) gammas.push_back(json::parse(jet_to_json(g)));
  json christoffels = json::array();
  for (const Jet& g : dec.nabla_c.gamma) christoffels.push_back(json::parse(jet_to_json(g)));
  rep["connection"] = gammas;
  rep["christoffel"] = christoffels;
  rep["subsymbol"] = json::parse(jet_to_json(dec.total.sigma0));
  rep["recombination_residual"] = dec.recombination_residual;
  rep["base_point"] = std::vector<double>(center.data(), center.data() + center.size());
  rep["exit_code"] = kExitOk;

  emit(rep, flags, [&](std::ostream& os) {
    os << "recombination_residual," << dec.recombination_residual << "\n";
  });
  return kExitOk;
}

int cmd_model(const std::string& path, const std::vector<int>& grid_shape, int budget,
              const CommonFlags& flags) {
  const ChartOperator op = load_operator(path);
  GridSpec grid;
  grid.box = op.box;
  grid.shape = grid_shape.empty() ? std::vector<int>(op.poly.n, 5) : grid_shape;
  require(static_cast<int>(grid.shape.size()) == op.poly.n, Error::Kind::DimensionMismatch,
          "model: --grid must list one resolution per chart dimension");
  for (int s : grid.shape)
    require(s >= 2, Error::Kind::DimensionMismatch, "model: grid resolution must be >= 2");

  const Model model = build_model(op, grid, budget, flags.tol, flags.seed);
  const std::string out_path = flags.out.empty() ? "model.json" : flags.out;
  save_model(out_path, model);

  json rep = report_base("model", flags);
  rep["input"] = path;
  rep["model"] = out_path;
  rep["jacobian_min"] = model.jacobian_min;
  rep["coord_words"] = model.coord_words;
  rep["graph_words"] = model.graph_words;
  rep["exit_code"] = kExitOk;
  if (flags.csv) {
    std::cout << "jacobian_min," << model.jacobian_min << "\n";
  } else {
    std::cout << rep.dump(2) << "\n";
  }
  return kExitOk;
}

int cmd_compare_models(const std::string& a, const std::string& b, const CommonFlags& flags) {
  const Model m1 = load_model(a);
  const Model m2 = load_model(b);
  json rep = report_base("compare-models", flags);
  rep["inputs"] = {a, b};

  Verdict verdict;
  std::string detail;
  double worst = 0.0;
  std::vector<double> per_word;
  try {
    const ModelVerdict mv = compare_models(m1, m2, std::max(flags.tol, 1e-9));
    verdict = mv.verdict;
    detail = mv.detail;
    worst = mv.worst_deviation;
    per_word = mv.per_word;
  } catch (const Error& e) {
    if (e.kind() != Error::Kind::IncompatibleWords) throw;
    // Natural coordinates are chosen canonically from the invariant fields, so
    // differing word sets already certify different models.
    verdict = Verdict::Inequivalent;
    detail = e.what();
  }
  rep["verdict"] = verdict_name(verdict);
  rep["detail"] = detail;
  rep["worst_deviation"] = worst;
  rep["per_word_deviation"] = per_word;
  rep["exit_code"] = verdict_exit(verdict);

  emit(rep, flags, [&](std::ostream& os) {
    os << "verdict," << verdict_name(verdict) << "\n";
    os << "worst_deviation," << worst << "\n";
  });
  return verdict_exit(verdict);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"invariants, connections and local models of second-order operators in vector bundles"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string in_a, in_b;
  std::vector<int> grid_shape;
  int budget = 3;

  auto* inv = app.add_subcommand("invariants", "regularity and Artin-Procesi fingerprint of a symbol");
  inv->add_option("symbol", in_a, "symbol.json")->required();
  inv->add_option("--words", flags.words, "maximum trace-word length");
  add_common(inv, flags);

  auto* eq = app.add_subcommand("equiv-symbols", "decide pointwise G-equivalence of two symbols");
  eq->add_option("a", in_a, "first symbol.json")->required();
  eq->add_option("b", in_b, "second symbol.json")->required();
  eq->add_option("--words", flags.words, "maximum trace-word length");
  add_common(eq, flags);

  auto* dec = app.add_subcommand("decompose", "associated connection and subsymbol of an operator");
  dec->add_option("operator", in_a, "operator.json")->required();
  add_common(dec, flags);

  auto* mod = app.add_subcommand("model", "build the natural-coordinate model over the chart");
  mod->add_option("operator", in_a, "operator.json")->required();
  mod->add_option("--grid", grid_shape, "grid resolution per axis")->delimiter(',');
  mod->add_option("--budget", budget, "maximum invariant word length");
  add_common(mod, flags);

  auto* cmp = app.add_subcommand("compare-models", "compare two chart models");
  cmp->add_option("a", in_a, "first model.json")->required();
  cmp->add_option("b", in_b, "second model.json")->required();
  add_common(cmp, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (inv->parsed()) return cmd_invariants(in_a, flags);
    if (eq->parsed()) return cmd_equiv_symbols(in_a, in_b, flags);
    if (dec->parsed()) return cmd_decompose(in_a, flags);
    if (mod->parsed()) return cmd_model(in_a, grid_shape, budget, flags);
    if (cmp->parsed()) return cmd_compare_models(in_a, in_b, flags);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.kind() == Error::Kind::Parse) return kExitIo;
    if (e.is_regularity_failure()) return kExitNotRegular;
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitIo;
}
