#include "opequiv/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace opequiv {

using json = nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& context, const std::string& what) {
  fail(Error::Kind::Parse, "parse error at " + context + ": " + what);
}

json parse_text(const std::string& text, const std::string& context) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    parse_fail(context, e.what());
  }
}

double finite_number(const json& j, const std::string& context) {
  if (!j.is_number()) parse_fail(context, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) parse_fail(context, "non-finite number");
  return v;
}

int int_field(const json& j, const std::string& key, const std::string& context) {
  if (!j.contains(key) || !j[key].is_number_integer())
    parse_fail(context, "missing integer field '" + key + "'");
  return j[key].get<int>();
}

Eigen::MatrixXd matrix_field(const json& j, int rows, int cols, const std::string& context) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    parse_fail(context, "expected " + std::to_string(rows) + " rows");
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols)
      parse_fail(context + " row " + std::to_string(r),
                 "expected " + std::to_string(cols) + " entries");
    for (int c = 0; c < cols; ++c)
      m(r, c) = finite_number(j[r][c], context + "[" + std::to_string(r) + "][" +
                                           std::to_string(c) + "]");
  }
  return m;
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

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_field(const json& j, int size, const std::string& context) {
  if (!j.is_array() || static_cast<int>(j.size()) != size)
    parse_fail(context, "expected " + std::to_string(size) + " numbers");
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v(i) = finite_number(j[i], context);
  return v;
}

json terms_json(const Jet& jet) {
  const MonomialTable& table = monomial_table(jet.nvars(), jet.order());
  json terms = json::array();
  for (int t = 0; t < jet.terms(); ++t) {
    if (jet.coeff(t).norm() == 0.0) continue;
    json term;
    term["multi_index"] = table.exps[t];
    term["matrix"] = matrix_json(jet.coeff(t));
    terms.push_back(term);
  }
  return terms;
}

Jet terms_field(const json& j, int nvars, int order, int rows, int cols,
                const std::string& context) {
  if (!j.is_array()) parse_fail(context, "expected a term list");
  Jet jet(nvars, order, rows, cols);
  for (size_t t = 0; t < j.size(); ++t) {
    const std::string tctx = context + " term " + std::to_string(t);
    const json& term = j[t];
    if (!term.contains("multi_index") || !term["multi_index"].is_array() ||
        static_cast<int>(term["multi_index"].size()) != nvars)
      parse_fail(tctx, "bad multi_index");
    std::vector<int> alpha;
    int total = 0;
    for (const auto& e : term["multi_index"]) {
      if (!e.is_number_integer() || e.get<int>() < 0) parse_fail(tctx, "bad exponent");
      alpha.push_back(e.get<int>());
      total += e.get<int>();
    }
    if (total > order) parse_fail(tctx, "|multi_index| exceeds K");
    if (!term.contains("matrix")) parse_fail(tctx, "missing matrix");
    jet.set_coeff(alpha, matrix_field(term["matrix"], rows, cols, tctx + " matrix"));
  }
  return jet;
}

std::vector<std::vector<int>> words_field(const json& j, const std::string& context) {
  if (!j.is_array()) parse_fail(context, "expected a word list");
  std::vector<std::vector<int>> out;
  for (const auto& w : j) {
    if (!w.is_array() || w.empty()) parse_fail(context, "bad word");
    std::vector<int> word;
    for (const auto& e : w) {
      if (!e.is_number_integer() || e.get<int>() < 0) parse_fail(context, "bad letter");
      word.push_back(e.get<int>());
    }
    out.push_back(word);
  }
  return out;
}

}  // namespace

std::string symbol_to_json(const SymbolTensor& sigma, const std::string& label) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "symbol";
  doc["m"] = sigma.m();
  doc["n"] = sigma.n();
  if (!label.empty()) doc["label"] = label;
  json comp = json::array();
  for (int i = 0; i < sigma.n(); ++i) {
    json row = json::array();
    for (int j = 0; j < sigma.n(); ++j) row.push_back(matrix_json(sigma.comp(i, j)));
    comp.push_back(row);
  }
  doc["comp"] = comp;
  return doc.dump(2) + "\n";
}

SymbolTensor symbol_from_json(const std::string& text, std::string* label) {
  const json doc = parse_text(text, "symbol document");
  if (!doc.is_object()) parse_fail("symbol document", "expected an object");
  if (doc.value("kind", "symbol") != std::string("symbol"))
    parse_fail("symbol document", "kind is not 'symbol'");
  const int m = int_field(doc, "m", "symbol document");
  const int n = int_field(doc, "n", "symbol document");
  if (m < 1 || n < 1) parse_fail("symbol document", "m and n must be positive");
  if (label) *label = doc.value("label", "");
  if (!doc.contains("comp") || !doc["comp"].is_array() ||
      static_cast<int>(doc["comp"].size()) != n)
    parse_fail("symbol document", "comp must be an n x n grid");
  SymbolTensor sigma(m, n);
  for (int i = 0; i < n; ++i) {
    if (!doc["comp"][i].is_array() || static_cast<int>(doc["comp"][i].size()) != n)
      parse_fail("comp row " + std::to_string(i), "expected n entries");
    for (int j = 0; j < n; ++j) {
      const Eigen::MatrixXd entry = matrix_field(
          doc["comp"][i][j], m, m, "comp[" + std::to_string(i) + "][" + std::to_string(j) + "]");
      if (j < i) {
        const double scale = std::max(1.0, entry.norm());
        if ((entry - sigma.comp(i, j)).norm() > 1e-12 * scale)
          parse_fail("comp[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                     "symbol is not symmetric in the tensor slots");
      } else {
        sigma.set(i, j, entry);
      }
    }
  }
  return sigma;
}

std::string operator_to_json(const ChartOperator& op, const std::string& label) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "operator";
  doc["m"] = op.poly.m;
  doc["n"] = op.poly.n;
  int k_order = op.poly.c.order();
  for (const Jet& j : op.poly.a) k_order = std::max(k_order, j.order());
  for (const Jet& j : op.poly.b) k_order = std::max(k_order, j.order());
  doc["K"] = k_order;
  if (!label.empty()) doc["label"] = label;
  doc["chart"] = {{"lo", vector_json(op.box.lo)}, {"hi", vector_json(op.box.hi)}};
  json a = json::array();
  PairIndex pairs(op.poly.n);
  for (int p = 0; p < pairs.size(); ++p) {
    auto [i, j] = pairs.pair(p);
    a.push_back({{"i", i}, {"j", j}, {"terms", terms_json(op.poly.a[p])}});
  }
  doc["a"] = a;
  json b = json::array();
  for (int i = 0; i < op.poly.n; ++i)
    b.push_back({{"i", i}, {"terms", terms_json(op.poly.b[i])}});
  doc["b"] = b;
  doc["c"] = {{"terms", terms_json(op.poly.c)}};
  return doc.dump(2) + "\n";
}

ChartOperator operator_from_json(const std::string& text, std::string* label) {
  const json doc = parse_text(text, "operator document");
  if (!doc.is_object()) parse_fail("operator document", "expected an object");
  if (doc.value("kind", "operator") != std::string("operator"))
    parse_fail("operator document", "kind is not 'operator'");
  const int m = int_field(doc, "m", "operator document");
  const int n = int_field(doc, "n", "operator document");
  const int k = int_field(doc, "K", "operator document");
  if (m < 1 || n < 1 || k < 0) parse_fail("operator document", "bad m, n, or K");
  if (label) *label = doc.value("label", "");

  ChartOperator op;
  op.poly = OperatorJet(m, n, k);
  if (doc.contains("chart")) {
    op.box.lo = vector_field(doc["chart"].value("lo", json::array()), n, "chart.lo");
    op.box.hi = vector_field(doc["chart"].value("hi", json::array()), n, "chart.hi");
    for (int d = 0; d < n; ++d)
      if (!(op.box.lo(d) < op.box.hi(d))) parse_fail("chart", "lo must be below hi");
  } else {
    op.box.lo = Eigen::VectorXd::Constant(n, -1.0);
    op.box.hi = Eigen::VectorXd::Constant(n, 1.0);
  }

  if (doc.contains("a")) {
    if (!doc["a"].is_array()) parse_fail("a", "expected a list");
    std::vector<bool> seen(PairIndex(n).size(), false);
    for (const auto& e : doc["a"]) {
      const int i = int_field(e, "i", "a entry");
      const int j = int_field(e, "j", "a entry");
      if (i < 0 || i >= n || j < 0 || j >= n) parse_fail("a entry", "index out of range");
      const Jet jet = terms_field(e.value("terms", json::array()), n, k, m, m, "a terms");
      const int p = PairIndex(n).index(i, j);
      if (seen[p]) {
        if (jet_distance(jet, op.poly.a[p], k) > 1e-12 * std::max(1.0, jet.norm()))
          parse_fail("a entry", "conflicting values for a symmetric pair");
      } else {
        op.poly.a[p] = jet;
        seen[p] = true;
      }
    }
  }
  if (doc.contains("b")) {
    if (!doc["b"].is_array()) parse_fail("b", "expected a list");
    for (const auto& e : doc["b"]) {
      const int i = int_field(e, "i", "b entry");
      if (i < 0 || i >= n) parse_fail("b entry", "index out of range");
      op.poly.b[i] = terms_field(e.value("terms", json::array()), n, k, m, m, "b terms");
    }
  }
  if (doc.contains("c"))
    op.poly.c = terms_field(doc["c"].value("terms", json::array()), n, k, m, m, "c terms");
  return op;
}

std::string model_to_json(const Model& model) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "model";
  doc["m"] = model.m;
  doc["n"] = model.n;
  doc["r_count"] = model.r_count;
  doc["coord_words"] = model.coord_words;
  doc["graph_words"] = model.graph_words;
  doc["grid"] = {{"lo", vector_json(model.grid.box.lo)},
                 {"hi", vector_json(model.grid.box.hi)},
                 {"shape", model.grid.shape}};
  doc["jacobian_min"] = model.jacobian_min;
  doc["radius"] = model.radius;
  doc["coord_scales"] = vector_json(model.coord_scales);
  doc["tol"] = model.tol;
  doc["seed"] = model.seed;
  json samples = json::array();
  for (size_t p = 0; p < model.coords.size(); ++p)
    samples.push_back(
        {{"coords", vector_json(model.coords[p])}, {"values", vector_json(model.values[p])}});
  doc["samples"] = samples;
  return doc.dump(2) + "\n";
}

Model model_from_json(const std::string& text) {
  const json doc = parse_text(text, "model document");
  if (!doc.is_object()) parse_fail("model document", "expected an object");
  if (doc.value("kind", "model") != std::string("model"))
    parse_fail("model document", "kind is not 'model'");
  Model model;
  model.m = int_field(doc, "m", "model document");
  model.n = int_field(doc, "n", "model document");
  model.r_count = int_field(doc, "r_count", "model document");
  if (!doc.contains("coord_words") || !doc.contains("graph_words"))
    parse_fail("model document", "missing word lists");
  model.coord_words = words_field(doc["coord_words"], "coord_words");
  model.graph_words = words_field(doc["graph_words"], "graph_words");
  if (static_cast<int>(model.coord_words.size()) != model.n)
    parse_fail("coord_words", "expected n words");
  if (!doc.contains("grid")) parse_fail("model document", "missing grid");
  model.grid.box.lo = vector_field(doc["grid"].value("lo", json::array()), model.n, "grid.lo");
  model.grid.box.hi = vector_field(doc["grid"].value("hi", json::array()), model.n, "grid.hi");
  if (!doc["grid"].contains("shape") || !doc["grid"]["shape"].is_array())
    parse_fail("grid", "missing shape");
  for (const auto& s : doc["grid"]["shape"]) {
    if (!s.is_number_integer() || s.get<int>() < 1) parse_fail("grid.shape", "bad entry");
    model.grid.shape.push_back(s.get<int>());
  }
  if (static_cast<int>(model.grid.shape.size()) != model.n)
    parse_fail("grid.shape", "expected n entries");
  model.jacobian_min = finite_number(doc.value("jacobian_min", json(0.0)), "jacobian_min");
  model.radius = finite_number(doc.value("radius", json(0.0)), "radius");
  model.coord_scales =
      vector_field(doc.value("coord_scales", json::array()), model.n, "coord_scales");
  model.tol = finite_number(doc.value("tol", json(0.0)), "tol");
  model.seed = doc.value("seed", 0UL);
  if (!doc.contains("samples") || !doc["samples"].is_array())
    parse_fail("model document", "missing samples");
  const int g = static_cast<int>(model.graph_words.size());
  for (size_t p = 0; p < doc["samples"].size(); ++p) {
    const json& s = doc["samples"][p];
    const std::string ctx = "sample " + std::to_string(p);
    model.coords.push_back(vector_field(s.value("coords", json::array()), model.n, ctx));
    model.values.push_back(vector_field(s.value("values", json::array()), g, ctx));
  }
  if (model.coords.empty()) parse_fail("samples", "model has no samples");
  return model;
}

std::string jet_to_json(const Jet& jet) { return terms_json(jet).dump(); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Error::Kind::Parse, "cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Error::Kind::Parse, "cannot write file: " + path);
  out << content;
  require(static_cast<bool>(out), Error::Kind::Parse, "write failed: " + path);
}

SymbolTensor load_symbol(const std::string& path, std::string* label) {
  return symbol_from_json(read_file(path), label);
}

void save_symbol(const std::string& path, const SymbolTensor& sigma, const std::string& label) {
  write_file(path, symbol_to_json(sigma, label));
}

ChartOperator load_operator(const std::string& path, std::string* label) {
  return operator_from_json(read_file(path), label);
}

void save_operator(const std::string& path, const ChartOperator& op, const std::string& label) {
  write_file(path, operator_to_json(op, label));
}

Model load_model(const std::string& path) { return model_from_json(read_file(path)); }

void save_model(const std::string& path, const Model& model) {
  write_file(path, model_to_json(model));
}

}  // namespace opequiv
