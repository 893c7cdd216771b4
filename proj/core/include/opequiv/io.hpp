#pragma once

#include <string>

#include "opequiv/models.hpp"

namespace opequiv {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";

// All loaders validate shape, symmetry and finiteness and throw Error(Parse)
// with field context on malformed input.

std::string symbol_to_json(const SymbolTensor& sigma, const std::string& label = "");
SymbolTensor symbol_from_json(const std::string& text, std::string* label = nullptr);

std::string operator_to_json(const ChartOperator& op, const std::string& label = "");
ChartOperator operator_from_json(const std::string& text, std::string* label = nullptr);

std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text);

// JSON fragment (a term list) for one coefficient jet; used by reports.
std::string jet_to_json(const Jet& jet);

SymbolTensor load_symbol(const std::string& path, std::string* label = nullptr);
void save_symbol(const std::string& path, const SymbolTensor& sigma,
                 const std::string& label = "");

ChartOperator load_operator(const std::string& path, std::string* label = nullptr);
void save_operator(const std::string& path, const ChartOperator& op,
                   const std::string& label = "");

Model load_model(const std::string& path);
void save_model(const std::string& path, const Model& model);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace opequiv
