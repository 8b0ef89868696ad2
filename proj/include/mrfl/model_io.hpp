#pragma once

#include <string>
#include <variant>

#include <json.hpp>

#include "mrfl/model.hpp"

namespace mrfl {

using AnyModel = std::variant<IsingModel, PairwiseModel>;

// Model documents use 0-based node indices and 0-based symbols.
//
//   pairwise: {"n", "k", "theta": [[...] x n], "edges": [{"i", "j", "w": [[...]]}]}
//   compact Ising: {"n", "k": 2, "A": [[...]], "theta": [...]}
//
// An Ising model may also be written in pairwise form via its canonical
// embedding (symbol 0 = spin -1, symbol 1 = spin +1).

nlohmann::json to_json(const PairwiseModel& model);
nlohmann::json to_json(const IsingModel& model, bool compact = true);

/// Compact documents (with "A") parse as IsingModel, everything else as
/// PairwiseModel. Throws Error("invalid_model") on malformed input.
AnyModel model_from_json(const nlohmann::json& doc);

/// Parses either form and returns an Ising model; pairwise documents must be
/// canonical embeddings.
IsingModel ising_from_json(const nlohmann::json& doc);

AnyModel load_model(const std::string& path);
void save_model(const AnyModel& model, const std::string& path);

/// FNV-1a 64-bit hash of the canonical pairwise JSON dump, as 16 hex digits.
std::string model_digest(const IsingModel& model);
std::string model_digest(const PairwiseModel& model);

}  // namespace mrfl
