#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hhr/csr.hpp"
#include "hhr/model.hpp"
#include "hhr/trainer.hpp"

namespace hhr {

// Relation entry as written in a run config: meta-path steps may name edge
// types by string (resolved against the graph) or by numeric id.
struct RelationTemplate {
  std::string name;
  bool is_power = true;
  int hops = 1;
  std::vector<std::vector<std::variant<int, std::string>>> paths;
  Normalization normalization = Normalization::kRow;
  std::optional<bool> binarize;  // defaults by kind when unset
};

// One JSON document configuring a whole run: model + optimizer + paths +
// seed list. Parsing is strict: unknown keys are rejected.
struct RunConfig {
  std::vector<RelationTemplate> relations;  // non-self relations, r = 1..p
  std::vector<int> layer_dims;
  double dropout = 0.6;
  OptimHyper hyper;
  std::vector<std::uint64_t> seeds = {1};
  std::string data_dir;  // optional; the --data flag takes precedence
  std::string out_dir;   // optional; the --out flag takes precedence
  // Fallback split parameters, used only when the data directory carries no
  // splits.json (Planetoid-style convention).
  int train_per_class = 20;
  int val_count = 500;
  std::uint64_t split_seed = 0;
};

RunConfig parse_run_config(const std::string& json_text);

// Resolves edge-type names against the graph and prepends the forced self
// relation (Power{0}).
std::vector<RelationSpec> resolve_relations(const RunConfig& config,
                                            const Graph& graph);

ModelConfig make_model_config(const RunConfig& config, const Graph& graph,
                              std::uint64_t seed);

}  // namespace hhr
