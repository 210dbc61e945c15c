#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hhr/model.hpp"

namespace hhr {

// Relation-score export for interpretability: one CSV row per
// (node, layer, relation), columns node_id,layer,relation_name,alpha_raw,
// alpha_normalized. The self relation appears with alpha_raw = 1 exactly;
// alpha_normalized divides each score by the per-(node, layer) total so the
// rows of a node/layer group sum to 1. Eval-mode forward, deterministic.
std::string relation_scores_csv(const ModelParams& params,
                                const ModelConfig& config, const Graph& graph,
                                const std::vector<CompiledRelation>& relations,
                                const std::vector<int>& nodes);

void export_relation_scores(const ModelParams& params, const ModelConfig& config,
                            const Graph& graph,
                            const std::vector<CompiledRelation>& relations,
                            const std::vector<int>& nodes,
                            const std::filesystem::path& out_path);

// Node selections like "0-19", "3,7,12" or a mix of both.
std::vector<int> parse_node_spec(const std::string& spec, int num_nodes);

}  // namespace hhr
