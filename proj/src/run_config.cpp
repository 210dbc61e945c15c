#include "hhr/run_config.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "hhr/errors.hpp"

namespace hhr {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& context) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key)) {
      throw ValidationError(context + ": unknown key '" + key + "'");
    }
  }
}

Normalization normalization_from_name(const std::string& name) {
  if (name == "none") return Normalization::kNone;
  if (name == "row") return Normalization::kRow;
  if (name == "symmetric") return Normalization::kSymmetric;
  throw ValidationError("config: unknown normalization '" + name + "'");
}

RelationTemplate parse_relation(const json& j) {
  if (!j.is_object()) {
    throw ValidationError("config: relation entries must be objects");
  }
  reject_unknown_keys(j, {"name", "kind", "r", "paths", "normalization", "binarize"},
                      "config relation");
  RelationTemplate rel;
  rel.name = j.at("name").get<std::string>();
  if (rel.name.empty() || rel.name == "self") {
    throw ValidationError("config: relation name '" + rel.name +
                          "' is empty or reserved");
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "power") {
    rel.is_power = true;
    rel.hops = j.at("r").get<int>();
    if (rel.hops < 1) {
      throw ValidationError("config: power relation '" + rel.name +
                            "' needs r >= 1 (the self relation is implicit)");
    }
    if (j.contains("paths")) {
      throw ValidationError("config: power relation '" + rel.name +
                            "' must not carry paths");
    }
  } else if (kind == "metapath") {
    rel.is_power = false;
    if (j.contains("r")) {
      throw ValidationError("config: metapath relation '" + rel.name +
                            "' must not carry r");
    }
    const json& paths = j.at("paths");
    if (!paths.is_array() || paths.empty()) {
      throw ValidationError("config: relation '" + rel.name +
                            "' needs a non-empty paths array");
    }
    for (const json& path : paths) {
      if (!path.is_array() || path.empty()) {
        throw ValidationError("config: relation '" + rel.name +
                              "' has an empty path");
      }
      std::vector<std::variant<int, std::string>> steps;
      for (const json& step : path) {
        if (step.is_number_integer()) {
          steps.emplace_back(step.get<int>());
        } else if (step.is_string()) {
          steps.emplace_back(step.get<std::string>());
        } else {
          throw ValidationError("config: path steps must be edge-type ids or names");
        }
      }
      rel.paths.push_back(std::move(steps));
    }
  } else {
    throw ValidationError("config: unknown relation kind '" + kind + "'");
  }
  if (j.contains("normalization")) {
    rel.normalization = normalization_from_name(j["normalization"].get<std::string>());
  }
  if (j.contains("binarize")) {
    rel.binarize = j["binarize"].get<bool>();
  }
  return rel;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError("config: " + std::string(e.what()));
  }
  if (!doc.is_object()) {
    throw ValidationError("config: top level must be a JSON object");
  }
  reject_unknown_keys(doc,
                      {"relations", "layer_dims", "dropout", "lr", "weight_decay",
                       "max_epochs", "patience", "seeds", "data_dir", "out_dir",
                       "train_per_class", "val_count", "split_seed"},
                      "config");
  RunConfig config;
  try {
    for (const json& jr : doc.at("relations")) {
      config.relations.push_back(parse_relation(jr));
    }
    config.layer_dims = doc.at("layer_dims").get<std::vector<int>>();
    if (doc.contains("dropout")) config.dropout = doc["dropout"].get<double>();
    if (doc.contains("lr")) config.hyper.lr = doc["lr"].get<double>();
    if (doc.contains("weight_decay")) {
      config.hyper.weight_decay = doc["weight_decay"].get<double>();
    }
    if (doc.contains("max_epochs")) {
      config.hyper.max_epochs = doc["max_epochs"].get<int>();
    }
    if (doc.contains("patience")) config.hyper.patience = doc["patience"].get<int>();
    if (doc.contains("seeds")) {
      config.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
    }
    if (doc.contains("data_dir")) config.data_dir = doc["data_dir"].get<std::string>();
    if (doc.contains("out_dir")) config.out_dir = doc["out_dir"].get<std::string>();
    if (doc.contains("train_per_class")) {
      config.train_per_class = doc["train_per_class"].get<int>();
    }
    if (doc.contains("val_count")) config.val_count = doc["val_count"].get<int>();
    if (doc.contains("split_seed")) {
      config.split_seed = doc["split_seed"].get<std::uint64_t>();
    }
  } catch (const json::exception& e) {
    throw ValidationError("config: " + std::string(e.what()));
  }
  if (config.relations.empty()) {
    throw ValidationError("config: need at least one relation");
  }
  if (config.seeds.empty()) {
    throw ValidationError("config: seeds must be non-empty");
  }
  std::set<std::string> names;
  for (const RelationTemplate& rel : config.relations) {
    if (!names.insert(rel.name).second) {
      throw ValidationError("config: duplicate relation name '" + rel.name + "'");
    }
  }
  config.hyper.validate();
  return config;
}

std::vector<RelationSpec> resolve_relations(const RunConfig& config,
                                            const Graph& graph) {
  const auto edge_type_id = [&graph](const std::variant<int, std::string>& step,
                                     const std::string& relation) {
    if (const int* id = std::get_if<int>(&step)) {
      if (*id < 0 || *id >= graph.num_edge_types()) {
        throw ValidationError("config: relation '" + relation +
                              "' uses edge type id " + std::to_string(*id) +
                              " but the graph has " +
                              std::to_string(graph.num_edge_types()) + " types");
      }
      return *id;
    }
    const std::string& name = std::get<std::string>(step);
    const auto it = std::find(graph.edge_type_names.begin(),
                              graph.edge_type_names.end(), name);
    if (it == graph.edge_type_names.end()) {
      throw ValidationError("config: relation '" + relation +
                            "' names unknown edge type '" + name + "'");
    }
    return static_cast<int>(it - graph.edge_type_names.begin());
  };

  std::vector<RelationSpec> specs;
  specs.push_back(RelationSpec::power("self", 0));
  for (const RelationTemplate& rel : config.relations) {
    if (rel.is_power) {
      RelationSpec spec = RelationSpec::power(rel.name, rel.hops, rel.normalization);
      if (rel.binarize) spec.binarize = *rel.binarize;
      specs.push_back(std::move(spec));
    } else {
      std::vector<std::vector<int>> paths;
      for (const auto& path : rel.paths) {
        std::vector<int> ids;
        for (const auto& step : path) ids.push_back(edge_type_id(step, rel.name));
        paths.push_back(std::move(ids));
      }
      specs.push_back(RelationSpec::meta_path_sum(
          rel.name, std::move(paths), rel.normalization,
          rel.binarize.value_or(true)));
    }
  }
  return specs;
}

ModelConfig make_model_config(const RunConfig& config, const Graph& graph,
                              std::uint64_t seed) {
  ModelConfig model;
  model.relations = resolve_relations(config, graph);
  model.layer_dims = config.layer_dims;
  model.num_classes = graph.num_classes;
  model.dropout = config.dropout;
  model.seed = seed;
  model.validate();
  return model;
}

}  // namespace hhr
