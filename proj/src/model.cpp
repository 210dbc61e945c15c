#include "hhr/model.hpp"

#include <random>

#include <json.hpp>

#include "hhr/errors.hpp"
#include "hhr/io_util.hpp"

namespace hhr {

using nlohmann::json;

void ModelConfig::validate() const {
  if (relations.empty() || !relations[0].is_identity()) {
    throw ValidationError("model config: relations[0] must be the identity "
                          "(self) relation");
  }
  if (num_hops() < 1) {
    throw ValidationError("model config: need at least one non-self relation");
  }
  if (layer_dims.empty()) {
    throw ValidationError("model config: need at least one layer");
  }
  for (int d : layer_dims) {
    if (d < 1) throw ValidationError("model config: layer dims must be >= 1");
  }
  if (num_classes < 1) {
    throw ValidationError("model config: num_classes must be >= 1");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ValidationError("model config: dropout must be in [0, 1)");
  }
}

void ModelParams::validate_shapes(const ModelConfig& config, int feature_dim) const {
  const int p = config.num_hops();
  const int K = config.num_layers();
  if (static_cast<int>(layers.size()) != K) {
    throw ValidationError("model params: layer count mismatch");
  }
  std::size_t in_width = static_cast<std::size_t>(feature_dim);
  for (int k = 0; k < K; ++k) {
    const auto& layer = layers[k];
    const std::size_t d_k = static_cast<std::size_t>(config.layer_dims[k]);
    if (static_cast<int>(layer.w.size()) != p + 1 ||
        static_cast<int>(layer.ntn.size()) != p) {
      throw ValidationError("model params: relation count mismatch in layer " +
                            std::to_string(k));
    }
    for (const DenseMatrix& w : layer.w) {
      if (w.rows != in_width || w.cols != d_k) {
        throw ValidationError("model params: W shape mismatch in layer " +
                              std::to_string(k));
      }
    }
    for (const DenseMatrix& slice : layer.ntn) {
      if (slice.rows != d_k || slice.cols != d_k) {
        throw ValidationError("model params: NTN slice shape mismatch in layer " +
                              std::to_string(k));
      }
    }
    in_width = static_cast<std::size_t>(p + 1) * d_k;
  }
  if (classifier.rows != in_width ||
      classifier.cols != static_cast<std::size_t>(config.num_classes)) {
    throw ValidationError("model params: classifier shape mismatch");
  }
}

namespace {

DenseMatrix glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  DenseMatrix m(rows, cols);
  for (double& v : m.data) v = dist(rng);
  return m;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, int feature_dim) {
  config.validate();
  if (feature_dim < 1) {
    throw ValidationError("init_params: feature_dim must be >= 1");
  }
  const int p = config.num_hops();
  std::mt19937_64 rng(config.seed);
  ModelParams params;
  std::size_t in_width = static_cast<std::size_t>(feature_dim);
  for (int k = 0; k < config.num_layers(); ++k) {
    const std::size_t d_k = static_cast<std::size_t>(config.layer_dims[k]);
    LayerParams layer;
    for (int r = 0; r <= p; ++r) {
      layer.w.push_back(glorot(in_width, d_k, rng));
    }
    for (int r = 1; r <= p; ++r) {
      layer.ntn.push_back(glorot(d_k, d_k, rng));
    }
    params.layers.push_back(std::move(layer));
    in_width = static_cast<std::size_t>(p + 1) * d_k;
  }
  params.classifier =
      glorot(in_width, static_cast<std::size_t>(config.num_classes), rng);
  return params;
}

std::vector<DenseMatrix*> flatten_params(ModelParams& params) {
  std::vector<DenseMatrix*> out;
  for (auto& layer : params.layers) {
    for (auto& w : layer.w) out.push_back(&w);
    for (auto& slice : layer.ntn) out.push_back(&slice);
  }
  out.push_back(&params.classifier);
  return out;
}

std::vector<const DenseMatrix*> flatten_params(const ModelParams& params) {
  std::vector<const DenseMatrix*> out;
  for (const auto& layer : params.layers) {
    for (const auto& w : layer.w) out.push_back(&w);
    for (const auto& slice : layer.ntn) out.push_back(&slice);
  }
  out.push_back(&params.classifier);
  return out;
}

NodeId hop_representation(Tape& tape, NodeId h_prev,
                          const CompiledRelation& relation, NodeId w_r) {
  if (relation.spec.is_identity()) {
    return tape.activation(tape.matmul(h_prev, w_r), ActivationKind::kRelu);
  }
  const NodeId aggregated = tape.spmm(relation.matrix, h_prev);
  return tape.activation(tape.matmul(aggregated, w_r), ActivationKind::kRelu);
}

RelationScores relation_scores(Tape& tape, NodeId h0,
                               const std::vector<NodeId>& hop_reps,
                               const std::vector<NodeId>& ntn_slices) {
  if (hop_reps.size() != ntn_slices.size()) {
    throw ValidationError("relation_scores: slice count != hop count");
  }
  RelationScores scores;
  for (std::size_t r = 0; r < hop_reps.size(); ++r) {
    const NodeId raw = tape.batched_bilinear(h0, hop_reps[r], ntn_slices[r]);
    scores.per_relation.push_back(tape.activation(raw, ActivationKind::kSigmoid));
  }
  scores.alpha = tape.concat_cols(scores.per_relation);
  return scores;
}

HhrLayerOutput hhr_layer_forward(Tape& tape, const std::vector<NodeId>& w_nodes,
                                 const std::vector<NodeId>& ntn_nodes,
                                 const std::vector<CompiledRelation>& relations,
                                 NodeId h_prev, double dropout_rate,
                                 bool training) {
  const std::size_t p = ntn_nodes.size();
  if (w_nodes.size() != p + 1 || relations.size() != p + 1) {
    throw ValidationError("hhr_layer_forward: relation count mismatch");
  }
  const NodeId h_in = tape.dropout(h_prev, dropout_rate, training);

  std::vector<NodeId> hop_reps;
  hop_reps.reserve(p + 1);
  for (std::size_t r = 0; r <= p; ++r) {
    hop_reps.push_back(hop_representation(tape, h_in, relations[r], w_nodes[r]));
  }

  const std::vector<NodeId> higher(hop_reps.begin() + 1, hop_reps.end());
  const RelationScores scores = relation_scores(tape, hop_reps[0], higher, ntn_nodes);

  // alpha_0 = 1: the self block is concatenated unscaled; the outer
  // activation is the identity (hop blocks are relu outputs scaled by
  // positive scores already).
  std::vector<NodeId> blocks;
  blocks.reserve(p + 1);
  blocks.push_back(hop_reps[0]);
  for (std::size_t r = 0; r < p; ++r) {
    blocks.push_back(tape.row_scale(hop_reps[r + 1], scores.per_relation[r]));
  }
  return HhrLayerOutput{tape.concat_cols(blocks), scores.alpha};
}

HiddenForwardResult model_forward_hidden(
    Tape& tape, const ModelParams& params, const ModelConfig& config,
    const std::vector<CompiledRelation>& relations, const DenseMatrix& features,
    bool training) {
  config.validate();
  params.validate_shapes(config, static_cast<int>(features.cols));
  if (relations.size() != config.relations.size()) {
    throw ValidationError("model_forward: compiled relation count mismatch");
  }

  HiddenForwardResult result;
  for (const RelationSpec& spec : config.relations) {
    result.report.relation_names.push_back(spec.name);
  }

  const int p = config.num_hops();
  NodeId h = tape.input(features);
  for (int k = 0; k < config.num_layers(); ++k) {
    std::vector<NodeId> w_nodes;
    std::vector<NodeId> ntn_nodes;
    for (int r = 0; r <= p; ++r) {
      w_nodes.push_back(tape.param(params.layers[k].w[r]));
      result.param_nodes.push_back(w_nodes.back());
    }
    for (int r = 0; r < p; ++r) {
      ntn_nodes.push_back(tape.param(params.layers[k].ntn[r]));
      result.param_nodes.push_back(ntn_nodes.back());
    }
    const HhrLayerOutput out = hhr_layer_forward(tape, w_nodes, ntn_nodes,
                                                 relations, h, config.dropout,
                                                 training);
    h = out.h;
    result.report.alpha.push_back(tape.value(out.alpha));
  }
  result.h = h;
  return result;
}

ModelForwardResult model_forward(Tape& tape, const ModelParams& params,
                                 const ModelConfig& config,
                                 const std::vector<CompiledRelation>& relations,
                                 const DenseMatrix& features,
                                 const std::vector<int>& labels,
                                 const std::vector<int>& mask, bool training) {
  HiddenForwardResult hidden = model_forward_hidden(tape, params, config,
                                                    relations, features,
                                                    training);
  ModelForwardResult result;
  result.param_nodes = std::move(hidden.param_nodes);
  result.report = std::move(hidden.report);

  const NodeId classifier = tape.param(params.classifier);
  result.param_nodes.push_back(classifier);
  result.logits = tape.matmul(hidden.h, classifier);
  result.loss = tape.softmax_cross_entropy(result.logits, labels, mask);
  return result;
}

NodeId gcn_layer_forward(Tape& tape, const CsrMatrix& a_norm, NodeId h_prev,
                         NodeId w) {
  return tape.activation(tape.matmul(tape.spmm(a_norm, h_prev), w),
                         ActivationKind::kRelu);
}

namespace {

const char* normalization_name(Normalization n) {
  switch (n) {
    case Normalization::kNone: return "none";
    case Normalization::kRow: return "row";
    case Normalization::kSymmetric: return "symmetric";
  }
  return "?";
}

Normalization normalization_from_name(const std::string& name) {
  if (name == "none") return Normalization::kNone;
  if (name == "row") return Normalization::kRow;
  if (name == "symmetric") return Normalization::kSymmetric;
  throw ValidationError("unknown normalization '" + name + "'");
}

json relation_spec_to_json(const RelationSpec& spec) {
  json j;
  j["name"] = spec.name;
  if (const auto* power = std::get_if<PowerKind>(&spec.kind)) {
    j["kind"] = "power";
    j["r"] = power->hops;
  } else {
    j["kind"] = "metapath";
    j["paths"] = std::get<MetaPathSumKind>(spec.kind).paths;
  }
  j["normalization"] = normalization_name(spec.normalization);
  j["binarize"] = spec.binarize;
  return j;
}

RelationSpec relation_spec_from_json(const json& j) {
  RelationSpec spec;
  spec.name = j.at("name").get<std::string>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "power") {
    spec.kind = PowerKind{j.at("r").get<int>()};
  } else if (kind == "metapath") {
    spec.kind = MetaPathSumKind{j.at("paths").get<std::vector<std::vector<int>>>()};
  } else {
    throw ValidationError("unknown relation kind '" + kind + "'");
  }
  spec.normalization = normalization_from_name(j.at("normalization").get<std::string>());
  spec.binarize = j.at("binarize").get<bool>();
  return spec;
}

json matrix_to_json(const DenseMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

DenseMatrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) {
    throw ValidationError("checkpoint: matrix must be a non-empty array");
  }
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) {
      throw ValidationError("checkpoint: ragged matrix rows");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(i, c) = j[i][c].get<double>();
    }
  }
  return m;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const ModelConfig& config,
                     const std::filesystem::path& path) {
  json doc;
  doc["format_version"] = 1;
  json cfg;
  cfg["relations"] = json::array();
  for (const RelationSpec& spec : config.relations) {
    cfg["relations"].push_back(relation_spec_to_json(spec));
  }
  cfg["layer_dims"] = config.layer_dims;
  cfg["num_classes"] = config.num_classes;
  cfg["dropout"] = config.dropout;
  cfg["seed"] = config.seed;
  doc["config"] = std::move(cfg);
  doc["layers"] = json::array();
  for (const LayerParams& layer : params.layers) {
    json jl;
    jl["w"] = json::array();
    for (const DenseMatrix& w : layer.w) jl["w"].push_back(matrix_to_json(w));
    jl["ntn"] = json::array();
    for (const DenseMatrix& s : layer.ntn) jl["ntn"].push_back(matrix_to_json(s));
    doc["layers"].push_back(std::move(jl));
  }
  doc["classifier"] = matrix_to_json(params.classifier);
  atomic_write_file(path, doc.dump() + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError("checkpoint: " + std::string(e.what()));
  }
  try {
    if (doc.at("format_version").get<int>() != 1) {
      throw ValidationError("checkpoint: unsupported format_version");
    }
    Checkpoint ck;
    const json& cfg = doc.at("config");
    for (const json& jr : cfg.at("relations")) {
      ck.config.relations.push_back(relation_spec_from_json(jr));
    }
    ck.config.layer_dims = cfg.at("layer_dims").get<std::vector<int>>();
    ck.config.num_classes = cfg.at("num_classes").get<int>();
    ck.config.dropout = cfg.at("dropout").get<double>();
    ck.config.seed = cfg.at("seed").get<std::uint64_t>();
    ck.config.validate();
    for (const json& jl : doc.at("layers")) {
      LayerParams layer;
      for (const json& jm : jl.at("w")) layer.w.push_back(matrix_from_json(jm));
      for (const json& jm : jl.at("ntn")) layer.ntn.push_back(matrix_from_json(jm));
      ck.params.layers.push_back(std::move(layer));
    }
    ck.params.classifier = matrix_from_json(doc.at("classifier"));
    return ck;
  } catch (const json::exception& e) {
    throw ValidationError("checkpoint: " + std::string(e.what()));
  }
}

}  // namespace hhr
