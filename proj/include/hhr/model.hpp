#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hhr/csr.hpp"
#include "hhr/dense.hpp"
#include "hhr/graph.hpp"
#include "hhr/tape.hpp"

namespace hhr {

// Architecture description. relations[0] is always the self relation
// (identity, Power{0}); p = relations.size() - 1 learnable relation scores
// per layer. layer_dims holds the per-hop output width of each layer, so
// layer k emits (p+1) * layer_dims[k-1] columns after concatenation.
struct ModelConfig {
  std::vector<RelationSpec> relations;
  std::vector<int> layer_dims;
  int num_classes = 0;
  double dropout = 0.6;
  std::uint64_t seed = 1;

  int num_layers() const { return static_cast<int>(layer_dims.size()); }
  int num_hops() const { return static_cast<int>(relations.size()) - 1; }
  void validate() const;
};

struct LayerParams {
  std::vector<DenseMatrix> w;    // p+1 hop projections, input_width x d_k
  std::vector<DenseMatrix> ntn;  // p tensor slices, d_k x d_k
};

struct ModelParams {
  std::vector<LayerParams> layers;
  DenseMatrix classifier;  // (p+1)*d_K x F

  void validate_shapes(const ModelConfig& config, int feature_dim) const;
};

// Learned relation-scores captured during a forward pass. alpha[k] is the
// N x p score matrix of layer k (entries in (0,1)); the self score is the
// constant 1 and is not stored.
struct RelationScoreReport {
  std::vector<std::string> relation_names;  // size p+1, [0] = self relation
  std::vector<DenseMatrix> alpha;           // one N x p matrix per layer
};

struct ModelForwardResult {
  NodeId loss = -1;
  NodeId logits = -1;
  std::vector<NodeId> param_nodes;  // flatten_params order
  RelationScoreReport report;
};

// Glorot-uniform initialization, bound sqrt(6 / (fan_in + fan_out)),
// deterministic per config.seed.
ModelParams init_params(const ModelConfig& config, int feature_dim);

// Parameter matrices in a fixed traversal order (per layer: W_0..W_p then
// the p NTN slices; classifier last). Gradients and Adam moments follow
// this order everywhere.
std::vector<DenseMatrix*> flatten_params(ModelParams& params);
std::vector<const DenseMatrix*> flatten_params(const ModelParams& params);

// h_r = relu(A_r * H_prev * W_r); the self relation skips the sparse
// product. Zero relation rows produce zero hop vectors.
NodeId hop_representation(Tape& tape, NodeId h_prev,
                          const CompiledRelation& relation, NodeId w_r);

// scores[r-1] = sigmoid(bilinear(h0, hop_reps[r-1], ntn_slices[r-1])),
// each an N x 1 node; `alpha` is their column concatenation (N x p).
struct RelationScores {
  std::vector<NodeId> per_relation;
  NodeId alpha = -1;
};
RelationScores relation_scores(Tape& tape, NodeId h0,
                               const std::vector<NodeId>& hop_reps,
                               const std::vector<NodeId>& ntn_slices);

// One HHR layer: dropout on the input (training only), p+1 hop
// representations, NTN relation-scores, then score-weighted column
// concatenation [h_0 | alpha_1*h_1 | ... | alpha_p*h_p].
struct HhrLayerOutput {
  NodeId h = -1;
  NodeId alpha = -1;
};
HhrLayerOutput hhr_layer_forward(Tape& tape, const std::vector<NodeId>& w_nodes,
                                 const std::vector<NodeId>& ntn_nodes,
                                 const std::vector<CompiledRelation>& relations,
                                 NodeId h_prev, double dropout_rate,
                                 bool training);

// The K stacked HHR layers without the classifier head; used on its own
// for score export.
struct HiddenForwardResult {
  NodeId h = -1;
  std::vector<NodeId> param_nodes;  // layer params only
  RelationScoreReport report;
};
HiddenForwardResult model_forward_hidden(
    Tape& tape, const ModelParams& params, const ModelConfig& config,
    const std::vector<CompiledRelation>& relations, const DenseMatrix& features,
    bool training);

// Full model: K stacked HHR layers, linear classifier, masked softmax
// cross-entropy. Relations must be precompiled (once per run) and must
// outlive the tape.
ModelForwardResult model_forward(Tape& tape, const ModelParams& params,
                                 const ModelConfig& config,
                                 const std::vector<CompiledRelation>& relations,
                                 const DenseMatrix& features,
                                 const std::vector<int>& labels,
                                 const std::vector<int>& mask, bool training);

// Baseline GNN layer: relu(A * H * W) with a fixed normalized adjacency.
NodeId gcn_layer_forward(Tape& tape, const CsrMatrix& a_norm, NodeId h_prev,
                         NodeId w);

// Checkpoint JSON: {"format_version": 1, "config": ..., "layers":
// [{"w": [...], "ntn": [...]}], "classifier": ...} with matrices encoded
// as nested row arrays.
void save_checkpoint(const ModelParams& params, const ModelConfig& config,
                     const std::filesystem::path& path);
struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hhr
