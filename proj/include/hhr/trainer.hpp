#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hhr/graph.hpp"
#include "hhr/model.hpp"

namespace hhr {

struct OptimHyper {
  double lr = 0.008;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Decoupled: theta <- theta - lr * weight_decay * theta before the
  // bias-corrected Adam update, so the checked loss stays pure.
  double weight_decay = 5e-4;
  int max_epochs = 500;
  int patience = 20;

  void validate() const;
};

struct AdamState {
  std::vector<DenseMatrix> m;  // first moments, shapes mirror the params
  std::vector<DenseMatrix> v;  // second moments
  long step = 0;
};

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double loss = 0.0;
  std::vector<double> per_class_precision;
  std::vector<double> per_class_recall;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double val_macro_f1 = 0.0;
  double epoch_seconds = 0.0;
};

struct TrainResult {
  ModelParams best_params;
  int best_epoch = 0;
  std::vector<EpochRecord> history;
  std::vector<CompiledRelation> relations;  // compiled once, reusable by callers
};

// One decoupled-weight-decay + bias-corrected Adam update over a flat
// parameter list; `grads` must align with `params`.
void adam_step(const std::vector<DenseMatrix*>& params,
               const std::vector<const DenseMatrix*>& grads, AdamState& state,
               const OptimHyper& hyper);

// Full-batch training with early stopping on validation accuracy (ties
// broken by lower validation loss). Relations are compiled exactly once
// before epoch 0. Throws InternalError if the loss goes non-finite.
TrainResult train(const Graph& graph, const SplitSet& splits,
                  const ModelConfig& config, const OptimHyper& hyper);

// Eval-mode forward, argmax over `mask`. Pure: never mutates inputs.
Metrics evaluate(const ModelParams& params, const ModelConfig& config,
                 const Graph& graph,
                 const std::vector<CompiledRelation>& relations,
                 const std::vector<int>& mask);

Metrics metrics_from_predictions(const std::vector<int>& predictions,
                                 const std::vector<int>& labels,
                                 const std::vector<int>& mask, int num_classes,
                                 double loss);

// Whole-model oracle: gradient of the masked loss for every parameter
// entry vs central finite differences (dropout disabled, h = 1e-5).
// Returns the worst relative error.
double grad_check_model(const ModelConfig& config, const Graph& graph,
                        const std::vector<int>& mask);

// Two-layer GCN baseline trained with the same loop (symmetric-normalized
// adjacency with self-loops, union of all edge types).
struct GcnConfig {
  int hidden_dim = 32;
  double dropout = 0.5;
  std::uint64_t seed = 1;
};
struct GcnResult {
  std::vector<DenseMatrix> best_params;  // {W1, W2}
  int best_epoch = 0;
  std::vector<EpochRecord> history;
  Metrics test_metrics;
};
GcnResult train_gcn(const Graph& graph, const SplitSet& splits,
                    const GcnConfig& config, const OptimHyper& hyper);

// history.csv: epoch,train_loss,val_accuracy,val_macro_f1,epoch_seconds.
void save_history_csv(const std::vector<EpochRecord>& history,
                      const std::filesystem::path& path);
// metrics.json: final test metrics plus the best (early-stopped) epoch.
void save_metrics_json(const Metrics& test_metrics, int best_epoch,
                       const std::filesystem::path& path);

}  // namespace hhr
