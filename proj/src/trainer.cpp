#include "hhr/trainer.hpp"

#include <chrono>
#include <cmath>
#include <functional>

#include <json.hpp>

#include "hhr/errors.hpp"
#include "hhr/io_util.hpp"
#include "hhr/tape.hpp"

namespace hhr {

void OptimHyper::validate() const {
  if (lr <= 0.0) throw ValidationError("optim: lr must be > 0");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw ValidationError("optim: betas must be in [0, 1)");
  }
  if (weight_decay < 0.0) throw ValidationError("optim: weight_decay must be >= 0");
  if (max_epochs < 1) throw ValidationError("optim: max_epochs must be >= 1");
  if (patience < 1) throw ValidationError("optim: patience must be >= 1");
}

void adam_step(const std::vector<DenseMatrix*>& params,
               const std::vector<const DenseMatrix*>& grads, AdamState& state,
               const OptimHyper& hyper) {
  if (params.size() != grads.size()) {
    throw ValidationError("adam_step: params/grads size mismatch");
  }
  if (state.step == 0) {
    state.m.clear();
    state.v.clear();
    for (const DenseMatrix* p : params) {
      state.m.emplace_back(p->rows, p->cols);
      state.v.emplace_back(p->rows, p->cols);
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    DenseMatrix& theta = *params[p];
    const DenseMatrix& g = *grads[p];
    if (!theta.same_shape(g)) {
      throw ValidationError("adam_step: gradient shape mismatch");
    }
    DenseMatrix& m = state.m[p];
    DenseMatrix& v = state.v[p];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      theta.data[i] -= hyper.lr * hyper.weight_decay * theta.data[i];
      m.data[i] = hyper.beta1 * m.data[i] + (1.0 - hyper.beta1) * g.data[i];
      v.data[i] = hyper.beta2 * v.data[i] + (1.0 - hyper.beta2) * g.data[i] * g.data[i];
      const double m_hat = m.data[i] / bc1;
      const double v_hat = v.data[i] / bc2;
      theta.data[i] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
    }
  }
}

Metrics metrics_from_predictions(const std::vector<int>& predictions,
                                 const std::vector<int>& labels,
                                 const std::vector<int>& mask, int num_classes,
                                 double loss) {
  if (mask.empty()) {
    throw ValidationError("metrics: empty mask");
  }
  std::vector<long> true_pos(num_classes, 0);
  std::vector<long> pred_count(num_classes, 0);
  std::vector<long> truth_count(num_classes, 0);
  long correct = 0;
  for (std::size_t m = 0; m < mask.size(); ++m) {
    const int node = mask[m];
    const int pred = predictions[m];
    const int truth = labels[node];
    if (truth < 0 || truth >= num_classes) {
      throw ValidationError("metrics: unlabeled node in mask");
    }
    ++pred_count[pred];
    ++truth_count[truth];
    if (pred == truth) {
      ++correct;
      ++true_pos[truth];
    }
  }
  Metrics out;
  out.loss = loss;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(mask.size());
  double f1_sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    const double precision =
        pred_count[c] > 0 ? static_cast<double>(true_pos[c]) / pred_count[c] : 0.0;
    const double recall =
        truth_count[c] > 0 ? static_cast<double>(true_pos[c]) / truth_count[c] : 0.0;
    out.per_class_precision.push_back(precision);
    out.per_class_recall.push_back(recall);
    // Classes absent from both prediction and truth contribute 0.
    const double f1 = precision + recall > 0.0
                          ? 2.0 * precision * recall / (precision + recall)
                          : 0.0;
    f1_sum += f1;
  }
  out.macro_f1 = f1_sum / static_cast<double>(num_classes);
  return out;
}

namespace {

std::vector<int> argmax_rows(const DenseMatrix& logits, const std::vector<int>& mask) {
  std::vector<int> preds;
  preds.reserve(mask.size());
  for (const int node : mask) {
    const double* row = logits.row(node);
    int best = 0;
    for (std::size_t f = 1; f < logits.cols; ++f) {
      if (row[f] > row[best]) best = static_cast<int>(f);
    }
    preds.push_back(best);
  }
  return preds;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct LoopForward {
  NodeId loss = -1;
  NodeId logits = -1;
  std::vector<NodeId> param_nodes;
};

// Shared full-batch loop: forward/backward/Adam on the train mask, val
// metrics each epoch, early stopping on val accuracy with loss tiebreak.
struct LoopResult {
  std::vector<DenseMatrix> best_params;
  int best_epoch = 0;
  std::vector<EpochRecord> history;
};

LoopResult run_training_loop(
    const std::function<LoopForward(Tape&, bool, const std::vector<int>&)>& forward,
    const std::vector<DenseMatrix*>& params, const std::vector<int>& labels,
    int num_classes, const SplitSet& splits, const OptimHyper& hyper,
    std::uint64_t run_seed) {
  hyper.validate();
  AdamState adam;
  LoopResult result;
  result.history.reserve(static_cast<std::size_t>(hyper.max_epochs));
  double best_acc = -1.0;
  double best_loss = 0.0;
  int since_improvement = 0;

  for (int epoch = 0; epoch < hyper.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();

    Tape tape(mix_seed(run_seed, static_cast<std::uint64_t>(epoch)));
    const LoopForward fwd = forward(tape, /*training=*/true, splits.train);
    const double train_loss = tape.scalar(fwd.loss);
    if (!std::isfinite(train_loss)) {
      throw InternalError("training diverged: non-finite loss at epoch " +
                          std::to_string(epoch));
    }
    tape.backward(fwd.loss);
    std::vector<const DenseMatrix*> grads;
    grads.reserve(fwd.param_nodes.size());
    for (const NodeId id : fwd.param_nodes) {
      grads.push_back(&tape.adjoint(id));
    }
    adam_step(params, grads, adam, hyper);

    Tape eval_tape;
    const LoopForward val_fwd = forward(eval_tape, /*training=*/false, splits.val);
    const double val_loss = eval_tape.scalar(val_fwd.loss);
    const Metrics val_metrics = metrics_from_predictions(
        argmax_rows(eval_tape.value(val_fwd.logits), splits.val), labels,
        splits.val, num_classes, val_loss);

    const auto t1 = std::chrono::steady_clock::now();
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = train_loss;
    record.val_accuracy = val_metrics.accuracy;
    record.val_macro_f1 = val_metrics.macro_f1;
    record.epoch_seconds = std::chrono::duration<double>(t1 - t0).count();
    result.history.push_back(record);

    const bool improved = val_metrics.accuracy > best_acc ||
                          (val_metrics.accuracy == best_acc && val_loss < best_loss);
    if (improved) {
      best_acc = val_metrics.accuracy;
      best_loss = val_loss;
      result.best_epoch = epoch;
      if (result.best_params.empty()) {
        for (const DenseMatrix* p : params) result.best_params.push_back(*p);
      } else {
        // Copy in place; snapshot buffers are reused across epochs.
        for (std::size_t i = 0; i < params.size(); ++i) {
          result.best_params[i] = *params[i];
        }
      }
      since_improvement = 0;
    } else {
      ++since_improvement;
      if (since_improvement >= hyper.patience) break;
    }
  }
  return result;
}

}  // namespace

TrainResult train(const Graph& graph, const SplitSet& splits,
                  const ModelConfig& config, const OptimHyper& hyper) {
  config.validate();
  graph.validate();
  if (config.num_classes != graph.num_classes) {
    throw ValidationError("train: config num_classes != graph num_classes");
  }
  if (splits.train.empty() || splits.val.empty()) {
    throw ValidationError("train: empty train or val split");
  }

  // Precomputed once; reused by every epoch and returned to the caller.
  std::vector<CompiledRelation> relations =
      compile_relations(graph, config.relations);

  ModelParams params = init_params(config, graph.feature_dim);
  std::vector<DenseMatrix*> flat = flatten_params(params);

  const auto forward = [&](Tape& tape, bool training,
                           const std::vector<int>& mask) {
    const ModelForwardResult r = model_forward(
        tape, params, config, relations, graph.features, graph.labels, mask,
        training);
    return LoopForward{r.loss, r.logits, r.param_nodes};
  };

  LoopResult loop = run_training_loop(forward, flat, graph.labels,
                                      graph.num_classes, splits, hyper,
                                      config.seed);

  TrainResult result;
  result.best_epoch = loop.best_epoch;
  result.history = std::move(loop.history);
  // Restore the best-val snapshot into structured params.
  for (std::size_t i = 0; i < flat.size(); ++i) {
    *flat[i] = loop.best_params[i];
  }
  result.best_params = std::move(params);
  result.relations = std::move(relations);
  return result;
}

Metrics evaluate(const ModelParams& params, const ModelConfig& config,
                 const Graph& graph,
                 const std::vector<CompiledRelation>& relations,
                 const std::vector<int>& mask) {
  if (mask.empty()) {
    throw ValidationError("evaluate: empty mask");
  }
  Tape tape;
  const ModelForwardResult r = model_forward(tape, params, config, relations,
                                             graph.features, graph.labels, mask,
                                             /*training=*/false);
  return metrics_from_predictions(argmax_rows(tape.value(r.logits), mask),
                                  graph.labels, mask, graph.num_classes,
                                  tape.scalar(r.loss));
}

double grad_check_model(const ModelConfig& config, const Graph& graph,
                        const std::vector<int>& mask) {
  const std::vector<CompiledRelation> relations =
      compile_relations(graph, config.relations);
  ModelParams params = init_params(config, graph.feature_dim);

  Tape tape;
  const ModelForwardResult fwd = model_forward(tape, params, config, relations,
                                               graph.features, graph.labels,
                                               mask, /*training=*/false);
  tape.backward(fwd.loss);
  std::vector<DenseMatrix> analytic;
  analytic.reserve(fwd.param_nodes.size());
  for (const NodeId id : fwd.param_nodes) {
    analytic.push_back(tape.adjoint(id));
  }

  const auto loss_value = [&]() {
    Tape t;
    const ModelForwardResult r = model_forward(t, params, config, relations,
                                               graph.features, graph.labels,
                                               mask, /*training=*/false);
    return t.scalar(r.loss);
  };

  std::vector<DenseMatrix*> flat = flatten_params(params);
  std::vector<const DenseMatrix*> analytic_ptrs;
  for (const DenseMatrix& g : analytic) analytic_ptrs.push_back(&g);
  return finite_diff_check(loss_value, flat, analytic_ptrs, 1e-5);
}

GcnResult train_gcn(const Graph& graph, const SplitSet& splits,
                    const GcnConfig& config, const OptimHyper& hyper) {
  graph.validate();
  // Standard GCN propagation matrix: symmetric normalization of the
  // symmetrized union adjacency with self-loops.
  const CompiledRelation base = compile_relation(
      graph, RelationSpec::power("gcn_base", 1, Normalization::kNone));
  const CsrMatrix a_norm =
      normalize(add(base.matrix, CsrMatrix::identity(base.matrix.rows)),
                Normalization::kSymmetric);

  std::mt19937_64 rng(config.seed);
  const auto glorot = [&rng](std::size_t rows, std::size_t cols) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseMatrix m(rows, cols);
    for (double& v : m.data) v = dist(rng);
    return m;
  };
  std::vector<DenseMatrix> weights;
  weights.push_back(glorot(graph.feature_dim, config.hidden_dim));
  weights.push_back(glorot(config.hidden_dim, graph.num_classes));
  std::vector<DenseMatrix*> flat = {&weights[0], &weights[1]};

  const auto forward = [&](Tape& tape, bool training,
                           const std::vector<int>& mask) {
    const NodeId x = tape.input(graph.features);
    const NodeId w1 = tape.param(weights[0]);
    const NodeId w2 = tape.param(weights[1]);
    const NodeId h0 = tape.dropout(x, config.dropout, training);
    const NodeId h1 = gcn_layer_forward(tape, a_norm, h0, w1);
    const NodeId h1d = tape.dropout(h1, config.dropout, training);
    const NodeId logits = tape.matmul(tape.spmm(a_norm, h1d), w2);
    const NodeId loss = tape.softmax_cross_entropy(logits, graph.labels, mask);
    return LoopForward{loss, logits, {w1, w2}};
  };

  LoopResult loop = run_training_loop(forward, flat, graph.labels,
                                      graph.num_classes, splits, hyper,
                                      config.seed);
  weights[0] = loop.best_params[0];
  weights[1] = loop.best_params[1];

  Tape tape;
  const LoopForward test_fwd = forward(tape, /*training=*/false, splits.test);
  GcnResult result;
  result.best_params = std::move(loop.best_params);
  result.best_epoch = loop.best_epoch;
  result.history = std::move(loop.history);
  result.test_metrics = metrics_from_predictions(
      argmax_rows(tape.value(test_fwd.logits), splits.test), graph.labels,
      splits.test, graph.num_classes, tape.scalar(test_fwd.loss));
  return result;
}

void save_history_csv(const std::vector<EpochRecord>& history,
                      const std::filesystem::path& path) {
  std::string out = "epoch,train_loss,val_accuracy,val_macro_f1,epoch_seconds\n";
  for (const EpochRecord& r : history) {
    out += std::to_string(r.epoch);
    out += ',';
    out += format_double(r.train_loss);
    out += ',';
    out += format_double(r.val_accuracy);
    out += ',';
    out += format_double(r.val_macro_f1);
    out += ',';
    out += format_double(r.epoch_seconds);
    out += '\n';
  }
  atomic_write_file(path, out);
}

void save_metrics_json(const Metrics& test_metrics, int best_epoch,
                       const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["best_epoch"] = best_epoch;
  doc["test"]["accuracy"] = test_metrics.accuracy;
  doc["test"]["macro_f1"] = test_metrics.macro_f1;
  doc["test"]["loss"] = test_metrics.loss;
  doc["test"]["per_class_precision"] = test_metrics.per_class_precision;
  doc["test"]["per_class_recall"] = test_metrics.per_class_recall;
  atomic_write_file(path, doc.dump(2) + "\n");
}

}  // namespace hhr
