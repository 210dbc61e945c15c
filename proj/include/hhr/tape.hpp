#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "hhr/csr.hpp"
#include "hhr/dense.hpp"

namespace hhr {

using NodeId = int;

enum class ActivationKind { kRelu, kSigmoid, kIdentity };

enum class OpKind {
  kLeaf,
  kMatmul,
  kSpmm,
  kActivation,
  kDropout,
  kConcatCols,
  kRowScale,
  kBatchedBilinear,
  kSoftmaxCrossEntropy,
};

struct TapeNode {
  OpKind op = OpKind::kLeaf;
  std::vector<NodeId> inputs;
  DenseMatrix value;
  DenseMatrix adjoint;  // zeroed at the start of backward
  bool is_param = false;

  // Constant attachments, populated per op kind.
  const CsrMatrix* sparse = nullptr;        // kSpmm; not differentiated
  ActivationKind act = ActivationKind::kIdentity;
  std::vector<double> dropout_scale;        // kDropout; 0 or 1/(1-rate), reused in backward
  std::vector<std::size_t> part_cols;       // kConcatCols
  std::vector<int> mask;                    // kSoftmaxCrossEntropy: labeled node ids
  std::vector<int> labels;                  // kSoftmaxCrossEntropy: per-row class or -1
  DenseMatrix softmax;                      // kSoftmaxCrossEntropy: cached probs, |mask| x F
};

// Recorded differentiable computation over dense matrices. Values are
// computed eagerly as ops are recorded; backward replays the record in
// strictly decreasing id order, so inputs always precede their consumers.
// Any non-finite value produced by a forward op is a hard error.
//
// Single-threaded by contract: one tape per training run.
class Tape {
 public:
  explicit Tape(std::uint64_t dropout_seed = 0) : rng_(dropout_seed) {}

  NodeId input(DenseMatrix value);
  NodeId param(DenseMatrix value);

  // C = A * B; dA = dC * B^T, dB = A^T * dC.
  NodeId matmul(NodeId a, NodeId b);

  // Y = S * X with S a constant sparse matrix (no gradient); dX = S^T * dY.
  // `s` must outlive the tape.
  NodeId spmm(const CsrMatrix& s, NodeId x);

  // Elementwise; relu uses subgradient 0 at 0.
  NodeId activation(NodeId x, ActivationKind kind);

  // Inverted dropout: training mode zeroes entries with probability `rate`
  // and scales survivors by 1/(1-rate); eval mode (or rate 0) is a no-op
  // that returns `x` itself. The mask is stored for backward.
  NodeId dropout(NodeId x, double rate, bool training);

  // Column-wise concatenation of equal-row-count parts.
  NodeId concat_cols(const std::vector<NodeId>& parts);

  // Y[i,:] = s[i] * X[i,:] with s an N x 1 node; ds[i] = <X[i,:], dY[i,:]>.
  NodeId row_scale(NodeId x, NodeId s);

  // out[i] = h0[i,:] * W * hr[i,:]^T, an N x 1 column.
  NodeId batched_bilinear(NodeId h0, NodeId hr, NodeId w);

  // Unaveraged sum of -ln softmax(logits[l])[label_l] over l in mask,
  // stabilized by row-max subtraction. Returns a 1 x 1 node.
  NodeId softmax_cross_entropy(NodeId logits, const std::vector<int>& labels,
                               const std::vector<int>& mask);

  const DenseMatrix& value(NodeId id) const { return nodes_[id].value; }
  const DenseMatrix& adjoint(NodeId id) const { return nodes_[id].adjoint; }
  double scalar(NodeId id) const;

  // Exact reverse-mode accumulation seeded with d(loss) = 1. Parameters
  // used multiple times receive summed adjoints.
  void backward(NodeId loss);

  std::size_t size() const { return nodes_.size(); }
  // Number of nodes visited by the last backward pass (cost contract:
  // each node exactly once).
  std::size_t backward_visits() const { return backward_visits_; }

 private:
  NodeId push(TapeNode node);
  void check_id(NodeId id) const;

  std::vector<TapeNode> nodes_;
  std::mt19937_64 rng_;
  std::size_t backward_visits_ = 0;
};

// Central-difference gradient check: perturbs every entry of every matrix in
// `params` by +/- step, re-evaluates `f`, and compares against the matching
// `analytic` gradient. Relative error is |g - g_fd| / max(1, |g|, |g_fd|).
// Callers must freeze any stochastic choices (dropout off) inside `f`.
double finite_diff_check(const std::function<double()>& f,
                         const std::vector<DenseMatrix*>& params,
                         const std::vector<const DenseMatrix*>& analytic,
                         double step);

}  // namespace hhr
