#include "hhr/tape.hpp"

#include <cmath>
#include <string>

#include "hhr/errors.hpp"

namespace hhr {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kSpmm: return "spmm";
    case OpKind::kActivation: return "activation";
    case OpKind::kDropout: return "dropout";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kRowScale: return "row_scale";
    case OpKind::kBatchedBilinear: return "batched_bilinear";
    case OpKind::kSoftmaxCrossEntropy: return "softmax_cross_entropy";
  }
  return "?";
}

}  // namespace

NodeId Tape::push(TapeNode node) {
  if (!all_finite(node.value)) {
    throw InternalError(std::string("tape: non-finite value produced by ") +
                        op_name(node.op));
  }
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

void Tape::check_id(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw InternalError("tape: bad node id " + std::to_string(id));
  }
}

NodeId Tape::input(DenseMatrix value) {
  TapeNode node;
  node.op = OpKind::kLeaf;
  node.value = std::move(value);
  return push(std::move(node));
}

NodeId Tape::param(DenseMatrix value) {
  TapeNode node;
  node.op = OpKind::kLeaf;
  node.value = std::move(value);
  node.is_param = true;
  return push(std::move(node));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  const DenseMatrix& av = nodes_[a].value;
  const DenseMatrix& bv = nodes_[b].value;
  if (av.cols != bv.rows) {
    throw ValidationError("tape matmul: inner dimensions disagree");
  }
  TapeNode node;
  node.op = OpKind::kMatmul;
  node.inputs = {a, b};
  node.value = hhr::matmul(av, bv);
  return push(std::move(node));
}

NodeId Tape::spmm(const CsrMatrix& s, NodeId x) {
  check_id(x);
  const DenseMatrix& xv = nodes_[x].value;
  if (s.cols != xv.rows) {
    throw ValidationError("tape spmm: dimension mismatch");
  }
  TapeNode node;
  node.op = OpKind::kSpmm;
  node.inputs = {x};
  node.sparse = &s;
  node.value = spmm_dense(s, xv);
  return push(std::move(node));
}

NodeId Tape::activation(NodeId x, ActivationKind kind) {
  check_id(x);
  TapeNode node;
  node.op = OpKind::kActivation;
  node.inputs = {x};
  node.act = kind;
  node.value = nodes_[x].value;
  switch (kind) {
    case ActivationKind::kRelu:
      for (double& v : node.value.data) v = v > 0.0 ? v : 0.0;
      break;
    case ActivationKind::kSigmoid:
      for (double& v : node.value.data) v = stable_sigmoid(v);
      break;
    case ActivationKind::kIdentity:
      break;
  }
  return push(std::move(node));
}

NodeId Tape::dropout(NodeId x, double rate, bool training) {
  check_id(x);
  if (rate < 0.0 || rate >= 1.0) {
    throw ValidationError("tape dropout: rate must be in [0, 1)");
  }
  if (!training || rate == 0.0) {
    return x;
  }
  TapeNode node;
  node.op = OpKind::kDropout;
  node.inputs = {x};
  const DenseMatrix& xv = nodes_[x].value;
  node.value = DenseMatrix(xv.rows, xv.cols);
  node.dropout_scale.resize(xv.size());
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double scale = coin(rng_) < rate ? 0.0 : keep_scale;
    node.dropout_scale[i] = scale;
    node.value.data[i] = xv.data[i] * scale;
  }
  return push(std::move(node));
}

NodeId Tape::concat_cols(const std::vector<NodeId>& parts) {
  if (parts.empty()) {
    throw ValidationError("tape concat_cols: no parts");
  }
  std::size_t rows = 0;
  std::size_t total_cols = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    check_id(parts[p]);
    const DenseMatrix& v = nodes_[parts[p]].value;
    if (p == 0) {
      rows = v.rows;
    } else if (v.rows != rows) {
      throw ValidationError("tape concat_cols: row counts differ");
    }
    total_cols += v.cols;
  }
  TapeNode node;
  node.op = OpKind::kConcatCols;
  node.inputs = parts;
  node.value = DenseMatrix(rows, total_cols);
  for (const NodeId part : parts) {
    node.part_cols.push_back(nodes_[part].value.cols);
  }
  for (std::size_t i = 0; i < rows; ++i) {
    double* out = node.value.row(i);
    for (const NodeId part : parts) {
      const DenseMatrix& v = nodes_[part].value;
      const double* in = v.row(i);
      for (std::size_t j = 0; j < v.cols; ++j) *out++ = in[j];
    }
  }
  return push(std::move(node));
}

NodeId Tape::row_scale(NodeId x, NodeId s) {
  check_id(x);
  check_id(s);
  const DenseMatrix& xv = nodes_[x].value;
  const DenseMatrix& sv = nodes_[s].value;
  if (sv.rows != xv.rows || sv.cols != 1) {
    throw ValidationError("tape row_scale: scale must be N x 1");
  }
  TapeNode node;
  node.op = OpKind::kRowScale;
  node.inputs = {x, s};
  node.value = DenseMatrix(xv.rows, xv.cols);
  for (std::size_t i = 0; i < xv.rows; ++i) {
    const double scale = sv(i, 0);
    const double* in = xv.row(i);
    double* out = node.value.row(i);
    for (std::size_t j = 0; j < xv.cols; ++j) out[j] = scale * in[j];
  }
  return push(std::move(node));
}

NodeId Tape::batched_bilinear(NodeId h0, NodeId hr, NodeId w) {
  check_id(h0);
  check_id(hr);
  check_id(w);
  const DenseMatrix& h0v = nodes_[h0].value;
  const DenseMatrix& hrv = nodes_[hr].value;
  const DenseMatrix& wv = nodes_[w].value;
  if (h0v.rows != hrv.rows || h0v.cols != hrv.cols || wv.rows != h0v.cols ||
      wv.cols != h0v.cols) {
    throw ValidationError("tape batched_bilinear: dimension mismatch");
  }
  TapeNode node;
  node.op = OpKind::kBatchedBilinear;
  node.inputs = {h0, hr, w};
  node.value = DenseMatrix(h0v.rows, 1);
  const std::size_t d = h0v.cols;
  for (std::size_t i = 0; i < h0v.rows; ++i) {
    const double* a = h0v.row(i);
    const double* b = hrv.row(i);
    double out = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double* wrow = wv.row(k);
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += wrow[j] * b[j];
      out += a[k] * acc;
    }
    node.value(i, 0) = out;
  }
  return push(std::move(node));
}

NodeId Tape::softmax_cross_entropy(NodeId logits, const std::vector<int>& labels,
                                   const std::vector<int>& mask) {
  check_id(logits);
  const DenseMatrix& z = nodes_[logits].value;
  if (mask.empty()) {
    throw ValidationError("tape softmax_cross_entropy: empty mask");
  }
  if (labels.size() != z.rows) {
    throw ValidationError("tape softmax_cross_entropy: labels length != rows");
  }
  const int num_classes = static_cast<int>(z.cols);
  for (int l : mask) {
    if (l < 0 || static_cast<std::size_t>(l) >= z.rows) {
      throw ValidationError("tape softmax_cross_entropy: mask id out of range");
    }
    if (labels[l] < 0 || labels[l] >= num_classes) {
      throw ValidationError("tape softmax_cross_entropy: label out of range "
                            "for node " + std::to_string(l));
    }
  }
  TapeNode node;
  node.op = OpKind::kSoftmaxCrossEntropy;
  node.inputs = {logits};
  node.mask = mask;
  node.labels = labels;
  node.softmax = DenseMatrix(mask.size(), z.cols);
  double loss = 0.0;
  for (std::size_t m = 0; m < mask.size(); ++m) {
    const int l = mask[m];
    const double* row = z.row(l);
    double row_max = row[0];
    for (std::size_t f = 1; f < z.cols; ++f) row_max = std::max(row_max, row[f]);
    double denom = 0.0;
    for (std::size_t f = 0; f < z.cols; ++f) {
      const double e = std::exp(row[f] - row_max);
      node.softmax(m, f) = e;
      denom += e;
    }
    for (std::size_t f = 0; f < z.cols; ++f) node.softmax(m, f) /= denom;
    loss += std::log(denom) - (row[labels[l]] - row_max);
  }
  node.value = DenseMatrix(1, 1);
  node.value(0, 0) = loss;
  return push(std::move(node));
}

double Tape::scalar(NodeId id) const {
  check_id(id);
  const DenseMatrix& v = nodes_[id].value;
  if (v.rows != 1 || v.cols != 1) {
    throw InternalError("tape scalar: node is not 1x1");
  }
  return v(0, 0);
}

void Tape::backward(NodeId loss) {
  check_id(loss);
  const DenseMatrix& lv = nodes_[loss].value;
  if (lv.rows != 1 || lv.cols != 1) {
    throw ValidationError("tape backward: loss must be a 1x1 node");
  }
  for (auto& node : nodes_) {
    node.adjoint = DenseMatrix(node.value.rows, node.value.cols);
  }
  nodes_[loss].adjoint(0, 0) = 1.0;
  backward_visits_ = 0;

  for (NodeId id = static_cast<NodeId>(nodes_.size()) - 1; id >= 0; --id) {
    TapeNode& node = nodes_[id];
    ++backward_visits_;
    const DenseMatrix& dy = node.adjoint;
    switch (node.op) {
      case OpKind::kLeaf:
        break;
      case OpKind::kMatmul: {
        const DenseMatrix& a = nodes_[node.inputs[0]].value;
        const DenseMatrix& b = nodes_[node.inputs[1]].value;
        DenseMatrix da = matmul_nt(dy, b);
        DenseMatrix db = matmul_tn(a, dy);
        for (std::size_t i = 0; i < da.size(); ++i) {
          nodes_[node.inputs[0]].adjoint.data[i] += da.data[i];
        }
        for (std::size_t i = 0; i < db.size(); ++i) {
          nodes_[node.inputs[1]].adjoint.data[i] += db.data[i];
        }
        break;
      }
      case OpKind::kSpmm: {
        // dX = S^T * dY, accumulated row-sequentially for determinism.
        DenseMatrix& dx = nodes_[node.inputs[0]].adjoint;
        const CsrMatrix& s = *node.sparse;
        for (std::size_t i = 0; i < s.rows; ++i) {
          const double* dyrow = dy.row(i);
          for (std::size_t k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k) {
            double* dxrow = dx.row(s.col_idx[k]);
            const double v = s.values[k];
            for (std::size_t j = 0; j < dy.cols; ++j) {
              dxrow[j] += v * dyrow[j];
            }
          }
        }
        break;
      }
      case OpKind::kActivation: {
        const DenseMatrix& x = nodes_[node.inputs[0]].value;
        DenseMatrix& dx = nodes_[node.inputs[0]].adjoint;
        switch (node.act) {
          case ActivationKind::kRelu:
            for (std::size_t i = 0; i < x.size(); ++i) {
              if (x.data[i] > 0.0) dx.data[i] += dy.data[i];
            }
            break;
          case ActivationKind::kSigmoid:
            for (std::size_t i = 0; i < x.size(); ++i) {
              const double y = node.value.data[i];
              dx.data[i] += y * (1.0 - y) * dy.data[i];
            }
            break;
          case ActivationKind::kIdentity:
            for (std::size_t i = 0; i < x.size(); ++i) {
              dx.data[i] += dy.data[i];
            }
            break;
        }
        break;
      }
      case OpKind::kDropout: {
        DenseMatrix& dx = nodes_[node.inputs[0]].adjoint;
        for (std::size_t i = 0; i < dx.size(); ++i) {
          dx.data[i] += node.dropout_scale[i] * dy.data[i];
        }
        break;
      }
      case OpKind::kConcatCols: {
        for (std::size_t i = 0; i < dy.rows; ++i) {
          const double* src = dy.row(i);
          for (std::size_t p = 0; p < node.inputs.size(); ++p) {
            DenseMatrix& dpart = nodes_[node.inputs[p]].adjoint;
            double* dst = dpart.row(i);
            for (std::size_t j = 0; j < node.part_cols[p]; ++j) *dst++ += *src++;
          }
        }
        break;
      }
      case OpKind::kRowScale: {
        const DenseMatrix& x = nodes_[node.inputs[0]].value;
        const DenseMatrix& s = nodes_[node.inputs[1]].value;
        DenseMatrix& dx = nodes_[node.inputs[0]].adjoint;
        DenseMatrix& ds = nodes_[node.inputs[1]].adjoint;
        for (std::size_t i = 0; i < x.rows; ++i) {
          const double scale = s(i, 0);
          const double* dyrow = dy.row(i);
          const double* xrow = x.row(i);
          double* dxrow = dx.row(i);
          double dot = 0.0;
          for (std::size_t j = 0; j < x.cols; ++j) {
            dxrow[j] += scale * dyrow[j];
            dot += xrow[j] * dyrow[j];
          }
          ds(i, 0) += dot;
        }
        break;
      }
      case OpKind::kBatchedBilinear: {
        const DenseMatrix& h0 = nodes_[node.inputs[0]].value;
        const DenseMatrix& hr = nodes_[node.inputs[1]].value;
        const DenseMatrix& w = nodes_[node.inputs[2]].value;
        DenseMatrix& dh0 = nodes_[node.inputs[0]].adjoint;
        DenseMatrix& dhr = nodes_[node.inputs[1]].adjoint;
        DenseMatrix& dw = nodes_[node.inputs[2]].adjoint;
        const std::size_t d = h0.cols;
        for (std::size_t i = 0; i < h0.rows; ++i) {
          const double g = dy(i, 0);
          if (g == 0.0) continue;
          const double* a = h0.row(i);
          const double* b = hr.row(i);
          double* da = dh0.row(i);
          double* db = dhr.row(i);
          for (std::size_t k = 0; k < d; ++k) {
            const double* wrow = w.row(k);
            double* dwrow = dw.row(k);
            double wa_dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              wa_dot += wrow[j] * b[j];
              db[j] += g * a[k] * wrow[j];
              dwrow[j] += g * a[k] * b[j];
            }
            da[k] += g * wa_dot;
          }
        }
        break;
      }
      case OpKind::kSoftmaxCrossEntropy: {
        const double g = dy(0, 0);
        DenseMatrix& dz = nodes_[node.inputs[0]].adjoint;
        for (std::size_t m = 0; m < node.mask.size(); ++m) {
          const int l = node.mask[m];
          double* dzrow = dz.row(l);
          const double* probs = node.softmax.row(m);
          for (std::size_t f = 0; f < dz.cols; ++f) {
            dzrow[f] += g * probs[f];
          }
          dzrow[node.labels[l]] -= g;
        }
        break;
      }
    }
  }
}

double finite_diff_check(const std::function<double()>& f,
                         const std::vector<DenseMatrix*>& params,
                         const std::vector<const DenseMatrix*>& analytic,
                         double step) {
  if (params.size() != analytic.size()) {
    throw ValidationError("finite_diff_check: params/analytic size mismatch");
  }
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    DenseMatrix& theta = *params[p];
    const DenseMatrix& grad = *analytic[p];
    if (!theta.same_shape(grad)) {
      throw ValidationError("finite_diff_check: gradient shape mismatch");
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta.data[i];
      theta.data[i] = saved + step;
      const double fp = f();
      theta.data[i] = saved - step;
      const double fm = f();
      theta.data[i] = saved;
      const double fd = (fp - fm) / (2.0 * step);
      const double g = grad.data[i];
      const double rel =
          std::fabs(g - fd) / std::max({1.0, std::fabs(g), std::fabs(fd)});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace hhr
