#include "hhr/csr.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <set>

#include "hhr/errors.hpp"
#include "hhr/io_util.hpp"

namespace hhr {

namespace {
std::atomic<std::uint64_t> g_compile_calls{0};
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
  CsrMatrix m(n, n);
  m.col_idx.resize(n);
  m.values.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    m.row_ptr[i + 1] = i + 1;
    m.col_idx[i] = i;
  }
  return m;
}

CsrMatrix CsrMatrix::from_triples(
    std::size_t rows, std::size_t cols,
    std::vector<std::tuple<std::size_t, std::size_t, double>> triples) {
  for (const auto& [r, c, v] : triples) {
    if (r >= rows || c >= cols) {
      throw ValidationError("from_triples: index out of range");
    }
  }
  std::sort(triples.begin(), triples.end(),
            [](const auto& a, const auto& b) {
              return std::tie(std::get<0>(a), std::get<1>(a)) <
                     std::tie(std::get<0>(b), std::get<1>(b));
            });
  CsrMatrix m(rows, cols);
  std::size_t i = 0;
  while (i < triples.size()) {
    const std::size_t r = std::get<0>(triples[i]);
    const std::size_t c = std::get<1>(triples[i]);
    double sum = 0.0;
    while (i < triples.size() && std::get<0>(triples[i]) == r &&
           std::get<1>(triples[i]) == c) {
      sum += std::get<2>(triples[i]);
      ++i;
    }
    if (sum != 0.0) {
      m.col_idx.push_back(c);
      m.values.push_back(sum);
      ++m.row_ptr[r + 1];
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    m.row_ptr[r + 1] += m.row_ptr[r];
  }
  return m;
}

DenseMatrix CsrMatrix::to_dense() const {
  DenseMatrix d(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      d(i, col_idx[k]) = values[k];
    }
  }
  return d;
}

RelationSpec RelationSpec::power(std::string name, int hops, Normalization norm) {
  if (hops < 0) {
    throw ValidationError("RelationSpec: power hop count must be >= 0");
  }
  RelationSpec spec;
  spec.name = std::move(name);
  spec.kind = PowerKind{hops};
  spec.normalization = norm;
  spec.binarize = false;
  return spec;
}

RelationSpec RelationSpec::meta_path_sum(std::string name,
                                         std::vector<std::vector<int>> paths,
                                         Normalization norm, bool binarize) {
  if (paths.empty()) {
    throw ValidationError("RelationSpec: meta-path sum needs at least one path");
  }
  for (const auto& path : paths) {
    if (path.empty()) {
      throw ValidationError("RelationSpec: empty meta-path");
    }
  }
  RelationSpec spec;
  spec.name = std::move(name);
  spec.kind = MetaPathSumKind{std::move(paths)};
  spec.normalization = norm;
  spec.binarize = binarize;
  return spec;
}

bool RelationSpec::is_identity() const {
  const auto* power = std::get_if<PowerKind>(&kind);
  return power != nullptr && power->hops == 0;
}

CsrMatrix build_typed_adjacency(const Graph& graph, int edge_type) {
  if (edge_type < 0 || edge_type >= graph.num_edge_types()) {
    throw ValidationError("build_typed_adjacency: edge type out of range");
  }
  const std::size_t n = static_cast<std::size_t>(graph.num_nodes);
  std::vector<std::tuple<std::size_t, std::size_t, double>> triples;
  for (const Edge& e : graph.edges) {
    if (e.edge_type == edge_type) {
      triples.emplace_back(static_cast<std::size_t>(e.dst),
                           static_cast<std::size_t>(e.src), 1.0);
    }
  }
  CsrMatrix m = CsrMatrix::from_triples(n, n, std::move(triples));
  // Parallel edges collapse to a single 1.
  for (double& v : m.values) v = 1.0;
  return m;
}

CsrMatrix normalize(const CsrMatrix& m, Normalization mode) {
  switch (mode) {
    case Normalization::kNone:
      return m;
    case Normalization::kRow: {
      CsrMatrix out = m;
      for (std::size_t i = 0; i < m.rows; ++i) {
        double sum = 0.0;
        for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
          sum += m.values[k];
        }
        if (sum != 0.0) {
          for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
            out.values[k] = m.values[k] / sum;
          }
        }
      }
      return out;
    }
    case Normalization::kSymmetric: {
      if (m.rows != m.cols) {
        throw ValidationError("normalize: symmetric mode needs a square matrix");
      }
      for (double v : m.values) {
        if (v < 0.0) {
          throw ValidationError("normalize: symmetric mode rejects negative values");
        }
      }
      std::vector<double> inv_sqrt_deg(m.rows, 0.0);
      for (std::size_t i = 0; i < m.rows; ++i) {
        double deg = 0.0;
        for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
          deg += m.values[k];
        }
        if (deg > 0.0) inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
      }
      CsrMatrix out = m;
      for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
          out.values[k] = inv_sqrt_deg[i] * m.values[k] * inv_sqrt_deg[m.col_idx[k]];
        }
      }
      return out;
    }
  }
  throw InternalError("normalize: unreachable");
}

CsrMatrix spmm_sparse(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.cols != b.rows) {
    throw ValidationError("spmm_sparse: dimension mismatch");
  }
  CsrMatrix c(a.rows, b.cols);
  // SMMP-style row-at-a-time expansion with a dense accumulator; column
  // indices are emitted sorted so the output is canonical.
  std::vector<double> acc(b.cols, 0.0);
  std::vector<std::ptrdiff_t> mark(b.cols, -1);
  std::vector<std::size_t> touched;
  for (std::size_t i = 0; i < a.rows; ++i) {
    touched.clear();
    for (std::size_t ka = a.row_ptr[i]; ka < a.row_ptr[i + 1]; ++ka) {
      const std::size_t j = a.col_idx[ka];
      const double av = a.values[ka];
      for (std::size_t kb = b.row_ptr[j]; kb < b.row_ptr[j + 1]; ++kb) {
        const std::size_t col = b.col_idx[kb];
        if (mark[col] != static_cast<std::ptrdiff_t>(i)) {
          mark[col] = static_cast<std::ptrdiff_t>(i);
          acc[col] = 0.0;
          touched.push_back(col);
        }
        acc[col] += av * b.values[kb];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (std::size_t col : touched) {
      if (acc[col] != 0.0) {
        c.col_idx.push_back(col);
        c.values.push_back(acc[col]);
      }
    }
    c.row_ptr[i + 1] = c.col_idx.size();
  }
  return c;
}

CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw ValidationError("add: dimension mismatch");
  }
  CsrMatrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    std::size_t ka = a.row_ptr[i];
    std::size_t kb = b.row_ptr[i];
    const std::size_t ea = a.row_ptr[i + 1];
    const std::size_t eb = b.row_ptr[i + 1];
    while (ka < ea || kb < eb) {
      std::size_t col;
      double v;
      if (kb >= eb || (ka < ea && a.col_idx[ka] < b.col_idx[kb])) {
        col = a.col_idx[ka];
        v = a.values[ka++];
      } else if (ka >= ea || b.col_idx[kb] < a.col_idx[ka]) {
        col = b.col_idx[kb];
        v = b.values[kb++];
      } else {
        col = a.col_idx[ka];
        v = a.values[ka++] + b.values[kb++];
      }
      if (v != 0.0) {
        c.col_idx.push_back(col);
        c.values.push_back(v);
      }
    }
    c.row_ptr[i + 1] = c.col_idx.size();
  }
  return c;
}

CsrMatrix binarize(const CsrMatrix& m) {
  CsrMatrix out = m;
  for (double& v : out.values) v = 1.0;
  return out;
}

DenseMatrix spmm_dense(const CsrMatrix& s, const DenseMatrix& x) {
  if (s.cols != x.rows) {
    throw ValidationError("spmm_dense: dimension mismatch");
  }
  DenseMatrix y(s.rows, x.cols);
  for (std::size_t i = 0; i < s.rows; ++i) {
    double* yrow = y.row(i);
    for (std::size_t k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k) {
      const double v = s.values[k];
      const double* xrow = x.row(s.col_idx[k]);
      for (std::size_t j = 0; j < x.cols; ++j) {
        yrow[j] += v * xrow[j];
      }
    }
  }
  return y;
}

namespace {

// Union of all edge types, symmetrized, deduplicated, self-loops dropped:
// the base adjacency for Power relations with r >= 1.
CsrMatrix symmetrized_base(const Graph& graph) {
  const std::size_t n = static_cast<std::size_t>(graph.num_nodes);
  std::vector<std::tuple<std::size_t, std::size_t, double>> triples;
  for (const Edge& e : graph.edges) {
    if (e.src == e.dst) continue;
    triples.emplace_back(static_cast<std::size_t>(e.dst),
                         static_cast<std::size_t>(e.src), 1.0);
    triples.emplace_back(static_cast<std::size_t>(e.src),
                         static_cast<std::size_t>(e.dst), 1.0);
  }
  CsrMatrix m = CsrMatrix::from_triples(n, n, std::move(triples));
  for (double& v : m.values) v = 1.0;
  return m;
}

}  // namespace

CompiledRelation compile_relation(const Graph& graph, const RelationSpec& spec) {
  g_compile_calls.fetch_add(1, std::memory_order_relaxed);
  const std::size_t n = static_cast<std::size_t>(graph.num_nodes);
  CsrMatrix result;

  if (const auto* power = std::get_if<PowerKind>(&spec.kind)) {
    if (power->hops == 0) {
      result = CsrMatrix::identity(n);
    } else {
      const CsrMatrix base = symmetrized_base(graph);
      result = base;
      for (int r = 1; r < power->hops; ++r) {
        result = spmm_sparse(result, base);
      }
    }
  } else {
    const auto& meta = std::get<MetaPathSumKind>(spec.kind);
    result = CsrMatrix(n, n);
    std::size_t path_index = 0;
    for (const auto& path : meta.paths) {
      CsrMatrix product = build_typed_adjacency(graph, path[0]);
      for (std::size_t step = 1; step < path.size(); ++step) {
        product = spmm_sparse(product, build_typed_adjacency(graph, path[step]));
      }
      if (product.nnz() == 0) {
        std::cerr << "warning: relation '" << spec.name << "' path " << path_index
                  << " produced an empty matrix (incompatible edge types?)\n";
      }
      result = add(result, product);
      ++path_index;
    }
  }

  if (spec.binarize) {
    result = binarize(result);
  }
  result = normalize(result, spec.normalization);
  return CompiledRelation{spec, std::move(result)};
}

std::vector<CompiledRelation> compile_relations(
    const Graph& graph, const std::vector<RelationSpec>& specs) {
  std::vector<CompiledRelation> out;
  out.reserve(specs.size());
  for (const RelationSpec& spec : specs) {
    out.push_back(compile_relation(graph, spec));
  }
  return out;
}

std::uint64_t compile_relation_call_count() {
  return g_compile_calls.load(std::memory_order_relaxed);
}

void reset_compile_relation_call_count() {
  g_compile_calls.store(0, std::memory_order_relaxed);
}

std::string to_triples_tsv(const CsrMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
      out += std::to_string(i);
      out += '\t';
      out += std::to_string(m.col_idx[k]);
      out += '\t';
      out += format_double(m.values[k]);
      out += '\n';
    }
  }
  return out;
}

}  // namespace hhr
