#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "hhr/dense.hpp"
#include "hhr/graph.hpp"

namespace hhr {

// Canonical compressed sparse-row matrix: row_ptr non-decreasing, column
// indices strictly increasing within each row, no explicit zeros.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;  // length rows + 1
  std::vector<std::size_t> col_idx;
  std::vector<double> values;

  CsrMatrix() : row_ptr(1, 0) {}
  CsrMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), row_ptr(r + 1, 0) {}

  std::size_t nnz() const { return values.size(); }

  static CsrMatrix identity(std::size_t n);

  // Builds a canonical matrix from (row, col, value) triples: entries are
  // sorted, duplicates summed, exact zeros dropped.
  static CsrMatrix from_triples(std::size_t rows, std::size_t cols,
                                std::vector<std::tuple<std::size_t, std::size_t, double>> triples);

  DenseMatrix to_dense() const;

  bool operator==(const CsrMatrix&) const = default;
};

enum class Normalization { kNone, kRow, kSymmetric };

struct PowerKind {
  int hops = 1;  // 0 = identity relation
  bool operator==(const PowerKind&) const = default;
};

struct MetaPathSumKind {
  // Each path is a sequence of edge-type ids t1..tp; the compiled matrix is
  // the sum over paths of A_t1 * A_t2 * ... * A_tp, where A_t[dst,src] = 1
  // for a stored edge (src -> dst). Row i therefore aggregates the far-end
  // nodes reachable into i along the listed types.
  std::vector<std::vector<int>> paths;
  bool operator==(const MetaPathSumKind&) const = default;
};

struct RelationSpec {
  std::string name;
  std::variant<PowerKind, MetaPathSumKind> kind = PowerKind{1};
  Normalization normalization = Normalization::kRow;
  bool binarize = false;

  static RelationSpec power(std::string name, int hops,
                            Normalization norm = Normalization::kRow);
  // Meta-path relations default to binarized (connectivity semantics).
  static RelationSpec meta_path_sum(std::string name,
                                    std::vector<std::vector<int>> paths,
                                    Normalization norm = Normalization::kRow,
                                    bool binarize = true);

  bool is_identity() const;
  bool operator==(const RelationSpec&) const = default;
};

struct CompiledRelation {
  RelationSpec spec;
  CsrMatrix matrix;  // N x N
};

// A_t[dst, src] = 1 for every stored edge (src -> dst) of the given type, so
// row i aggregates i's in-neighbors. Parallel duplicates collapse to 1.
CsrMatrix build_typed_adjacency(const Graph& graph, int edge_type);

// row: divide each non-empty row by its sum. symmetric: D^-1/2 M D^-1/2 with
// row-sum degrees, zero-degree rows untouched; rejects negative values.
CsrMatrix normalize(const CsrMatrix& m, Normalization mode);

CsrMatrix spmm_sparse(const CsrMatrix& a, const CsrMatrix& b);
CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b);
CsrMatrix binarize(const CsrMatrix& m);

// y = s * x for dense x.
DenseMatrix spmm_dense(const CsrMatrix& s, const DenseMatrix& x);

// Materializes a relation once; the result is reused across epochs.
// Power{r}: r-th power of the symmetrized, deduplicated, self-loop-free
// union adjacency (identity at r = 0). MetaPathSum: sum of typed products,
// optionally binarized. Normalization is applied last.
CompiledRelation compile_relation(const Graph& graph, const RelationSpec& spec);

std::vector<CompiledRelation> compile_relations(const Graph& graph,
                                                const std::vector<RelationSpec>& specs);

// Instrumentation for the precomputation contract: total number of
// compile_relation calls in this process.
std::uint64_t compile_relation_call_count();
void reset_compile_relation_call_count();

// Debug dump as `row<TAB>col<TAB>value` triples for oracle cross-checks.
std::string to_triples_tsv(const CsrMatrix& m);

}  // namespace hhr
