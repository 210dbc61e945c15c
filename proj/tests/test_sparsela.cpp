#include <doctest.h>

#include <cmath>
#include <random>

#include "hhr/csr.hpp"
#include "hhr/errors.hpp"
#include "oracles.hpp"

using namespace hhr;

namespace {

Graph tiny_graph(int n, std::vector<Edge> edges, int num_edge_types = 1) {
  Graph g;
  g.num_nodes = n;
  g.feature_dim = 1;
  g.num_classes = 1;
  g.node_type.assign(n, 0);
  g.node_type_names = {"node"};
  for (int t = 0; t < num_edge_types; ++t) {
    g.edge_type_names.push_back("t" + std::to_string(t));
  }
  g.edges = std::move(edges);
  g.features = DenseMatrix(n, 1);
  g.labels.assign(n, -1);
  g.labels[0] = 0;
  return g;
}

CsrMatrix csr_from_dense(const std::vector<std::vector<double>>& rows) {
  std::vector<std::tuple<std::size_t, std::size_t, double>> triples;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      if (rows[i][j] != 0.0) triples.emplace_back(i, j, rows[i][j]);
    }
  }
  return CsrMatrix::from_triples(rows.size(), rows[0].size(), triples);
}

bool matches_counts(const CsrMatrix& m, const std::vector<std::vector<long>>& counts) {
  const DenseMatrix d = m.to_dense();
  for (std::size_t i = 0; i < d.rows; ++i) {
    for (std::size_t j = 0; j < d.cols; ++j) {
      if (d(i, j) != static_cast<double>(counts[i][j])) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("typed adjacency stores edges dst-row, src-col") {
  const Graph g = tiny_graph(2, {{0, 1, 0}});
  const CsrMatrix a = build_typed_adjacency(g, 0);
  CHECK(a.nnz() == 1);
  CHECK(a.to_dense()(1, 0) == 1.0);
  CHECK(a.to_dense()(0, 1) == 0.0);
}

TEST_CASE("typed adjacency collapses parallel edges and validates type ids") {
  const Graph g = tiny_graph(3, {{0, 1, 0}, {0, 1, 1}, {2, 1, 0}}, 2);
  const CsrMatrix a = build_typed_adjacency(g, 0);
  CHECK(a.nnz() == 2);
  for (double v : a.values) CHECK(v == 1.0);
  CHECK_THROWS_AS(build_typed_adjacency(g, 5), ValidationError);
}

TEST_CASE("empty edge type gives an all-zero matrix") {
  const Graph g = tiny_graph(4, {{0, 1, 0}}, 2);
  const CsrMatrix a = build_typed_adjacency(g, 1);
  CHECK(a.nnz() == 0);
  CHECK(a.rows == 4);
}

TEST_CASE("row normalization splits equally") {
  const CsrMatrix m = csr_from_dense({{2.0, 2.0}, {0.0, 0.0}});
  const CsrMatrix out = normalize(m, Normalization::kRow);
  CHECK(out.to_dense()(0, 0) == doctest::Approx(0.5));
  CHECK(out.to_dense()(0, 1) == doctest::Approx(0.5));
  CHECK(out.nnz() == 2);  // pattern preserved, empty row untouched
}

TEST_CASE("normalization mode none is the identity transform") {
  const CsrMatrix m = csr_from_dense({{3.0, 0.0}, {1.0, 2.0}});
  CHECK(normalize(m, Normalization::kNone) == m);
}

TEST_CASE("symmetric normalization of the 3-node path graph") {
  // degrees (1, 2, 1): entry (0,1) = 1/sqrt(1*2)
  const CsrMatrix a = csr_from_dense({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}});
  const CsrMatrix out = normalize(a, Normalization::kSymmetric);
  CHECK(out.to_dense()(0, 1) == doctest::Approx(0.7071067811865475).epsilon(1e-12));
  CHECK(out.to_dense()(1, 2) == doctest::Approx(0.7071067811865475).epsilon(1e-12));
}

TEST_CASE("symmetric normalization rejects negative values and non-square input") {
  const CsrMatrix m = csr_from_dense({{0.0, -1.0}, {-1.0, 0.0}});
  CHECK_THROWS_AS(normalize(m, Normalization::kSymmetric), ValidationError);
  CHECK_THROWS_AS(normalize(CsrMatrix(2, 3), Normalization::kSymmetric),
                  ValidationError);
}

TEST_CASE("sparse product against identity and path graph walk counts") {
  std::mt19937_64 rng(11);
  const Graph g = oracle::random_homogeneous(9, 0.4, 1, 2, rng);
  const CsrMatrix a = build_typed_adjacency(g, 0);
  CHECK(spmm_sparse(a, CsrMatrix::identity(9)) == a);

  // P3: (A^2)[0,2] = 1 and diag(A^2) = degrees (1,2,1).
  const CsrMatrix p3 = csr_from_dense({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}});
  const DenseMatrix sq = spmm_sparse(p3, p3).to_dense();
  CHECK(sq(0, 2) == 1.0);
  CHECK(sq(0, 0) == 1.0);
  CHECK(sq(1, 1) == 2.0);
  CHECK(sq(2, 2) == 1.0);
}

TEST_CASE("single-edge meta-path product: author row reaches the conference") {
  // 1 author (0), 1 paper (1), 1 conference (2); edges p->a and c->p.
  Graph g = tiny_graph(3, {{1, 0, 0}, {2, 1, 1}}, 2);
  const CsrMatrix a_ap = build_typed_adjacency(g, 0);  // rows A, cols P
  const CsrMatrix a_pc = build_typed_adjacency(g, 1);  // rows P, cols C
  const DenseMatrix apc = spmm_sparse(a_ap, a_pc).to_dense();
  CHECK(apc(0, 2) == 1.0);
  CHECK(spmm_sparse(a_ap, a_pc).nnz() == 1);
}

TEST_CASE("sparse product dimension mismatch") {
  const CsrMatrix a(2, 3);
  const CsrMatrix b(2, 2);
  CHECK_THROWS_AS(spmm_sparse(a, b), ValidationError);
}

TEST_CASE("sparse product associativity is exact on integer matrices") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g1 = oracle::random_homogeneous(8, 0.35, 1, 2, rng);
    const Graph g2 = oracle::random_homogeneous(8, 0.35, 1, 2, rng);
    const Graph g3 = oracle::random_homogeneous(8, 0.35, 1, 2, rng);
    const CsrMatrix a = build_typed_adjacency(g1, 0);
    const CsrMatrix b = build_typed_adjacency(g2, 0);
    const CsrMatrix c = build_typed_adjacency(g3, 0);
    CHECK(spmm_sparse(spmm_sparse(a, b), c) == spmm_sparse(a, spmm_sparse(b, c)));
  }
}

TEST_CASE("power relation 0 compiles to the identity") {
  std::mt19937_64 rng(3);
  const Graph g = oracle::random_homogeneous(7, 0.3, 1, 2, rng);
  const CompiledRelation rel = compile_relation(g, RelationSpec::power("self", 0));
  CHECK(rel.matrix == CsrMatrix::identity(7));
}

TEST_CASE("binarized row-normalized square of the triangle weights 1/3") {
  const Graph k3 = tiny_graph(3, {{0, 1, 0}, {1, 0, 0}, {1, 2, 0}, {2, 1, 0},
                                  {0, 2, 0}, {2, 0, 0}});
  RelationSpec spec = RelationSpec::power("hop2", 2);
  spec.binarize = true;
  const CompiledRelation rel = compile_relation(k3, spec);
  const DenseMatrix d = rel.matrix.to_dense();
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(d(i, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("unnormalized powers equal brute-force walk counts") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 10);
    const Graph g = oracle::random_homogeneous(n, 0.35, 1, 2, rng);
    for (int r = 0; r <= 3; ++r) {
      const CompiledRelation rel = compile_relation(
          g, RelationSpec::power("p" + std::to_string(r), r, Normalization::kNone));
      CHECK(matches_counts(rel.matrix, oracle::walk_counts(g, r)));
    }
  }
}

TEST_CASE("power base drops input self-loops") {
  const Graph g = tiny_graph(2, {{0, 0, 0}, {0, 1, 0}});
  const CompiledRelation rel =
      compile_relation(g, RelationSpec::power("hop1", 1, Normalization::kNone));
  const DenseMatrix d = rel.matrix.to_dense();
  CHECK(d(0, 0) == 0.0);
  CHECK(d(0, 1) == 1.0);
  CHECK(d(1, 0) == 1.0);
}

TEST_CASE("meta-path sums equal brute-force typed path counts") {
  std::mt19937_64 rng(23);
  const std::vector<std::vector<std::vector<int>>> relation_paths = {
      {{1}},            // one-hop into A via PA edges
      {{1, 0}},         // shared-paper A-A
      {{1, 3}},         // A-P-C
      {{1, 0}, {1, 3}}  // sum of two paths
  };
  for (int trial = 0; trial < 12; ++trial) {
    const Graph g = oracle::random_tri_type(4, 0.45, rng);
    for (const auto& paths : relation_paths) {
      const CompiledRelation rel = compile_relation(
          g, RelationSpec::meta_path_sum("m", paths, Normalization::kNone,
                                         /*binarize=*/false));
      std::vector<std::vector<long>> expected(
          g.num_nodes, std::vector<long>(g.num_nodes, 0));
      for (const auto& path : paths) {
        const auto counts = oracle::typed_path_counts(g, path);
        for (int i = 0; i < g.num_nodes; ++i) {
          for (int j = 0; j < g.num_nodes; ++j) expected[i][j] += counts[i][j];
        }
      }
      CHECK(matches_counts(rel.matrix, expected));
    }
  }
}

TEST_CASE("movie-movie meta-path sum counts shared actors plus directors") {
  // Types: M = {0,1}, A = {2,3}, D = {4}. Edge types: MA, AM, MD, DM.
  std::vector<Edge> edges;
  const auto link = [&edges](int m, int other, int fwd, int bwd) {
    edges.push_back({m, other, fwd});
    edges.push_back({other, m, bwd});
  };
  link(0, 2, 0, 1);  // movie 0 - actor 2
  link(0, 3, 0, 1);  // movie 0 - actor 3
  link(1, 3, 0, 1);  // movie 1 - actor 3
  link(0, 4, 2, 3);  // movie 0 - director 4
  link(1, 4, 2, 3);  // movie 1 - director 4
  Graph g = tiny_graph(5, std::move(edges), 4);
  g.node_type = {0, 0, 1, 1, 2};
  g.node_type_names = {"M", "A", "D"};
  g.edge_type_names = {"MA", "AM", "MD", "DM"};

  // Shared actors via AM then MA; shared directors via DM then MD.
  const CompiledRelation rel = compile_relation(
      g, RelationSpec::meta_path_sum("mm", {{1, 0}, {3, 2}}, Normalization::kNone,
                                     /*binarize=*/false));
  const DenseMatrix d = rel.matrix.to_dense();
  CHECK(d(0, 1) == 2.0);  // actor 3 + director 4
  CHECK(d(1, 0) == 2.0);
  CHECK(d(0, 0) == 3.0);  // both its actors and its director
  CHECK(d(1, 1) == 2.0);
}

TEST_CASE("incompatible path yields an empty product, not an error") {
  std::mt19937_64 rng(29);
  const Graph g = oracle::random_tri_type(3, 0.5, rng);
  // AP then AP cannot chain (paper rows against paper columns).
  const CompiledRelation rel = compile_relation(
      g, RelationSpec::meta_path_sum("bad", {{0, 0}}, Normalization::kNone, false));
  CHECK(rel.matrix.nnz() == 0);
}

TEST_CASE("row-normalized compiled relations have unit row sums") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = oracle::random_homogeneous(10, 0.3, 1, 2, rng);
    const CompiledRelation rel = compile_relation(g, RelationSpec::power("p2", 2));
    for (std::size_t i = 0; i < rel.matrix.rows; ++i) {
      double sum = 0.0;
      bool empty = true;
      for (std::size_t k = rel.matrix.row_ptr[i]; k < rel.matrix.row_ptr[i + 1]; ++k) {
        sum += rel.matrix.values[k];
        empty = false;
      }
      if (!empty) CHECK(std::fabs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("symmetric input keeps symmetric powers, pattern and values") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 8; ++trial) {
    const Graph g = oracle::random_homogeneous(9, 0.4, 1, 2, rng);
    for (int r = 1; r <= 3; ++r) {
      const CompiledRelation rel = compile_relation(
          g, RelationSpec::power("p", r, Normalization::kNone));
      const DenseMatrix d = rel.matrix.to_dense();
      for (std::size_t i = 0; i < d.rows; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
          CHECK(d(i, j) == d(j, i));
        }
      }
    }
  }
}

TEST_CASE("sparse-dense product matches the dense reference") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = oracle::random_homogeneous(8, 0.3, 1, 2, rng);
    const CsrMatrix s = build_typed_adjacency(g, 0);
    const DenseMatrix x = oracle::random_matrix(8, 5, rng);
    const DenseMatrix y = spmm_dense(s, x);
    const auto expected = oracle::naive_matmul(s.to_dense().data, x.data, 8, 8, 5);
    for (std::size_t i = 0; i < y.size(); ++i) {
      CHECK(std::fabs(y.data[i] - expected[i]) < 1e-12);
    }
  }
}

TEST_CASE("identity spmm_dense passes features through") {
  std::mt19937_64 rng(43);
  const DenseMatrix x = oracle::random_matrix(6, 4, rng);
  CHECK(spmm_dense(CsrMatrix::identity(6), x) == x);
}

TEST_CASE("row-normalized star center averages the leaves") {
  // Node 0 is the hub of a 4-leaf star.
  std::vector<Edge> edges;
  for (int leaf = 1; leaf <= 4; ++leaf) {
    edges.push_back({0, leaf, 0});
    edges.push_back({leaf, 0, 0});
  }
  const Graph g = tiny_graph(5, std::move(edges));
  const CompiledRelation rel = compile_relation(g, RelationSpec::power("hop1", 1));
  DenseMatrix x(5, 2);
  for (int leaf = 1; leaf <= 4; ++leaf) {
    x(leaf, 0) = leaf;
    x(leaf, 1) = 2.0 * leaf;
  }
  const DenseMatrix y = spmm_dense(rel.matrix, x);
  CHECK(y(0, 0) == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(y(0, 1) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("triple dump is sorted and canonical") {
  const CsrMatrix m = csr_from_dense({{0.0, 1.5}, {2.0, 0.0}});
  CHECK(to_triples_tsv(m) == "0\t1\t1.5\n1\t0\t2\n");
}

TEST_CASE("compile call counter increments per call") {
  std::mt19937_64 rng(47);
  const Graph g = oracle::random_homogeneous(6, 0.4, 1, 2, rng);
  reset_compile_relation_call_count();
  compile_relations(g, {RelationSpec::power("self", 0),
                        RelationSpec::power("hop1", 1)});
  CHECK(compile_relation_call_count() == 2);
}
