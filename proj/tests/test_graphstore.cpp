#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "hhr/errors.hpp"
#include "hhr/graph.hpp"
#include "hhr/io_util.hpp"

using namespace hhr;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hhr_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_fixture(const fs::path& dir, const std::string& labels_csv) {
  atomic_write_file(dir / "graph.json", R"({
    "num_nodes": 4, "feature_dim": 2, "num_classes": 2,
    "node_types": [0, 0, 0, 0],
    "edge_type_names": ["link"],
    "node_type_names": ["node"]
  })");
  atomic_write_file(dir / "features.csv", "0.5,1\n-1,2\n0,0\n3.25,-0.125\n");
  atomic_write_file(dir / "edges.tsv", "0\t1\t0\n1\t2\t0\n2\t3\t0\n");
  atomic_write_file(dir / "labels.csv", labels_csv);
}

}  // namespace

TEST_CASE("loading a hand-written fixture") {
  const fs::path dir = fresh_dir("fixture");
  write_fixture(dir, "0,0\n3,1\n");
  const Graph g = load_graph(dir);
  CHECK(g.num_nodes == 4);
  CHECK(g.feature_dim == 2);
  CHECK(g.edges.size() == 3);
  CHECK(g.features(3, 1) == -0.125);
  CHECK(g.labels[0] == 0);
  CHECK(g.labels[1] == -1);
  CHECK(g.labels[3] == 1);
}

TEST_CASE("loader rejects out-of-range label ids") {
  const fs::path dir = fresh_dir("bad_label");
  write_fixture(dir, "999,0\n");
  CHECK_THROWS_AS(load_graph(dir), ValidationError);
}

TEST_CASE("loader rejects missing files and shape mismatches") {
  const fs::path dir = fresh_dir("missing");
  write_fixture(dir, "0,0\n");
  fs::remove(dir / "edges.tsv");
  CHECK_THROWS_AS(load_graph(dir), ValidationError);

  const fs::path dir2 = fresh_dir("short_features");
  write_fixture(dir2, "0,0\n");
  atomic_write_file(dir2 / "features.csv", "0.5,1\n-1,2\n");
  CHECK_THROWS_AS(load_graph(dir2), ValidationError);
}

TEST_CASE("loader rejects duplicate typed edges") {
  const fs::path dir = fresh_dir("dup_edge");
  write_fixture(dir, "0,0\n");
  atomic_write_file(dir / "edges.tsv", "0\t1\t0\n0\t1\t0\n");
  CHECK_THROWS_AS(load_graph(dir), ValidationError);
}

TEST_CASE("save then load is the identity for generated graphs") {
  GenParamsHomogeneous hp;
  hp.nodes_per_class = 12;
  hp.num_classes = 3;
  hp.p_in = 0.4;
  hp.p_out = 0.05;
  hp.feature_dim = 5;
  hp.seed = 9;
  const Graph homo = generate_homogeneous(hp);
  const fs::path dir = fresh_dir("roundtrip_homo");
  save_graph(homo, dir);
  CHECK(load_graph(dir) == homo);

  GenParamsHeterogeneous ap;
  ap.authors_per_class = 6;
  ap.num_papers = 15;
  ap.num_conferences = 3;
  ap.seed = 10;
  const Graph het = generate_heterogeneous(ap);
  const fs::path dir2 = fresh_dir("roundtrip_het");
  save_graph(het, dir2);
  CHECK(load_graph(dir2) == het);
}

TEST_CASE("forced probabilities give two disjoint cliques") {
  GenParamsHomogeneous params;
  params.nodes_per_class = 3;
  params.num_classes = 2;
  params.p_in = 1.0;
  params.p_out = 0.0;
  params.feature_dim = 2;
  const Graph g = generate_homogeneous(params);
  CHECK(g.num_nodes == 6);
  CHECK(g.edges.size() == 12);  // 6 undirected edges, both directions stored
  for (const Edge& e : g.edges) {
    CHECK(g.labels[e.src] == g.labels[e.dst]);
  }
}

TEST_CASE("generators are deterministic per seed") {
  GenParamsHomogeneous params;
  params.seed = 123;
  params.nodes_per_class = 20;
  params.num_classes = 2;
  params.p_in = 0.3;
  params.p_out = 0.02;
  CHECK(generate_homogeneous(params) == generate_homogeneous(params));

  GenParamsHeterogeneous hparams;
  hparams.seed = 77;
  CHECK(generate_heterogeneous(hparams) == generate_heterogeneous(hparams));
}

TEST_CASE("generator rejects bad parameters") {
  GenParamsHomogeneous params;
  params.num_classes = 0;
  CHECK_THROWS_AS(generate_homogeneous(params), ValidationError);
  params.num_classes = 2;
  params.p_in = 0.1;
  params.p_out = 0.1;  // p_in must exceed p_out
  CHECK_THROWS_AS(generate_homogeneous(params), ValidationError);
}

TEST_CASE("cross-class edge count stays near the binomial mean") {
  GenParamsHomogeneous params;
  params.nodes_per_class = 100;
  params.num_classes = 3;
  params.p_in = 0.10;
  params.p_out = 0.01;
  params.feature_dim = 4;
  params.seed = 1;
  const Graph g = generate_homogeneous(params);
  long cross = 0;
  long within = 0;
  for (const Edge& e : g.edges) {
    if (e.src < e.dst) {
      (g.labels[e.src] == g.labels[e.dst] ? within : cross) += 1;
    }
  }
  // 30000 cross pairs at p=0.01: mean 300, sd about 17. Four sigma slack.
  CHECK(std::abs(cross - 300) < 70);
  // 14850 within pairs at p=0.1: mean 1485, sd about 37.
  CHECK(std::abs(within - 1485) < 150);
}

TEST_CASE("forced wiring connects every author to its class conference pool") {
  GenParamsHeterogeneous params;
  params.num_classes = 2;
  params.authors_per_class = 4;
  params.num_papers = 10;
  params.num_conferences = 2;
  params.p_ap_own = 1.0;
  params.p_ap_other = 0.0;
  params.p_pc = 1.0;
  const Graph g = generate_heterogeneous(params);

  std::set<std::pair<int, int>> ap_edges;  // author -> paper
  std::set<std::pair<int, int>> pc_edges;  // paper -> conference
  for (const Edge& e : g.edges) {
    if (e.edge_type == kEdgeAP) ap_edges.insert({e.src, e.dst});
    if (e.edge_type == kEdgePC) pc_edges.insert({e.src, e.dst});
  }
  const int num_authors = 8;
  const int paper_base = num_authors;
  for (int a = 0; a < num_authors; ++a) {
    const int cls = g.labels[a];
    bool reaches_class_conf = false;
    for (int p = 0; p < params.num_papers; ++p) {
      if (!ap_edges.contains({a, paper_base + p})) continue;
      CHECK(p % params.num_classes == cls);  // only own-pool wiring
      for (int c = 0; c < params.num_conferences; ++c) {
        const int cid = paper_base + params.num_papers + c;
        if (pc_edges.contains({paper_base + p, cid}) &&
            c % params.num_classes == cls) {
          reaches_class_conf = true;
        }
      }
    }
    CHECK(reaches_class_conf);
  }
}

TEST_CASE("every heterogeneous edge type has its exact reverse") {
  GenParamsHeterogeneous params;
  params.seed = 31;
  const Graph g = generate_heterogeneous(params);
  const auto edge_set = [&g](int type) {
    std::set<std::pair<int, int>> out;
    for (const Edge& e : g.edges) {
      if (e.edge_type == type) out.insert({e.src, e.dst});
    }
    return out;
  };
  const auto reversed = [](const std::set<std::pair<int, int>>& edges) {
    std::set<std::pair<int, int>> out;
    for (const auto& [s, d] : edges) out.insert({d, s});
    return out;
  };
  CHECK(edge_set(kEdgeAP) == reversed(edge_set(kEdgePA)));
  CHECK(edge_set(kEdgePC) == reversed(edge_set(kEdgeCP)));
}

TEST_CASE("labels exist only on author nodes") {
  const Graph g = generate_heterogeneous(GenParamsHeterogeneous{});
  for (int i = 0; i < g.num_nodes; ++i) {
    CHECK((g.labels[i] >= 0) == (g.node_type[i] == 0));
  }
}

TEST_CASE("author-paper edge count stays near the configured expectation") {
  GenParamsHeterogeneous params;  // 150 authors, pools of 40 papers
  params.seed = 2;
  const Graph g = generate_heterogeneous(params);
  long ap_count = 0;
  for (const Edge& e : g.edges) {
    if (e.edge_type == kEdgeAP) ++ap_count;
  }
  // Per author: 0.2 * 40 + 0.02 * 80 = 9.6 expected, 150 authors -> 1440.
  CHECK(std::abs(ap_count - 1440) < 150);
}

TEST_CASE("splits are balanced, disjoint and sized by the arithmetic") {
  GenParamsHomogeneous params;
  params.nodes_per_class = 20;
  params.num_classes = 3;
  params.p_in = 0.3;
  params.p_out = 0.01;
  const Graph g = generate_homogeneous(params);  // 60 labeled nodes
  const SplitSet splits = make_splits(g, 5, 15, 4);
  CHECK(splits.train.size() == 15);
  CHECK(splits.val.size() == 15);
  CHECK(splits.test.size() == 30);

  std::set<int> all;
  for (const auto* list : {&splits.train, &splits.val, &splits.test}) {
    for (int id : *list) {
      CHECK(all.insert(id).second);  // pairwise disjoint
      CHECK(g.is_labeled(id));
    }
  }
  // Class balance in train.
  std::vector<int> per_class(3, 0);
  for (int id : splits.train) ++per_class[g.labels[id]];
  for (int c = 0; c < 3; ++c) CHECK(per_class[c] == 5);
}

TEST_CASE("splits follow the Planetoid-style 20/500 convention when sized") {
  GenParamsHomogeneous params;
  params.nodes_per_class = 100;
  params.num_classes = 7;
  params.p_in = 0.05;
  params.p_out = 0.005;
  params.feature_dim = 2;
  const Graph g = generate_homogeneous(params);  // 700 labeled
  const SplitSet splits = make_splits(g, 20, 500, 0);
  CHECK(splits.train.size() == 140);
  CHECK(splits.val.size() == 500);
  CHECK(splits.test.size() == 60);
}

TEST_CASE("splits are deterministic and reject undersized label sets") {
  GenParamsHomogeneous params;
  params.nodes_per_class = 10;
  params.num_classes = 2;
  params.p_in = 0.5;
  params.p_out = 0.05;
  const Graph g = generate_homogeneous(params);
  const SplitSet a = make_splits(g, 3, 4, 11);
  const SplitSet b = make_splits(g, 3, 4, 11);
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);
  CHECK_THROWS_AS(make_splits(g, 11, 4, 0), ValidationError);
  CHECK_THROWS_AS(make_splits(g, 3, 14, 0), ValidationError);  // empty test
}

TEST_CASE("splits round-trip through splits.json") {
  GenParamsHomogeneous params;
  params.nodes_per_class = 10;
  params.num_classes = 2;
  params.p_in = 0.5;
  params.p_out = 0.05;
  const Graph g = generate_homogeneous(params);
  const SplitSet splits = make_splits(g, 4, 5, 3);
  const fs::path dir = fresh_dir("splits");
  save_splits(splits, dir / "splits.json");
  const SplitSet loaded = load_splits(dir / "splits.json", g);
  CHECK(loaded.train == splits.train);
  CHECK(loaded.val == splits.val);
  CHECK(loaded.test == splits.test);

  // Overlapping splits are rejected.
  atomic_write_file(dir / "splits.json",
                    R"({"train":[0,1],"val":[1],"test":[2]})");
  CHECK_THROWS_AS(load_splits(dir / "splits.json", g), ValidationError);
}
