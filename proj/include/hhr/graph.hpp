#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hhr/dense.hpp"

namespace hhr {

struct Edge {
  int src = 0;
  int dst = 0;
  int edge_type = 0;

  bool operator==(const Edge&) const = default;
};

// Typed graph with a shared dense feature matrix and partial labels.
// A homogeneous graph is exactly the case of one node type and one edge
// type. Node types without natural features carry zero rows in `features`.
struct Graph {
  int num_nodes = 0;
  int feature_dim = 0;
  int num_classes = 0;
  std::vector<int> node_type;           // size num_nodes
  std::vector<Edge> edges;              // directed, both directions stored for symmetric graphs
  DenseMatrix features;                 // num_nodes x feature_dim
  std::vector<int> labels;              // size num_nodes, -1 = unlabeled
  std::vector<std::string> node_type_names;
  std::vector<std::string> edge_type_names;

  int num_node_types() const { return static_cast<int>(node_type_names.size()); }
  int num_edge_types() const { return static_cast<int>(edge_type_names.size()); }
  bool is_labeled(int node) const { return labels[node] >= 0; }
  std::vector<int> labeled_nodes() const;

  // Throws ValidationError on any violated invariant (ids out of range,
  // duplicate typed edges, shape mismatches).
  void validate() const;

  bool operator==(const Graph&) const = default;
};

struct SplitSet {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

struct GenParamsHomogeneous {
  int nodes_per_class = 100;
  int num_classes = 3;
  double p_in = 0.10;
  double p_out = 0.01;
  int feature_dim = 16;
  double signal = 0.5;   // class-mean offset on top of unit-variance noise
  std::uint64_t seed = 1;
};

// Tri-type A-P-C schema with four edge types (forward/backward pairs).
// Authors carry class labels; A-P wiring is class-conditional (authors
// attach to their own class's paper pool with p_ap_own, elsewhere with
// p_ap_other); P-C wiring is uniform.
struct GenParamsHeterogeneous {
  int authors_per_class = 50;
  int num_classes = 3;
  int num_papers = 120;
  int num_conferences = 6;
  double p_ap_own = 0.20;
  double p_ap_other = 0.02;
  double p_pc = 0.30;
  int feature_dim = 16;
  double signal = 0.5;
  std::uint64_t seed = 1;
};

// Edge type ids emitted by generate_heterogeneous. Names follow the edge
// direction: AP edges run author -> paper, PA paper -> author, and so on.
enum ApcEdgeType : int { kEdgeAP = 0, kEdgePA = 1, kEdgePC = 2, kEdgeCP = 3 };

Graph generate_homogeneous(const GenParamsHomogeneous& params);
Graph generate_heterogeneous(const GenParamsHeterogeneous& params);

// On-disk formats: graph.json, features.csv, edges.tsv, labels.csv.
Graph load_graph(const std::filesystem::path& dir);
void save_graph(const Graph& graph, const std::filesystem::path& dir);

// Class-balanced train set, disjoint random val set, remainder test.
// Only labeled nodes participate. Deterministic per seed.
SplitSet make_splits(const Graph& graph, int train_per_class, int val_count,
                     std::uint64_t seed);

SplitSet load_splits(const std::filesystem::path& file, const Graph& graph);
void save_splits(const SplitSet& splits, const std::filesystem::path& file);

}  // namespace hhr
