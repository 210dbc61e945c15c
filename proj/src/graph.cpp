#include "hhr/graph.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "hhr/errors.hpp"
#include "hhr/io_util.hpp"

namespace hhr {

using nlohmann::json;

std::vector<int> Graph::labeled_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < num_nodes; ++i) {
    if (labels[i] >= 0) out.push_back(i);
  }
  return out;
}

void Graph::validate() const {
  if (num_nodes < 0 || feature_dim < 0 || num_classes < 0) {
    throw ValidationError("graph: negative dimension");
  }
  if (static_cast<int>(node_type.size()) != num_nodes) {
    throw ValidationError("graph: node_type length != num_nodes");
  }
  if (features.rows != static_cast<std::size_t>(num_nodes) ||
      features.cols != static_cast<std::size_t>(feature_dim)) {
    throw ValidationError("graph: feature matrix shape mismatch");
  }
  if (static_cast<int>(labels.size()) != num_nodes) {
    throw ValidationError("graph: labels length != num_nodes");
  }
  const int types = num_node_types();
  for (int t : node_type) {
    if (t < 0 || t >= types) {
      throw ValidationError("graph: node type id out of range");
    }
  }
  const int etypes = num_edge_types();
  std::set<std::tuple<int, int, int>> seen;
  for (const Edge& e : edges) {
    if (e.src < 0 || e.src >= num_nodes || e.dst < 0 || e.dst >= num_nodes) {
      throw ValidationError("graph: edge endpoint out of range");
    }
    if (e.edge_type < 0 || e.edge_type >= etypes) {
      throw ValidationError("graph: edge type id out of range");
    }
    if (!seen.insert({e.src, e.dst, e.edge_type}).second) {
      std::ostringstream ss;
      ss << "graph: duplicate edge (" << e.src << "," << e.dst << ","
         << e.edge_type << ")";
      throw ValidationError(ss.str());
    }
  }
  for (int i = 0; i < num_nodes; ++i) {
    if (labels[i] >= num_classes) {
      throw ValidationError("graph: label out of range for node " +
                            std::to_string(i));
    }
  }
}

namespace {

// Deterministic per-class mean direction: signal on the coordinates
// congruent to the class index.
void add_class_signal(DenseMatrix& features, int node, int cls, int num_classes,
                      double signal) {
  for (std::size_t d = 0; d < features.cols; ++d) {
    if (static_cast<int>(d) % num_classes == cls) {
      features(node, d) += signal;
    }
  }
}

}  // namespace

Graph generate_homogeneous(const GenParamsHomogeneous& params) {
  if (params.num_classes <= 0 || params.nodes_per_class <= 0) {
    throw ValidationError("generate_homogeneous: zero classes or zero nodes");
  }
  if (!(params.p_in > params.p_out) || params.p_out < 0.0 || params.p_in > 1.0) {
    throw ValidationError("generate_homogeneous: requires p_in > p_out >= 0");
  }
  if (params.signal < 0.0) {
    throw ValidationError("generate_homogeneous: signal must be >= 0");
  }

  Graph g;
  g.num_nodes = params.num_classes * params.nodes_per_class;
  g.feature_dim = params.feature_dim;
  g.num_classes = params.num_classes;
  g.node_type.assign(g.num_nodes, 0);
  g.node_type_names = {"node"};
  g.edge_type_names = {"link"};
  g.labels.resize(g.num_nodes);
  for (int i = 0; i < g.num_nodes; ++i) {
    g.labels[i] = i / params.nodes_per_class;
  }

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int i = 0; i < g.num_nodes; ++i) {
    for (int j = i + 1; j < g.num_nodes; ++j) {
      const double prob = g.labels[i] == g.labels[j] ? params.p_in : params.p_out;
      if (coin(rng) < prob) {
        g.edges.push_back({i, j, 0});
        g.edges.push_back({j, i, 0});
      }
    }
  }

  g.features = DenseMatrix(g.num_nodes, g.feature_dim);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int i = 0; i < g.num_nodes; ++i) {
    for (int d = 0; d < g.feature_dim; ++d) {
      g.features(i, d) = noise(rng);
    }
    add_class_signal(g.features, i, g.labels[i], g.num_classes, params.signal);
  }
  g.validate();
  return g;
}

Graph generate_heterogeneous(const GenParamsHeterogeneous& params) {
  if (params.num_classes <= 0 || params.authors_per_class <= 0 ||
      params.num_papers <= 0 || params.num_conferences <= 0) {
    throw ValidationError("generate_heterogeneous: zero counts");
  }
  if (params.signal < 0.0) {
    throw ValidationError("generate_heterogeneous: signal must be >= 0");
  }

  const int num_authors = params.num_classes * params.authors_per_class;
  Graph g;
  g.num_nodes = num_authors + params.num_papers + params.num_conferences;
  g.feature_dim = params.feature_dim;
  g.num_classes = params.num_classes;
  g.node_type_names = {"A", "P", "C"};
  g.edge_type_names = {"AP", "PA", "PC", "CP"};
  g.node_type.assign(g.num_nodes, 0);
  g.labels.assign(g.num_nodes, -1);

  const int paper_base = num_authors;
  const int conf_base = num_authors + params.num_papers;
  for (int p = 0; p < params.num_papers; ++p) g.node_type[paper_base + p] = 1;
  for (int c = 0; c < params.num_conferences; ++c) g.node_type[conf_base + c] = 2;
  for (int a = 0; a < num_authors; ++a) {
    g.labels[a] = a / params.authors_per_class;
  }
  // Papers belong to class pools round-robin; pools carry the label signal
  // through the A-P wiring.
  auto paper_pool = [&](int p) { return p % params.num_classes; };

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int a = 0; a < num_authors; ++a) {
    const int cls = g.labels[a];
    for (int p = 0; p < params.num_papers; ++p) {
      const double prob =
          paper_pool(p) == cls ? params.p_ap_own : params.p_ap_other;
      if (coin(rng) < prob) {
        const int pid = paper_base + p;
        g.edges.push_back({a, pid, kEdgeAP});
        g.edges.push_back({pid, a, kEdgePA});
      }
    }
  }
  for (int p = 0; p < params.num_papers; ++p) {
    for (int c = 0; c < params.num_conferences; ++c) {
      if (coin(rng) < params.p_pc) {
        const int pid = paper_base + p;
        const int cid = conf_base + c;
        g.edges.push_back({pid, cid, kEdgePC});
        g.edges.push_back({cid, pid, kEdgeCP});
      }
    }
  }

  g.features = DenseMatrix(g.num_nodes, g.feature_dim);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int i = 0; i < g.num_nodes; ++i) {
    for (int d = 0; d < g.feature_dim; ++d) {
      g.features(i, d) = noise(rng);
    }
  }
  for (int a = 0; a < num_authors; ++a) {
    add_class_signal(g.features, a, g.labels[a], g.num_classes, params.signal);
  }
  for (int p = 0; p < params.num_papers; ++p) {
    add_class_signal(g.features, paper_base + p, paper_pool(p), g.num_classes,
                     params.signal);
  }
  g.validate();
  return g;
}

Graph load_graph(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  Graph g;

  json meta;
  try {
    meta = json::parse(read_file(dir / "graph.json"));
  } catch (const json::exception& e) {
    throw ValidationError("graph.json: " + std::string(e.what()));
  }
  try {
    g.num_nodes = meta.at("num_nodes").get<int>();
    g.feature_dim = meta.at("feature_dim").get<int>();
    g.num_classes = meta.at("num_classes").get<int>();
    g.node_type = meta.at("node_types").get<std::vector<int>>();
    g.edge_type_names = meta.at("edge_type_names").get<std::vector<std::string>>();
    g.node_type_names = meta.at("node_type_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ValidationError("graph.json: " + std::string(e.what()));
  }

  // features.csv: line i holds node i's D comma-separated values.
  {
    std::istringstream in(read_file(dir / "features.csv"));
    g.features = DenseMatrix(g.num_nodes, g.feature_dim);
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
      if (line.empty() && in.eof()) break;
      if (row >= g.num_nodes) {
        throw ValidationError("features.csv: more rows than num_nodes");
      }
      auto fields = split(line, ',');
      if (static_cast<int>(fields.size()) != g.feature_dim) {
        throw ValidationError("features.csv row " + std::to_string(row) +
                              ": expected " + std::to_string(g.feature_dim) +
                              " values, got " + std::to_string(fields.size()));
      }
      for (int d = 0; d < g.feature_dim; ++d) {
        g.features(row, d) = parse_double(fields[d], "features.csv");
      }
      ++row;
    }
    if (row != g.num_nodes) {
      throw ValidationError("features.csv: expected " +
                            std::to_string(g.num_nodes) + " rows, got " +
                            std::to_string(row));
    }
  }

  // edges.tsv: src<TAB>dst<TAB>edge_type.
  {
    std::istringstream in(read_file(dir / "edges.tsv"));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto fields = split(line, '\t');
      if (fields.size() != 3) {
        throw ValidationError("edges.tsv line " + std::to_string(lineno) +
                              ": expected src<TAB>dst<TAB>edge_type");
      }
      Edge e;
      e.src = static_cast<int>(parse_long(fields[0], "edges.tsv"));
      e.dst = static_cast<int>(parse_long(fields[1], "edges.tsv"));
      e.edge_type = static_cast<int>(parse_long(fields[2], "edges.tsv"));
      g.edges.push_back(e);
    }
  }

  // labels.csv: node_id,label — only labeled nodes listed.
  g.labels.assign(g.num_nodes, -1);
  {
    std::istringstream in(read_file(dir / "labels.csv"));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto fields = split(line, ',');
      if (fields.size() != 2) {
        throw ValidationError("labels.csv line " + std::to_string(lineno) +
                              ": expected node_id,label");
      }
      const long node = parse_long(fields[0], "labels.csv");
      const long label = parse_long(fields[1], "labels.csv");
      if (node < 0 || node >= g.num_nodes) {
        throw ValidationError("labels.csv: out-of-range node id " +
                              std::to_string(node));
      }
      if (label < 0 || label >= g.num_classes) {
        throw ValidationError("labels.csv: out-of-range label " +
                              std::to_string(label));
      }
      g.labels[node] = static_cast<int>(label);
    }
  }

  g.validate();
  return g;
}

void save_graph(const Graph& graph, const std::filesystem::path& dir) {
  graph.validate();
  std::filesystem::create_directories(dir);

  json meta;
  meta["num_nodes"] = graph.num_nodes;
  meta["feature_dim"] = graph.feature_dim;
  meta["num_classes"] = graph.num_classes;
  meta["node_types"] = graph.node_type;
  meta["edge_type_names"] = graph.edge_type_names;
  meta["node_type_names"] = graph.node_type_names;
  atomic_write_file(dir / "graph.json", meta.dump(2) + "\n");

  std::string features;
  for (int i = 0; i < graph.num_nodes; ++i) {
    for (int d = 0; d < graph.feature_dim; ++d) {
      if (d > 0) features += ',';
      features += format_double(graph.features(i, d));
    }
    features += '\n';
  }
  atomic_write_file(dir / "features.csv", features);

  std::string edges;
  for (const Edge& e : graph.edges) {
    edges += std::to_string(e.src);
    edges += '\t';
    edges += std::to_string(e.dst);
    edges += '\t';
    edges += std::to_string(e.edge_type);
    edges += '\n';
  }
  atomic_write_file(dir / "edges.tsv", edges);

  std::string labels;
  for (int i = 0; i < graph.num_nodes; ++i) {
    if (graph.labels[i] >= 0) {
      labels += std::to_string(i);
      labels += ',';
      labels += std::to_string(graph.labels[i]);
      labels += '\n';
    }
  }
  atomic_write_file(dir / "labels.csv", labels);
}

SplitSet make_splits(const Graph& graph, int train_per_class, int val_count,
                     std::uint64_t seed) {
  if (train_per_class <= 0 || val_count <= 0) {
    throw ValidationError("make_splits: train_per_class and val_count must be > 0");
  }
  std::vector<std::vector<int>> by_class(graph.num_classes);
  for (int i = 0; i < graph.num_nodes; ++i) {
    if (graph.labels[i] >= 0) by_class[graph.labels[i]].push_back(i);
  }

  std::mt19937_64 rng(seed);
  SplitSet splits;
  std::vector<int> rest;
  for (int c = 0; c < graph.num_classes; ++c) {
    auto& ids = by_class[c];
    if (static_cast<int>(ids.size()) < train_per_class) {
      throw ValidationError("make_splits: class " + std::to_string(c) +
                            " has only " + std::to_string(ids.size()) +
                            " labeled nodes, need " +
                            std::to_string(train_per_class));
    }
    std::shuffle(ids.begin(), ids.end(), rng);
    splits.train.insert(splits.train.end(), ids.begin(),
                        ids.begin() + train_per_class);
    rest.insert(rest.end(), ids.begin() + train_per_class, ids.end());
  }
  if (static_cast<int>(rest.size()) < val_count + 1) {
    throw ValidationError("make_splits: not enough labeled nodes left for "
                          "val and a non-empty test set");
  }
  std::shuffle(rest.begin(), rest.end(), rng);
  splits.val.assign(rest.begin(), rest.begin() + val_count);
  splits.test.assign(rest.begin() + val_count, rest.end());
  std::sort(splits.train.begin(), splits.train.end());
  std::sort(splits.val.begin(), splits.val.end());
  std::sort(splits.test.begin(), splits.test.end());
  return splits;
}

namespace {

std::vector<int> split_ids(const json& doc, const char* key, const Graph& graph) {
  std::vector<int> ids;
  try {
    ids = doc.at(key).get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw ValidationError("splits.json: " + std::string(e.what()));
  }
  for (int id : ids) {
    if (id < 0 || id >= graph.num_nodes) {
      throw ValidationError("splits.json: out-of-range node id " +
                            std::to_string(id));
    }
    if (!graph.is_labeled(id)) {
      throw ValidationError("splits.json: node " + std::to_string(id) +
                            " is unlabeled");
    }
  }
  return ids;
}

}  // namespace

SplitSet load_splits(const std::filesystem::path& file, const Graph& graph) {
  json doc;
  try {
    doc = json::parse(read_file(file));
  } catch (const json::exception& e) {
    throw ValidationError("splits.json: " + std::string(e.what()));
  }
  SplitSet splits;
  splits.train = split_ids(doc, "train", graph);
  splits.val = split_ids(doc, "val", graph);
  splits.test = split_ids(doc, "test", graph);
  std::unordered_set<int> seen;
  for (const auto* list : {&splits.train, &splits.val, &splits.test}) {
    for (int id : *list) {
      if (!seen.insert(id).second) {
        throw ValidationError("splits.json: node " + std::to_string(id) +
                              " appears in more than one split");
      }
    }
  }
  if (splits.train.empty() || splits.val.empty() || splits.test.empty()) {
    throw ValidationError("splits.json: all three splits must be non-empty");
  }
  return splits;
}

void save_splits(const SplitSet& splits, const std::filesystem::path& file) {
  json doc;
  doc["train"] = splits.train;
  doc["val"] = splits.val;
  doc["test"] = splits.test;
  atomic_write_file(file, doc.dump() + "\n");
}

}  // namespace hhr
