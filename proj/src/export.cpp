#include "hhr/export.hpp"

#include "hhr/errors.hpp"
#include "hhr/io_util.hpp"
#include "hhr/tape.hpp"

namespace hhr {

std::string relation_scores_csv(const ModelParams& params,
                                const ModelConfig& config, const Graph& graph,
                                const std::vector<CompiledRelation>& relations,
                                const std::vector<int>& nodes) {
  if (nodes.empty()) {
    throw ValidationError("relation score export: empty node selection");
  }
  for (int node : nodes) {
    if (node < 0 || node >= graph.num_nodes) {
      throw ValidationError("relation score export: node id out of range: " +
                            std::to_string(node));
    }
  }
  Tape tape;
  const HiddenForwardResult fwd = model_forward_hidden(
      tape, params, config, relations, graph.features, /*training=*/false);

  const int p = config.num_hops();
  std::string csv = "node_id,layer,relation_name,alpha_raw,alpha_normalized\n";
  for (const int node : nodes) {
    for (int k = 0; k < config.num_layers(); ++k) {
      const DenseMatrix& alpha = fwd.report.alpha[k];
      double total = 1.0;  // the constant self score
      for (int r = 0; r < p; ++r) total += alpha(node, r);
      for (int r = 0; r <= p; ++r) {
        const double raw = r == 0 ? 1.0 : alpha(node, r - 1);
        csv += std::to_string(node);
        csv += ',';
        csv += std::to_string(k + 1);
        csv += ',';
        csv += fwd.report.relation_names[r];
        csv += ',';
        csv += format_double(raw);
        csv += ',';
        csv += format_double(raw / total);
        csv += '\n';
      }
    }
  }
  return csv;
}

void export_relation_scores(const ModelParams& params, const ModelConfig& config,
                            const Graph& graph,
                            const std::vector<CompiledRelation>& relations,
                            const std::vector<int>& nodes,
                            const std::filesystem::path& out_path) {
  atomic_write_file(out_path,
                    relation_scores_csv(params, config, graph, relations, nodes));
}

std::vector<int> parse_node_spec(const std::string& spec, int num_nodes) {
  std::vector<int> nodes;
  for (const std::string& part : split(spec, ',')) {
    if (part.empty()) {
      throw ValidationError("node spec: empty element in '" + spec + "'");
    }
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      nodes.push_back(static_cast<int>(parse_long(part, "node spec")));
    } else {
      const long lo = parse_long(part.substr(0, dash), "node spec");
      const long hi = parse_long(part.substr(dash + 1), "node spec");
      if (lo > hi) {
        throw ValidationError("node spec: descending range '" + part + "'");
      }
      for (long i = lo; i <= hi; ++i) nodes.push_back(static_cast<int>(i));
    }
  }
  for (int node : nodes) {
    if (node < 0 || node >= num_nodes) {
      throw ValidationError("node spec: id " + std::to_string(node) +
                            " out of range (graph has " +
                            std::to_string(num_nodes) + " nodes)");
    }
  }
  return nodes;
}

}  // namespace hhr
