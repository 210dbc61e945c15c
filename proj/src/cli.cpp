#include "hhr/cli.hpp"

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hhr/errors.hpp"
#include "hhr/export.hpp"
#include "hhr/graph.hpp"
#include "hhr/io_util.hpp"
#include "hhr/model.hpp"
#include "hhr/run_config.hpp"
#include "hhr/trainer.hpp"

namespace hhr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string pick_path(const std::string& flag_value, const std::string& config_value,
                      const std::string& what) {
  if (!flag_value.empty()) return flag_value;
  if (!config_value.empty()) return config_value;
  throw ValidationError("missing " + what + " (flag or config key)");
}

SplitSet splits_for(const Graph& graph, const fs::path& data_dir,
                    const RunConfig& config) {
  const fs::path file = data_dir / "splits.json";
  if (fs::exists(file)) {
    return load_splits(file, graph);
  }
  return make_splits(graph, config.train_per_class, config.val_count,
                     config.split_seed);
}

std::vector<int> default_explain_nodes(const Graph& graph) {
  std::vector<int> nodes;
  for (int i = 0; i < std::min(graph.num_nodes, 20); ++i) nodes.push_back(i);
  return nodes;
}

json metrics_to_json(const Metrics& metrics) {
  json j;
  j["accuracy"] = metrics.accuracy;
  j["macro_f1"] = metrics.macro_f1;
  j["loss"] = metrics.loss;
  j["per_class_precision"] = metrics.per_class_precision;
  j["per_class_recall"] = metrics.per_class_recall;
  return j;
}

void run_train_for_seed(const Graph& graph, const SplitSet& splits,
                        const RunConfig& run_config, std::uint64_t seed,
                        const fs::path& out_dir, json* summary_entry) {
  const ModelConfig model_config = make_model_config(run_config, graph, seed);
  const TrainResult result = train(graph, splits, model_config, run_config.hyper);
  const Metrics test_metrics = evaluate(result.best_params, model_config, graph,
                                        result.relations, splits.test);

  fs::create_directories(out_dir);
  save_checkpoint(result.best_params, model_config, out_dir / "checkpoint.json");
  save_history_csv(result.history, out_dir / "history.csv");
  save_metrics_json(test_metrics, result.best_epoch, out_dir / "metrics.json");
  export_relation_scores(result.best_params, model_config, graph,
                         result.relations, default_explain_nodes(graph),
                         out_dir / "relation_scores.csv");
  if (summary_entry != nullptr) {
    (*summary_entry)["seed"] = seed;
    (*summary_entry)["best_epoch"] = result.best_epoch;
    (*summary_entry)["test"] = metrics_to_json(test_metrics);
  }
  std::cout << "seed " << seed << ": best epoch " << result.best_epoch
            << ", test accuracy " << test_metrics.accuracy << ", macro-F1 "
            << test_metrics.macro_f1 << "\n";
}

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Hop-hop relation-aware GNN for semi-supervised node classification"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic graph directory");
  std::string gen_kind;
  std::string gen_out;
  std::uint64_t gen_seed = 1;
  int gen_classes = 3;
  int gen_per_class = 100;
  double gen_p_in = 0.10, gen_p_out = 0.01;
  int gen_dim = 16;
  double gen_signal = 0.5;
  int gen_a_per_class = 50, gen_papers = 120, gen_confs = 6;
  double gen_p_own = 0.20, gen_p_other = 0.02, gen_p_pc = 0.30;
  int gen_train_per_class = 20, gen_val = 60;
  std::uint64_t gen_split_seed = 0;
  gen->add_option("--kind", gen_kind, "planted | apc")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--classes", gen_classes, "Number of classes");
  gen->add_option("--per-class", gen_per_class, "Nodes per class (planted)");
  gen->add_option("--p-in", gen_p_in, "Within-class edge probability (planted)");
  gen->add_option("--p-out", gen_p_out, "Cross-class edge probability (planted)");
  gen->add_option("--dim", gen_dim, "Feature dimension");
  gen->add_option("--signal", gen_signal, "Class-mean feature offset");
  gen->add_option("--a-per-class", gen_a_per_class, "Authors per class (apc)");
  gen->add_option("--papers", gen_papers, "Paper count (apc)");
  gen->add_option("--confs", gen_confs, "Conference count (apc)");
  gen->add_option("--p-own", gen_p_own, "A-P probability to own pool (apc)");
  gen->add_option("--p-other", gen_p_other, "A-P probability elsewhere (apc)");
  gen->add_option("--p-pc", gen_p_pc, "P-C probability (apc)");
  gen->add_option("--train-per-class", gen_train_per_class, "Train nodes per class");
  gen->add_option("--val", gen_val, "Validation node count");
  gen->add_option("--split-seed", gen_split_seed, "Split shuffle seed");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train on a graph directory");
  std::string train_data, train_config, train_out;
  train_cmd->add_option("--data", train_data, "Graph directory");
  train_cmd->add_option("--config", train_config, "Run config JSON")->required();
  train_cmd->add_option("--out", train_out, "Output directory");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string eval_data, eval_model, eval_split = "test";
  eval_cmd->add_option("--data", eval_data, "Graph directory")->required();
  eval_cmd->add_option("--model", eval_model, "checkpoint.json path")->required();
  eval_cmd->add_option("--split", eval_split, "train | val | test");

  // explain
  auto* explain_cmd = app.add_subcommand("explain", "Export relation scores");
  std::string explain_data, explain_model, explain_nodes = "0-19", explain_out;
  explain_cmd->add_option("--data", explain_data, "Graph directory")->required();
  explain_cmd->add_option("--model", explain_model, "checkpoint.json path")->required();
  explain_cmd->add_option("--nodes", explain_nodes, "Node spec, e.g. 0-19 or 1,5,9");
  explain_cmd->add_option("--out", explain_out, "Output CSV path")->required();

  // gradcheck
  auto* gradcheck_cmd =
      app.add_subcommand("gradcheck", "Whole-model finite-difference check");
  std::uint64_t gc_seed = 7;
  int gc_nodes = 30;
  gradcheck_cmd->add_option("--seed", gc_seed, "Graph and init seed");
  gradcheck_cmd->add_option("--nodes", gc_nodes, "Approximate node count");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  if (gen->parsed()) {
    Graph graph;
    if (gen_kind == "planted") {
      GenParamsHomogeneous params;
      params.nodes_per_class = gen_per_class;
      params.num_classes = gen_classes;
      params.p_in = gen_p_in;
      params.p_out = gen_p_out;
      params.feature_dim = gen_dim;
      params.signal = gen_signal;
      params.seed = gen_seed;
      graph = generate_homogeneous(params);
    } else if (gen_kind == "apc") {
      GenParamsHeterogeneous params;
      params.authors_per_class = gen_a_per_class;
      params.num_classes = gen_classes;
      params.num_papers = gen_papers;
      params.num_conferences = gen_confs;
      params.p_ap_own = gen_p_own;
      params.p_ap_other = gen_p_other;
      params.p_pc = gen_p_pc;
      params.feature_dim = gen_dim;
      params.signal = gen_signal;
      params.seed = gen_seed;
      graph = generate_heterogeneous(params);
    } else {
      throw ValidationError("gen: unknown --kind '" + gen_kind +
                            "' (expected planted or apc)");
    }
    save_graph(graph, gen_out);
    const SplitSet splits =
        make_splits(graph, gen_train_per_class, gen_val, gen_split_seed);
    save_splits(splits, fs::path(gen_out) / "splits.json");
    std::cout << "wrote " << gen_out << ": " << graph.num_nodes << " nodes, "
              << graph.edges.size() << " directed edges\n";
    return 0;
  }

  if (train_cmd->parsed()) {
    const RunConfig run_config = parse_run_config(read_file(train_config));
    const fs::path data_dir = pick_path(train_data, run_config.data_dir, "--data");
    const fs::path out_root = pick_path(train_out, run_config.out_dir, "--out");
    const Graph graph = load_graph(data_dir);
    const SplitSet splits = splits_for(graph, data_dir, run_config);

    if (run_config.seeds.size() == 1) {
      run_train_for_seed(graph, splits, run_config, run_config.seeds[0],
                         out_root, nullptr);
    } else {
      json summary;
      summary["runs"] = json::array();
      double acc_sum = 0.0, f1_sum = 0.0;
      for (const std::uint64_t seed : run_config.seeds) {
        json entry;
        run_train_for_seed(graph, splits, run_config, seed,
                           out_root / ("seed_" + std::to_string(seed)), &entry);
        acc_sum += entry["test"]["accuracy"].get<double>();
        f1_sum += entry["test"]["macro_f1"].get<double>();
        summary["runs"].push_back(std::move(entry));
      }
      summary["mean_test_accuracy"] = acc_sum / run_config.seeds.size();
      summary["mean_test_macro_f1"] = f1_sum / run_config.seeds.size();
      atomic_write_file(out_root / "summary.json", summary.dump(2) + "\n");
    }
    return 0;
  }

  if (eval_cmd->parsed()) {
    const Graph graph = load_graph(eval_data);
    const Checkpoint ck = load_checkpoint(eval_model);
    RunConfig defaults;
    const SplitSet splits = splits_for(graph, eval_data, defaults);
    const std::vector<int>* mask = nullptr;
    if (eval_split == "train") mask = &splits.train;
    else if (eval_split == "val") mask = &splits.val;
    else if (eval_split == "test") mask = &splits.test;
    else throw ValidationError("eval: unknown --split '" + eval_split + "'");
    const std::vector<CompiledRelation> relations =
        compile_relations(graph, ck.config.relations);
    const Metrics metrics =
        evaluate(ck.params, ck.config, graph, relations, *mask);
    std::cout << metrics_to_json(metrics).dump(2) << "\n";
    return 0;
  }

  if (explain_cmd->parsed()) {
    const Graph graph = load_graph(explain_data);
    const Checkpoint ck = load_checkpoint(explain_model);
    const std::vector<CompiledRelation> relations =
        compile_relations(graph, ck.config.relations);
    const std::vector<int> nodes = parse_node_spec(explain_nodes, graph.num_nodes);
    export_relation_scores(ck.params, ck.config, graph, relations, nodes,
                           explain_out);
    std::cout << "wrote " << explain_out << " (" << nodes.size() << " nodes)\n";
    return 0;
  }

  if (gradcheck_cmd->parsed()) {
    GenParamsHomogeneous params;
    params.num_classes = 3;
    params.nodes_per_class = std::max(1, gc_nodes / 3);
    params.p_in = 0.30;
    params.p_out = 0.08;
    params.feature_dim = 6;
    params.signal = 0.5;
    params.seed = gc_seed;
    const Graph graph = generate_homogeneous(params);

    ModelConfig config;
    config.relations = {RelationSpec::power("self", 0),
                        RelationSpec::power("hop1", 1),
                        RelationSpec::power("hop2", 2)};
    config.layer_dims = {8, 4};
    config.num_classes = graph.num_classes;
    config.dropout = 0.0;
    config.seed = gc_seed;

    const double err = grad_check_model(config, graph, graph.labeled_nodes());
    std::cout << format_double(err) << "\n";
    return err < 1e-4 ? 0 : 1;
  }

  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  try {
    return dispatch(args);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace hhr
