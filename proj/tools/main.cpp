// Command-line surface: `train`, `eval`, `synth`, and `export` subcommands
// binding ingestion, training, evaluation, and embedding export into
// reproducible runs. Exit codes: 0 success, 1 usage error, 2 data error,
// 3 numeric error.
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mnci/mnci.hpp"

namespace {

using nlohmann::json;

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

struct TrainArgs {
  std::string edges;
  std::string out = "mnci_out";
  mnci::TrainConfig cfg;
};

struct EvalArgs {
  std::string embeddings;
  std::string labels;
  std::string out = "eval_report.txt";
  int folds = 5;
  std::uint64_t seed = 42;
};

struct SynthArgs {
  mnci::SynthConfig cfg;
  std::string out = "synth_out";
};

struct ExportArgs {
  std::string checkpoint;
  std::string out = "embeddings.txt";
};

int run_train(const TrainArgs& args) {
  const std::string started = iso_now();
  mnci::TemporalGraph graph = mnci::parse_edge_list_file(args.edges);

  std::filesystem::create_directories(args.out);
  const std::string checkpoint_path = args.out + "/checkpoint.txt";
  const std::string embeddings_path = args.out + "/embeddings.txt";
  const std::string metrics_path = args.out + "/metrics.txt";
  const std::string manifest_path = args.out + "/manifest.json";

  std::vector<mnci::EpochMetrics> metrics;
  mnci::Model model = mnci::train(std::move(graph), args.cfg, &metrics);

  model.save_checkpoint_file(checkpoint_path);
  mnci::export_embeddings(model, embeddings_path);

  std::ofstream mf(metrics_path);
  if (!mf) throw mnci::DataError("cannot write metrics: " + metrics_path);
  for (const auto& m : metrics) {
    char line[128];
    std::snprintf(line, sizeof(line), "%d %.9g %.3f\n", m.epoch, m.mean_loss, m.seconds);
    mf << line;
  }
  mf.close();

  json manifest;
  manifest["command"] = "train";
  manifest["inputs"]["edges"] = args.edges;
  manifest["config"]["dim"] = args.cfg.dim;
  manifest["config"]["learning_rate"] = args.cfg.learning_rate;
  manifest["config"]["batch_size"] = args.cfg.batch_size;
  manifest["config"]["negatives"] = args.cfg.negatives;
  manifest["config"]["communities"] = args.cfg.communities;
  manifest["config"]["epochs"] = args.cfg.epochs;
  manifest["config"]["history_cap"] = args.cfg.history_cap;
  manifest["config"]["seed"] = args.cfg.seed;
  manifest["config"]["time_scale"] = args.cfg.time_scale;
  manifest["config"]["adam_beta1"] = args.cfg.adam_beta1;
  manifest["config"]["adam_beta2"] = args.cfg.adam_beta2;
  manifest["config"]["adam_eps"] = args.cfg.adam_eps;
  manifest["resolved"]["time_scale"] = model.resolved_time_scale();
  manifest["resolved"]["sigma_omega"] = model.sigma_omega();
  manifest["resolved"]["node_count"] = model.graph().node_count();
  manifest["resolved"]["event_count"] = model.graph().events().size();
  manifest["outputs"]["checkpoint"] = checkpoint_path;
  manifest["outputs"]["embeddings"] = embeddings_path;
  manifest["outputs"]["metrics"] = metrics_path;
  manifest["outputs"]["manifest"] = manifest_path;
  manifest["started_at"] = started;
  manifest["finished_at"] = iso_now();
  std::ofstream mout(manifest_path);
  if (!mout) throw mnci::DataError("cannot write manifest: " + manifest_path);
  mout << manifest.dump(2) << '\n';

  if (!metrics.empty()) {
    std::cout << "final epoch mean loss " << metrics.back().mean_loss << '\n';
  }
  std::cout << "wrote " << checkpoint_path << ", " << embeddings_path << ", " << metrics_path
            << ", " << manifest_path << '\n';
  return 0;
}

int run_eval(const EvalArgs& args) {
  const mnci::EmbeddingTable table = mnci::read_embeddings_file(args.embeddings);
  const mnci::LabelMap labels = mnci::parse_labels_file(args.labels);
  const mnci::EvalReport report = mnci::kfold_classify(table, labels, args.folds, args.seed);

  std::ofstream out(args.out);
  if (!out) throw mnci::DataError("cannot write report: " + args.out);
  mnci::write_eval_report(report, out);

  std::cout << "accuracy " << report.accuracy << '\n';
  std::cout << "weighted_f1 " << report.weighted_f1 << '\n';
  return 0;
}

int run_synth(const SynthArgs& args) {
  const mnci::SynthData data = mnci::synth_planted_graph(args.cfg);
  std::filesystem::create_directories(args.out);
  const std::string edges_path = args.out + "/edges.txt";
  const std::string labels_path = args.out + "/labels.txt";

  std::ofstream eout(edges_path);
  if (!eout) throw mnci::DataError("cannot write edges: " + edges_path);
  char buf[64];
  for (const mnci::Event& e : data.stream) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.time);
    eout << e.src << ' ' << e.dst << ' ' << buf << '\n';
  }
  std::ofstream lout(labels_path);
  if (!lout) throw mnci::DataError("cannot write labels: " + labels_path);
  const mnci::NodeId total =
      static_cast<mnci::NodeId>(args.cfg.nodes_per_community) * args.cfg.communities;
  for (mnci::NodeId u = 0; u < total; ++u) {
    lout << u << ' ' << data.labels.at(u) << '\n';
  }
  std::cout << "wrote " << edges_path << " and " << labels_path << '\n';
  return 0;
}

int run_export(const ExportArgs& args) {
  const mnci::EmbeddingTable table = mnci::read_checkpoint_embeddings_file(args.checkpoint);
  mnci::write_embeddings_file(table, args.out);
  std::cout << "wrote " << args.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"temporal-network node embeddings via neighborhood and community influence"};
  app.require_subcommand(1);

  const auto even_dim = CLI::Validator(
      [](std::string& v) -> std::string {
        const int d = std::atoi(v.c_str());
        if (d <= 0 || d % 2 != 0) return "dim must be even and positive";
        return {};
      },
      "EVEN");
  const auto positive_real = CLI::Validator(
      [](std::string& v) -> std::string {
        if (std::atof(v.c_str()) <= 0.0) return "value must be > 0";
        return {};
      },
      "POSITIVE");
  const auto non_negative_real = CLI::Validator(
      [](std::string& v) -> std::string {
        if (std::atof(v.c_str()) < 0.0) return "value must be >= 0";
        return {};
      },
      "NONNEGATIVE");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "learn node embeddings from a temporal edge list");
  train->add_option("--edges", train_args.edges, "edge list: `src dst time` per line")->required();
  train->add_option("--dim", train_args.cfg.dim, "embedding dimension (even)")
      ->capture_default_str()
      ->check(even_dim);
  train->add_option("--lr", train_args.cfg.learning_rate, "Adam learning rate")
      ->capture_default_str()
      ->check(positive_real);
  train->add_option("--batch", train_args.cfg.batch_size, "events per parameter update")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train->add_option("--negatives", train_args.cfg.negatives, "negative samples per event")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train->add_option("--communities", train_args.cfg.communities, "community count")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train->add_option("--epochs", train_args.cfg.epochs, "passes over the event stream")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  train->add_option("--history-cap", train_args.cfg.history_cap, "retained interactions per node")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train->add_option("--seed", train_args.cfg.seed, "RNG seed")->capture_default_str();
  train->add_option("--time-scale", train_args.cfg.time_scale,
                    "divisor for time deltas; 0 = median positive inter-event gap")
      ->capture_default_str()
      ->check(non_negative_real);
  train->add_option("--out", train_args.out, "output directory")->capture_default_str();

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "k-fold node classification over embeddings");
  eval->add_option("--embeddings", eval_args.embeddings, "embeddings file")->required();
  eval->add_option("--labels", eval_args.labels, "label file: `node_id label` per line")->required();
  eval->add_option("--folds", eval_args.folds, "cross-validation folds")
      ->capture_default_str()
      ->check(CLI::Range(2, 1000000));
  eval->add_option("--seed", eval_args.seed, "fold shuffle seed")->capture_default_str();
  eval->add_option("--out", eval_args.out, "report file")->capture_default_str();

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "generate a planted-community event stream");
  synth->add_option("--nodes-per-community", synth_args.cfg.nodes_per_community, "nodes per community")
      ->capture_default_str()
      ->check(CLI::Range(2, 1 << 30));
  synth->add_option("--communities", synth_args.cfg.communities, "community count")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  synth->add_option("--intra-p", synth_args.cfg.intra_p, "intra-community partner probability, (0.5, 1]")
      ->capture_default_str()
      ->check(CLI::Validator(
          [](std::string& v) -> std::string {
            const double p = std::atof(v.c_str());
            if (!(p > 0.5) || p > 1.0) return "probability must be in (0.5, 1]";
            return {};
          },
          "PROB"));
  synth->add_option("--events-per-node", synth_args.cfg.events_per_node, "events emitted per node")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_args.cfg.seed, "RNG seed")->capture_default_str();
  synth->add_option("--out", synth_args.out, "output directory")->capture_default_str();

  ExportArgs export_args;
  CLI::App* exp = app.add_subcommand("export", "write embeddings out of a checkpoint");
  exp->add_option("--checkpoint", export_args.checkpoint, "checkpoint file")->required();
  exp->add_option("--out", export_args.out, "embeddings file")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (train->parsed()) return run_train(train_args);
    if (eval->parsed()) return run_eval(eval_args);
    if (synth->parsed()) return run_synth(synth_args);
    if (exp->parsed()) return run_export(export_args);
  } catch (const mnci::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const mnci::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid arguments: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
