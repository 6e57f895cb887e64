// smagdi: persona debate -> interaction graphs -> decomposer-solver
// distillation -> Socratic inference -> exact-match evaluation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "smagdi/config.hpp"
#include "smagdi/dataset.hpp"
#include "smagdi/debate.hpp"
#include "smagdi/distill.hpp"
#include "smagdi/error.hpp"
#include "smagdi/evaluate.hpp"
#include "smagdi/fixtures.hpp"
#include "smagdi/graph.hpp"
#include "smagdi/kernels.hpp"
#include "smagdi/scot.hpp"

namespace {

using namespace smagdi;

struct DatasetArgs {
  std::string dataset{"strategyqa"};
  std::string path;
  std::string split{"train"};
  double train_fraction{0.8};
  std::uint64_t seed{42};
  int subset_size{0};
  int limit{0};
};

void add_dataset_flags(CLI::App* cmd, DatasetArgs& args) {
  cmd->add_option("--dataset", args.dataset, "Dataset kind: strategyqa | mmlu")
      ->check(CLI::IsMember({"strategyqa", "mmlu"}));
  cmd->add_option("--dataset-path", args.path, "Path to the dataset file")->required();
  cmd->add_option("--split", args.split, "Partition to use: train | test | all")
      ->check(CLI::IsMember({"train", "test", "all"}));
  cmd->add_option("--train-fraction", args.train_fraction, "Train fraction for the split");
  cmd->add_option("--seed", args.seed, "Split / run seed");
  cmd->add_option("--subset-size", args.subset_size,
                  "Truncate the train partition to this many records (MMLU: 1000)");
  cmd->add_option("--limit", args.limit, "Cap the number of questions processed");
}

std::vector<harness::QuestionRecord> load_records(const DatasetArgs& args) {
  auto records = args.dataset == "mmlu" ? harness::load_mmlu(args.path)
                                        : harness::load_strategyqa(args.path);
  harness::SplitSpec spec;
  spec.train_fraction = args.train_fraction;
  spec.seed = args.seed;
  if (args.subset_size > 0) spec.subset_size = static_cast<std::size_t>(args.subset_size);

  std::vector<harness::QuestionRecord> chosen;
  if (args.split == "all") {
    chosen = std::move(records);
  } else {
    auto [train, test] = harness::split(std::move(records), spec);
    chosen = args.split == "train" ? std::move(train) : std::move(test);
  }
  if (args.limit > 0 && static_cast<int>(chosen.size()) > args.limit) {
    chosen.resize(args.limit);
  }
  return chosen;
}

// The train partition (for calibration), independent of --split.
std::vector<harness::QuestionRecord> load_train_partition(const DatasetArgs& args) {
  auto records = args.dataset == "mmlu" ? harness::load_mmlu(args.path)
                                        : harness::load_strategyqa(args.path);
  harness::SplitSpec spec;
  spec.train_fraction = args.train_fraction;
  spec.seed = args.seed;
  if (args.subset_size > 0) spec.subset_size = static_cast<std::size_t>(args.subset_size);
  auto [train, test] = harness::split(std::move(records), spec);
  return train;
}

struct BackendArgs {
  std::string backend{"mock"};
  std::string mock_script;
  std::string http_url;
  int http_timeout_ms{30000};
  int http_retries{2};
};

void add_backend_flags(CLI::App* cmd, BackendArgs& args) {
  cmd->add_option("--backend", args.backend, "Agent backend: mock | http")
      ->check(CLI::IsMember({"mock", "http"}));
  cmd->add_option("--mock-script", args.mock_script, "Scripted responses JSON (mock backend)");
  cmd->add_option("--http-url", args.http_url,
                  "Generation service base url (or env SMAGDI_HTTP_URL)");
  cmd->add_option("--http-timeout-ms", args.http_timeout_ms, "HTTP timeout per attempt");
  cmd->add_option("--http-retries", args.http_retries, "HTTP retry count");
}

std::unique_ptr<agents::AgentBackend> make_backend(const BackendArgs& args) {
  if (args.backend == "http") {
    return agents::make_http_backend(args.http_url, args.http_timeout_ms, args.http_retries);
  }
  if (args.mock_script.empty()) {
    throw ValidationError("mock backend needs --mock-script");
  }
  return std::make_unique<agents::MockBackend>(agents::MockBackend::from_file(args.mock_script));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw BackendError("cannot write " + path, false);
  out << text;
}

harness::Config load_config(const std::string& path) {
  if (path.empty()) return {};
  return harness::Config::from_file(path);
}

int run_debate_cmd(const DatasetArgs& data_args, const BackendArgs& backend_args,
                   const harness::Config& cfg, const std::string& weights_out,
                   const std::string& transcripts_out, const std::string& graphs_out,
                   int calibration_size, int embed_dim, int pe_dim,
                   const debate::DebateConfig& dc_in) {
  debate::DebateConfig dc = dc_in;
  dc.max_rounds = cfg.get_int("debate", "max_rounds", dc.max_rounds);
  dc.base_temperature = cfg.get_double("debate", "base_temperature", dc.base_temperature);
  dc.temperature_increment =
      cfg.get_double("debate", "temperature_increment", dc.temperature_increment);
  dc.epsilon = cfg.get_double("debate", "epsilon", dc.epsilon);

  const auto backend = make_backend(backend_args);
  const auto& roster = agents::default_roster();

  const auto train = load_train_partition(data_args);
  if (train.empty()) throw ValidationError("debate: empty train partition");
  std::vector<harness::QuestionRecord> calib(
      train.begin(),
      train.begin() + std::min<std::size_t>(train.size(),
                                            static_cast<std::size_t>(std::max(1, calibration_size))));
  std::cerr << "[smagdi] calibrating on " << calib.size() << " questions\n";
  const auto weights = debate::calibrate(roster, *backend, calib, dc);
  if (!weights_out.empty()) {
    write_text(weights_out, debate::weights_to_json(weights).dump(2) + "\n");
  }

  const auto questions = load_records(data_args);
  std::cerr << "[smagdi] debating " << questions.size() << " questions\n";

  std::ofstream transcripts;
  if (!transcripts_out.empty()) {
    transcripts.open(transcripts_out, std::ios::trunc);
    if (!transcripts) throw BackendError("cannot write " + transcripts_out, false);
  }
  std::ofstream graphs;
  if (!graphs_out.empty()) {
    graphs.open(graphs_out, std::ios::trunc);
    if (!graphs) throw BackendError("cannot write " + graphs_out, false);
  }

  graph::HashingEmbedder embedder(embed_dim);
  int consensus = 0, correct = 0;
  for (const auto& q : questions) {
    const auto transcript = debate::run_debate(q, roster, *backend, weights, dc);
    consensus += transcript.consensus_reached ? 1 : 0;
    correct += transcript.final_answer == q.gold ? 1 : 0;
    if (transcripts.is_open()) {
      transcripts << debate::transcript_to_json(transcript).dump() << "\n";
    }
    if (graphs.is_open()) {
      auto g = graph::build_graph(transcript, weights, q.gold);
      graph::attach_semantic_embeddings(g, embedder);
      graph::attach_positional_encodings(g, pe_dim);
      graphs << graph::serialize(g).dump() << "\n";
    }
  }
  std::cout << "debated " << questions.size() << " questions: consensus " << consensus
            << ", teacher accuracy "
            << (questions.empty() ? 0.0 : static_cast<double>(correct) / questions.size())
            << "\n";
  return 0;
}

int run_distill_cmd(const std::string& graphs_path, const std::string& out_dir,
                    const BackendArgs& backend_args, distill::TrainConfig tc,
                    distill::StudentConfig sc, int gcn_hidden, int gcn_layers) {
  const auto graphs = graph::read_graphs_jsonl(graphs_path);
  if (graphs.empty()) throw ValidationError("distill: no graphs in " + graphs_path);
  const auto backend = make_backend(backend_args);

  const auto& first = graphs.front().nodes.front();
  gcn::GCNConfig gc;
  gc.input_dim = static_cast<int>(first.semantic_embedding.size() +
                                  first.positional_encoding.size());
  gc.hidden_dim = gcn_hidden;
  gc.num_layers = gcn_layers;

  auto student = distill::StudentUnit::build_tiny(sc, tc.seed);
  SplitMix64 rng(tc.seed ^ 0x6c9ULL);
  auto gcn_params = gcn::GCNParams::init(gc, rng);

  std::filesystem::create_directories(out_dir);
  tc.checkpoint_dir = out_dir;

  std::cerr << "[smagdi] training student (" << student.num_params() << " params) + gcn on "
            << graphs.size() << " graphs\n";
  const auto result = distill::train(graphs, student, gcn_params, tc, *backend);

  nlohmann::json extra;
  extra["epochs_run"] = result.history.size();
  extra["best_epoch"] = result.best_epoch;
  distill::save_student_checkpoint(out_dir + "/student.ckpt", student, gcn_params, extra, 0);
  write_text(out_dir + "/history.json", distill::history_to_json(result).dump(2) + "\n");

  std::cout << "trained " << result.history.size() << " epochs: total "
            << result.initial_total << " -> " << result.final_total
            << (result.diverged ? " (diverged; restored last good checkpoint)" : "") << "\n";
  return result.diverged ? 1 : 0;
}

int run_infer_cmd(const std::string& checkpoint, const DatasetArgs& data_args,
                  const std::string& traces_out, const scot::InferenceConfig& ic) {
  auto [student, gcn_params] = distill::student_from_checkpoint(checkpoint);
  const auto questions = load_records(data_args);
  std::cerr << "[smagdi] inferring on " << questions.size() << " questions\n";

  std::ofstream traces(traces_out, std::ios::trunc);
  if (!traces) throw BackendError("cannot write " + traces_out, false);
  int answered = 0;
  for (const auto& q : questions) {
    const auto trace = scot::infer(student, q, ic);
    answered += trace.final_answer != agents::kAbstain ? 1 : 0;
    traces << scot::trace_to_json(trace).dump() << "\n";
  }
  std::cout << "inferred " << questions.size() << " traces, " << answered
            << " with a parsed answer\n";
  return 0;
}

int run_eval_cmd(const std::string& traces_path, const DatasetArgs& data_args,
                 const std::string& report_out) {
  std::map<std::string, harness::QuestionRecord> by_id;
  for (auto& q : load_records(data_args)) by_id[q.question_id] = std::move(q);

  std::ifstream in(traces_path);
  if (!in) throw BackendError("cannot open traces: " + traces_path, false);
  std::vector<harness::PredictionPair> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto trace = scot::trace_from_json(nlohmann::json::parse(line));
    const auto it = by_id.find(trace.question_id);
    if (it == by_id.end()) {
      throw ValidationError("eval: trace for unknown question " + trace.question_id);
    }
    pairs.push_back({trace.final_answer, it->second.gold, it->second.subject.value_or("")});
  }
  const auto report = harness::metrics_report(pairs, data_args.dataset);
  if (!report_out.empty()) write_text(report_out, report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  return 0;
}

int run_compare_cmd(const DatasetArgs& data_args, const BackendArgs& backend_args,
                    const std::string& weights_in, const std::string& report_out,
                    int calibration_size, const debate::DebateConfig& dc) {
  const auto backend = make_backend(backend_args);
  const auto& roster = agents::default_roster();

  debate::AgentWeights weights;
  if (!weights_in.empty()) {
    std::ifstream in(weights_in);
    if (!in) throw BackendError("cannot open weights: " + weights_in, false);
    nlohmann::json j;
    in >> j;
    weights = debate::weights_from_json(j);
  } else {
    const auto train = load_train_partition(data_args);
    std::vector<harness::QuestionRecord> calib(
        train.begin(),
        train.begin() +
            std::min<std::size_t>(train.size(),
                                  static_cast<std::size_t>(std::max(1, calibration_size))));
    weights = debate::calibrate(roster, *backend, calib, dc);
  }

  const auto questions = load_records(data_args);
  const auto report = harness::compare_mas_sas(questions, roster, *backend, weights, dc);
  const auto j = harness::compare_report_to_json(report);
  if (!report_out.empty()) write_text(report_out, j.dump(2) + "\n");
  std::cout << "MAS accuracy " << report.mas_accuracy << " vs SAS accuracy "
            << report.sas_accuracy << " over " << report.n << " questions\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smagdi: multi-agent debate distillation into a Socratic decomposer-solver"};
  app.require_subcommand(1);
  app.fallthrough();  // allow --config after the subcommand name

  std::string config_path;
  app.add_option("--config", config_path, "Key-value config file; flags override it");

  // debate
  auto* debate_cmd = app.add_subcommand("debate", "Run calibrated debates; emit transcripts, "
                                                  "weights, and interaction graphs");
  DatasetArgs debate_data;
  BackendArgs debate_backend;
  add_dataset_flags(debate_cmd, debate_data);
  add_backend_flags(debate_cmd, debate_backend);
  std::string weights_out, transcripts_out, graphs_out;
  int calibration_size = 50, embed_dim = 64, pe_dim = 8;
  debate::DebateConfig dc;
  debate_cmd->add_option("--weights-out", weights_out, "Write calibrated weights JSON here");
  debate_cmd->add_option("--transcripts-out", transcripts_out, "Write transcript JSONL here");
  debate_cmd->add_option("--graphs-out", graphs_out, "Write interaction-graph JSONL here");
  debate_cmd->add_option("--calibration-size", calibration_size,
                         "Train questions used for weight calibration");
  debate_cmd->add_option("--embed-dim", embed_dim, "Hashing embedder width");
  debate_cmd->add_option("--pe-dim", pe_dim, "Laplacian positional-encoding width");
  debate_cmd->add_option("--max-rounds", dc.max_rounds, "Debate round cap");
  debate_cmd->add_option("--base-temperature", dc.base_temperature, "Round-1 temperature");
  debate_cmd->add_option("--temperature-increment", dc.temperature_increment,
                         "Per-round temperature increase");
  debate_cmd->add_option("--epsilon", dc.epsilon, "Weight floor");
  debate_cmd->add_flag("--parallel-agents", dc.parallel_agents,
                       "Issue the five agent calls concurrently within a round");

  // distill
  auto* distill_cmd =
      app.add_subcommand("distill", "Train the decomposer-solver student + GCN on graphs");
  std::string graphs_path, out_dir;
  BackendArgs distill_backend;
  add_backend_flags(distill_cmd, distill_backend);
  distill::TrainConfig tc;
  distill::StudentConfig sc;
  int gcn_hidden = 32, gcn_layers = 2;
  std::string coefficients_flag;
  distill_cmd->add_option("--graphs", graphs_path, "Interaction-graph JSONL")->required();
  distill_cmd->add_option("--out-dir", out_dir, "Checkpoint/history output directory")
      ->required();
  auto* epochs_opt = distill_cmd->add_option("--epochs", tc.epochs, "Training epochs");
  auto* lr_opt = distill_cmd->add_option("--lr", tc.learning_rate, "Learning rate");
  distill_cmd->add_option("--coefficients", coefficients_flag,
                          "alpha,beta,gamma,delta (default 1.0,1.0,0.1,0.5)");
  distill_cmd->add_option("--seed", tc.seed, "Training seed");
  auto* batch_opt = distill_cmd->add_option("--batch-size", tc.batch_size, "LM examples per step");
  distill_cmd->add_option("--patience", tc.early_stopping_patience,
                          "Early-stopping patience (0 disables)");
  distill_cmd->add_option("--resume", tc.resume_from, "Resume from a trainer checkpoint");
  distill_cmd->add_option("--gcn-hidden", gcn_hidden, "GCN hidden width");
  distill_cmd->add_option("--gcn-layers", gcn_layers, "GCN propagation layers");
  distill_cmd->add_option("--proj-dim", sc.proj_dim, "Alignment projection width");
  distill_cmd->add_option("--lm-dim", sc.lm_dim, "Student embedding width");
  distill_cmd->add_option("--lm-layers", sc.lm_layers, "Student transformer layers");
  distill_cmd->add_option("--lm-heads", sc.lm_heads, "Student attention heads");
  distill_cmd->add_option("--lm-block", sc.lm_block, "Student context window");

  // infer
  auto* infer_cmd = app.add_subcommand("infer", "Socratic zero-shot inference from a checkpoint");
  DatasetArgs infer_data;
  add_dataset_flags(infer_cmd, infer_data);
  std::string checkpoint, traces_out;
  scot::InferenceConfig ic;
  infer_cmd->add_option("--checkpoint", checkpoint, "student.ckpt from distill")->required();
  infer_cmd->add_option("--traces-out", traces_out, "Write InferenceTrace JSONL here")
      ->required();
  auto* depth_opt = infer_cmd->add_option("--max-depth", ic.max_depth, "Recursive decomposition cap");
  infer_cmd->add_option("--temperature", ic.temperature, "Generation temperature (0 = greedy)");
  infer_cmd->add_option("--max-tokens", ic.max_tokens, "Generation budget per call");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Exact-match evaluation of inference traces");
  DatasetArgs eval_data;
  add_dataset_flags(eval_cmd, eval_data);
  std::string traces_path, report_out;
  eval_cmd->add_option("--traces", traces_path, "InferenceTrace JSONL")->required();
  eval_cmd->add_option("--report-out", report_out, "Write the metrics JSON here");

  // compare
  auto* compare_cmd = app.add_subcommand("compare", "MAS (debate) vs SAS (single zero-shot "
                                                    "agent) accuracy");
  DatasetArgs compare_data;
  BackendArgs compare_backend;
  add_dataset_flags(compare_cmd, compare_data);
  add_backend_flags(compare_cmd, compare_backend);
  std::string weights_in, compare_report_out;
  int compare_calibration = 50;
  debate::DebateConfig compare_dc;
  compare_cmd->add_option("--weights-in", weights_in, "Reuse calibrated weights JSON");
  compare_cmd->add_option("--report-out", compare_report_out, "Write the comparison JSON here");
  compare_cmd->add_option("--calibration-size", compare_calibration,
                          "Calibration sample when no --weights-in");

  // make-fixture
  auto* fixture_cmd = app.add_subcommand(
      "make-fixture", "Emit a deterministic desk-scale dataset + mock script");
  std::string fixture_dir;
  int fixture_n = 24;
  std::uint64_t fixture_seed = 42;
  fixture_cmd->add_option("--out-dir", fixture_dir, "Output directory")->required();
  fixture_cmd->add_option("--num-questions", fixture_n, "Fixture size");
  fixture_cmd->add_option("--seed", fixture_seed, "Fixture seed");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = load_config(config_path);

    if (debate_cmd->parsed()) {
      return run_debate_cmd(debate_data, debate_backend, cfg, weights_out, transcripts_out,
                            graphs_out, calibration_size, embed_dim, pe_dim, dc);
    }
    if (distill_cmd->parsed()) {
      if (!coefficients_flag.empty()) {
        double a, b, g, d;
        if (std::sscanf(coefficients_flag.c_str(), "%lf,%lf,%lf,%lf", &a, &b, &g, &d) != 4) {
          throw ValidationError("--coefficients expects a,b,g,d");
        }
        tc.coefficients = {a, b, g, d};
      } else {
        tc.coefficients.alpha = cfg.get_double("losses", "alpha", tc.coefficients.alpha);
        tc.coefficients.beta = cfg.get_double("losses", "beta", tc.coefficients.beta);
        tc.coefficients.gamma = cfg.get_double("losses", "gamma", tc.coefficients.gamma);
        tc.coefficients.delta = cfg.get_double("losses", "delta", tc.coefficients.delta);
      }
      if (epochs_opt->count() == 0) tc.epochs = cfg.get_int("distill", "epochs", tc.epochs);
      if (lr_opt->count() == 0) {
        tc.learning_rate = cfg.get_double("distill", "learning_rate", tc.learning_rate);
      }
      if (batch_opt->count() == 0) {
        tc.batch_size = cfg.get_int("distill", "batch_size", tc.batch_size);
      }
      return run_distill_cmd(graphs_path, out_dir, distill_backend, tc, sc, gcn_hidden,
                             gcn_layers);
    }
    if (infer_cmd->parsed()) {
      if (depth_opt->count() == 0) ic.max_depth = cfg.get_int("scot", "max_depth", ic.max_depth);
      return run_infer_cmd(checkpoint, infer_data, traces_out, ic);
    }
    if (eval_cmd->parsed()) {
      return run_eval_cmd(traces_path, eval_data, report_out);
    }
    if (compare_cmd->parsed()) {
      return run_compare_cmd(compare_data, compare_backend, weights_in, compare_report_out,
                             compare_calibration, compare_dc);
    }
    if (fixture_cmd->parsed()) {
      std::filesystem::create_directories(fixture_dir);
      const auto fx = fixtures::make_debate_fixture({fixture_n, fixture_seed});
      fixtures::write_strategyqa_jsonl(fixture_dir + "/dataset.jsonl", fx.questions);
      fixtures::write_json(fixture_dir + "/mock.json", fx.mock_script);
      std::cout << "wrote " << fx.questions.size() << " questions and the mock script to "
                << fixture_dir << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
