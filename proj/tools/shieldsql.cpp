// Command-line front end: synth | screen | prefpairs | eval | perturb |
// report | fixture. Config file values are overridden by flags; every run
// writes a manifest next to its outputs.

#include <cstdio>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "shieldsql/llm_http.hpp"
#include "shieldsql/pipeline.hpp"

using namespace shieldsql;

namespace {

// Builds the client stack: file-backed mock > HTTP endpoint > none.
// A configured cache directory wraps either in the disk cache.
std::shared_ptr<ChatClient> make_client(const RunConfig& config) {
  std::shared_ptr<ChatClient> client;
  if (!config.mock_path.empty()) {
    client = std::make_shared<MockChatClient>(MockChatClient::from_file(config.mock_path));
  } else {
    auto endpoint = LlmEndpointConfig::from_env();
    if (endpoint.configured()) client = std::make_shared<HttpChatClient>(endpoint);
  }
  if (client && !config.cache_dir.empty())
    client = std::make_shared<CachingClient>(client, config.cache_dir);
  return client;
}

struct CommonFlags {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<int> workers;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "run config file (JSON)");
  cmd->add_option("--seed", flags.seed, "deterministic seed");
  cmd->add_option("--workers", flags.workers, "worker thread count");
  cmd->add_option("--out", flags.out_dir, "output directory");
}

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig config = flags.config_path.empty() ? RunConfig{} : RunConfig::load(flags.config_path);
  if (flags.seed) config.seed = *flags.seed;
  if (flags.workers) config.workers = *flags.workers;
  if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"security-aware NLIDB dataset synthesis, defenses and evaluation"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string db_path, dataset_path, candidates_path, records_path, method, mock_path;
  std::string benign_pool, prompt_dir, template_dir, injection_dir, stopword_path;
  std::optional<double> tau, epsilon, sensitivity;
  std::optional<int> repeats, per_pattern, n;
  bool all_pairs = false, stratify = false;

  auto* synth = app.add_subcommand("synth", "synthesize an interaction dataset");
  add_common(synth, flags);
  synth->add_option("--db", db_path, "database file (fixture is built here when absent)");
  synth->add_option("--per-pattern", per_pattern, "sequences per pattern");
  synth->add_option("--mock", mock_path, "file-backed mock LLM client");
  synth->add_option("--n", n, "candidate count for LLM-backed steps");
  synth->add_option("--benign-pool", benign_pool, "hard-safe pool file (JSONL {question, sql})");
  synth->add_option("--prompts", prompt_dir, "prompt template directory");
  synth->add_option("--templates", template_dir, "pattern skeleton directory");
  synth->add_option("--injections", injection_dir, "injection template directory");

  auto* screen = app.add_subcommand("screen", "run a defense over a dataset");
  add_common(screen, flags);
  screen->add_option("--dataset", dataset_path, "dataset to screen")->required();
  screen->add_option("--method", method, "sqd|ssa|dem|guard");
  screen->add_option("--tau", tau, "SQD similarity threshold");
  screen->add_option("--mock", mock_path, "file-backed mock LLM client (guard)");
  screen->add_option("--stopwords", stopword_path, "SQD stopword list file");

  auto* prefpairs = app.add_subcommand("prefpairs", "build preference pairs from rollouts");
  add_common(prefpairs, flags);
  prefpairs->add_option("--dataset", dataset_path, "dataset file")->required();
  prefpairs->add_option("--candidates", candidates_path, "candidate responses file")->required();
  prefpairs->add_flag("--all-pairs", all_pairs, "emit every rejected in the top tier");
  prefpairs->add_flag("--stratify", stratify, "flatten the SQL-difficulty histogram");

  auto* eval = app.add_subcommand("eval", "compute metrics from a results file");
  add_common(eval, flags);
  eval->add_option("--records", records_path, "results file")->required();

  auto* perturb = app.add_subcommand("perturb", "run the perturbation pipeline");
  add_common(perturb, flags);
  perturb->add_option("--dataset", dataset_path, "dataset file")->required();
  perturb->add_option("--epsilon", epsilon, "privacy budget");
  perturb->add_option("--sensitivity", sensitivity, "query sensitivity");
  perturb->add_option("--repeats", repeats, "perturbations per query");

  auto* report = app.add_subcommand("report", "render the metric summary table");
  add_common(report, flags);
  report->add_option("--records", records_path, "results file")->required();

  auto* fixture = app.add_subcommand("fixture", "build the fixture database and golden dataset");
  add_common(fixture, flags);
  fixture->add_option("--db", db_path, "database output path");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig config = resolve_config(flags);
    if (!db_path.empty()) config.db_path = db_path;
    if (!dataset_path.empty()) config.dataset_path = dataset_path;
    if (!candidates_path.empty()) config.candidates_path = candidates_path;
    if (!records_path.empty()) config.records_path = records_path;
    if (!method.empty()) config.method = method;
    if (!mock_path.empty()) config.mock_path = mock_path;
    if (tau) config.tau = *tau;
    if (epsilon) config.epsilon = *epsilon;
    if (sensitivity) config.sensitivity = *sensitivity;
    if (repeats) config.repeats = *repeats;
    if (per_pattern) config.per_pattern = *per_pattern;
    if (n) config.n = *n;
    if (all_pairs) config.all_pairs = true;
    if (stratify) config.stratify_difficulty = true;
    if (!benign_pool.empty()) config.benign_pool_path = benign_pool;
    if (!prompt_dir.empty()) config.prompt_dir = prompt_dir;
    if (!template_dir.empty()) config.template_dir = template_dir;
    if (!injection_dir.empty()) config.injection_dir = injection_dir;
    if (!stopword_path.empty()) config.stopword_path = stopword_path;

    if (synth->parsed()) {
      auto client = make_client(config);
      auto stats = run_synth(config, client.get());
      std::printf("synth: %zu samples emitted, %zu skipped -> %s/dataset.jsonl\n", stats.emitted,
                  stats.skipped, config.out_dir.c_str());
    } else if (screen->parsed()) {
      auto client = make_client(config);
      run_screen(config, client.get());
      std::printf("screen: verdicts -> %s/verdicts.jsonl\n", config.out_dir.c_str());
    } else if (prefpairs->parsed()) {
      auto pairs = run_prefpairs(config);
      std::printf("prefpairs: %zu pairs -> %s/pairs.jsonl\n", pairs.size(),
                  config.out_dir.c_str());
    } else if (eval->parsed() || report->parsed()) {
      std::string rendered = run_eval(config);
      std::fputs(rendered.c_str(), stdout);
    } else if (perturb->parsed()) {
      auto summary = run_perturb(config);
      std::printf("perturb: mae=%.6f over %zu records (epsilon=%.3f, repeats=%d)\n", summary.mae,
                  summary.records, summary.epsilon, summary.repeats);
    } else if (fixture->parsed()) {
      std::filesystem::create_directories(config.out_dir);
      std::string path = config.db_path.empty()
                             ? (std::filesystem::path(config.out_dir) / "students.db").string()
                             : config.db_path;
      build_students_fixture(path);
      std::string golden_out =
          (std::filesystem::path(config.out_dir) / "golden.jsonl").string();
      save_dataset(golden_samples(path), golden_out);
      write_manifest(config, "fixture", {path, golden_out});
      std::printf("fixture: %s + %s\n", path.c_str(), golden_out.c_str());
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
