// decodekit command line: train reference language models, decode with every
// configured strategy, evaluate quality/diversity metrics, run the
// statistical analyses, and render the summary report.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "decodekit/error.hpp"
#include "decodekit/harness/pipeline.hpp"
#include "decodekit/model_io.hpp"
#include "decodekit/ngram.hpp"
#include "decodekit/version.hpp"

namespace {

using decodekit::harness::ExperimentConfig;

struct SharedFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string task;
  std::vector<std::string> decoder_specs;
  std::string out_dir;
  std::optional<int> workers;
};

void add_shared(CLI::App* cmd, SharedFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file");
  cmd->add_option("--seed", flags.seed, "global seed");
  cmd->add_option("--task", flags.task,
                  "task preset: mt, summarization, dialogue, story, unconditional");
  cmd->add_option("--decoder", flags.decoder_specs,
                  "decoder spec, repeatable (e.g. beam:k=5, top_p:p=0.85)");
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--workers", flags.workers, "worker threads");
}

ExperimentConfig make_config(const SharedFlags& flags) {
  ExperimentConfig cfg;
  if (!flags.config_path.empty()) {
    cfg = decodekit::harness::load_config(flags.config_path);
  }
  if (flags.seed) cfg.seed = *flags.seed;
  if (!flags.task.empty()) {
    const auto kind = decodekit::harness::parse_task(flags.task);
    if (!kind) {
      decodekit::raise(decodekit::Errc::config, "unknown task: " + flags.task);
    }
    cfg.task = decodekit::harness::task_preset(*kind);
  }
  if (!flags.decoder_specs.empty()) {
    cfg.decoder_configs.clear();
    for (const auto& spec : flags.decoder_specs) {
      cfg.decoder_configs.push_back(
          decodekit::decoders::DecoderConfig::parse(spec));
    }
  }
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (flags.workers) cfg.workers = *flags.workers;
  return cfg;
}

std::vector<std::vector<std::string>> read_corpus_lines(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    decodekit::raise(decodekit::Errc::io, "cannot open corpus: " + path);
  }
  std::vector<std::vector<std::string>> corpus;
  std::string line;
  while (std::getline(in, line)) {
    auto tokens = decodekit::lm::tokenize(line);
    if (!tokens.empty()) corpus.push_back(std::move(tokens));
  }
  return corpus;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decoding strategy toolkit"};
  app.set_version_flag("--version", decodekit::kVersion);
  app.require_subcommand(1);

  // train-lm
  auto* train = app.add_subcommand(
      "train-lm", "train an n-gram reference model from plain text");
  std::string train_corpus, train_out;
  std::size_t order = 3;
  double smoothing_k = 1.0;
  train->add_option("--corpus", train_corpus,
                    "plain text, one sequence per line")->required();
  train->add_option("--order", order, "n-gram order (default 3)");
  train->add_option("--smoothing-k", smoothing_k,
                    "additive smoothing constant (default 1)");
  train->add_option("--model-out", train_out, "model JSON path")->required();

  // pipeline stages
  SharedFlags decode_flags, eval_flags, analyze_flags, report_flags;

  auto* decode = app.add_subcommand("decode", "decode every input with every decoder");
  add_shared(decode, decode_flags);
  std::string decode_model, decode_inputs;
  std::optional<std::size_t> decode_samples;
  decode->add_option("--model", decode_model, "model JSON path");
  decode->add_option("--inputs", decode_inputs, "corpus JSONL: {id, context?, reference?}");
  decode->add_option("--samples", decode_samples,
                     "samples per input for stochastic decoders (K)");

  auto* evaluate = app.add_subcommand("evaluate", "compute metric report from generations");
  add_shared(evaluate, eval_flags);
  std::string eval_generations, eval_inputs, eval_ratings;
  std::optional<std::size_t> eval_samples;
  evaluate->add_option("--generations", eval_generations, "generations JSONL");
  evaluate->add_option("--inputs", eval_inputs, "corpus JSONL with references");
  evaluate->add_option("--ratings", eval_ratings,
                       "ratings JSONL: {input_id, decoder, criterion, rater, score}");
  evaluate->add_option("--samples", eval_samples, "set size K for set-level metrics");

  auto* analyze = app.add_subcommand("analyze", "statistical analysis bundle from metrics");
  add_shared(analyze, analyze_flags);
  std::string analyze_metrics;
  analyze->add_option("--metrics", analyze_metrics, "metrics JSONL");

  auto* report = app.add_subcommand("report", "render the analysis bundle as one document");
  add_shared(report, report_flags);
  std::string report_analysis;
  report->add_option("--analysis", report_analysis, "analysis bundle directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      const auto corpus = read_corpus_lines(train_corpus);
      const auto model =
          decodekit::lm::train_ngram(corpus, order, smoothing_k);
      decodekit::lm::save_ngram(model, train_out);
      std::printf("trained %zu-gram model on %zu sequences -> %s\n",
                  model.order(), corpus.size(), train_out.c_str());
    } else if (decode->parsed()) {
      auto cfg = make_config(decode_flags);
      if (!decode_model.empty()) cfg.model_path = decode_model;
      if (!decode_inputs.empty()) cfg.corpus_path = decode_inputs;
      if (decode_samples) cfg.samples_per_input = *decode_samples;
      const auto path = decodekit::harness::run_decode(cfg);
      std::printf("wrote %s\n", path.c_str());
    } else if (evaluate->parsed()) {
      auto cfg = make_config(eval_flags);
      if (!eval_inputs.empty()) cfg.corpus_path = eval_inputs;
      if (!eval_ratings.empty()) cfg.ratings_path = eval_ratings;
      if (eval_samples) cfg.samples_per_input = *eval_samples;
      std::filesystem::path generations = eval_generations.empty()
                                              ? cfg.out_dir / "generations.jsonl"
                                              : std::filesystem::path(eval_generations);
      const auto path = decodekit::harness::run_evaluate(cfg, generations);
      std::printf("wrote %s\n", path.c_str());
    } else if (analyze->parsed()) {
      auto cfg = make_config(analyze_flags);
      std::filesystem::path metrics = analyze_metrics.empty()
                                          ? cfg.out_dir / "metrics.jsonl"
                                          : std::filesystem::path(analyze_metrics);
      const auto dir = decodekit::harness::run_analyze(cfg, metrics);
      std::printf("wrote %s\n", dir.c_str());
    } else if (report->parsed()) {
      auto cfg = make_config(report_flags);
      std::filesystem::path analysis_dir = report_analysis.empty()
                                               ? cfg.out_dir / "analysis"
                                               : std::filesystem::path(report_analysis);
      const auto path = decodekit::harness::run_report(cfg, analysis_dir);
      std::printf("wrote %s\n", path.c_str());
    }
  } catch (const decodekit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
