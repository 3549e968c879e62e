#include "decodekit/harness/config.hpp"

#include <fstream>
#include <set>

#include "decodekit/error.hpp"
#include "json.hpp"

namespace decodekit::harness {

using nlohmann::json;

void ExperimentConfig::validate() const {
  if (samples_per_input < 1) {
    raise(Errc::config, "samples_per_input must be >= 1");
  }
  if (workers < 1) raise(Errc::config, "workers must be >= 1");
  if (effective_max_len() < 1) raise(Errc::config, "max_len must be >= 1");

  std::set<std::string> labels;
  for (const auto& d : decoder_configs) {
    if (!labels.insert(d.label()).second) {
      raise(Errc::config, "duplicate decoder label: " + d.label());
    }
    switch (d.kind) {
      case decoders::DecoderKind::beam:
        if (d.beam_k < 1) raise(Errc::config, "beam needs k >= 1");
        break;
      case decoders::DecoderKind::diverse_beam:
        if (d.beam_k < 1 || d.groups < 1 || d.beam_k % d.groups != 0) {
          raise(Errc::config, "diverse_beam needs G dividing k");
        }
        if (d.lambda < 0.0) raise(Errc::config, "diverse_beam needs lambda >= 0");
        break;
      case decoders::DecoderKind::top_k:
        if (d.top_k < 1) raise(Errc::config, "top_k needs k >= 1");
        break;
      case decoders::DecoderKind::top_p:
        if (!(d.top_p > 0.0) || d.top_p > 1.0) {
          raise(Errc::config, "top_p needs p in (0,1]");
        }
        break;
      case decoders::DecoderKind::mbr:
        if (d.mbr_samples < 1) raise(Errc::config, "mbr needs n >= 1");
        break;
      default:
        break;
    }
  }

  if (grouping) {
    std::set<std::string> seen;
    auto check = [&](const std::set<std::string>& group) {
      for (const auto& d : group) {
        // Configured decoders are the authority when present; a bare
        // analyze run checks the grouping against the metric rows instead.
        if (!labels.empty() && !labels.count(d)) {
          raise(Errc::config, "grouping references unknown decoder: " + d);
        }
        if (!seen.insert(d).second) {
          raise(Errc::config, "decoder in multiple groups: " + d);
        }
      }
    };
    check(grouping->deterministic);
    check(grouping->stochastic);
    check(grouping->excluded);
  }
}

analysis::GroupingSpec default_grouping(
    const std::vector<decoders::DecoderConfig>& configs) {
  analysis::GroupingSpec spec;
  for (const auto& d : configs) {
    if (decoders::is_deterministic(d.kind)) {
      spec.deterministic.insert(d.label());
    } else if (decoders::is_stochastic(d.kind)) {
      spec.stochastic.insert(d.label());
    } else {
      spec.excluded.insert(d.label());  // single-output MBR
    }
  }
  return spec;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io, "cannot open config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    raise(Errc::config, "malformed config JSON: " + std::string(e.what()));
  }

  static const std::set<std::string> known = {
      "task",    "model",   "corpus",           "ratings",
      "out",     "seed",    "samples_per_input", "workers",
      "decoders", "max_len", "grouping",          "quality_metric",
      "permutation_rounds"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) raise(Errc::config, "unknown config key: " + key);
  }

  ExperimentConfig cfg;
  try {
    if (j.contains("task")) {
      const auto name = j.at("task").get<std::string>();
      const auto kind = parse_task(name);
      if (!kind) raise(Errc::config, "unknown task: " + name);
      cfg.task = task_preset(*kind);
    }
    if (j.contains("model")) cfg.model_path = j.at("model").get<std::string>();
    if (j.contains("corpus")) cfg.corpus_path = j.at("corpus").get<std::string>();
    if (j.contains("ratings")) cfg.ratings_path = j.at("ratings").get<std::string>();
    if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("samples_per_input")) {
      cfg.samples_per_input = j.at("samples_per_input").get<std::size_t>();
    }
    if (j.contains("workers")) cfg.workers = j.at("workers").get<int>();
    if (j.contains("max_len")) {
      cfg.max_len_override = j.at("max_len").get<std::size_t>();
    }
    if (j.contains("quality_metric")) {
      cfg.quality_metric = j.at("quality_metric").get<std::string>();
    }
    if (j.contains("permutation_rounds")) {
      cfg.permutation_rounds = j.at("permutation_rounds").get<int>();
    }
    if (j.contains("decoders")) {
      for (const auto& spec : j.at("decoders")) {
        cfg.decoder_configs.push_back(
            decoders::DecoderConfig::parse(spec.get<std::string>()));
      }
    }
    if (j.contains("grouping")) {
      analysis::GroupingSpec spec;
      const auto& g = j.at("grouping");
      auto read = [&](const char* key, std::set<std::string>& out) {
        if (!g.contains(key)) return;
        for (const auto& d : g.at(key)) out.insert(d.get<std::string>());
      };
      read("deterministic", spec.deterministic);
      read("stochastic", spec.stochastic);
      read("excluded", spec.excluded);
      cfg.grouping = std::move(spec);
    }
  } catch (const json::exception& e) {
    raise(Errc::config, "bad config value: " + std::string(e.what()));
  }
  return cfg;
}

}  // namespace decodekit::harness
