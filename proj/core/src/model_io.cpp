#include "decodekit/model_io.hpp"

#include <fstream>

#include "decodekit/error.hpp"
#include "json.hpp"

namespace decodekit::lm {

namespace {

constexpr int kFormatVersion = 1;

using nlohmann::json;

json vocab_to_json(const Vocabulary& v) {
  return json{{"tokens", v.tokens()},
              {"bos_id", v.bos_id()},
              {"eos_id", v.eos_id()}};
}

Vocabulary vocab_from_json(const json& j) {
  return Vocabulary(j.at("tokens").get<std::vector<std::string>>(),
                    j.at("bos_id").get<TokenId>(),
                    j.at("eos_id").get<TokenId>());
}

json load_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io, "cannot open model file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    raise(Errc::format, "malformed model JSON: " + std::string(e.what()));
  }
  if (!j.contains("version") || !j.at("version").is_number_integer() ||
      j.at("version").get<int>() != kFormatVersion) {
    raise(Errc::format, "unsupported model document version");
  }
  return j;
}

void write_document(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::io, "cannot write model file: " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

void save_ngram(const NGramModel& model, const std::filesystem::path& path) {
  json counts = json::array();
  for (const auto& [ctx, events] : model.counts()) {
    json ev = json::array();
    for (const auto& [tok, n] : events) ev.push_back(json::array({tok, n}));
    counts.push_back(json{{"context", ctx}, {"events", std::move(ev)}});
  }
  write_document(json{{"version", kFormatVersion},
                      {"order", model.order()},
                      {"smoothing_k", model.smoothing_k()},
                      {"vocabulary", vocab_to_json(model.vocab())},
                      {"counts", std::move(counts)}},
                 path);
}

NGramModel load_ngram(const std::filesystem::path& path) {
  const json j = load_document(path);
  try {
    auto vocab = vocab_from_json(j.at("vocabulary"));
    NGramCountTable counts;
    for (const auto& entry : j.at("counts")) {
      auto ctx = entry.at("context").get<std::vector<TokenId>>();
      auto& slot = counts[ctx];
      for (const auto& ev : entry.at("events")) {
        slot[ev.at(0).get<TokenId>()] = ev.at(1).get<std::uint64_t>();
      }
    }
    return NGramModel(std::move(vocab), j.at("order").get<std::size_t>(),
                      j.at("smoothing_k").get<double>(), std::move(counts));
  } catch (const json::exception& e) {
    raise(Errc::format, "bad n-gram document: " + std::string(e.what()));
  }
}

void save_table(const TableModel& model, const std::filesystem::path& path) {
  json entries = json::array();
  for (const auto& [key, dist] : model.entries()) {
    entries.push_back(json{{"context", key.first},
                           {"prefix", key.second},
                           {"probs", dist.probs}});
  }
  write_document(json{{"version", kFormatVersion},
                      {"vocabulary", vocab_to_json(model.vocab())},
                      {"entries", std::move(entries)},
                      {"default", model.default_dist().probs}},
                 path);
}

TableModel load_table(const std::filesystem::path& path) {
  const json j = load_document(path);
  try {
    auto vocab = vocab_from_json(j.at("vocabulary"));
    TableModel model(std::move(vocab),
                     TokenDistribution(j.at("default").get<std::vector<double>>()));
    for (const auto& entry : j.at("entries")) {
      model.set(entry.at("context").get<std::vector<TokenId>>(),
                entry.at("prefix").get<std::vector<TokenId>>(),
                TokenDistribution(entry.at("probs").get<std::vector<double>>()));
    }
    return model;
  } catch (const json::exception& e) {
    raise(Errc::format, "bad table document: " + std::string(e.what()));
  }
}

std::unique_ptr<SequenceModel> load_model(const std::filesystem::path& path) {
  const json j = load_document(path);
  if (j.contains("counts")) {
    return std::make_unique<NGramModel>(load_ngram(path));
  }
  if (j.contains("entries")) {
    return std::make_unique<TableModel>(load_table(path));
  }
  raise(Errc::format, "model document is neither n-gram nor table");
}

}  // namespace decodekit::lm
