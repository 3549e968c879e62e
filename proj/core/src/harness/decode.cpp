#include <algorithm>

#include "decodekit/error.hpp"
#include "decodekit/harness/pipeline.hpp"
#include "decodekit/metrics.hpp"
#include "decodekit/model_io.hpp"
#include "decodekit/scoring.hpp"

namespace decodekit::harness {

namespace {

using decoders::DecoderConfig;
using decoders::DecoderKind;
using decoders::GenerationRecord;

lm::Context build_context(const lm::Vocabulary& vocab,
                          const CorpusEntry& entry) {
  lm::Context ctx;
  if (entry.context) {
    ctx.tokens = vocab.to_ids(lm::tokenize(*entry.context));
  }
  return ctx;
}

/// Decodes all configured strategies for one input. MBR runs last so the
/// other decoders' outputs can join its candidate pool.
std::vector<GenerationRecord> decode_input(const lm::SequenceModel& model,
                                           const CorpusEntry& entry,
                                           const ExperimentConfig& config) {
  const lm::Context ctx = build_context(model.vocab(), entry);
  const lm::GenerationBudget budget{config.effective_max_len()};

  std::vector<GenerationRecord> records;
  auto stamp = [&](GenerationRecord rec, const std::string& label) {
    rec.input_id = entry.id;
    rec.decoder = label;
    records.push_back(std::move(rec));
  };

  for (const auto& d : config.decoder_configs) {
    const std::string label = d.label();
    switch (d.kind) {
      case DecoderKind::greedy:
        stamp(decoders::greedy_decode(model, ctx, budget), label);
        break;
      case DecoderKind::beam: {
        auto out = decoders::beam_decode(model, ctx, d.beam_k, budget);
        for (auto& rec : out.records) stamp(std::move(rec), label);
        break;
      }
      case DecoderKind::diverse_beam: {
        auto out = decoders::diverse_beam_decode(model, ctx, d.beam_k,
                                                 d.groups, d.lambda, budget);
        for (auto& rec : out.records) stamp(std::move(rec), label);
        break;
      }
      case DecoderKind::ancestral:
      case DecoderKind::top_k:
      case DecoderKind::top_p: {
        for (std::size_t s = 0; s < config.samples_per_input; ++s) {
          auto rng = derive_rng(d.seed.value_or(config.seed), entry.id, label, s);
          GenerationRecord rec;
          if (d.kind == DecoderKind::ancestral) {
            rec = decoders::ancestral_sample(model, ctx, budget, rng);
          } else if (d.kind == DecoderKind::top_k) {
            rec = decoders::truncated_sample(
                model, ctx, budget, rng,
                decoders::Truncation::make_top_k(d.top_k));
          } else {
            rec = decoders::truncated_sample(
                model, ctx, budget, rng,
                decoders::Truncation::make_top_p(d.top_p));
          }
          rec.sample_index = static_cast<int>(s);
          stamp(std::move(rec), label);
        }
        break;
      }
      case DecoderKind::mbr:
        break;  // after the other decoders
    }
  }

  for (const auto& d : config.decoder_configs) {
    if (d.kind != DecoderKind::mbr) continue;
    std::vector<std::vector<lm::TokenId>> extras;
    extras.reserve(records.size());
    for (const auto& rec : records) extras.push_back(rec.tokens);
    auto rng = derive_rng(d.seed.value_or(config.seed), entry.id, d.label(), 0);
    stamp(decoders::mbr_decode(model, ctx, budget, d.mbr_samples,
                               metrics::smoothed_bleu_utility(), extras, rng),
          d.label());
  }

  return records;
}

}  // namespace

std::filesystem::path run_decode(const ExperimentConfig& config) {
  config.validate();
  if (config.decoder_configs.empty()) {
    raise(Errc::config, "no decoders configured");
  }
  const auto model = lm::load_model(config.model_path);
  const auto corpus = load_corpus(config.corpus_path);

  std::vector<std::vector<GenerationRecord>> slots(corpus.size());
  parallel_for(corpus.size(), config.workers, [&](std::size_t i) {
    slots[i] = decode_input(*model, corpus[i], config);
  });

  std::vector<GenerationRecord> all;
  for (auto& slot : slots) {
    all.insert(all.end(), std::make_move_iterator(slot.begin()),
               std::make_move_iterator(slot.end()));
  }
  sort_records(all);

  const auto path = config.out_dir / "generations.jsonl";
  save_generations(all, model->vocab(), path);
  return path;
}

}  // namespace decodekit::harness
