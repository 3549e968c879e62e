// Microbenchmarks for the hot paths: truncation transforms, beam expansion,
// sampling, BLEU, and the permutation test.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "decodekit/analysis.hpp"
#include "decodekit/decoders.hpp"
#include "decodekit/metrics.hpp"
#include "decodekit/ngram.hpp"
#include "decodekit/rng.hpp"

namespace {

using namespace decodekit;

lm::NGramModel make_model(std::size_t vocab_words) {
  RngStream rng(1234);
  std::vector<std::vector<std::string>> corpus;
  for (int seq = 0; seq < 400; ++seq) {
    std::vector<std::string> s;
    const std::size_t len = 4 + rng.below(10);
    for (std::size_t t = 0; t < len; ++t) {
      s.push_back("w" + std::to_string(rng.below(vocab_words)));
    }
    corpus.push_back(std::move(s));
  }
  return lm::train_ngram(corpus, 3, 0.5);
}

void BM_TruncateTopK(benchmark::State& state) {
  RngStream rng(7);
  lm::TokenDistribution dist;
  dist.probs.assign(static_cast<std::size_t>(state.range(0)), 0.0);
  double total = 0.0;
  for (std::size_t i = 1; i < dist.probs.size(); ++i) {
    dist.probs[i] = rng.uniform();
    total += dist.probs[i];
  }
  for (auto& p : dist.probs) p /= total;

  for (auto _ : state) {
    benchmark::DoNotOptimize(decoders::truncate_top_k(dist, 30));
  }
}
BENCHMARK(BM_TruncateTopK)->Arg(128)->Arg(1024);

void BM_TruncateTopP(benchmark::State& state) {
  RngStream rng(7);
  lm::TokenDistribution dist;
  dist.probs.assign(static_cast<std::size_t>(state.range(0)), 0.0);
  double total = 0.0;
  for (std::size_t i = 1; i < dist.probs.size(); ++i) {
    dist.probs[i] = rng.uniform();
    total += dist.probs[i];
  }
  for (auto& p : dist.probs) p /= total;

  for (auto _ : state) {
    benchmark::DoNotOptimize(decoders::truncate_top_p(dist, 0.85));
  }
}
BENCHMARK(BM_TruncateTopP)->Arg(128)->Arg(1024);

void BM_BeamDecode(benchmark::State& state) {
  const auto model = make_model(60);
  const int beam_k = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        decoders::beam_decode(model, {}, beam_k, {32}));
  }
}
BENCHMARK(BM_BeamDecode)->Arg(5)->Arg(10);

void BM_AncestralSample(benchmark::State& state) {
  const auto model = make_model(60);
  std::uint64_t i = 0;
  for (auto _ : state) {
    auto rng = derive_rng(5, "bench", "ancestral", i++);
    benchmark::DoNotOptimize(decoders::ancestral_sample(model, {}, {64}, rng));
  }
}
BENCHMARK(BM_AncestralSample);

void BM_SentenceBleu(benchmark::State& state) {
  RngStream rng(11);
  metrics::Tokens cand, ref;
  for (int i = 0; i < 20; ++i) {
    cand.push_back("w" + std::to_string(rng.below(40)));
    ref.push_back("w" + std::to_string(rng.below(40)));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::sentence_bleu(cand, {ref}));
  }
}
BENCHMARK(BM_SentenceBleu);

void BM_PermutationTest(benchmark::State& state) {
  RngStream rng(13);
  std::vector<double> a, b;
  for (int i = 0; i < 200; ++i) {
    a.push_back(rng.uniform());
    b.push_back(rng.uniform());
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        analysis::permutation_test_sampled(a, b, 10000, 17));
  }
}
BENCHMARK(BM_PermutationTest);

}  // namespace

BENCHMARK_MAIN();
