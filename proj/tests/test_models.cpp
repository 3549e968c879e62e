#include "doctest.h"

#include <functional>

#include <cmath>

#include "decodekit/error.hpp"
#include "decodekit/ngram.hpp"
#include "decodekit/scoring.hpp"
#include "decodekit/table_model.hpp"
#include "support/test_models.hpp"

using namespace decodekit;
using namespace decodekit::lm;
using testsupport::dist_of;
using testsupport::forced_path_model;
using testsupport::random_table_model;

namespace {

bool throws_code(const std::function<void()>& fn, Errc code) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

}  // namespace

TEST_CASE("one-hot table model forces its token") {
  const auto model = forced_path_model({"a"});
  const auto dist = model.next({}, std::vector<TokenId>{model.vocab().bos_id()});
  CHECK(dist[model.vocab().id_of("a")] == doctest::Approx(1.0));
  CHECK(dist.argmax() == model.vocab().id_of("a"));
}

TEST_CASE("unigram model reproduces hand counts with one EOS per sequence") {
  // Single training sequence "a a b": events a, a, b, EOS.
  const auto model = train_ngram({{"a", "a", "b"}}, 1, 0.0);
  const auto& v = model.vocab();
  const auto dist = model.next({}, std::vector<TokenId>{v.bos_id()});
  CHECK(dist[v.id_of("a")] == doctest::Approx(0.5));
  CHECK(dist[v.id_of("b")] == doctest::Approx(0.25));
  CHECK(dist[v.eos_id()] == doctest::Approx(0.25));
  // a : b keeps the 2/3 : 1/3 corpus ratio among the word tokens.
  CHECK(dist[v.id_of("a")] / dist[v.id_of("b")] == doctest::Approx(2.0));
  CHECK(dist[v.bos_id()] == 0.0);
}

TEST_CASE("prefix ending in EOS is a terminated-prefix error") {
  const auto model = forced_path_model({"a"});
  const auto& v = model.vocab();
  CHECK(throws_code(
      [&] {
        model.next({}, std::vector<TokenId>{v.bos_id(), v.id_of("a"), v.eos_id()});
      },
      Errc::terminated_prefix));
}

TEST_CASE("forced path scores zero log probability") {
  const auto model = forced_path_model({"x", "y"});
  const auto& v = model.vocab();
  const std::vector<TokenId> seq{v.bos_id(), v.id_of("x"), v.id_of("y"),
                                 v.eos_id()};
  CHECK(sequence_log_prob(model, {}, seq) == 0.0);
  CHECK(perplexity(model, {}, seq) == 1.0);
}

TEST_CASE("two steps of probability one half") {
  // p(a|BOS) = 0.5, p(EOS|a) = 0.5.
  auto vocab = Vocabulary::from_words({"a"});
  TableModel model(vocab, dist_of(vocab, {{"a", 0.5}, {"<eos>", 0.5}}));
  const std::vector<TokenId> seq{vocab.bos_id(), vocab.id_of("a"),
                                 vocab.eos_id()};
  CHECK(sequence_log_prob(model, {}, seq) == doctest::Approx(-1.386294).epsilon(1e-6));
  CHECK(normalized_log_prob(model, {}, seq) ==
        doctest::Approx(-0.693147).epsilon(1e-6));
}

TEST_CASE("unknown token and empty sequence errors") {
  const auto model = forced_path_model({"a"});
  const auto& v = model.vocab();
  CHECK(throws_code(
      [&] {
        sequence_log_prob(model, {},
                          std::vector<TokenId>{v.bos_id(), TokenId{99}});
      },
      Errc::unknown_token));
  CHECK(throws_code(
      [&] { normalized_log_prob(model, {}, std::vector<TokenId>{v.bos_id()}); },
      Errc::empty_sequence));
}

TEST_CASE("uniform model over four symbols has perplexity four") {
  auto vocab = Vocabulary::from_words({"a", "b", "c"});  // +EOS = 4 predictable
  TableModel model(vocab, dist_of(vocab, {{"a", 0.25},
                                          {"b", 0.25},
                                          {"c", 0.25},
                                          {"<eos>", 0.25}}));
  const std::vector<TokenId> seq{vocab.bos_id(), vocab.id_of("b"),
                                 vocab.id_of("c"), vocab.eos_id()};
  CHECK(perplexity(model, {}, seq) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("perplexity equals exp of negative normalized log prob") {
  RngStream rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto model = random_table_model(3, 2, rng);
    const auto seqs = enumerate_sequences(model, {}, {3});
    for (const auto& s : seqs) {
      const double nlp = normalized_log_prob(model, {}, s.tokens);
      CHECK(perplexity(model, {}, s.tokens) == doctest::Approx(std::exp(-nlp)));
      CHECK(perplexity(model, {}, s.tokens) >= 1.0);
    }
  }
}

TEST_CASE("n-gram training hand counts with BOS/EOS wrapping") {
  SUBCASE("unsmoothed single-token corpus") {
    const auto model = train_ngram({{"a"}}, 1, 0.0);
    const auto& v = model.vocab();
    const auto dist = model.next({}, std::vector<TokenId>{v.bos_id()});
    CHECK(dist[v.id_of("a")] == doctest::Approx(0.5));
    CHECK(dist[v.eos_id()] == doctest::Approx(0.5));
  }
  SUBCASE("add-one smoothing over an explicit vocabulary") {
    auto vocab = Vocabulary::from_words({"a", "b"});
    const auto model = train_ngram({{"a"}}, 1, 1.0, vocab);
    const auto dist = model.next({}, std::vector<TokenId>{vocab.bos_id()});
    // (0 + 1) / (2 + 1*3): counts a:1 eos:1, predictable {a, b, EOS}.
    CHECK(dist[vocab.id_of("b")] == doctest::Approx(0.2));
  }
  SUBCASE("empty corpus is an error") {
    CHECK(throws_code([] { train_ngram({}, 1, 0.0); }, Errc::empty_corpus));
  }
}

TEST_CASE("n-gram conditionals normalize for contexts seen and unseen") {
  RngStream rng(5);
  const auto model = train_ngram(
      {{"a", "b", "a"}, {"b", "b"}, {"a", "a", "b", "a"}}, 3, 0.5);
  const auto& v = model.vocab();
  // Random walks hit both trained windows and backoff paths.
  for (int walk = 0; walk < 200; ++walk) {
    std::vector<TokenId> prefix{v.bos_id()};
    for (int t = 0; t < 6; ++t) {
      const auto dist = model.next({}, prefix);
      double sum = 0.0;
      for (double p : dist.probs) {
        CHECK(p >= 0.0);
        sum += p;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(dist[v.bos_id()] == 0.0);
      TokenId tok = lm::sample_token(dist, rng);
      if (tok == v.eos_id()) break;
      prefix.push_back(tok);
    }
  }
}

TEST_CASE("unseen context with zero smoothing falls back to full support") {
  // "c" is in the vocabulary but never occurs in training, so the window
  // [c] is absent from the count table and the smoothed unigram backoff
  // must cover every predictable token.
  const auto model = train_ngram({{"a", "b"}}, 2, 0.0,
                                 Vocabulary::from_words({"a", "b", "c"}));
  const auto& v = model.vocab();
  const auto dist =
      model.next({}, std::vector<TokenId>{v.bos_id(), v.id_of("c")});
  double sum = 0.0;
  std::size_t support = 0;
  for (std::size_t id = 0; id < v.size(); ++id) {
    sum += dist.probs[id];
    if (dist.probs[id] > 0.0) ++support;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(support == v.predictable_size());

  // A seen context with zero smoothing keeps its exact counts instead.
  const auto seen = model.next({}, std::vector<TokenId>{v.bos_id(), v.id_of("a")});
  CHECK(seen[v.id_of("b")] == doctest::Approx(1.0));
}

TEST_CASE("enumeration lists exact terminated sequences") {
  SUBCASE("forced model yields a single certain sequence") {
    const auto model = forced_path_model({"u", "v"});
    const auto seqs = enumerate_sequences(model, {}, {5});
    REQUIRE(seqs.size() == 1);
    CHECK(seqs[0].log_prob == doctest::Approx(0.0));
  }
  SUBCASE("two binary branches then EOS give four sequences summing to one") {
    auto vocab = Vocabulary::from_words({"a", "b"});
    TableModel model(vocab, TokenDistribution::one_hot(vocab.size(), vocab.eos_id()));
    const auto half = dist_of(vocab, {{"a", 0.5}, {"b", 0.5}});
    model.set({}, {vocab.bos_id()}, half);
    for (const auto* w : {"a", "b"}) {
      model.set({}, {vocab.bos_id(), vocab.id_of(w)}, half);
    }
    const auto seqs = enumerate_sequences(model, {}, {4});
    CHECK(seqs.size() == 4);
    double total = 0.0;
    for (const auto& s : seqs) total += std::exp(s.log_prob);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("zero budget enumerates nothing") {
    const auto model = forced_path_model({"a"});
    CHECK(enumerate_sequences(model, {}, {0}).empty());
  }
  SUBCASE("guard rejects oversized spaces") {
    const auto model = forced_path_model({"a", "b", "c"});
    CHECK(throws_code([&] { enumerate_sequences(model, {}, {100}); },
                      Errc::enumeration_too_large));
  }
}

TEST_CASE("enumerated log probs replay exactly through sequence_log_prob") {
  RngStream rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto model = random_table_model(2, 3, rng);
    for (const auto& s : enumerate_sequences(model, {}, {4})) {
      CHECK(sequence_log_prob(model, {}, s.tokens) == s.log_prob);
    }
  }
}

TEST_CASE("model distributions normalize on a thousand random queries") {
  RngStream rng(23);
  int queries = 0;
  while (queries < 1000) {
    const auto model = random_table_model(3, 2, rng);
    const auto ngram = train_ngram({{"a", "b", "a"}, {"c", "a"}}, 2, 0.25);
    for (int i = 0; i < 25 && queries < 1000; ++i) {
      // Random prefix over the model's words.
      std::vector<TokenId> prefix{model.vocab().bos_id()};
      const std::size_t len = rng.below(4);
      for (std::size_t t = 0; t < len; ++t) {
        prefix.push_back(
            static_cast<TokenId>(2 + rng.below(model.vocab().size() - 2)));
      }
      for (const SequenceModel* m :
           {static_cast<const SequenceModel*>(&model),
            static_cast<const SequenceModel*>(&ngram)}) {
        if (prefix.size() > 1 && m == static_cast<const SequenceModel*>(&ngram)) {
          continue;  // prefix ids belong to the table model's vocabulary
        }
        const auto dist = m->next({}, prefix);
        double sum = 0.0;
        for (double p : dist.probs) sum += p;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        ++queries;
      }
    }
  }
}

TEST_CASE("context tokens extend the n-gram history") {
  const auto model = train_ngram({{"a", "b"}, {"a", "b"}, {"a", "c"}}, 2, 0.0);
  const auto& v = model.vocab();
  // With context [a], the first generated token is conditioned on window [a].
  Context ctx{{v.id_of("a")}};
  const auto dist = model.next(ctx, std::vector<TokenId>{v.bos_id()});
  CHECK(dist[v.id_of("b")] == doctest::Approx(2.0 / 3.0));
  CHECK(dist[v.id_of("c")] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("continuation scoring factorizes against the joint sequence") {
  // log p(continuation | prompt) = log p(prompt ++ continuation)
  //                              - log p(prompt as a truncated sequence)
  const auto model = train_ngram(
      {{"a", "b", "c", "a"}, {"b", "c", "a"}, {"c", "c", "b", "a"}}, 3, 0.3);
  const auto& v = model.vocab();

  const std::vector<std::string> prompt_words{"a", "b"};
  const std::vector<std::string> cont_words{"c", "a"};
  Context prompt{v.to_ids(prompt_words)};

  std::vector<TokenId> continuation{v.bos_id()};
  for (const auto& w : cont_words) continuation.push_back(v.id_of(w));
  continuation.push_back(v.eos_id());

  std::vector<TokenId> joint{v.bos_id()};
  for (const auto& w : prompt_words) joint.push_back(v.id_of(w));
  std::vector<TokenId> prompt_only = joint;  // truncated, no EOS
  for (const auto& w : cont_words) joint.push_back(v.id_of(w));
  joint.push_back(v.eos_id());

  const double conditional = sequence_log_prob(model, prompt, continuation);
  const double whole = sequence_log_prob(model, {}, joint);
  const double prompt_part = sequence_log_prob(model, {}, prompt_only);
  CHECK(conditional == doctest::Approx(whole - prompt_part).epsilon(1e-12));
}
