#include "doctest.h"

#include <functional>

#include <cmath>

#include "decodekit/analysis.hpp"
#include "decodekit/error.hpp"
#include "decodekit/rng.hpp"

using namespace decodekit;
using namespace decodekit::analysis;

namespace {

bool throws_code(const std::function<void()>& fn, Errc code) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

std::vector<RatingRecord> cell(const std::string& input,
                               const std::string& decoder,
                               const std::string& criterion,
                               std::initializer_list<int> scores) {
  std::vector<RatingRecord> out;
  int rater = 0;
  for (int s : scores) {
    out.push_back({input, decoder, criterion, "r" + std::to_string(rater++), s});
  }
  return out;
}

}  // namespace

TEST_CASE("rating aggregation takes medians per cell") {
  SUBCASE("odd rater count") {
    const auto agg = aggregate_ratings(cell("i", "d", "fluency", {1, 2, 3, 7, 8}));
    REQUIRE(agg.size() == 1);
    CHECK(agg[0].median_score == 3.0);
  }
  SUBCASE("unanimous raters") {
    const auto agg = aggregate_ratings(cell("i", "d", "fluency", {5, 5, 5}));
    CHECK(agg[0].median_score == 5.0);
  }
  SUBCASE("even rater count averages the central pair") {
    const auto agg = aggregate_ratings(cell("i", "d", "fluency", {2, 4}));
    CHECK(agg[0].median_score == 3.0);
  }
  SUBCASE("scores outside the Likert range are rejected") {
    CHECK(throws_code([] { aggregate_ratings({{"i", "d", "q", "r", 9}}); },
                      Errc::invalid_parameter));
    CHECK(throws_code([] { aggregate_ratings({{"i", "d", "q", "r", 0}}); },
                      Errc::invalid_parameter));
  }
}

TEST_CASE("pearson correlation") {
  const std::vector<double> x{1.0, 2.0, 3.0};
  SUBCASE("self correlation is one") {
    CHECK(pearson(x, x) == doctest::Approx(1.0));
  }
  SUBCASE("negated vector correlates at minus one") {
    const std::vector<double> nx{-1.0, -2.0, -3.0};
    CHECK(pearson(x, nx) == doctest::Approx(-1.0));
  }
  SUBCASE("hand-computed value") {
    const std::vector<double> y{1.0, 2.0, 4.0};
    CHECK(pearson(x, y) == doctest::Approx(0.981981).epsilon(1e-6));
  }
  SUBCASE("constant vectors are undefined") {
    const std::vector<double> c{2.0, 2.0, 2.0};
    CHECK(throws_code([&] { pearson(x, c); }, Errc::zero_variance));
  }
  SUBCASE("invariant under positive affine transforms") {
    RngStream rng(7);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> a, b;
      for (int i = 0; i < 12; ++i) {
        a.push_back(rng.uniform() * 10.0 - 5.0);
        b.push_back(rng.uniform() * 3.0);
      }
      const double r = pearson(a, b);
      std::vector<double> a2, b2;
      for (double v : a) a2.push_back(2.5 * v + 7.0);
      for (double v : b) b2.push_back(0.3 * v - 1.0);
      CHECK(std::abs(pearson(a2, b2) - r) < 1e-12);
    }
  }
}

TEST_CASE("ancestral contrast is pearson against the sample indicator") {
  SUBCASE("perfect separation gives minus one") {
    const std::vector<double> det(5, 1.0);
    const std::vector<double> anc(5, 0.0);
    CHECK(ancestral_contrast(det, anc) == doctest::Approx(-1.0));
  }
  SUBCASE("mirrored constant-free groups give zero") {
    const std::vector<double> g{1.0, -1.0};
    CHECK(ancestral_contrast(g, g) == doctest::Approx(0.0));
  }
  SUBCASE("reduces to pearson on the concatenation") {
    const std::vector<double> a{0.2, 0.4, 0.9};
    const std::vector<double> b{0.1, 0.8};
    const std::vector<double> values{0.2, 0.4, 0.9, 0.1, 0.8};
    const std::vector<double> ind{0, 0, 0, 1, 1};
    CHECK(ancestral_contrast(a, b) == doctest::Approx(pearson(values, ind)));
  }
}

TEST_CASE("paired permutation test") {
  SUBCASE("identical vectors give p = 1") {
    const std::vector<double> a{1.0, 2.0, 3.0, 4.0};
    CHECK(permutation_test(a, a) == 1.0);
    CHECK(permutation_test_sampled(a, a, 999, 5) == 1.0);
  }
  SUBCASE("sampled p tracks the exact enumeration") {
    RngStream rng(11);
    for (std::size_t n : {8, 12}) {
      std::vector<double> a, b;
      for (std::size_t i = 0; i < n; ++i) {
        a.push_back(rng.uniform());
        b.push_back(rng.uniform());
      }
      const double exact = permutation_test_exact(a, b);
      const double sampled = permutation_test_sampled(a, b, 10000, 13);
      CHECK(std::abs(exact - sampled) < 0.005);
    }
  }
  SUBCASE("a strong consistent shift is highly significant") {
    RngStream rng(13);
    std::vector<double> a, b;
    for (int i = 0; i < 30; ++i) {
      const double noise = (rng.uniform() - 0.5) * 0.01;
      b.push_back(rng.uniform());
      a.push_back(b.back() + 10.0 + noise);
    }
    CHECK(permutation_test(a, b, 10000, 17) <= 0.001);
  }
  SUBCASE("mismatched lengths are a pairing error") {
    CHECK(throws_code(
        [] {
          const std::vector<double> a{1.0, 2.0};
          const std::vector<double> b{1.0, 2.0, 3.0};
          permutation_test(a, b);
        },
        Errc::pairing_mismatch));
  }
}

TEST_CASE("bonferroni correction") {
  using vec = std::vector<double>;
  SUBCASE("multiplies by the family size") {
    CHECK(bonferroni(vec{0.01, 0.02}) == vec{0.02, 0.04});
  }
  SUBCASE("clips at one") {
    CHECK(bonferroni(vec{0.7, 0.9}) == vec{1.0, 1.0});
  }
  SUBCASE("a single test is unchanged") {
    CHECK(bonferroni(vec{0.037}) == vec{0.037});
  }
  SUBCASE("rejects out-of-range p-values") {
    CHECK(throws_code([] { bonferroni(std::vector<double>{1.2}); },
                      Errc::invalid_pvalue));
  }
  SUBCASE("is monotone") {
    RngStream rng(19);
    for (int trial = 0; trial < 50; ++trial) {
      vec p;
      for (int i = 0; i < 6; ++i) p.push_back(rng.uniform());
      const auto adj = bonferroni(p);
      for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = 0; j < p.size(); ++j) {
          if (p[i] <= p[j]) CHECK(adj[i] <= adj[j]);
        }
      }
    }
  }
}

TEST_CASE("group ranks under competition ranking") {
  GroupingSpec grouping;
  grouping.deterministic = {"greedy", "beam"};
  grouping.stochastic = {"ancestral", "top_p"};

  auto rate = [](const std::string& input, const std::string& decoder,
                 double score) {
    return AggregatedRating{input, decoder, "fluency", score};
  };

  SUBCASE("deterministic strictly best everywhere") {
    std::vector<AggregatedRating> agg{
        rate("i0", "greedy", 8), rate("i0", "beam", 7),
        rate("i0", "ancestral", 3), rate("i0", "top_p", 2),
        rate("i1", "beam", 6), rate("i1", "greedy", 5),
        rate("i1", "ancestral", 4), rate("i1", "top_p", 1)};
    const auto summary = rank_groups(agg, grouping);
    for (const auto& pi : summary.per_input) {
      CHECK(pi.best_deterministic == 1);
      CHECK(pi.best_stochastic == 3);
    }
    CHECK(summary.deterministic_mean == 1.0);
  }
  SUBCASE("full tie puts every group's best at rank one") {
    std::vector<AggregatedRating> agg{
        rate("i0", "greedy", 4), rate("i0", "beam", 4),
        rate("i0", "ancestral", 4), rate("i0", "top_p", 4)};
    const auto summary = rank_groups(agg, grouping);
    CHECK(summary.per_input[0].best_deterministic == 1);
    CHECK(summary.per_input[0].best_stochastic == 1);
  }
  SUBCASE("competition ranking skips after ties") {
    // greedy = beam = 6 (both rank 1), ancestral 5 (rank 3), top_p 1 (rank 4)
    std::vector<AggregatedRating> agg{
        rate("i0", "greedy", 6), rate("i0", "beam", 6),
        rate("i0", "ancestral", 5), rate("i0", "top_p", 1)};
    const auto summary = rank_groups(agg, grouping);
    CHECK(summary.per_input[0].best_deterministic == 1);
    CHECK(summary.per_input[0].best_stochastic == 3);
  }
  SUBCASE("missing decoder rating raises") {
    std::vector<AggregatedRating> agg{rate("i0", "greedy", 5)};
    CHECK(throws_code([&] { rank_groups(agg, grouping); }, Errc::missing_rating));
  }
  SUBCASE("pigeonhole bounds with d deterministic and s stochastic") {
    RngStream rng(23);
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<AggregatedRating> agg;
      for (const auto& d : grouping.deterministic) {
        agg.push_back(rate("i", d, 1 + static_cast<double>(rng.below(8))));
      }
      for (const auto& d : grouping.stochastic) {
        agg.push_back(rate("i", d, 1 + static_cast<double>(rng.below(8))));
      }
      const auto summary = rank_groups(agg, grouping);
      // n = 4 decoders, d = s = 2: best det <= 3, best stoch <= 3
      CHECK(summary.per_input[0].best_deterministic <= 3);
      CHECK(summary.per_input[0].best_stochastic <= 3);
    }
  }
}

TEST_CASE("quality-probability curve with equal-count bins") {
  SUBCASE("constant quality is a flat curve") {
    std::vector<std::pair<double, double>> records;
    for (int i = 0; i < 40; ++i) {
      records.emplace_back(-static_cast<double>(i), 5.0);
    }
    const auto points = quality_probability_curve(records, 10);
    REQUIRE(points.size() == 10);
    for (const auto& p : points) CHECK(p.mean_quality == 5.0);
  }
  SUBCASE("quality equal to probability gives a strictly increasing curve") {
    RngStream rng(29);
    std::vector<std::pair<double, double>> records;
    for (int i = 0; i < 57; ++i) {
      const double x = -10.0 * rng.uniform();
      records.emplace_back(x, x);
    }
    const auto points = quality_probability_curve(records, 10);
    for (std::size_t i = 1; i < points.size(); ++i) {
      CHECK(points[i].mean_quality > points[i - 1].mean_quality);
    }
  }
  SUBCASE("103 records split into bins of 10 and 11") {
    std::vector<std::pair<double, double>> records;
    for (int i = 0; i < 103; ++i) {
      records.emplace_back(static_cast<double>(i), 0.0);
    }
    const auto points = quality_probability_curve(records, 10);
    std::size_t total = 0;
    for (const auto& p : points) {
      CHECK((p.count == 10 || p.count == 11));
      total += p.count;
    }
    CHECK(total == 103);
  }
  SUBCASE("bin populations always differ by at most one") {
    RngStream rng(31);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::pair<double, double>> records;
      const std::size_t n = 10 + rng.below(200);
      for (std::size_t i = 0; i < n; ++i) {
        records.emplace_back(rng.uniform(), rng.uniform());
      }
      const auto points = quality_probability_curve(records, 10);
      std::size_t lo = n, hi = 0;
      for (const auto& p : points) {
        lo = std::min(lo, p.count);
        hi = std::max(hi, p.count);
      }
      CHECK(hi - lo <= 1);
    }
  }
  SUBCASE("fewer records than bins is an error") {
    std::vector<std::pair<double, double>> records(5, {0.0, 0.0});
    CHECK(throws_code([&] { quality_probability_curve(records, 10); },
                      Errc::insufficient_data));
  }
}

TEST_CASE("quality-diversity join") {
  using table = std::map<std::pair<std::string, std::string>, double>;
  SUBCASE("single matching key echoes the inputs") {
    table d{{{"i", "beam:k=5"}, 0.8}};
    table q{{{"i", "beam:k=5"}, 6.5}};
    const auto points = quality_diversity_points(d, q);
    REQUIRE(points.size() == 1);
    CHECK(points[0].diversity == 0.8);
    CHECK(points[0].quality == 6.5);
  }
  SUBCASE("one-sided keys are a join error") {
    table d{{{"i", "beam:k=5"}, 0.8}};
    table q;
    CHECK(throws_code([&] { quality_diversity_points(d, q); },
                      Errc::key_mismatch));
    CHECK(throws_code([&] { quality_diversity_points(q, d); },
                      Errc::key_mismatch));
  }
  SUBCASE("row count equals the key intersection") {
    table d, q;
    for (int i = 0; i < 7; ++i) {
      d[{"i" + std::to_string(i), "d"}] = i;
      q[{"i" + std::to_string(i), "d"}] = 10 - i;
    }
    CHECK(quality_diversity_points(d, q).size() == 7);
  }
}
