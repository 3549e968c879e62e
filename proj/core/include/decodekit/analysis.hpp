#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace decodekit::analysis {

/// One human Likert judgement on the 1-8 scale.
struct RatingRecord {
  std::string input_id;
  std::string decoder;
  std::string criterion;
  std::string rater_id;
  int score = 0;
};

struct AggregatedRating {
  std::string input_id;
  std::string decoder;
  std::string criterion;
  double median_score = 0.0;
};

/// Median per (input, decoder, criterion) cell; even rater counts take the
/// mean of the two central values. Scores outside 1..8 are rejected.
std::vector<AggregatedRating> aggregate_ratings(
    const std::vector<RatingRecord>& ratings);

/// Sample Pearson correlation. Throws Errc::zero_variance when either side
/// is constant and Errc::invalid_parameter for short or mismatched inputs.
double pearson(std::span<const double> x, std::span<const double> y);

/**
 * Correlation between a metric and "is an ancestral sample": concatenates the
 * two value vectors and correlates them with the 0/1 indicator that marks the
 * ancestral side.
 */
double ancestral_contrast(std::span<const double> decoder_values,
                          std::span<const double> ancestral_values);

/**
 * Two-sided paired sign-flip permutation test on the mean difference.
 * Samples `rounds` sign patterns with the +1/(R+1) estimator; for n <= 20 all
 * 2^n patterns are enumerated exactly instead.
 */
double permutation_test(std::span<const double> a, std::span<const double> b,
                        int rounds = 10000, std::uint64_t seed = 0);

double permutation_test_exact(std::span<const double> a,
                              std::span<const double> b);
double permutation_test_sampled(std::span<const double> a,
                                std::span<const double> b, int rounds,
                                std::uint64_t seed);

/// Multiplies each p-value by the family size, clipped at 1.
std::vector<double> bonferroni(std::span<const double> p_values);

/// One pairwise significance test at the alpha = 0.01 level after correction.
struct TestResult {
  std::string decoder_a;  // the best decoder
  std::string decoder_b;
  double statistic = 0.0;  // mean(a - b)
  double p_value = 1.0;
  double p_adjusted = 1.0;
  bool significant = false;
};

/// Decoder taxonomy for the rank analysis. The default assignment puts
/// greedy and the beam family under deterministic, the sampling family under
/// stochastic, and leaves MBR out.
struct GroupingSpec {
  std::set<std::string> deterministic;
  std::set<std::string> stochastic;
  std::set<std::string> excluded;
};

struct RankSummary {
  struct PerInput {
    std::string input_id;
    int best_deterministic = 0;
    int best_stochastic = 0;
  };
  std::vector<PerInput> per_input;
  std::map<int, std::size_t> deterministic_histogram;
  std::map<int, std::size_t> stochastic_histogram;
  double deterministic_mean = 0.0;
  double stochastic_mean = 0.0;
};

/**
 * Per input, ranks decoders by rating (mean of the per-criterion medians,
 * descending) with competition ranking; reports each group's best rank plus
 * histogram and mean. Throws Errc::missing_rating when a grouped decoder has
 * no rating for some input.
 */
RankSummary rank_groups(const std::vector<AggregatedRating>& aggregated,
                        const GroupingSpec& grouping);

struct CurvePoint {
  double bin_center = 0.0;  // mean normalized log-probability in the bin
  double mean_quality = 0.0;
  std::size_t count = 0;
};

/**
 * Equal-count quantile bins over normalized log-probability; bin populations
 * differ by at most one. Throws Errc::insufficient_data with fewer records
 * than bins.
 */
std::vector<CurvePoint> quality_probability_curve(
    std::vector<std::pair<double, double>> records, std::size_t bins = 10);

struct QualityDiversityPoint {
  std::string input_id;
  std::string decoder;
  double diversity = 0.0;
  double quality = 0.0;
};

/// Strict join of per-set diversity and quality tables on (input, decoder);
/// a key present on only one side throws Errc::key_mismatch.
std::vector<QualityDiversityPoint> quality_diversity_points(
    const std::map<std::pair<std::string, std::string>, double>& diversity,
    const std::map<std::pair<std::string, std::string>, double>& quality);

}  // namespace decodekit::analysis
