#include "decodekit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "decodekit/error.hpp"
#include "decodekit/rng.hpp"

namespace decodekit::analysis {

namespace {

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<double> paired_diffs(std::span<const double> a,
                                 std::span<const double> b) {
  if (a.size() != b.size()) {
    raise(Errc::pairing_mismatch, "paired vectors differ in length");
  }
  if (a.size() < 2) {
    raise(Errc::invalid_parameter, "need at least two pairs");
  }
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::vector<AggregatedRating> aggregate_ratings(
    const std::vector<RatingRecord>& ratings) {
  std::map<std::tuple<std::string, std::string, std::string>,
           std::vector<double>>
      cells;
  for (const auto& r : ratings) {
    if (r.score < 1 || r.score > 8) {
      raise(Errc::invalid_parameter,
            "rating score outside 1..8: " + std::to_string(r.score));
    }
    cells[{r.input_id, r.decoder, r.criterion}].push_back(
        static_cast<double>(r.score));
  }
  std::vector<AggregatedRating> out;
  out.reserve(cells.size());
  for (auto& [key, scores] : cells) {
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key),
                   median_of(std::move(scores))});
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    raise(Errc::pairing_mismatch, "vectors differ in length");
  }
  if (x.size() < 2) raise(Errc::invalid_parameter, "need at least two points");

  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    raise(Errc::zero_variance, "correlation undefined for a constant vector");
  }
  return sxy / std::sqrt(sxx * syy);
}

double ancestral_contrast(std::span<const double> decoder_values,
                          std::span<const double> ancestral_values) {
  if (decoder_values.empty() || ancestral_values.empty()) {
    raise(Errc::invalid_parameter, "both value vectors must be non-empty");
  }
  std::vector<double> values;
  std::vector<double> indicator;
  values.reserve(decoder_values.size() + ancestral_values.size());
  indicator.reserve(values.capacity());
  for (double v : decoder_values) {
    values.push_back(v);
    indicator.push_back(0.0);
  }
  for (double v : ancestral_values) {
    values.push_back(v);
    indicator.push_back(1.0);
  }
  return pearson(values, indicator);
}

double permutation_test_exact(std::span<const double> a,
                              std::span<const double> b) {
  const auto d = paired_diffs(a, b);
  const std::size_t n = d.size();
  if (n > 20) {
    raise(Errc::invalid_parameter, "exact enumeration capped at n = 20");
  }
  const double observed = std::abs(mean_of(d));
  const std::uint64_t patterns = 1ULL << n;
  std::uint64_t at_least = 0;
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += (mask >> i) & 1 ? -d[i] : d[i];
    }
    if (std::abs(sum / static_cast<double>(n)) >= observed) ++at_least;
  }
  return static_cast<double>(at_least) / static_cast<double>(patterns);
}

double permutation_test_sampled(std::span<const double> a,
                                std::span<const double> b, int rounds,
                                std::uint64_t seed) {
  if (rounds < 1) raise(Errc::invalid_parameter, "rounds must be >= 1");
  const auto d = paired_diffs(a, b);
  const std::size_t n = d.size();
  const double observed = std::abs(mean_of(d));

  RngStream rng(seed);
  std::uint64_t at_least = 0;
  for (int r = 0; r < rounds; ++r) {
    double sum = 0.0;
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i % 64 == 0) bits = rng.next_u64();
      sum += (bits >> (i % 64)) & 1 ? -d[i] : d[i];
    }
    if (std::abs(sum / static_cast<double>(n)) >= observed) ++at_least;
  }
  // +1/(R+1): counts the identity permutation, never reports exactly 0.
  return static_cast<double>(at_least + 1) / static_cast<double>(rounds + 1);
}

double permutation_test(std::span<const double> a, std::span<const double> b,
                        int rounds, std::uint64_t seed) {
  if (a.size() != b.size()) {
    raise(Errc::pairing_mismatch, "paired vectors differ in length");
  }
  if (a.size() <= 20) return permutation_test_exact(a, b);
  return permutation_test_sampled(a, b, rounds, seed);
}

std::vector<double> bonferroni(std::span<const double> p_values) {
  const double m = static_cast<double>(p_values.size());
  std::vector<double> adjusted;
  adjusted.reserve(p_values.size());
  for (double p : p_values) {
    if (!(p >= 0.0) || p > 1.0) {
      raise(Errc::invalid_pvalue, "p-value outside [0,1]");
    }
    adjusted.push_back(std::min(1.0, p * m));
  }
  return adjusted;
}

RankSummary rank_groups(const std::vector<AggregatedRating>& aggregated,
                        const GroupingSpec& grouping) {
  // Rating per (input, decoder): mean of the per-criterion medians.
  std::map<std::string, std::map<std::string, std::pair<double, int>>> table;
  for (const auto& r : aggregated) {
    auto& cell = table[r.input_id][r.decoder];
    cell.first += r.median_score;
    cell.second += 1;
  }

  std::vector<std::string> ranked_decoders;
  for (const auto& d : grouping.deterministic) ranked_decoders.push_back(d);
  for (const auto& d : grouping.stochastic) ranked_decoders.push_back(d);

  RankSummary summary;
  double det_sum = 0.0, stoch_sum = 0.0;
  for (const auto& [input_id, cells] : table) {
    std::vector<std::pair<std::string, double>> scores;
    for (const auto& d : ranked_decoders) {
      auto it = cells.find(d);
      if (it == cells.end()) {
        raise(Errc::missing_rating,
              "no rating for decoder " + d + " on input " + input_id);
      }
      scores.emplace_back(d, it->second.first / it->second.second);
    }
    // Competition ranking: rank = 1 + number of strictly better decoders.
    int best_det = 0, best_stoch = 0;
    for (const auto& [decoder, score] : scores) {
      int rank = 1;
      for (const auto& [_, other] : scores) {
        if (other > score) ++rank;
      }
      if (grouping.deterministic.count(decoder) &&
          (best_det == 0 || rank < best_det)) {
        best_det = rank;
      }
      if (grouping.stochastic.count(decoder) &&
          (best_stoch == 0 || rank < best_stoch)) {
        best_stoch = rank;
      }
    }
    summary.per_input.push_back({input_id, best_det, best_stoch});
    if (best_det > 0) {
      summary.deterministic_histogram[best_det] += 1;
      det_sum += best_det;
    }
    if (best_stoch > 0) {
      summary.stochastic_histogram[best_stoch] += 1;
      stoch_sum += best_stoch;
    }
  }

  const double n = static_cast<double>(summary.per_input.size());
  if (n > 0) {
    summary.deterministic_mean = det_sum / n;
    summary.stochastic_mean = stoch_sum / n;
  }
  return summary;
}

std::vector<CurvePoint> quality_probability_curve(
    std::vector<std::pair<double, double>> records, std::size_t bins) {
  if (bins < 1) raise(Errc::invalid_parameter, "bins must be >= 1");
  if (records.size() < bins) {
    raise(Errc::insufficient_data,
          "need at least one record per bin: " +
              std::to_string(records.size()) + " < " + std::to_string(bins));
  }
  std::sort(records.begin(), records.end());

  const std::size_t n = records.size();
  std::vector<CurvePoint> points;
  points.reserve(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t begin = n * b / bins;
    const std::size_t end = n * (b + 1) / bins;
    double sum_x = 0.0, sum_q = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      sum_x += records[i].first;
      sum_q += records[i].second;
    }
    const double count = static_cast<double>(end - begin);
    points.push_back({sum_x / count, sum_q / count, end - begin});
  }
  return points;
}

std::vector<QualityDiversityPoint> quality_diversity_points(
    const std::map<std::pair<std::string, std::string>, double>& diversity,
    const std::map<std::pair<std::string, std::string>, double>& quality) {
  for (const auto& [key, _] : diversity) {
    if (!quality.count(key)) {
      raise(Errc::key_mismatch, "no quality value for (" + key.first + ", " +
                                    key.second + ")");
    }
  }
  for (const auto& [key, _] : quality) {
    if (!diversity.count(key)) {
      raise(Errc::key_mismatch, "no diversity value for (" + key.first + ", " +
                                    key.second + ")");
    }
  }
  std::vector<QualityDiversityPoint> points;
  points.reserve(diversity.size());
  for (const auto& [key, div] : diversity) {
    points.push_back({key.first, key.second, div, quality.at(key)});
  }
  return points;
}

}  // namespace decodekit::analysis
