#pragma once

#include <array>
#include <string_view>
#include <utility>

namespace decodekit::harness::bundle {

// Analysis bundle layout under <out>/analysis/. run_report() requires every
// file; each belongs to one of the eight report sections.
inline constexpr std::string_view kSignificance = "significance_tests.csv";
inline constexpr std::string_view kCorrSequence = "correlations_sequence.csv";
inline constexpr std::string_view kCorrCell = "correlations_cell.csv";
inline constexpr std::string_view kCorrCorpus = "correlations_corpus.csv";
inline constexpr std::string_view kAncestralContrast = "ancestral_contrast.csv";
inline constexpr std::string_view kRankGroups = "rank_groups.csv";
inline constexpr std::string_view kRankHistogram = "rank_histogram.csv";
inline constexpr std::string_view kRankSummary = "rank_summary.json";
inline constexpr std::string_view kQualityProbability =
    "quality_probability_curve.json";
inline constexpr std::string_view kQualityDiversity = "quality_diversity.json";
inline constexpr std::string_view kLengthBias = "length_bias.csv";
inline constexpr std::string_view kRepetition = "repetition_fractions.csv";
inline constexpr std::string_view kMeta = "analysis_meta.json";

inline constexpr std::array<std::pair<std::string_view, std::string_view>, 13>
    kSections{{
        {kSignificance, "significance tests"},
        {kCorrSequence, "correlations"},
        {kCorrCell, "correlations"},
        {kCorrCorpus, "correlations"},
        {kAncestralContrast, "ancestral contrast"},
        {kRankGroups, "rank analysis"},
        {kRankHistogram, "rank analysis"},
        {kRankSummary, "rank analysis"},
        {kQualityProbability, "quality-probability curve"},
        {kQualityDiversity, "quality-diversity points"},
        {kLengthBias, "length bias"},
        {kRepetition, "repetition fractions"},
        {kMeta, "metadata"},
    }};

}  // namespace decodekit::harness::bundle
