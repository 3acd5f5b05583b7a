#pragma once

#include "bciqt/dataset.hpp"

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace bciqt {

// 2x2 table of feature presence (value > 0) against class membership.
//              positive  negative
//   present       a         b
//   absent        c         d
struct ContingencyTable {
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    std::uint64_t c = 0;
    std::uint64_t d = 0;

    std::uint64_t total() const noexcept { return a + b + c + d; }
};

ContingencyTable contingency_table(const Dataset& dataset, std::size_t feature, int positive_label);

// Pearson chi-square without continuity correction; 0 when any marginal is 0.
double chi_square(const ContingencyTable& table) noexcept;

double chi_square_score(const Dataset& dataset, std::size_t feature, int positive_label);

// Per-category presence counts for every feature, gathered in one pass.
// present[category_index][feature], with categories in ascending order.
struct PresenceCounts {
    std::vector<int> categories;
    std::vector<std::uint64_t> class_sizes;
    std::vector<std::vector<std::uint64_t>> present;
    std::uint64_t total = 0;

    ContingencyTable table(std::size_t feature, std::size_t category_index) const noexcept;
};

PresenceCounts count_presence(const Dataset& dataset);

// Selected feature indices with their scores, best first.
struct FeatureMask {
    std::vector<std::size_t> indices;
    std::vector<double> scores;

    std::size_t k() const noexcept { return indices.size(); }
};

enum class Aggregation {
    Max,          // one global mask: per-feature max over one-vs-all scores
    PerCategory,  // a separate mask per category
};

std::string_view to_string(Aggregation aggregation) noexcept;
Aggregation aggregation_from_string(std::string_view text);

// Aggregate score per feature = max over categories of chi_square_score.
std::vector<double> aggregate_scores(const Dataset& dataset);

// Top-k by aggregate score, ties to the lower feature index.
FeatureMask select_top_k(const Dataset& dataset, std::size_t k);
// Top-k by the one-vs-all score for a single category.
FeatureMask select_top_k(const Dataset& dataset, std::size_t k, int category);
FeatureMask top_k_from_scores(std::span<const double> scores, std::size_t k);

FeatureVector apply_mask(std::span<const double> features, const FeatureMask& mask);
FeatureVector apply_mask(std::span<const double> features, std::span<const std::size_t> indices);
RawSample apply_mask(const RawSample& sample, const FeatureMask& mask);
// Masks every row, optionally binarizing, into a new dataset.
Dataset apply_mask(const Dataset& dataset, std::span<const std::size_t> indices, bool binarize_values);

nlohmann::ordered_json to_json(const FeatureMask& mask);
FeatureMask feature_mask_from_json(const nlohmann::json& j);

}  // namespace bciqt
