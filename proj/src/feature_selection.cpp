#include "bciqt/feature_selection.hpp"

#include "bciqt/error.hpp"

#include <algorithm>
#include <numeric>

namespace bciqt {

ContingencyTable contingency_table(const Dataset& dataset, std::size_t feature, int positive_label) {
    if (feature >= dataset.dimension()) {
        throw Error(ErrorCode::FeatureIndexOutOfRange,
                    "feature " + std::to_string(feature) + " >= dimension " +
                        std::to_string(dataset.dimension()));
    }
    ContingencyTable t;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const bool present = dataset.features(i)[feature] > 0.0;
        const bool positive = dataset.label(i) == positive_label;
        if (present) {
            ++(positive ? t.a : t.b);
        } else {
            ++(positive ? t.c : t.d);
        }
    }
    return t;
}

double chi_square(const ContingencyTable& t) noexcept {
    const double a = static_cast<double>(t.a);
    const double b = static_cast<double>(t.b);
    const double c = static_cast<double>(t.c);
    const double d = static_cast<double>(t.d);
    const double denom = (a + c) * (b + d) * (a + b) * (c + d);
    if (denom == 0.0) return 0.0;
    const double cross = a * d - c * b;
    return (a + b + c + d) * cross * cross / denom;
}

double chi_square_score(const Dataset& dataset, std::size_t feature, int positive_label) {
    return chi_square(contingency_table(dataset, feature, positive_label));
}

ContingencyTable PresenceCounts::table(std::size_t feature, std::size_t category_index) const noexcept {
    ContingencyTable t;
    std::uint64_t present_total = 0;
    for (const auto& per_class : present) present_total += per_class[feature];
    const std::uint64_t n_pos = class_sizes[category_index];
    t.a = present[category_index][feature];
    t.b = present_total - t.a;
    t.c = n_pos - t.a;
    t.d = (total - n_pos) - t.b;
    return t;
}

PresenceCounts count_presence(const Dataset& dataset) {
    PresenceCounts counts;
    counts.categories.assign(dataset.categories().begin(), dataset.categories().end());
    const std::size_t d = dataset.dimension();
    counts.class_sizes.assign(counts.categories.size(), 0);
    counts.present.assign(counts.categories.size(), std::vector<std::uint64_t>(d, 0));
    counts.total = dataset.size();
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto pos = std::lower_bound(counts.categories.begin(), counts.categories.end(),
                                          dataset.label(i)) -
                         counts.categories.begin();
        ++counts.class_sizes[pos];
        auto& row = counts.present[pos];
        const auto f = dataset.features(i);
        for (std::size_t j = 0; j < d; ++j) {
            if (f[j] > 0.0) ++row[j];
        }
    }
    return counts;
}

std::vector<double> aggregate_scores(const Dataset& dataset) {
    const auto counts = count_presence(dataset);
    std::vector<double> scores(dataset.dimension(), 0.0);
    for (std::size_t f = 0; f < scores.size(); ++f) {
        for (std::size_t c = 0; c < counts.categories.size(); ++c) {
            scores[f] = std::max(scores[f], chi_square(counts.table(f, c)));
        }
    }
    return scores;
}

std::string_view to_string(Aggregation aggregation) noexcept {
    return aggregation == Aggregation::Max ? "max" : "per-category";
}

Aggregation aggregation_from_string(std::string_view text) {
    if (text == "max") return Aggregation::Max;
    if (text == "per-category") return Aggregation::PerCategory;
    throw Error(ErrorCode::InvalidConfig,
                "aggregation must be 'max' or 'per-category', got '" + std::string(text) + "'");
}

FeatureMask top_k_from_scores(std::span<const double> scores, std::size_t k) {
    if (k < 1 || k > scores.size()) {
        throw Error(ErrorCode::KOutOfRange, "k = " + std::to_string(k) + " outside 1.." +
                                                std::to_string(scores.size()));
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return scores[l] > scores[r]; });
    order.resize(k);
    FeatureMask mask;
    mask.indices = std::move(order);
    mask.scores.reserve(k);
    for (auto i : mask.indices) mask.scores.push_back(scores[i]);
    return mask;
}

FeatureMask select_top_k(const Dataset& dataset, std::size_t k) {
    return top_k_from_scores(aggregate_scores(dataset), k);
}

FeatureMask select_top_k(const Dataset& dataset, std::size_t k, int category) {
    if (!dataset.categories().contains(category)) {
        throw Error(ErrorCode::UnknownCategory, "category " + std::to_string(category) +
                                                    " not present in dataset");
    }
    const auto counts = count_presence(dataset);
    const auto c = static_cast<std::size_t>(
        std::lower_bound(counts.categories.begin(), counts.categories.end(), category) -
        counts.categories.begin());
    std::vector<double> scores(dataset.dimension());
    for (std::size_t f = 0; f < scores.size(); ++f) scores[f] = chi_square(counts.table(f, c));
    return top_k_from_scores(scores, k);
}

FeatureVector apply_mask(std::span<const double> features, std::span<const std::size_t> indices) {
    FeatureVector out;
    out.reserve(indices.size());
    for (auto idx : indices) {
        if (idx >= features.size()) {
            throw Error(ErrorCode::DimensionMismatch,
                        "mask index " + std::to_string(idx) + " on a sample of dimension " +
                            std::to_string(features.size()));
        }
        out.push_back(features[idx]);
    }
    return out;
}

FeatureVector apply_mask(std::span<const double> features, const FeatureMask& mask) {
    return apply_mask(features, std::span<const std::size_t>(mask.indices));
}

RawSample apply_mask(const RawSample& sample, const FeatureMask& mask) {
    return RawSample{apply_mask(std::span<const double>(sample.features), mask), sample.label};
}

Dataset apply_mask(const Dataset& dataset, std::span<const std::size_t> indices, bool binarize_values) {
    for (auto idx : indices) {
        if (idx >= dataset.dimension()) {
            throw Error(ErrorCode::DimensionMismatch,
                        "mask index " + std::to_string(idx) + " on a dataset of dimension " +
                            std::to_string(dataset.dimension()));
        }
    }
    const std::size_t k = indices.size();
    std::vector<double> values;
    values.reserve(dataset.size() * k);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto f = dataset.features(i);
        for (auto idx : indices) {
            const double v = f[idx];
            values.push_back(binarize_values ? (v > 0.0 ? 1.0 : 0.0) : v);
        }
    }
    return Dataset(FeatureMatrix(dataset.size(), k, std::move(values)), dataset.labels());
}

nlohmann::ordered_json to_json(const FeatureMask& mask) {
    nlohmann::ordered_json j;
    j["k"] = mask.k();
    j["indices"] = mask.indices;
    j["scores"] = mask.scores;
    return j;
}

FeatureMask feature_mask_from_json(const nlohmann::json& j) {
    try {
        FeatureMask mask;
        const auto k = j.at("k").get<std::size_t>();
        mask.indices = j.at("indices").get<std::vector<std::size_t>>();
        mask.scores = j.at("scores").get<std::vector<double>>();
        if (mask.indices.size() != k || mask.scores.size() != k) {
            throw Error(ErrorCode::SchemaMismatch, "mask k disagrees with its arrays");
        }
        return mask;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("feature mask: ") + e.what());
    }
}

}  // namespace bciqt
