#pragma once

#include "bciqt/dataset.hpp"

#include "json.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace bciqt {

// --- Bernoulli naive Bayes --------------------------------------------------
//
// Index 0 is the negative class, 1 the positive class. A feature counts as
// present when its value is > 0, so raw inputs are binarized implicitly.

struct BernoulliNBModel {
    std::array<double, 2> log_prior{};
    std::array<std::vector<double>, 2> log_prob_present;
    std::array<std::vector<double>, 2> log_prob_absent;

    std::size_t dimension() const noexcept { return log_prob_present[0].size(); }
};

inline constexpr double kLaplaceAlpha = 1.0;

BernoulliNBModel nb_train(const std::vector<FeatureVector>& positives,
                          const std::vector<FeatureVector>& negatives);
BernoulliNBModel nb_train(const FeatureMatrix& samples, std::span<const std::size_t> positive_rows,
                          std::span<const std::size_t> negative_rows);

// Unnormalised log joint log P(c) + sum_f log P(x_f | c) for c = 0, 1.
std::array<double, 2> nb_log_joint(const BernoulliNBModel& model, std::span<const double> w);
// Ties go to 0.
int nb_classify(const BernoulliNBModel& model, std::span<const double> w);
double nb_positive_probability(const BernoulliNBModel& model, std::span<const double> w);

nlohmann::ordered_json to_json(const BernoulliNBModel& model);
BernoulliNBModel nb_model_from_json(const nlohmann::json& j);

// Per-category NB with the mask it was trained under, as written by `train`.
struct NbClassifier {
    int category = 0;
    BernoulliNBModel model;
    std::vector<std::size_t> feature_mask;

    double score(std::span<const double> raw_features) const;
    int classify(std::span<const double> raw_features) const;
};

nlohmann::ordered_json to_json(const NbClassifier& classifier);
NbClassifier nb_classifier_from_json(const nlohmann::json& j);

// --- k nearest neighbours ---------------------------------------------------

// Exhaustive Euclidean search. When every training value is 0 or 1 the rows
// are also bit-packed and binary queries use popcount (squared Euclidean
// distance equals Hamming distance there).
class NeighborIndex {
public:
    explicit NeighborIndex(FeatureMatrix training);

    std::size_t size() const noexcept { return training_.rows(); }
    std::size_t dimension() const noexcept { return training_.cols(); }
    bool is_binary() const noexcept { return binary_; }

    // Indices of the k nearest rows ordered by (distance, index).
    std::vector<std::size_t> nearest(std::span<const double> query, std::size_t k) const;

    // Row-major queries.rows() x k block of neighbour indices.
    std::vector<std::size_t> nearest_batch(const FeatureMatrix& queries, std::size_t k,
                                           unsigned jobs = 1) const;

private:
    FeatureMatrix training_;
    bool binary_ = false;
    std::size_t words_ = 0;
    std::vector<std::uint64_t> bits_;
};

inline constexpr std::array<std::size_t, 5> kKnnCandidates{1, 3, 5, 7, 9};

struct KnnModel {
    std::shared_ptr<const NeighborIndex> index;
    std::vector<int> labels;  // 0/1 per training row
    std::size_t k = 5;
};

// Validates k odd, 1 <= k <= training size and labels.size() == index size.
KnnModel knn_train(std::shared_ptr<const NeighborIndex> index, std::vector<int> labels, std::size_t k);

// Majority label among the first k entries of `neighbors`.
int knn_vote(std::span<const std::size_t> neighbors, std::span<const int> labels, std::size_t k);
int knn_classify(const KnnModel& model, std::span<const double> w);

}  // namespace bciqt
