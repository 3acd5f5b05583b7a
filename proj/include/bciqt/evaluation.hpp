#pragma once

#include "bciqt/baselines.hpp"
#include "bciqt/dataset.hpp"
#include "bciqt/feature_selection.hpp"
#include "bciqt/quantum_core.hpp"

#include "json.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bciqt {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
    void add(int predicted, int truth) noexcept;

    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct Metrics {
    double recall = 0.0;
    double precision = 0.0;
    double accuracy = 0.0;
    double f1 = 0.0;
};

// 0/0 ratios are reported as 0. Throws EmptyEvaluation for zero counts.
Metrics compute_metrics(const ConfusionCounts& counts);
ConfusionCounts tally(std::span<const int> predicted, std::span<const int> truth);

struct OneVsAllSplit {
    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
};

OneVsAllSplit one_vs_all_split(const Dataset& dataset, int category);

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

// Seeded Fisher-Yates permutation of 0..n-1 driven by mt19937_64; the
// result depends only on (n, seed).
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

// The first n % folds folds hold one extra sample. Index lists are sorted.
std::vector<Fold> k_fold_indices(std::size_t n, std::size_t folds, std::uint64_t seed);

enum class ModelKind { Knn, Nb, Bciqt };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind model_kind_from_string(std::string_view text);

struct ExperimentConfig {
    std::vector<ModelKind> models{ModelKind::Knn, ModelKind::Nb, ModelKind::Bciqt};
    std::vector<int> categories{0, 1, 2, 3, 4, 5, 6, 7, 8};
    std::size_t top_k = 100;
    DecisionConfig decision;
    bool binarize = true;
    ScoreMode score_mode = ScoreMode::Raw;
    Aggregation aggregation = Aggregation::Max;
    // Re-select features inside each CV fold instead of once on the full
    // training set (only the KNN k search uses folds).
    bool per_fold_selection = false;
    std::size_t folds = 5;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    std::vector<std::size_t> knn_candidates{kKnnCandidates.begin(), kKnnCandidates.end()};
};

struct ReportCell {
    int category = 0;
    ModelKind model = ModelKind::Bciqt;
    ConfusionCounts counts;
    Metrics metrics;
    std::optional<std::size_t> knn_k;  // chosen by cross-validation
};

struct ReportMetadata {
    std::size_t top_k = 0;
    double lambda = 0.0;
    double xi = 0.0;
    double threshold = 0.0;
    bool binarize = true;
    ScoreMode score_mode = ScoreMode::Raw;
    Aggregation aggregation = Aggregation::Max;
    bool per_fold_selection = false;
    std::size_t folds = 0;
    std::uint64_t seed = 0;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::size_t zero_test_vectors = 0;  // test rows with no selected feature present
};

struct EvaluationReport {
    ReportMetadata metadata;
    std::vector<ReportCell> cells;  // ordered by (category, model) as configured

    const ReportCell* find(int category, ModelKind model) const noexcept;
};

EvaluationReport run_experiment(const Dataset& train, const Dataset& test, const ExperimentConfig& config);

// category,model,tp,fp,tn,fn,recall,precision,accuracy,f1 (6 decimals)
std::string report_to_csv(const EvaluationReport& report);
nlohmann::ordered_json report_to_json(const EvaluationReport& report);

// Recall per category and model, with reference DT and SVM columns
// alongside for reference.
std::string render_recall_table(const EvaluationReport& report);

struct ReferenceRecall {
    int category;
    double knn;
    double dt;
    double nb;
    double svm;
    double bciqt;
};

// Reference per-category recall, categories 0-8.
inline constexpr std::array<ReferenceRecall, 9> kReferenceRecall{{
    {0, 0.959, 0.884, 0.889, 0.292, 1.0},
    {1, 0.699, 0.710, 0.582, 0.390, 0.996},
    {2, 0.704, 0.652, 0.709, 0.474, 1.0},
    {3, 0.623, 0.508, 0.792, 0.346, 0.997},
    {4, 0.643, 0.621, 0.666, 0.259, 0.999},
    {5, 0.892, 0.855, 0.872, 0.621, 1.0},
    {6, 0.743, 0.755, 0.873, 0.454, 0.999},
    {7, 0.753, 0.728, 0.779, 0.332, 1.0},
    {8, 0.749, 0.677, 0.817, 0.209, 1.0},
}};

}  // namespace bciqt
