#include "bciqt/evaluation.hpp"

#include "bciqt/baselines.hpp"
#include "bciqt/diagnostics.hpp"
#include "bciqt/error.hpp"
#include "bciqt/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <set>

namespace bciqt {

void ConfusionCounts::add(int predicted, int truth) noexcept {
    if (truth == 1) {
        ++(predicted == 1 ? tp : fn);
    } else {
        ++(predicted == 1 ? fp : tn);
    }
}

Metrics compute_metrics(const ConfusionCounts& c) {
    const auto total = c.total();
    if (total == 0) throw Error(ErrorCode::EmptyEvaluation, "no evaluated samples");
    const auto ratio = [](std::uint64_t num, std::uint64_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    Metrics m;
    m.recall = ratio(c.tp, c.tp + c.fn);
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.accuracy = ratio(c.tp + c.tn, total);
    const double pr = m.precision + m.recall;
    m.f1 = pr == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / pr;
    return m;
}

ConfusionCounts tally(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) {
        throw Error(ErrorCode::DimensionMismatch, "prediction and truth lengths differ");
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < predicted.size(); ++i) c.add(predicted[i], truth[i]);
    return c;
}

OneVsAllSplit one_vs_all_split(const Dataset& dataset, int category) {
    if (!dataset.categories().contains(category)) {
        throw Error(ErrorCode::UnknownCategory, "category " + std::to_string(category) +
                                                    " does not occur in the dataset");
    }
    OneVsAllSplit split;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        (dataset.label(i) == category ? split.positives : split.negatives).push_back(i);
    }
    return split;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        // unbiased draw in [0, i) by rejection
        const std::uint64_t bound = i;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t r = rng();
        while (r >= limit) r = rng();
        std::swap(p[i - 1], p[static_cast<std::size_t>(r % bound)]);
    }
    return p;
}

std::vector<Fold> k_fold_indices(std::size_t n, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) throw Error(ErrorCode::TooFewSamples, "need at least 2 folds");
    if (n < folds) {
        throw Error(ErrorCode::TooFewSamples, std::to_string(n) + " samples cannot fill " +
                                                  std::to_string(folds) + " folds");
    }
    const auto order = seeded_permutation(n, seed);
    std::vector<std::size_t> assignment(n);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t size = n / folds + (f < n % folds ? 1 : 0);
        for (std::size_t j = 0; j < size; ++j) assignment[order[pos++]] = f;
    }
    std::vector<Fold> out(folds);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < folds; ++f) {
            (assignment[i] == f ? out[f].validation : out[f].train).push_back(i);
        }
    }
    return out;
}

std::string_view to_string(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::Knn: return "knn";
        case ModelKind::Nb: return "nb";
        case ModelKind::Bciqt: return "bciqt";
    }
    return "?";
}

ModelKind model_kind_from_string(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "knn") return ModelKind::Knn;
    if (lower == "nb") return ModelKind::Nb;
    if (lower == "bciqt") return ModelKind::Bciqt;
    throw Error(ErrorCode::InvalidConfig, "unknown model '" + std::string(text) + "' (knn, nb, bciqt)");
}

const ReportCell* EvaluationReport::find(int category, ModelKind model) const noexcept {
    for (const auto& c : cells) {
        if (c.category == category && c.model == model) return &c;
    }
    return nullptr;
}

// --- experiment -------------------------------------------------------------

namespace {

using Mask = std::vector<std::size_t>;

struct MaskedData {
    Dataset train;
    Dataset test;
};

void validate(const Dataset& train, const Dataset& test, const ExperimentConfig& config) {
    if (train.dimension() != test.dimension()) {
        throw Error(ErrorCode::DimensionMismatch, "train dimension " + std::to_string(train.dimension()) +
                                                      " vs test dimension " +
                                                      std::to_string(test.dimension()));
    }
    if (config.models.empty()) throw Error(ErrorCode::InvalidConfig, "no models requested");
    if (config.categories.empty()) throw Error(ErrorCode::InvalidConfig, "no categories requested");
    if (config.top_k < 1 || config.top_k > train.dimension()) {
        throw Error(ErrorCode::KOutOfRange, "top_k = " + std::to_string(config.top_k) +
                                                " outside 1.." + std::to_string(train.dimension()));
    }
    if (!(config.decision.threshold >= 0.0 && config.decision.threshold <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "threshold must lie in [0, 1]");
    }
    if (!(config.decision.lambda > 0.0)) throw Error(ErrorCode::InvalidLambda, "lambda must be positive");
    for (int c : config.categories) {
        if (!train.categories().contains(c)) {
            throw Error(ErrorCode::UnknownCategory,
                        "category " + std::to_string(c) + " has no training samples");
        }
    }
    if (std::set<int>(config.categories.begin(), config.categories.end()).size() != config.categories.size()) {
        throw Error(ErrorCode::InvalidConfig, "categories listed more than once");
    }
    if (config.knn_candidates.empty()) throw Error(ErrorCode::InvalidConfig, "no KNN k candidates");
    for (auto k : config.knn_candidates) {
        if (k == 0 || k % 2 == 0) throw Error(ErrorCode::InvalidConfig, "KNN k candidates must be odd");
    }
}

Mask select_mask(const Dataset& data, const ExperimentConfig& config, int category) {
    if (config.aggregation == Aggregation::Max) return select_top_k(data, config.top_k).indices;
    return select_top_k(data, config.top_k, category).indices;
}

std::string cell_context(int category, ModelKind model) {
    return "category " + std::to_string(category) + ", model " + std::string(to_string(model)) + ": ";
}

// Chooses KNN's k for one category by mean validation accuracy over the
// folds; ties go to the smaller k.
std::size_t choose_knn_k(const std::vector<Fold>& folds,
                         const std::vector<const std::vector<std::size_t>*>& fold_neighbors,
                         std::size_t width, const std::vector<int>& binary_labels,
                         std::vector<std::size_t> candidates) {
    std::sort(candidates.begin(), candidates.end());
    std::size_t best_k = candidates.front();
    double best = -1.0;
    for (auto k : candidates) {
        double accuracy_sum = 0.0;
        for (std::size_t f = 0; f < folds.size(); ++f) {
            const auto& fold = folds[f];
            const auto& nb = *fold_neighbors[f];
            // neighbour indices are local to fold.train
            std::vector<int> local_labels(fold.train.size());
            for (std::size_t i = 0; i < fold.train.size(); ++i) local_labels[i] = binary_labels[fold.train[i]];
            const std::size_t kk = std::min(k, width);
            std::size_t correct = 0;
            for (std::size_t v = 0; v < fold.validation.size(); ++v) {
                const std::span<const std::size_t> row(nb.data() + v * width, width);
                const int predicted = knn_vote(row, local_labels, kk);
                correct += predicted == binary_labels[fold.validation[v]] ? 1 : 0;
            }
            accuracy_sum += static_cast<double>(correct) / static_cast<double>(fold.validation.size());
        }
        const double mean = accuracy_sum / static_cast<double>(folds.size());
        if (mean > best) {
            best = mean;
            best_k = k;
        }
    }
    return best_k;
}

}  // namespace

EvaluationReport run_experiment(const Dataset& train, const Dataset& test, const ExperimentConfig& config) {
    validate(train, test, config);
    const auto& categories = config.categories;
    const auto has_model = [&](ModelKind m) {
        return std::find(config.models.begin(), config.models.end(), m) != config.models.end();
    };

    // Feature masks on the full training set.
    std::vector<Mask> masks(categories.size());
    if (config.aggregation == Aggregation::Max) {
        const auto global = select_mask(train, config, categories.front());
        std::fill(masks.begin(), masks.end(), global);
    } else {
        for (std::size_t c = 0; c < categories.size(); ++c) masks[c] = select_mask(train, config, categories[c]);
    }

    std::map<Mask, std::unique_ptr<MaskedData>> masked;
    for (const auto& m : masks) {
        if (!masked.contains(m)) {
            masked.emplace(m, std::make_unique<MaskedData>(MaskedData{apply_mask(train, m, config.binarize),
                                                                      apply_mask(test, m, config.binarize)}));
        }
    }

    std::vector<bool> zero_rows(test.size(), false);
    for (const auto& [m, data] : masked) {
        for (std::size_t i = 0; i < test.size(); ++i) {
            if (is_zero_vector(data->test.features(i))) zero_rows[i] = true;
        }
    }
    const auto zero_count = static_cast<std::size_t>(std::count(zero_rows.begin(), zero_rows.end(), true));
    if (zero_count > 0 && has_model(ModelKind::Bciqt)) {
        warn(std::to_string(zero_count) + " test samples have no selected feature present; BCIQT classifies them 0");
    }

    // KNN: neighbour tables for the test set and for every CV fold.
    std::vector<std::size_t> knn_k(categories.size(), 0);
    std::map<Mask, std::vector<std::size_t>> test_neighbors;
    std::size_t width = 0;
    if (has_model(ModelKind::Knn)) {
        const std::size_t kmax = *std::max_element(config.knn_candidates.begin(), config.knn_candidates.end());
        width = std::min(kmax, train.size());
        for (const auto& [m, data] : masked) {
            NeighborIndex index(data->train.feature_matrix());
            test_neighbors.emplace(m, index.nearest_batch(data->test.feature_matrix(), width, config.jobs));
        }

        const auto folds = k_fold_indices(train.size(), config.folds, config.seed);
        std::size_t smallest_fit = train.size();
        for (const auto& fold : folds) smallest_fit = std::min(smallest_fit, fold.train.size());
        const std::size_t fold_width = std::min(kmax, smallest_fit);
        // (fold, mask) -> validation x fold_width neighbour block
        std::map<std::pair<std::size_t, Mask>, std::vector<std::size_t>> fold_tables;
        std::vector<std::vector<Mask>> fold_masks(folds.size(), std::vector<Mask>(categories.size()));
        for (std::size_t f = 0; f < folds.size(); ++f) {
            std::unique_ptr<Dataset> fold_train;
            if (config.per_fold_selection) {
                fold_train = std::make_unique<Dataset>(select_rows(train, folds[f].train));
                if (config.aggregation == Aggregation::Max) {
                    const auto m = select_mask(*fold_train, config, categories.front());
                    std::fill(fold_masks[f].begin(), fold_masks[f].end(), m);
                } else {
                    for (std::size_t c = 0; c < categories.size(); ++c) {
                        // a category absent from this fold's training part keeps the global mask
                        fold_masks[f][c] = fold_train->categories().contains(categories[c])
                                               ? select_mask(*fold_train, config, categories[c])
                                               : masks[c];
                    }
                }
            } else {
                fold_masks[f] = masks;
            }
            for (const auto& m : fold_masks[f]) {
                const auto key = std::make_pair(f, m);
                if (fold_tables.contains(key)) continue;
                std::optional<Dataset> own;
                const Dataset* full = nullptr;
                if (auto it = masked.find(m); it != masked.end()) {
                    full = &it->second->train;
                } else {
                    full = &own.emplace(apply_mask(train, m, config.binarize));
                }
                const Dataset fit = select_rows(*full, folds[f].train);
                const Dataset validation = select_rows(*full, folds[f].validation);
                NeighborIndex index(fit.feature_matrix());
                fold_tables.emplace(key, index.nearest_batch(validation.feature_matrix(), fold_width, config.jobs));
            }
        }

        for (std::size_t c = 0; c < categories.size(); ++c) {
            std::vector<int> binary(train.size());
            for (std::size_t i = 0; i < train.size(); ++i) binary[i] = train.label(i) == categories[c] ? 1 : 0;
            std::vector<const std::vector<std::size_t>*> tables;
            for (std::size_t f = 0; f < folds.size(); ++f) tables.push_back(&fold_tables.at({f, fold_masks[f][c]}));
            knn_k[c] = choose_knn_k(folds, tables, fold_width, binary, config.knn_candidates);
        }
    }

    EvaluationReport report;
    auto& meta = report.metadata;
    meta.top_k = config.top_k;
    meta.lambda = config.decision.lambda;
    meta.xi = config.decision.xi;
    meta.threshold = config.decision.threshold;
    meta.binarize = config.binarize;
    meta.score_mode = config.score_mode;
    meta.aggregation = config.aggregation;
    meta.per_fold_selection = config.per_fold_selection;
    meta.folds = config.folds;
    meta.seed = config.seed;
    meta.train_size = train.size();
    meta.test_size = test.size();
    meta.zero_test_vectors = zero_count;

    const std::size_t n_models = config.models.size();
    report.cells.resize(categories.size() * n_models);
    parallel_for(report.cells.size(), config.jobs, [&](std::size_t cell_index) {
        const std::size_t c = cell_index / n_models;
        const int category = categories[c];
        const ModelKind model = config.models[cell_index % n_models];
        const auto& data = *masked.at(masks[c]);
        try {
            std::vector<int> truth(test.size());
            for (std::size_t i = 0; i < test.size(); ++i) truth[i] = test.label(i) == category ? 1 : 0;
            std::vector<int> predicted(test.size(), 0);

            ReportCell cell;
            cell.category = category;
            cell.model = model;
            switch (model) {
                case ModelKind::Bciqt: {
                    BciqtTrainingOptions options;
                    options.decision = config.decision;
                    options.binarize = config.binarize;
                    options.score_mode = config.score_mode;
                    const auto trained = train_bciqt(data.train, category, masks[c], options);
                    for (std::size_t i = 0; i < test.size(); ++i) {
                        predicted[i] = classify(trained.projector, data.test.features(i), trained.threshold,
                                                trained.score_mode);
                    }
                    break;
                }
                case ModelKind::Nb: {
                    const auto split = one_vs_all_split(data.train, category);
                    const auto nb = nb_train(data.train.feature_matrix(), split.positives, split.negatives);
                    for (std::size_t i = 0; i < test.size(); ++i) predicted[i] = nb_classify(nb, data.test.features(i));
                    break;
                }
                case ModelKind::Knn: {
                    std::vector<int> binary(train.size());
                    for (std::size_t i = 0; i < train.size(); ++i) binary[i] = train.label(i) == category ? 1 : 0;
                    const auto& table = test_neighbors.at(masks[c]);
                    for (std::size_t i = 0; i < test.size(); ++i) {
                        const std::span<const std::size_t> row(table.data() + i * width, width);
                        predicted[i] = knn_vote(row, binary, knn_k[c]);
                    }
                    cell.knn_k = knn_k[c];
                    break;
                }
            }
            cell.counts = tally(predicted, truth);
            cell.metrics = compute_metrics(cell.counts);
            report.cells[cell_index] = cell;
        } catch (const Error& e) {
            throw Error(e.code(), cell_context(category, model) + e.detail());
        }
    });
    return report;
}

// --- report formats ----------------------------------------------------------

std::string report_to_csv(const EvaluationReport& report) {
    std::string out = "category,model,tp,fp,tn,fn,recall,precision,accuracy,f1\n";
    for (const auto& c : report.cells) {
        out += fmt::format("{},{},{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", c.category, to_string(c.model),
                           c.counts.tp, c.counts.fp, c.counts.tn, c.counts.fn, c.metrics.recall,
                           c.metrics.precision, c.metrics.accuracy, c.metrics.f1);
    }
    return out;
}

nlohmann::ordered_json report_to_json(const EvaluationReport& report) {
    const auto& m = report.metadata;
    nlohmann::ordered_json meta;
    meta["top_k"] = m.top_k;
    meta["lambda"] = m.lambda;
    meta["xi"] = m.xi;
    meta["threshold"] = m.threshold;
    meta["binarize"] = m.binarize;
    meta["score_mode"] = std::string(to_string(m.score_mode));
    meta["aggregation"] = std::string(to_string(m.aggregation));
    meta["feature_selection"] = m.per_fold_selection ? "per-fold" : "full-training-set";
    meta["folds"] = m.folds;
    meta["cv_scope"] = "knn-k-only";
    meta["seed"] = m.seed;
    meta["train_size"] = m.train_size;
    meta["test_size"] = m.test_size;
    meta["zero_test_vectors"] = m.zero_test_vectors;

    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& c : report.cells) {
        nlohmann::ordered_json j;
        j["category"] = c.category;
        j["model"] = std::string(to_string(c.model));
        j["tp"] = c.counts.tp;
        j["fp"] = c.counts.fp;
        j["tn"] = c.counts.tn;
        j["fn"] = c.counts.fn;
        j["recall"] = c.metrics.recall;
        j["precision"] = c.metrics.precision;
        j["accuracy"] = c.metrics.accuracy;
        j["f1"] = c.metrics.f1;
        if (c.knn_k) j["knn_k"] = *c.knn_k;
        cells.push_back(std::move(j));
    }
    nlohmann::ordered_json out;
    out["metadata"] = std::move(meta);
    out["cells"] = std::move(cells);
    return out;
}

std::string render_recall_table(const EvaluationReport& report) {
    std::vector<int> categories;
    std::vector<ModelKind> models;
    for (const auto& c : report.cells) {
        if (std::find(categories.begin(), categories.end(), c.category) == categories.end()) {
            categories.push_back(c.category);
        }
        if (std::find(models.begin(), models.end(), c.model) == models.end()) models.push_back(c.model);
    }
    const auto reference = [](int category) -> const ReferenceRecall* {
        for (const auto& p : kReferenceRecall) {
            if (p.category == category) return &p;
        }
        return nullptr;
    };

    std::string out = fmt::format("{:<10}", "category");
    for (auto m : models) {
        std::string name(to_string(m));
        std::transform(name.begin(), name.end(), name.begin(), ::toupper);
        out += fmt::format("{:>10}", name);
    }
    out += fmt::format("{:>20}{:>20}\n", "DT[source=paper]", "SVM[source=paper]");
    for (int category : categories) {
        out += fmt::format("{:<10}", category);
        for (auto m : models) {
            const auto* cell = report.find(category, m);
            out += cell ? fmt::format("{:>10.4f}", cell->metrics.recall) : fmt::format("{:>10}", "-");
        }
        if (const auto* p = reference(category)) {
            out += fmt::format("{:>20.3f}{:>20.3f}\n", p->dt, p->svm);
        } else {
            out += fmt::format("{:>20}{:>20}\n", "-", "-");
        }
    }
    const auto& m = report.metadata;
    out += fmt::format("top_k={} lambda={} threshold={} score_mode={} binarize={} folds={} seed={}\n", m.top_k,
                       m.lambda, m.threshold, to_string(m.score_mode), m.binarize ? "on" : "off", m.folds, m.seed);
    return out;
}

}  // namespace bciqt
