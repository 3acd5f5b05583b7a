#include "bciqt/baselines.hpp"

#include "bciqt/error.hpp"
#include "bciqt/feature_selection.hpp"
#include "bciqt/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace bciqt {

// --- naive Bayes ------------------------------------------------------------

BernoulliNBModel nb_train(const FeatureMatrix& samples, std::span<const std::size_t> positive_rows,
                          std::span<const std::size_t> negative_rows) {
    if (positive_rows.empty()) throw Error(ErrorCode::EmptyClass, "no positive training samples");
    if (negative_rows.empty()) throw Error(ErrorCode::EmptyClass, "no negative training samples");
    const std::size_t d = samples.cols();
    const std::array<std::span<const std::size_t>, 2> rows{negative_rows, positive_rows};
    const double n_total = static_cast<double>(positive_rows.size() + negative_rows.size());

    BernoulliNBModel model;
    for (std::size_t c = 0; c < 2; ++c) {
        std::vector<double> present(d, 0.0);
        for (auto r : rows[c]) {
            const auto f = samples.row(r);
            for (std::size_t j = 0; j < d; ++j) {
                if (f[j] > 0.0) present[j] += 1.0;
            }
        }
        const double n = static_cast<double>(rows[c].size());
        model.log_prior[c] = std::log(n / n_total);
        model.log_prob_present[c].resize(d);
        model.log_prob_absent[c].resize(d);
        for (std::size_t j = 0; j < d; ++j) {
            const double p = (present[j] + kLaplaceAlpha) / (n + 2.0 * kLaplaceAlpha);
            model.log_prob_present[c][j] = std::log(p);
            model.log_prob_absent[c][j] = std::log1p(-p);
        }
    }
    return model;
}

BernoulliNBModel nb_train(const std::vector<FeatureVector>& positives,
                          const std::vector<FeatureVector>& negatives) {
    if (positives.empty()) throw Error(ErrorCode::EmptyClass, "no positive training samples");
    if (negatives.empty()) throw Error(ErrorCode::EmptyClass, "no negative training samples");
    const std::size_t d = positives.front().size();
    std::vector<double> values;
    std::vector<std::size_t> pos_rows;
    std::vector<std::size_t> neg_rows;
    std::size_t row = 0;
    for (const auto* group : {&positives, &negatives}) {
        for (const auto& s : *group) {
            if (s.size() != d) throw Error(ErrorCode::DimensionMismatch, "training vectors differ in length");
            values.insert(values.end(), s.begin(), s.end());
            (group == &positives ? pos_rows : neg_rows).push_back(row++);
        }
    }
    return nb_train(FeatureMatrix(row, d, std::move(values)), pos_rows, neg_rows);
}

std::array<double, 2> nb_log_joint(const BernoulliNBModel& model, std::span<const double> w) {
    if (w.size() != model.dimension()) {
        throw Error(ErrorCode::DimensionMismatch, "sample length " + std::to_string(w.size()) +
                                                      " vs model " + std::to_string(model.dimension()));
    }
    std::array<double, 2> joint = model.log_prior;
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t j = 0; j < w.size(); ++j) {
            joint[c] += w[j] > 0.0 ? model.log_prob_present[c][j] : model.log_prob_absent[c][j];
        }
    }
    return joint;
}

int nb_classify(const BernoulliNBModel& model, std::span<const double> w) {
    const auto joint = nb_log_joint(model, w);
    return joint[1] > joint[0] ? 1 : 0;
}

double nb_positive_probability(const BernoulliNBModel& model, std::span<const double> w) {
    const auto joint = nb_log_joint(model, w);
    // logistic of the log-odds, evaluated without overflow
    const double log_odds = joint[1] - joint[0];
    if (log_odds >= 0.0) return 1.0 / (1.0 + std::exp(-log_odds));
    const double e = std::exp(log_odds);
    return e / (1.0 + e);
}

nlohmann::ordered_json to_json(const BernoulliNBModel& model) {
    nlohmann::ordered_json j;
    j["log_prior"] = model.log_prior;
    j["log_prob_present"] = model.log_prob_present;
    j["log_prob_absent"] = model.log_prob_absent;
    return j;
}

BernoulliNBModel nb_model_from_json(const nlohmann::json& j) {
    try {
        BernoulliNBModel m;
        m.log_prior = j.at("log_prior").get<std::array<double, 2>>();
        m.log_prob_present = j.at("log_prob_present").get<std::array<std::vector<double>, 2>>();
        m.log_prob_absent = j.at("log_prob_absent").get<std::array<std::vector<double>, 2>>();
        const std::size_t d = m.log_prob_present[0].size();
        for (std::size_t c = 0; c < 2; ++c) {
            if (m.log_prob_present[c].size() != d || m.log_prob_absent[c].size() != d) {
                throw Error(ErrorCode::SchemaMismatch, "NB probability tables differ in length");
            }
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("NB model: ") + e.what());
    }
}

double NbClassifier::score(std::span<const double> raw_features) const {
    return nb_positive_probability(model, apply_mask(raw_features, std::span<const std::size_t>(feature_mask)));
}

int NbClassifier::classify(std::span<const double> raw_features) const {
    return nb_classify(model, apply_mask(raw_features, std::span<const std::size_t>(feature_mask)));
}

nlohmann::ordered_json to_json(const NbClassifier& classifier) {
    nlohmann::ordered_json j;
    j["category"] = classifier.category;
    j["model"] = "nb";
    const auto tables = to_json(classifier.model);
    for (auto& [key, value] : tables.items()) j[key] = value;
    j["feature_mask"] = classifier.feature_mask;
    return j;
}

NbClassifier nb_classifier_from_json(const nlohmann::json& j) {
    try {
        NbClassifier c;
        c.category = j.at("category").get<int>();
        c.model = nb_model_from_json(j);
        c.feature_mask = j.at("feature_mask").get<std::vector<std::size_t>>();
        if (c.feature_mask.size() != c.model.dimension()) {
            throw Error(ErrorCode::SchemaMismatch, "NB feature_mask length differs from its tables");
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("NB model: ") + e.what());
    }
}

// --- nearest neighbours -----------------------------------------------------

namespace {

bool all_binary(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

void pack_bits(std::span<const double> row, std::span<std::uint64_t> out) {
    std::fill(out.begin(), out.end(), 0);
    for (std::size_t j = 0; j < row.size(); ++j) {
        if (row[j] != 0.0) out[j / 64] |= std::uint64_t{1} << (j % 64);
    }
}

// Bounded insertion list of the k best (distance, index) pairs. Rows are
// offered in index order, so an equal distance never displaces an earlier
// row and lands after it.
template <class Distance>
class TopK {
public:
    explicit TopK(std::size_t k) : k_(k) {
        dist_.reserve(k + 1);
        idx_.reserve(k + 1);
    }

    void offer(Distance d, std::size_t index) {
        if (dist_.size() == k_ && !(d < dist_.back())) return;
        const auto pos = std::upper_bound(dist_.begin(), dist_.end(), d) - dist_.begin();
        dist_.insert(dist_.begin() + pos, d);
        idx_.insert(idx_.begin() + pos, index);
        if (dist_.size() > k_) {
            dist_.pop_back();
            idx_.pop_back();
        }
    }

    const std::vector<std::size_t>& indices() const noexcept { return idx_; }

private:
    std::size_t k_;
    std::vector<Distance> dist_;
    std::vector<std::size_t> idx_;
};

}  // namespace

NeighborIndex::NeighborIndex(FeatureMatrix training) : training_(std::move(training)) {
    if (training_.rows() == 0) throw Error(ErrorCode::EmptySampleSet, "empty neighbour index");
    binary_ = all_binary(training_.values());
    if (binary_) {
        words_ = (training_.cols() + 63) / 64;
        bits_.assign(training_.rows() * words_, 0);
        for (std::size_t i = 0; i < training_.rows(); ++i) {
            pack_bits(training_.row(i), std::span<std::uint64_t>(bits_.data() + i * words_, words_));
        }
    }
}

std::vector<std::size_t> NeighborIndex::nearest(std::span<const double> query, std::size_t k) const {
    if (query.size() != dimension()) {
        throw Error(ErrorCode::DimensionMismatch, "query length " + std::to_string(query.size()) +
                                                      " vs index " + std::to_string(dimension()));
    }
    k = std::min(k, size());
    if (binary_ && all_binary(query)) {
        std::vector<std::uint64_t> q(words_);
        pack_bits(query, q);
        TopK<unsigned> best(k);
        const std::uint64_t* row = bits_.data();
        for (std::size_t i = 0; i < size(); ++i, row += words_) {
            unsigned d = 0;
            for (std::size_t w = 0; w < words_; ++w) d += static_cast<unsigned>(std::popcount(row[w] ^ q[w]));
            best.offer(d, i);
        }
        return best.indices();
    }
    TopK<double> best(k);
    for (std::size_t i = 0; i < size(); ++i) {
        const auto r = training_.row(i);
        double d = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) {
            const double diff = r[j] - query[j];
            d += diff * diff;
        }
        best.offer(d, i);
    }
    return best.indices();
}

std::vector<std::size_t> NeighborIndex::nearest_batch(const FeatureMatrix& queries, std::size_t k,
                                                      unsigned jobs) const {
    k = std::min(k, size());
    std::vector<std::size_t> out(queries.rows() * k);
    parallel_for(queries.rows(), jobs, [&](std::size_t q) {
        const auto found = nearest(queries.row(q), k);
        std::copy(found.begin(), found.end(), out.begin() + static_cast<std::ptrdiff_t>(q * k));
    });
    return out;
}

KnnModel knn_train(std::shared_ptr<const NeighborIndex> index, std::vector<int> labels, std::size_t k) {
    if (!index) throw Error(ErrorCode::EmptySampleSet, "KNN model without training data");
    if (labels.size() != index->size()) {
        throw Error(ErrorCode::DimensionMismatch, "KNN labels do not match the training rows");
    }
    if (k == 0 || k % 2 == 0 || k > index->size()) {
        throw Error(ErrorCode::InvalidConfig, "KNN k must be odd and at most the training size, got " +
                                                  std::to_string(k));
    }
    return KnnModel{std::move(index), std::move(labels), k};
}

int knn_vote(std::span<const std::size_t> neighbors, std::span<const int> labels, std::size_t k) {
    k = std::min(k, neighbors.size());
    std::size_t positive = 0;
    for (std::size_t i = 0; i < k; ++i) positive += labels[neighbors[i]] == 1 ? 1 : 0;
    return 2 * positive > k ? 1 : 0;
}

int knn_classify(const KnnModel& model, std::span<const double> w) {
    return knn_vote(model.index->nearest(w, model.k), model.labels, model.k);
}

}  // namespace bciqt
