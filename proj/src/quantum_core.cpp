#include "bciqt/quantum_core.hpp"

#include "bciqt/diagnostics.hpp"
#include "bciqt/error.hpp"
#include "bciqt/feature_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bciqt {

namespace {

double dot(std::span<const double> x, std::span<const double> y) {
    return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
}

double norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

}  // namespace

ClassStatVector::ClassStatVector(std::vector<double> v, std::size_t support_count)
    : v_(std::move(v)), support_(support_count) {
    if (support_ == 0) throw Error(ErrorCode::EmptySampleSet, "statistic summarises no samples");
    if (std::any_of(v_.begin(), v_.end(), [](double x) { return !(x >= 0.0); })) {
        throw Error(ErrorCode::ZeroStatVector, "statistic has a negative component");
    }
    if (std::abs(norm(v_) - 1.0) > 1e-12) {
        throw Error(ErrorCode::ZeroStatVector, "statistic is not unit-norm");
    }
}

DensityOperator::DensityOperator(std::vector<double> factor) : factor_(std::move(factor)) {
    // |f><f| / tr(|f><f|) == |g><g| with g = f / ||f||
    const double n = norm(factor_);
    if (!(n > 0.0)) throw Error(ErrorCode::ZeroStatVector, "density operator of a zero vector");
    for (auto& x : factor_) x /= n;
}

SquareMatrix DensityOperator::matrix() const { return SquareMatrix::outer(factor_, factor_); }

std::string_view to_string(ScoreMode mode) noexcept {
    return mode == ScoreMode::Unit ? "unit" : "raw";
}

ScoreMode score_mode_from_string(std::string_view text) {
    if (text == "unit") return ScoreMode::Unit;
    if (text == "raw") return ScoreMode::Raw;
    throw Error(ErrorCode::InvalidConfig, "score mode must be 'unit' or 'raw', got '" + std::string(text) + "'");
}

DecisionConfig DecisionConfig::from_prior(double xi, double threshold) {
    DecisionConfig c;
    c.xi = xi;
    c.lambda = lambda_from_prior(xi);
    c.threshold = threshold;
    return c;
}

DecisionConfig DecisionConfig::from_lambda(double lambda, double threshold) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw Error(ErrorCode::InvalidLambda, "lambda must be positive and finite");
    }
    DecisionConfig c;
    c.lambda = lambda;
    c.xi = lambda / (1.0 + lambda);
    c.threshold = threshold;
    return c;
}

std::size_t DetectionProjector::dimension() const noexcept { return u.size(); }

SquareMatrix DetectionProjector::matrix() const {
    return SquareMatrix::outer(u, u);
}

ClassStatVector estimate_stat_vector(const FeatureMatrix& samples, std::span<const std::size_t> rows) {
    if (rows.empty()) throw Error(ErrorCode::EmptySampleSet, "no samples for class statistic");
    std::vector<double> counts(samples.cols(), 0.0);
    for (auto r : rows) {
        const auto f = samples.row(r);
        for (std::size_t j = 0; j < counts.size(); ++j) {
            if (f[j] > 0.0) counts[j] += 1.0;
        }
    }
    const double n = norm(counts);
    if (n == 0.0) {
        throw Error(ErrorCode::ZeroStatVector, "no sample has a non-zero selected feature");
    }
    for (auto& c : counts) c /= n;
    return ClassStatVector(std::move(counts), rows.size());
}

ClassStatVector estimate_stat_vector(const std::vector<FeatureVector>& samples) {
    if (samples.empty()) throw Error(ErrorCode::EmptySampleSet, "no samples for class statistic");
    const std::size_t k = samples.front().size();
    std::vector<double> values;
    values.reserve(samples.size() * k);
    for (const auto& s : samples) {
        if (s.size() != k) throw Error(ErrorCode::DimensionMismatch, "samples differ in length");
        values.insert(values.end(), s.begin(), s.end());
    }
    const FeatureMatrix m(samples.size(), k, std::move(values));
    std::vector<std::size_t> rows(samples.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return estimate_stat_vector(m, rows);
}

DensityOperator density_from_stat(const ClassStatVector& v) { return DensityOperator(v.values()); }

double lambda_from_prior(double xi) {
    if (!(xi >= 0.0 && xi < 1.0)) {
        throw Error(ErrorCode::PriorOutOfRange, "prior " + std::to_string(xi) + " not in [0, 1)");
    }
    return xi / (1.0 - xi);
}

DetectionProjector compute_projector(const DensityOperator& rho1, const DensityOperator& rho0,
                                     double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw Error(ErrorCode::InvalidLambda, "lambda must be positive, got " + std::to_string(lambda));
    }
    const auto& v1 = rho1.factor();
    const auto& v0 = rho0.factor();
    if (v1.size() != v0.size()) {
        throw Error(ErrorCode::DimensionMismatch, "density operators act on different dimensions");
    }
    const std::size_t k = v1.size();

    const double a = std::clamp(dot(v0, v1), -1.0, 1.0);
    // e2 = (v0 - a v1) / s; s from the residual keeps e2 unit-norm when a ~ 1
    std::vector<double> e2(k);
    for (std::size_t i = 0; i < k; ++i) e2[i] = v0[i] - a * v1[i];
    const double s = norm(e2);

    DetectionProjector p;
    if (s < kCollinearTolerance) {
        // rho1 - lambda*rho0 collapses to (1 - lambda) rho1
        if (lambda < 1.0) {
            p.u = v1;
            p.eta = 1.0 - lambda;
            p.beta = 0.0;
        } else {
            p.degenerate = true;
            p.u.assign(k, 0.0);
            p.eta = 0.0;
            p.beta = 1.0 - lambda;
            if (lambda > 1.0) p.u_perp = v1;
        }
        return p;
    }
    for (auto& x : e2) x /= s;

    // 2x2 restriction in the basis {e1 = v1, e2}
    const double m12 = -lambda * a * s;
    const double m22 = -lambda * s * s;
    const double disc = std::sqrt((1.0 - lambda) * (1.0 - lambda) + 4.0 * lambda * s * s);
    const double trace = 1.0 - lambda;
    // larger-magnitude root first, the other from the determinant -lambda s^2
    double mu_plus = 0.0;
    double mu_minus = 0.0;
    if (trace >= 0.0) {
        mu_plus = 0.5 * (trace + disc);
        mu_minus = -lambda * s * s / mu_plus;
    } else {
        mu_minus = 0.5 * (trace - disc);
        mu_plus = -lambda * s * s / mu_minus;
    }

    // (mu_plus - m22, m12) is a mu_plus eigenvector; first entry > 0
    double c1 = mu_plus - m22;
    double c2 = m12;
    const double cn = std::hypot(c1, c2);
    c1 /= cn;
    c2 /= cn;

    p.eta = mu_plus;
    p.beta = mu_minus;
    p.u.resize(k);
    p.u_perp.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        p.u[i] = c1 * v1[i] + c2 * e2[i];
        p.u_perp[i] = -c2 * v1[i] + c1 * e2[i];
    }
    const double un = norm(p.u);
    const double pn = norm(p.u_perp);
    for (auto& x : p.u) x /= un;
    for (auto& x : p.u_perp) x /= pn;
    return p;
}

bool is_zero_vector(std::span<const double> w) noexcept {
    return std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; });
}

double score(const DetectionProjector& projector, std::span<const double> w, ScoreMode mode) {
    if (w.size() != projector.u.size()) {
        throw Error(ErrorCode::DimensionMismatch, "test vector length " + std::to_string(w.size()) +
                                                      " vs projector " +
                                                      std::to_string(projector.u.size()));
    }
    if (mode == ScoreMode::Raw) {
        if (projector.degenerate) return 0.0;
        const double c = dot(w, projector.u);
        return c * c;
    }
    const double n = norm(w);
    if (n == 0.0) throw Error(ErrorCode::ZeroTestVector, "all selected features are zero");
    if (projector.degenerate) return 0.0;
    const double c = dot(w, projector.u) / n;
    return std::min(1.0, c * c);
}

int classify(const DetectionProjector& projector, std::span<const double> w, double threshold,
             ScoreMode mode) {
    if (w.size() != projector.u.size()) {
        throw Error(ErrorCode::DimensionMismatch, "test vector length " + std::to_string(w.size()) +
                                                      " vs projector " +
                                                      std::to_string(projector.u.size()));
    }
    if (projector.degenerate || is_zero_vector(w)) return 0;
    return score(projector, w, mode) >= threshold ? 1 : 0;
}

// --- BciqtModel -----------------------------------------------------------

FeatureVector BciqtModel::prepare(std::span<const double> raw_features) const {
    auto masked = apply_mask(raw_features, std::span<const std::size_t>(feature_mask));
    if (binarize) {
        for (auto& x : masked) x = x > 0.0 ? 1.0 : 0.0;
    }
    return masked;
}

double BciqtModel::score(std::span<const double> raw_features) const {
    const auto w = prepare(raw_features);
    if (is_zero_vector(w)) return 0.0;
    return bciqt::score(projector, w, score_mode);
}

int BciqtModel::classify(std::span<const double> raw_features) const {
    return bciqt::classify(projector, prepare(raw_features), threshold, score_mode);
}

BciqtModel train_bciqt(const Dataset& masked, int category, std::vector<std::size_t> feature_mask,
                       const BciqtTrainingOptions& options) {
    if (masked.dimension() != feature_mask.size()) {
        throw Error(ErrorCode::DimensionMismatch, "training data is not restricted to the mask");
    }
    if (!(options.decision.threshold >= 0.0 && options.decision.threshold <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "threshold must lie in [0, 1]");
    }
    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
    for (std::size_t i = 0; i < masked.size(); ++i) {
        (masked.label(i) == category ? positives : negatives).push_back(i);
    }
    if (positives.empty()) {
        throw Error(ErrorCode::UnknownCategory, "no training samples with label " + std::to_string(category));
    }
    if (negatives.empty()) {
        throw Error(ErrorCode::EmptySampleSet, "no negative training samples for category " +
                                                   std::to_string(category));
    }

    const auto v1 = estimate_stat_vector(masked.feature_matrix(), positives);
    const auto v0 = estimate_stat_vector(masked.feature_matrix(), negatives);

    BciqtModel model;
    model.category = category;
    model.lambda = options.decision.lambda;
    model.threshold = options.decision.threshold;
    model.projector = compute_projector(density_from_stat(v1), density_from_stat(v0), model.lambda);
    model.feature_mask = std::move(feature_mask);
    model.binarize = options.binarize;
    model.score_mode = options.score_mode;
    if (model.projector.degenerate) {
        warn("category " + std::to_string(category) +
             ": class statistics are collinear and lambda >= 1; projector is zero, every sample "
             "will be classified 0");
    }
    return model;
}

nlohmann::ordered_json to_json(const BciqtModel& model) {
    nlohmann::ordered_json j;
    j["category"] = model.category;
    j["lambda"] = model.lambda;
    j["threshold"] = model.threshold;
    j["eta"] = model.projector.eta;
    j["beta"] = model.projector.beta;
    j["u"] = model.projector.u;
    j["degenerate"] = model.projector.degenerate;
    j["feature_mask"] = model.feature_mask;
    j["binarize"] = model.binarize;
    j["score_mode"] = std::string(to_string(model.score_mode));
    return j;
}

BciqtModel bciqt_model_from_json(const nlohmann::json& j) {
    try {
        BciqtModel m;
        m.category = j.at("category").get<int>();
        m.lambda = j.at("lambda").get<double>();
        m.threshold = j.at("threshold").get<double>();
        m.projector.eta = j.at("eta").get<double>();
        m.projector.beta = j.at("beta").get<double>();
        m.projector.u = j.at("u").get<std::vector<double>>();
        m.projector.degenerate = j.at("degenerate").get<bool>();
        m.feature_mask = j.at("feature_mask").get<std::vector<std::size_t>>();
        m.binarize = j.value("binarize", true);
        m.score_mode = score_mode_from_string(j.value("score_mode", std::string("raw")));
        if (m.projector.u.size() != m.feature_mask.size()) {
            throw Error(ErrorCode::SchemaMismatch, "u and feature_mask lengths differ");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("BCIQT model: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SchemaMismatch) throw;
        throw Error(ErrorCode::SchemaMismatch, e.what());
    }
}

}  // namespace bciqt
