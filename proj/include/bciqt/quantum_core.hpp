#pragma once

#include "bciqt/dataset.hpp"
#include "bciqt/jacobi.hpp"

#include "json.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace bciqt {

/// Unit-norm, non-negative vector of per-feature presence counts for one
/// class, together with the number of samples it summarises.
class ClassStatVector {
public:
    // Validates ||v|| = 1 (1e-12), v >= 0 and support_count >= 1.
    ClassStatVector(std::vector<double> v, std::size_t support_count);

    const std::vector<double>& values() const noexcept { return v_; }
    std::size_t dimension() const noexcept { return v_.size(); }
    std::size_t support_count() const noexcept { return support_; }

private:
    std::vector<double> v_;
    std::size_t support_;
};

/// Pure state rho = |f><f| / tr(|f><f|), kept as its unit factor f.
class DensityOperator {
public:
    explicit DensityOperator(std::vector<double> factor);

    const std::vector<double>& factor() const noexcept { return factor_; }
    std::size_t dimension() const noexcept { return factor_.size(); }

    SquareMatrix matrix() const;

private:
    std::vector<double> factor_;
};

/// How a test vector is scored against the projector.
enum class ScoreMode {
    Unit,  // <w^|Delta|w^> with w^ = w/||w||, always in [0,1]
    Raw,   // <w|Delta|w> on the vector as given
};

std::string_view to_string(ScoreMode mode) noexcept;
ScoreMode score_mode_from_string(std::string_view text);

struct DecisionCosts {
    double c00 = 0.0;
    double c01 = 1.0;
    double c10 = 1.0;
    double c11 = 0.0;
};

/// Prior odds, acceptance threshold and (recorded, unused) decision costs.
/// Defaults are xi = 0.5, lambda = 1, threshold = 0.5.
struct DecisionConfig {
    double xi = 0.5;
    double lambda = 1.0;
    double threshold = 0.5;
    DecisionCosts costs;

    static DecisionConfig from_prior(double xi, double threshold = 0.5);
    static DecisionConfig from_lambda(double lambda, double threshold = 0.5);
};

/// Positive-eigenvalue projector Delta = u u^T of rho1 - lambda*rho0.
///
/// u_perp/beta describe the negative eigenpair when it exists. In the
/// collinear case with lambda < 1 there is no negative part (beta = 0,
/// u_perp empty); with lambda >= 1 the projector is degenerate (Delta = 0)
/// and u is the zero vector.
struct DetectionProjector {
    std::vector<double> u;
    double eta = 0.0;
    double beta = 0.0;
    std::vector<double> u_perp;
    bool degenerate = false;

    std::size_t dimension() const noexcept;
    SquareMatrix matrix() const;  // Delta, dense
};

inline constexpr double kCollinearTolerance = 1e-12;

ClassStatVector estimate_stat_vector(const std::vector<FeatureVector>& samples);
ClassStatVector estimate_stat_vector(const FeatureMatrix& samples, std::span<const std::size_t> rows);

DensityOperator density_from_stat(const ClassStatVector& v);

// xi / (1 - xi); throws PriorOutOfRange unless 0 <= xi < 1.
double lambda_from_prior(double xi);

// Analytic spectral decomposition of rho1 - lambda*rho0 restricted to
// span{v0, v1}.
DetectionProjector compute_projector(const DensityOperator& rho1, const DensityOperator& rho0,
                                     double lambda);

// Unit mode throws ZeroTestVector for an all-zero w; Raw mode returns 0.
double score(const DetectionProjector& projector, std::span<const double> w,
             ScoreMode mode = ScoreMode::Unit);

// 1 if score >= threshold, else 0. All-zero vectors and degenerate
// projectors give 0.
int classify(const DetectionProjector& projector, std::span<const double> w, double threshold,
             ScoreMode mode = ScoreMode::Unit);

bool is_zero_vector(std::span<const double> w) noexcept;

// --- trained one-vs-all model ---------------------------------------------

struct BciqtModel {
    int category = 0;
    double lambda = 1.0;
    double threshold = 0.5;
    DetectionProjector projector;
    std::vector<std::size_t> feature_mask;
    bool binarize = true;
    ScoreMode score_mode = ScoreMode::Raw;

    // Masks and (optionally) binarizes a full-dimension sample.
    FeatureVector prepare(std::span<const double> raw_features) const;
    double score(std::span<const double> raw_features) const;
    int classify(std::span<const double> raw_features) const;
};

struct BciqtTrainingOptions {
    DecisionConfig decision;
    bool binarize = true;
    ScoreMode score_mode = ScoreMode::Raw;
};

// Trains on a dataset already restricted to `feature_mask` (and binarized if
// requested). Rows whose label equals `category` are positives. Emits a
// warning when the class statistics are collinear.
BciqtModel train_bciqt(const Dataset& masked, int category, std::vector<std::size_t> feature_mask,
                       const BciqtTrainingOptions& options);

nlohmann::ordered_json to_json(const BciqtModel& model);
BciqtModel bciqt_model_from_json(const nlohmann::json& j);

}  // namespace bciqt
