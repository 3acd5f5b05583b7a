#include "doctest.h"
#include "support.hpp"

#include "bciqt/jacobi.hpp"
#include "bciqt/quantum_core.hpp"

#include <cmath>
#include <numeric>

using namespace bciqt;
using bciqt::test::error_of;
using bciqt::test::Rng;

namespace {

double dot(std::span<const double> x, std::span<const double> y) {
    return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
}

// distance between two unit vectors modulo sign
double sign_free_distance(std::span<const double> x, std::span<const double> y) {
    const double sgn = dot(x, y) < 0.0 ? -1.0 : 1.0;
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - sgn * y[i]) * (x[i] - sgn * y[i]);
    return std::sqrt(d2);
}

double max_abs(const SquareMatrix& m) {
    double out = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j) out = std::max(out, std::abs(m(i, j)));
    return out;
}

}  // namespace

TEST_SUITE("jacobi") {

TEST_CASE("diagonal input") {
    SquareMatrix m(3);
    m(0, 0) = 3;
    m(1, 1) = 1;
    m(2, 2) = -2;
    const auto e = oracle_eigendecompose(m);
    CHECK(e.values == std::vector<double>{3, 1, -2});
    CHECK(max_abs(e.vectors - SquareMatrix::identity(3)) == 0.0);
}

TEST_CASE("swap matrix") {
    SquareMatrix m(2);
    m(0, 1) = m(1, 0) = 1;
    const auto e = oracle_eigendecompose(m);
    CHECK(e.values[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e.values[1] == doctest::Approx(-1.0).epsilon(1e-14));
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(std::abs(e.vector(0)[0]) - r) < 1e-14);
}

TEST_CASE("asymmetric input is refused") {
    SquareMatrix m(2);
    m(0, 1) = 1;
    CHECK(error_of([&] { oracle_eigendecompose(m); }) == ErrorCode::NotSymmetric);
}

TEST_CASE("property: random symmetric matrices are reconstructed") {
    Rng rng(0x1AC0B1);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = rng.index(1, 12);
        SquareMatrix a(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = rng.uniform(-1, 1);
        const auto e = oracle_eigendecompose(a);
        CHECK(std::is_sorted(e.values.begin(), e.values.end(), std::greater<>()));
        SquareMatrix rebuilt(n);
        for (std::size_t j = 0; j < n; ++j) {
            const auto v = e.vector(j);
            rebuilt = rebuilt + e.values[j] * SquareMatrix::outer(v, v);
        }
        CHECK(max_abs(rebuilt - a) < 1e-12);
        CHECK(max_abs(e.vectors.transposed() * e.vectors - SquareMatrix::identity(n)) < 1e-12);
    }
}

}  // TEST_SUITE

TEST_SUITE("quantum_core") {

TEST_CASE("class statistic from presence counts") {
    SUBCASE("single support direction") {
        const auto v = estimate_stat_vector({{1, 0}, {2, 0}, {0, 0}});
        CHECK(v.values() == std::vector<double>{1.0, 0.0});
        CHECK(v.support_count() == 3);
    }
    SUBCASE("two supported features") {
        const auto v = estimate_stat_vector({{1, 0}, {1, 1}});
        // counts (2, 1), counted here independently
        const double n = std::sqrt(5.0);
        CHECK(v.values()[0] == doctest::Approx(2.0 / n).epsilon(1e-15));
        CHECK(v.values()[1] == doctest::Approx(1.0 / n).epsilon(1e-15));
    }
    SUBCASE("errors") {
        CHECK(error_of([] { estimate_stat_vector({{0, 0}}); }) == ErrorCode::ZeroStatVector);
        CHECK(error_of([] { estimate_stat_vector(std::vector<FeatureVector>{}); }) == ErrorCode::EmptySampleSet);
        CHECK(error_of([] { ClassStatVector({0.5, 0.5}, 1); }) == ErrorCode::ZeroStatVector);
        CHECK(error_of([] { ClassStatVector({1.0, 0.0}, 0); }) == ErrorCode::EmptySampleSet);
    }
}

TEST_CASE("density operators") {
    CHECK(max_abs(DensityOperator({1, 0}).matrix() - SquareMatrix::outer(std::vector<double>{1, 0},
                                                                         std::vector<double>{1, 0})) == 0.0);
    const double r = 1.0 / std::sqrt(2.0);
    const auto m = DensityOperator({r, r}).matrix();
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(m(i, j) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(error_of([] { DensityOperator({0, 0}); }) == ErrorCode::ZeroStatVector);
}

TEST_CASE("prior to lambda") {
    CHECK(lambda_from_prior(0.5) == 1.0);
    CHECK(lambda_from_prior(0.0) == 0.0);
    CHECK(lambda_from_prior(0.9) == doctest::Approx(9.0).epsilon(1e-14));
    CHECK(error_of([] { lambda_from_prior(1.0); }) == ErrorCode::PriorOutOfRange);
    CHECK(error_of([] { lambda_from_prior(-0.1); }) == ErrorCode::PriorOutOfRange);
}

TEST_CASE("orthogonal statistics give the positive prototype as projector") {
    const auto p = compute_projector(DensityOperator({1, 0, 0}), DensityOperator({0, 1, 0}), 1.0);
    CHECK_FALSE(p.degenerate);
    CHECK(p.eta == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p.beta == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(sign_free_distance(p.u, std::vector<double>{1, 0, 0}) < 1e-15);
}

TEST_CASE("the 2-d worked instance, checked against the dense oracle") {
    const std::vector<double> v1{1.0, 0.0};
    const std::vector<double> v0{0.6, 0.8};
    const auto p = compute_projector(DensityOperator(v1), DensityOperator(v0), 1.0);
    const auto d = DensityOperator(v1).matrix() - DensityOperator(v0).matrix();
    const auto e = oracle_eigendecompose(d);
    CHECK(std::abs(e.values[0] - 0.8) < 1e-12);
    CHECK(std::abs(e.values[1] + 0.8) < 1e-12);
    CHECK(std::abs(p.eta - e.values[0]) < 1e-12);
    CHECK(std::abs(p.beta - e.values[1]) < 1e-12);
    CHECK(sign_free_distance(p.u, e.vector(0)) < 1e-12);
    CHECK(p.u[0] > 0.0);  // sign convention
    CHECK(std::abs(p.u[0] - 3.0 / std::sqrt(10.0)) < 1e-12);

    // a^2/(a^2+(1-s)^2) with a = 0.6, s = 0.8
    const double a = 0.6, s = 0.8;
    const double closed = a * a / (a * a + (1 - s) * (1 - s));
    CHECK(std::abs(score(p, v1) - closed) < 1e-12);
    CHECK(std::abs(score(p, v1) - 0.9) < 1e-12);
    CHECK(std::abs(score(p, v0) - 0.1) < 1e-12);
    const double oracle_v0 = dot(e.vector(0), v0) * dot(e.vector(0), v0);
    CHECK(std::abs(score(p, v0) - oracle_v0) < 1e-12);
}

TEST_CASE("scores and decisions") {
    const auto p = compute_projector(DensityOperator({1, 0}), DensityOperator({0.6, 0.8}), 1.0);
    CHECK(score(p, p.u) == doctest::Approx(1.0).epsilon(1e-15));
    const std::vector<double> perp{-p.u[1], p.u[0]};
    CHECK(std::abs(score(p, perp)) < 1e-15);

    DetectionProjector half;
    half.u = {std::sqrt(0.5), std::sqrt(0.5)};
    const std::vector<double> e1{1.0, 0.0};
    // score(e1) rounds to 0.5 up to one ulp; the rule is >=
    CHECK(classify(half, e1, score(half, e1)) == 1);
    CHECK(classify(p, std::vector<double>{1.0, 0.0}, 0.9 + 1e-9) == 0);
    CHECK(classify(p, std::vector<double>{1.0, 0.0}, 0.9 - 1e-9) == 1);
    const double s04 = 0.4999;
    DetectionProjector q;
    q.u = {1.0, 0.0};
    CHECK(classify(q, std::vector<double>{std::sqrt(s04), std::sqrt(1 - s04)}, 0.5) == 0);
    CHECK(classify(q, std::vector<double>{std::sqrt(0.7), std::sqrt(0.3)}, 0.5) == 1);

    CHECK(error_of([&] { score(p, std::vector<double>{1, 0, 0}); }) == ErrorCode::DimensionMismatch);
    CHECK(error_of([&] { classify(p, std::vector<double>{1, 0, 0}, 0.5); }) == ErrorCode::DimensionMismatch);
    CHECK(error_of([&] { score(p, std::vector<double>{0, 0}); }) == ErrorCode::ZeroTestVector);
    CHECK(classify(p, std::vector<double>{0, 0}, 0.5) == 0);
    CHECK(classify(p, std::vector<double>{0, 0}, 0.0, ScoreMode::Raw) == 0);
}

TEST_CASE("raw scores use the vector as given") {
    const auto p = compute_projector(DensityOperator({1, 0}), DensityOperator({0.6, 0.8}), 1.0);
    const std::vector<double> w{2.0, 0.0};
    CHECK(score(p, w, ScoreMode::Raw) == doctest::Approx(4 * 0.9).epsilon(1e-14));
    CHECK(score(p, w, ScoreMode::Unit) == doctest::Approx(0.9).epsilon(1e-14));
}

TEST_CASE("collinear statistics") {
    const std::vector<double> v{0.6, 0.8};
    SUBCASE("lambda = 1 is degenerate and rejects everything") {
        const auto p = compute_projector(DensityOperator(v), DensityOperator(v), 1.0);
        CHECK(p.degenerate);
        CHECK(max_abs(p.matrix()) == 0.0);
        CHECK(classify(p, v, 0.5) == 0);
        CHECK(classify(p, v, 0.0) == 0);
        CHECK(score(p, v) == 0.0);
    }
    SUBCASE("lambda < 1 keeps the prototype") {
        const auto p = compute_projector(DensityOperator(v), DensityOperator(v), 0.5);
        CHECK_FALSE(p.degenerate);
        CHECK(p.eta == doctest::Approx(0.5));
        CHECK(score(p, v) == doctest::Approx(1.0));
    }
    SUBCASE("lambda > 1 is degenerate") {
        const auto p = compute_projector(DensityOperator(v), DensityOperator(v), 2.0);
        CHECK(p.degenerate);
        CHECK(p.beta == doctest::Approx(-1.0));
    }
}

TEST_CASE("projector argument errors") {
    CHECK(error_of([] { compute_projector(DensityOperator({1, 0}), DensityOperator({0, 1}), 0.0); }) ==
          ErrorCode::InvalidLambda);
    CHECK(error_of([] { compute_projector(DensityOperator({1, 0}), DensityOperator({0, 1}), -1.0); }) ==
          ErrorCode::InvalidLambda);
    CHECK(error_of([] { compute_projector(DensityOperator({1, 0}), DensityOperator({0, 1, 0}), 1.0); }) ==
          ErrorCode::DimensionMismatch);
}

TEST_CASE("training warns on collinear statistics and the model rejects every sample") {
    // positives and negatives share one presence pattern
    const Dataset ds(FeatureMatrix(4, 2, {1, 1, 1, 1, 1, 1, 1, 1}), {1, 1, 0, 0});
    test::WarningCapture warnings;
    const auto model = train_bciqt(ds, 1, {0, 1}, {});
    CHECK(model.projector.degenerate);
    REQUIRE(warnings.messages.size() == 1);
    CHECK(warnings.messages[0].find("collinear") != std::string::npos);
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK(model.classify(ds.features(i)) == 0);
}

TEST_CASE("training errors") {
    const Dataset ds(FeatureMatrix(2, 2, {1, 0, 0, 1}), {1, 0});
    CHECK(error_of([&] { train_bciqt(ds, 5, {0, 1}, {}); }) == ErrorCode::UnknownCategory);
    const Dataset only(FeatureMatrix(1, 2, {1, 0}), {1});
    CHECK(error_of([&] { train_bciqt(only, 1, {0, 1}, {}); }) == ErrorCode::EmptySampleSet);
    CHECK(error_of([&] { train_bciqt(ds, 1, {0}, {}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("model json keeps field order and round-trips") {
    const Dataset ds(FeatureMatrix(3, 2, {1, 0, 1, 1, 0, 1}), {1, 1, 0});
    const auto model = train_bciqt(ds, 1, {4, 7}, {});
    const auto j = to_json(model);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"category", "lambda", "threshold", "eta", "beta", "u", "degenerate",
                                           "feature_mask", "binarize", "score_mode"});
    const auto back = bciqt_model_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.projector.u == model.projector.u);
    CHECK(back.projector.eta == model.projector.eta);
    CHECK(back.feature_mask == model.feature_mask);
    CHECK(error_of([] { bciqt_model_from_json(nlohmann::json::parse(R"({"category":1})")); }) ==
          ErrorCode::SchemaMismatch);
}

TEST_CASE("property: analytic decomposition agrees with the oracle") {
    Rng rng(0xB0C1);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = rng.index(2, 16);
        const auto v1 = rng.nonneg_unit(k);
        const auto v0 = rng.nonneg_unit(k);
        const double lambda = rng.uniform(1e-3, 10.0);
        const auto p = compute_projector(DensityOperator(v1), DensityOperator(v0), lambda);
        const double a = std::clamp(dot(v0, v1), -1.0, 1.0);
        const double s2 = 1.0 - a * a;
        if (p.degenerate || s2 < 1e-12) continue;

        const auto d = DensityOperator(v1).matrix() - lambda * DensityOperator(v0).matrix();
        const auto e = oracle_eigendecompose(d);
        CAPTURE(trial);
        CHECK(std::abs(p.eta - e.values.front()) < 1e-10);
        CHECK(std::abs(p.beta - e.values.back()) < 1e-10);
        CHECK(std::abs(p.eta * p.beta + lambda * s2) < 1e-10);
        CHECK(p.eta > 0.0);
        CHECK(p.beta < 0.0);
        for (std::size_t j = 1; j + 1 < k; ++j) CHECK(std::abs(e.values[j]) < 1e-10);
        CHECK(sign_free_distance(p.u, e.vector(0)) < 1e-10);
        CHECK(sign_free_distance(p.u_perp, e.vector(k - 1)) < 1e-10);

        // spectral residuals
        const auto du = d.apply(p.u);
        const auto dp = d.apply(p.u_perp);
        double r1 = 0.0, r2 = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            r1 += (du[i] - p.eta * p.u[i]) * (du[i] - p.eta * p.u[i]);
            r2 += (dp[i] - p.beta * p.u_perp[i]) * (dp[i] - p.beta * p.u_perp[i]);
        }
        CHECK(std::sqrt(r1) <= 1e-10);
        CHECK(std::sqrt(r2) <= 1e-10);

        // sign convention: non-negative along v1
        CHECK(dot(p.u, v1) >= 0.0);

        // projector algebra
        const auto delta = p.matrix();
        CHECK(max_abs(delta * delta - delta) < 1e-12);
        CHECK(max_abs(delta.transposed() - delta) < 1e-12);
        CHECK(std::abs(delta.trace() - 1.0) < 1e-12);
    }
}

TEST_CASE("property: scores are bounded, scale-free and order the prototypes") {
    Rng rng(0x5C0);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t k = rng.index(2, 16);
        const auto v1 = rng.nonneg_unit(k);
        const auto v0 = rng.nonneg_unit(k);
        const auto p = compute_projector(DensityOperator(v1), DensityOperator(v0), 1.0);
        if (p.degenerate) continue;
        std::vector<double> w(k);
        for (auto& x : w) x = rng.uniform(0.0, 3.0);
        const double sc = score(p, w);
        CHECK(sc >= 0.0);
        CHECK(sc <= 1.0);
        const double c = rng.uniform(0.01, 100.0);
        auto scaled = w;
        for (auto& x : scaled) x *= c;
        const double threshold = rng.uniform(0.0, 1.0);
        // rescaling moves the score by rounding only; skip draws on the boundary
        if (std::abs(sc - threshold) > 1e-12) CHECK(classify(p, w, threshold) == classify(p, scaled, threshold));
        const double a = dot(v0, v1);
        if (a > 1e-6 && a < 1.0 - 1e-6) CHECK(score(p, v1) > score(p, v0));
    }
}

TEST_CASE("property: density operators have unit trace and are PSD") {
    Rng rng(0xD3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = rng.index(1, 12);
        std::vector<double> f(k);
        for (auto& x : f) x = rng.uniform(0.0, 5.0);
        f[rng.index(0, k - 1)] = 1.0;
        const auto m = DensityOperator(f).matrix();
        CHECK(std::abs(m.trace() - 1.0) < 1e-12);
        const auto e = oracle_eigendecompose(m);
        CHECK(e.values.back() > -1e-12);
    }
}

}  // TEST_SUITE
