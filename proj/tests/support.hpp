#pragma once

// Shared generators for the property suites. Everything is seeded so a
// failing case can be replayed from the printed seed.

#include "bciqt/dataset.hpp"
#include "bciqt/diagnostics.hpp"
#include "bciqt/error.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace bciqt::test {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
        return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
    }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    bool chance(double p) { return uniform(0.0, 1.0) < p; }

    // Non-negative unit vector with at least one non-zero entry; some entries
    // are zeroed so supports vary.
    std::vector<double> nonneg_unit(std::size_t k) {
        std::vector<double> v(k);
        double n2 = 0.0;
        while (n2 == 0.0) {
            n2 = 0.0;
            for (auto& x : v) {
                x = chance(0.25) ? 0.0 : uniform(0.0, 1.0);
                n2 += x * x;
            }
        }
        const double n = std::sqrt(n2);
        for (auto& x : v) x /= n;
        return v;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

// n samples of dimension d; labels drawn from 0..categories-1 (every label
// appears at least once when n >= categories). Values are bytes; each label
// prefers a different band of features so selection has signal.
inline Dataset random_dataset(Rng& rng, std::size_t n, std::size_t d, int categories, double density = 0.4) {
    FeatureMatrix m(n, d);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = i < static_cast<std::size_t>(categories) ? static_cast<int>(i) : rng.integer(0, categories - 1);
        auto row = m.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const bool band = static_cast<int>(j % static_cast<std::size_t>(categories)) == labels[i];
            const double p = band ? std::min(0.95, density * 2.0) : density / 2.0;
            row[j] = rng.chance(p) ? static_cast<double>(rng.integer(1, 255)) : 0.0;
        }
    }
    return Dataset(std::move(m), std::move(labels));
}

// The ErrorCode thrown by f, or nullopt when f returns normally.
template <class F>
std::optional<ErrorCode> error_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

// Collects warnings for the lifetime of the object.
class WarningCapture {
public:
    WarningCapture()
        : previous_(set_warning_sink([this](std::string_view m) { messages.emplace_back(m); })) {}
    ~WarningCapture() { set_warning_sink(previous_); }
    WarningCapture(const WarningCapture&) = delete;
    WarningCapture& operator=(const WarningCapture&) = delete;

    std::vector<std::string> messages;

private:
    WarningSink previous_;
};

}  // namespace bciqt::test
