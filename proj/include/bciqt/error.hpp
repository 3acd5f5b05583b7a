#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bciqt {

enum class ErrorCode {
    // dataset
    WrongMagic,
    TruncatedStream,
    TrailingBytes,
    ZeroDimension,
    RaggedRows,
    NonNumericFeature,
    NegativeFeature,
    Io,
    // feature_selection
    FeatureIndexOutOfRange,
    KOutOfRange,
    // shared
    DimensionMismatch,
    // quantum_core
    EmptySampleSet,
    ZeroStatVector,
    PriorOutOfRange,
    InvalidLambda,
    ZeroTestVector,
    NotSymmetric,
    NoConvergence,
    // baselines
    EmptyClass,
    // evaluation
    UnknownCategory,
    TooFewSamples,
    EmptyEvaluation,
    // cli
    SchemaMismatch,
    InvalidConfig,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can dispatch on the kind rather than the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

    ErrorCode code() const noexcept { return code_; }
    // The message without the code prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace bciqt
