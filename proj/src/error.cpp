#include "bciqt/error.hpp"
#include "bciqt/diagnostics.hpp"

#include <iostream>
#include <mutex>

namespace bciqt {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::WrongMagic: return "WrongMagic";
        case ErrorCode::TruncatedStream: return "TruncatedStream";
        case ErrorCode::TrailingBytes: return "TrailingBytes";
        case ErrorCode::ZeroDimension: return "ZeroDimension";
        case ErrorCode::RaggedRows: return "RaggedRows";
        case ErrorCode::NonNumericFeature: return "NonNumericFeature";
        case ErrorCode::NegativeFeature: return "NegativeFeature";
        case ErrorCode::Io: return "Io";
        case ErrorCode::FeatureIndexOutOfRange: return "FeatureIndexOutOfRange";
        case ErrorCode::KOutOfRange: return "KOutOfRange";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::EmptySampleSet: return "EmptySampleSet";
        case ErrorCode::ZeroStatVector: return "ZeroStatVector";
        case ErrorCode::PriorOutOfRange: return "PriorOutOfRange";
        case ErrorCode::InvalidLambda: return "InvalidLambda";
        case ErrorCode::ZeroTestVector: return "ZeroTestVector";
        case ErrorCode::NotSymmetric: return "NotSymmetric";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::EmptyClass: return "EmptyClass";
        case ErrorCode::UnknownCategory: return "UnknownCategory";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::EmptyEvaluation: return "EmptyEvaluation";
        case ErrorCode::SchemaMismatch: return "SchemaMismatch";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

namespace {

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

WarningSink& current_sink() {
    static WarningSink sink;
    return sink;
}

}  // namespace

void warn(std::string_view message) {
    std::lock_guard lock(sink_mutex());
    if (auto& sink = current_sink()) {
        sink(message);
    } else {
        std::cerr << "warning: " << message << '\n';
    }
}

WarningSink set_warning_sink(WarningSink sink) {
    std::lock_guard lock(sink_mutex());
    auto previous = std::move(current_sink());
    current_sink() = std::move(sink);
    return previous;
}

}  // namespace bciqt
