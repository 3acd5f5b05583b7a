#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace bciqt {

using FeatureVector = std::vector<double>;

struct RawSample {
    FeatureVector features;
    int label = 0;
};

// Dense row-major matrix of feature vectors; every row has the same length.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t cols);
    FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    std::span<const double> row(std::size_t i) const noexcept {
        return {values_.data() + i * cols_, cols_};
    }
    std::span<double> row(std::size_t i) noexcept { return {values_.data() + i * cols_, cols_}; }

    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

// Immutable labeled sample collection. Construction validates that it is
// non-empty, that all features are >= 0 and that row/label counts agree.
class Dataset {
public:
    Dataset(FeatureMatrix features, std::vector<int> labels);
    explicit Dataset(const std::vector<RawSample>& samples);

    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t dimension() const noexcept { return features_.cols(); }

    std::span<const double> features(std::size_t i) const noexcept { return features_.row(i); }
    int label(std::size_t i) const noexcept { return labels_[i]; }
    RawSample sample(std::size_t i) const;

    const FeatureMatrix& feature_matrix() const noexcept { return features_; }
    const std::vector<int>& labels() const noexcept { return labels_; }
    const std::set<int>& categories() const noexcept { return categories_; }

private:
    FeatureMatrix features_;
    std::vector<int> labels_;
    std::set<int> categories_;
};

// Rows of `dataset` in the given order.
Dataset select_rows(const Dataset& dataset, std::span<const std::size_t> rows);

// --- IDX (MNIST) ----------------------------------------------------------
//
//   images: magic 0x00000803 | count | rows | cols | count*rows*cols u8
//   labels: magic 0x00000801 | count | count u8
//
// All header words are big-endian u32. Bytes past the payload are rejected.

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxImages {
    std::size_t rows = 0;
    std::size_t cols = 0;
    FeatureMatrix pixels;  // one row of rows*cols values per image
};

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> serialize_idx_images(const FeatureMatrix& pixels, std::size_t rows,
                                               std::size_t cols);
std::vector<std::uint8_t> serialize_idx_labels(std::span<const int> labels);

// Reads a whole file, transparently inflating it when it starts with the
// gzip magic 0x1f 0x8b.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
bool is_gzip(std::span<const std::uint8_t> bytes) noexcept;
std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes);

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

// --- CSV ------------------------------------------------------------------

// Label column selected by header name or zero-based index.
using LabelColumn = std::variant<std::size_t, std::string>;

Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label_column);
Dataset parse_csv(std::string_view text, const LabelColumn& label_column);

// --- preprocessing --------------------------------------------------------

FeatureVector binarize(std::span<const double> features);
RawSample binarize(const RawSample& sample);
Dataset binarize(const Dataset& dataset);

}  // namespace bciqt
