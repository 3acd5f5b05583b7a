#include "bciqt/dataset.hpp"

#include "bciqt/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace bciqt {

// --- FeatureMatrix / Dataset ---------------------------------------------

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols) {
        throw Error(ErrorCode::DimensionMismatch, "matrix storage does not match " +
                                                      std::to_string(rows) + "x" +
                                                      std::to_string(cols));
    }
}

Dataset::Dataset(FeatureMatrix features, std::vector<int> labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
    if (labels_.empty()) throw Error(ErrorCode::EmptySampleSet, "dataset has no samples");
    if (features_.cols() == 0) throw Error(ErrorCode::ZeroDimension, "dataset has no features");
    if (features_.rows() != labels_.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    std::to_string(features_.rows()) + " feature rows but " +
                        std::to_string(labels_.size()) + " labels");
    }
    for (double v : features_.values()) {
        if (!(v >= 0.0)) throw Error(ErrorCode::NegativeFeature, "feature values must be >= 0");
    }
    categories_.insert(labels_.begin(), labels_.end());
}

namespace {

FeatureMatrix stack_samples(const std::vector<RawSample>& samples) {
    if (samples.empty()) throw Error(ErrorCode::EmptySampleSet, "dataset has no samples");
    const std::size_t d = samples.front().features.size();
    std::vector<double> values;
    values.reserve(samples.size() * d);
    for (const auto& s : samples) {
        if (s.features.size() != d) {
            throw Error(ErrorCode::DimensionMismatch, "samples have differing dimensions");
        }
        values.insert(values.end(), s.features.begin(), s.features.end());
    }
    return FeatureMatrix(samples.size(), d, std::move(values));
}

std::vector<int> collect_labels(const std::vector<RawSample>& samples) {
    std::vector<int> labels;
    labels.reserve(samples.size());
    for (const auto& s : samples) labels.push_back(s.label);
    return labels;
}

}  // namespace

Dataset::Dataset(const std::vector<RawSample>& samples)
    : Dataset(stack_samples(samples), collect_labels(samples)) {}

RawSample Dataset::sample(std::size_t i) const {
    auto f = features(i);
    return RawSample{FeatureVector(f.begin(), f.end()), labels_[i]};
}

Dataset select_rows(const Dataset& dataset, std::span<const std::size_t> rows) {
    const std::size_t d = dataset.dimension();
    std::vector<double> values;
    values.reserve(rows.size() * d);
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (auto r : rows) {
        if (r >= dataset.size()) throw Error(ErrorCode::DimensionMismatch, "row index out of range");
        const auto f = dataset.features(r);
        values.insert(values.end(), f.begin(), f.end());
        labels.push_back(dataset.label(r));
    }
    return Dataset(FeatureMatrix(rows.size(), d, std::move(values)), std::move(labels));
}

// --- IDX ------------------------------------------------------------------

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t value) {
    out.push_back(static_cast<std::uint8_t>(value >> 24));
    out.push_back(static_cast<std::uint8_t>(value >> 16));
    out.push_back(static_cast<std::uint8_t>(value >> 8));
    out.push_back(static_cast<std::uint8_t>(value));
}

void check_magic(std::span<const std::uint8_t> bytes, std::uint32_t expected, const char* what) {
    if (bytes.size() < 4) throw Error(ErrorCode::TruncatedStream, "missing IDX magic");
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != expected) {
        std::ostringstream msg;
        msg << "expected " << what << " magic 0x" << std::hex << expected << ", found 0x" << magic;
        throw Error(ErrorCode::WrongMagic, msg.str());
    }
}

void check_payload(std::size_t available, std::uint64_t expected) {
    if (available < expected) {
        throw Error(ErrorCode::TruncatedStream, "payload has " + std::to_string(available) +
                                                    " bytes, header promises " +
                                                    std::to_string(expected));
    }
    if (available > expected) {
        throw Error(ErrorCode::TrailingBytes,
                    std::to_string(available - expected) + " bytes after payload");
    }
}

std::uint8_t to_byte(double v) {
    if (!(v >= 0.0 && v <= 255.0) || v != std::floor(v)) {
        throw Error(ErrorCode::DimensionMismatch, "IDX payload values must be integers in 0..255");
    }
    return static_cast<std::uint8_t>(v);
}

}  // namespace

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
    check_magic(bytes, kIdxImageMagic, "image");
    constexpr std::size_t header = 16;
    if (bytes.size() < header) throw Error(ErrorCode::TruncatedStream, "IDX image header cut short");
    const std::uint32_t count = read_be32(bytes, 4);
    const std::uint32_t rows = read_be32(bytes, 8);
    const std::uint32_t cols = read_be32(bytes, 12);
    if (count == 0 || rows == 0 || cols == 0) {
        throw Error(ErrorCode::ZeroDimension, "IDX image dimensions must be positive");
    }
    const std::uint64_t stride = std::uint64_t{rows} * cols;
    check_payload(bytes.size() - header, std::uint64_t{count} * stride);

    auto payload = bytes.subspan(header);
    std::vector<double> values(payload.begin(), payload.end());
    return IdxImages{rows, cols, FeatureMatrix(count, stride, std::move(values))};
}

std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes) {
    check_magic(bytes, kIdxLabelMagic, "label");
    constexpr std::size_t header = 8;
    if (bytes.size() < header) throw Error(ErrorCode::TruncatedStream, "IDX label header cut short");
    const std::uint32_t count = read_be32(bytes, 4);
    check_payload(bytes.size() - header, count);
    auto payload = bytes.subspan(header);
    return std::vector<int>(payload.begin(), payload.end());
}

std::vector<std::uint8_t> serialize_idx_images(const FeatureMatrix& pixels, std::size_t rows,
                                               std::size_t cols) {
    if (rows * cols != pixels.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "rows*cols must equal the vector length");
    }
    std::vector<std::uint8_t> out;
    out.reserve(16 + pixels.values().size());
    write_be32(out, kIdxImageMagic);
    write_be32(out, static_cast<std::uint32_t>(pixels.rows()));
    write_be32(out, static_cast<std::uint32_t>(rows));
    write_be32(out, static_cast<std::uint32_t>(cols));
    for (double v : pixels.values()) out.push_back(to_byte(v));
    return out;
}

std::vector<std::uint8_t> serialize_idx_labels(std::span<const int> labels) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + labels.size());
    write_be32(out, kIdxLabelMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    for (int l : labels) out.push_back(to_byte(l));
    return out;
}

bool is_gzip(std::span<const std::uint8_t> bytes) noexcept {
    return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes) {
    z_stream zs{};
    // 16 + MAX_WBITS: expect a gzip wrapper
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) {
        throw Error(ErrorCode::Io, "zlib initialisation failed");
    }
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());

    std::vector<std::uint8_t> out;
    std::uint8_t chunk[1 << 16];
    int rc = Z_OK;
    do {
        zs.next_out = chunk;
        zs.avail_out = sizeof(chunk);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw Error(ErrorCode::TruncatedStream, "corrupt or truncated gzip stream");
        }
        out.insert(out.end(), chunk, chunk + (sizeof(chunk) - zs.avail_out));
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw Error(ErrorCode::TruncatedStream, "gzip stream ends before its trailer");
        }
    } while (rc != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorCode::Io, "read failed for " + path.string());
    if (is_gzip(bytes)) return gunzip(bytes);
    return bytes;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
    auto parsed = parse_idx_images(read_file_bytes(images));
    auto label_values = parse_idx_labels(read_file_bytes(labels));
    if (label_values.size() != parsed.pixels.rows()) {
        throw Error(ErrorCode::DimensionMismatch,
                    images.string() + " holds " + std::to_string(parsed.pixels.rows()) +
                        " images but " + labels.string() + " holds " +
                        std::to_string(label_values.size()) + " labels");
    }
    return Dataset(std::move(parsed.pixels), std::move(label_values));
}

// --- CSV ------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

bool parse_number(std::string_view field, double& out) {
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

Dataset parse_csv(std::string_view text, const LabelColumn& label_column) {
    std::vector<std::vector<std::string_view>> rows;
    std::size_t line_start = 0;
    while (line_start <= text.size()) {
        auto nl = text.find('\n', line_start);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = trim(text.substr(line_start, nl - line_start));
        if (!line.empty()) rows.push_back(split_fields(line));
        line_start = nl + 1;
    }
    if (rows.empty()) throw Error(ErrorCode::EmptySampleSet, "CSV has no rows");

    const std::size_t width = rows.front().size();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != width) {
            throw Error(ErrorCode::RaggedRows, "row " + std::to_string(r + 1) + " has " +
                                                   std::to_string(rows[r].size()) +
                                                   " fields, expected " + std::to_string(width));
        }
    }
    if (width < 2) throw Error(ErrorCode::ZeroDimension, "CSV needs a label and at least one feature");

    bool has_header = false;
    double scratch = 0.0;
    for (auto field : rows.front()) {
        if (!parse_number(field, scratch)) has_header = true;
    }

    std::size_t label_index = 0;
    if (const auto* idx = std::get_if<std::size_t>(&label_column)) {
        label_index = *idx;
    } else {
        const auto& name = std::get<std::string>(label_column);
        if (!has_header) throw Error(ErrorCode::InvalidConfig, "label column '" + name + "' given by name but CSV has no header");
        auto it = std::find(rows.front().begin(), rows.front().end(), std::string_view(name));
        if (it == rows.front().end()) throw Error(ErrorCode::InvalidConfig, "no column named '" + name + "'");
        label_index = static_cast<std::size_t>(it - rows.front().begin());
    }
    if (label_index >= width) {
        throw Error(ErrorCode::InvalidConfig, "label column " + std::to_string(label_index) +
                                                  " out of range for " + std::to_string(width) +
                                                  " columns");
    }

    const std::size_t first = has_header ? 1 : 0;
    if (first == rows.size()) throw Error(ErrorCode::EmptySampleSet, "CSV has a header but no data");
    const std::size_t d = width - 1;
    std::vector<double> values;
    values.reserve((rows.size() - first) * d);
    std::vector<int> labels;
    for (std::size_t r = first; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            double v = 0.0;
            if (!parse_number(rows[r][c], v)) {
                throw Error(ErrorCode::NonNumericFeature, "row " + std::to_string(r + 1) +
                                                              ", column " + std::to_string(c + 1) +
                                                              ": '" + std::string(rows[r][c]) + "'");
            }
            if (c == label_index) {
                if (v != std::floor(v)) {
                    throw Error(ErrorCode::NonNumericFeature,
                                "row " + std::to_string(r + 1) + ": label is not an integer");
                }
                labels.push_back(static_cast<int>(v));
                continue;
            }
            if (v < 0.0) {
                throw Error(ErrorCode::NegativeFeature, "row " + std::to_string(r + 1) +
                                                            ", column " + std::to_string(c + 1));
            }
            values.push_back(v);
        }
    }
    const std::size_t n = labels.size();
    return Dataset(FeatureMatrix(n, d, std::move(values)), std::move(labels));
}

Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label_column) {
    auto bytes = read_file_bytes(path);
    return parse_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                     label_column);
}

// --- preprocessing --------------------------------------------------------

FeatureVector binarize(std::span<const double> features) {
    FeatureVector out(features.size());
    std::transform(features.begin(), features.end(), out.begin(),
                   [](double v) { return v > 0.0 ? 1.0 : 0.0; });
    return out;
}

RawSample binarize(const RawSample& sample) {
    return RawSample{binarize(std::span<const double>(sample.features)), sample.label};
}

Dataset binarize(const Dataset& dataset) {
    const auto& src = dataset.feature_matrix();
    std::vector<double> values(src.values().size());
    std::transform(src.values().begin(), src.values().end(), values.begin(),
                   [](double v) { return v > 0.0 ? 1.0 : 0.0; });
    return Dataset(FeatureMatrix(src.rows(), src.cols(), std::move(values)), dataset.labels());
}

}  // namespace bciqt
