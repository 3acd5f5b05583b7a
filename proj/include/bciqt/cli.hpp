#pragma once

#include "bciqt/dataset.hpp"
#include "bciqt/evaluation.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace bciqt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kDataDirEnv = "BCIQT_DATA_DIR";

enum class OutputFormat { Table, Csv, Json };

// Settings shared by every subcommand. Defaults match the reference
// configuration: top-100 chi-square features, lambda 1, threshold 0.5,
// binarized presence vectors, categories 0-8, five folds.
struct RunConfig {
    std::optional<std::filesystem::path> data_dir;
    std::optional<std::filesystem::path> train_images;
    std::optional<std::filesystem::path> train_labels;
    std::optional<std::filesystem::path> test_images;
    std::optional<std::filesystem::path> test_labels;
    std::optional<std::filesystem::path> train_csv;
    std::optional<std::filesystem::path> test_csv;
    LabelColumn label_column = std::string("label");

    ExperimentConfig experiment;
    OutputFormat format = OutputFormat::Table;
    std::optional<std::filesystem::path> output;

    std::optional<std::filesystem::path> model_dir;  // predict
    std::optional<std::filesystem::path> input;      // predict
};

// Flat `key = value` lines; blank lines and lines starting with '#' are
// skipped. Keys use underscores (top_k, data_dir, ...).
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_value_config(std::string_view text);

// Layers flags > config file > data-dir environment variable > defaults and
// validates the result. Throws Error(InvalidConfig) on bad or conflicting
// values (both xi and lambda, unknown keys, malformed numbers).
RunConfig resolve_run_config(const KeyValues& flags, const KeyValues& file,
                             const std::optional<std::string>& env_data_dir);

Dataset load_training_set(const RunConfig& config);
Dataset load_test_set(const RunConfig& config);

int cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_train(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_predict(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_select_features(const RunConfig& config, std::ostream& out, std::ostream& err);

// Full command line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bciqt::cli
