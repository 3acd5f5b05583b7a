#include "bciqt/cli.hpp"

#include "bciqt/baselines.hpp"
#include "bciqt/diagnostics.hpp"
#include "bciqt/error.hpp"
#include "bciqt/feature_selection.hpp"
#include "bciqt/json_io.hpp"
#include "bciqt/quantum_core.hpp"

#include "CLI11.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace bciqt::cli {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{
        "data_dir",  "train_images", "train_labels", "test_images",        "test_labels",
        "train_csv", "test_csv",     "label_column", "top_k",              "lambda",
        "xi",        "threshold",    "binarize",     "score_mode",         "aggregation",
        "per_fold_selection",        "categories",   "models",             "folds",
        "seed",      "format",       "output",       "jobs",               "model_dir",
        "input",
    };
    return keys;
}

std::string trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return std::string(s.substr(b, s.find_last_not_of(ws) - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
    throw Error(ErrorCode::InvalidConfig, key + " = '" + value + "': expected " + expected);
}

template <class Int>
Int parse_integer(const std::string& key, const std::string& value) {
    Int out{};
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) bad_value(key, value, "an integer");
    return out;
}

double parse_real(const std::string& key, const std::string& value) {
    double out = 0.0;
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end || !std::isfinite(out)) bad_value(key, value, "a real number");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "on" || value == "true" || value == "1" || value == "yes") return true;
    if (value == "off" || value == "false" || value == "0" || value == "no") return false;
    bad_value(key, value, "on/off");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

// "0,1,2" or "0-8" or a mix of both.
std::vector<int> parse_categories(const std::string& key, const std::string& value) {
    std::vector<int> out;
    for (const auto& item : split_list(value)) {
        const auto dash = item.find('-', 1);
        if (dash == std::string::npos) {
            out.push_back(parse_integer<int>(key, item));
            continue;
        }
        const int lo = parse_integer<int>(key, item.substr(0, dash));
        const int hi = parse_integer<int>(key, item.substr(dash + 1));
        if (hi < lo) bad_value(key, value, "ascending ranges");
        for (int c = lo; c <= hi; ++c) out.push_back(c);
    }
    if (out.empty()) bad_value(key, value, "at least one category");
    return out;
}

OutputFormat parse_format(const std::string& key, const std::string& value) {
    if (value == "table") return OutputFormat::Table;
    if (value == "csv") return OutputFormat::Csv;
    if (value == "json") return OutputFormat::Json;
    bad_value(key, value, "table, csv or json");
}

}  // namespace

KeyValues parse_key_value_config(std::string_view text) {
    KeyValues kv;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        const auto line = trim(text.substr(start, nl - start));
        start = nl + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::InvalidConfig, "config line " + std::to_string(line_no) + " is not key=value");
        }
        auto key = trim(std::string_view(line).substr(0, eq));
        std::replace(key.begin(), key.end(), '-', '_');
        kv[key] = trim(std::string_view(line).substr(eq + 1));
    }
    return kv;
}

RunConfig resolve_run_config(const KeyValues& flags, const KeyValues& file,
                             const std::optional<std::string>& env_data_dir) {
    for (const auto* source : {&flags, &file}) {
        for (const auto& [key, value] : *source) {
            if (std::find(known_keys().begin(), known_keys().end(), key) == known_keys().end()) {
                throw Error(ErrorCode::InvalidConfig, "unknown setting '" + key + "'");
            }
        }
    }
    const auto lookup = [&](const std::string& key) -> std::optional<std::string> {
        if (auto it = flags.find(key); it != flags.end()) return it->second;
        if (auto it = file.find(key); it != file.end()) return it->second;
        return std::nullopt;
    };

    RunConfig c;
    auto& e = c.experiment;
    if (auto v = lookup("data_dir")) {
        c.data_dir = *v;
    } else if (env_data_dir && !env_data_dir->empty()) {
        c.data_dir = *env_data_dir;
    }
    for (const auto& [key, target] : std::initializer_list<std::pair<const char*, std::optional<fs::path>*>>{
             {"train_images", &c.train_images}, {"train_labels", &c.train_labels},
             {"test_images", &c.test_images},   {"test_labels", &c.test_labels},
             {"train_csv", &c.train_csv},       {"test_csv", &c.test_csv},
             {"output", &c.output},             {"model_dir", &c.model_dir},
             {"input", &c.input}}) {
        if (auto v = lookup(key)) *target = *v;
    }
    if (auto v = lookup("label_column")) {
        const bool numeric = !v->empty() && std::all_of(v->begin(), v->end(), ::isdigit);
        c.label_column = numeric ? LabelColumn(parse_integer<std::size_t>("label_column", *v)) : LabelColumn(*v);
    }
    if (auto v = lookup("top_k")) e.top_k = parse_integer<std::size_t>("top_k", *v);
    if (e.top_k < 1) bad_value("top_k", std::to_string(e.top_k), "at least 1");

    const auto lambda = lookup("lambda");
    const auto xi = lookup("xi");
    if (lambda && xi) throw Error(ErrorCode::InvalidConfig, "set either xi or lambda, not both");
    double threshold = 0.5;
    if (auto v = lookup("threshold")) threshold = parse_real("threshold", *v);
    if (!(threshold >= 0.0 && threshold <= 1.0)) bad_value("threshold", std::to_string(threshold), "a value in [0, 1]");
    if (lambda) {
        const double l = parse_real("lambda", *lambda);
        if (!(l > 0.0)) bad_value("lambda", *lambda, "a positive number");
        e.decision = DecisionConfig::from_lambda(l, threshold);
    } else if (xi) {
        const double x = parse_real("xi", *xi);
        if (!(x > 0.0 && x < 1.0)) bad_value("xi", *xi, "a prior in (0, 1)");
        e.decision = DecisionConfig::from_prior(x, threshold);
    } else {
        e.decision = DecisionConfig::from_prior(0.5, threshold);
    }

    if (auto v = lookup("binarize")) e.binarize = parse_bool("binarize", *v);
    if (auto v = lookup("score_mode")) e.score_mode = score_mode_from_string(*v);
    if (auto v = lookup("aggregation")) e.aggregation = aggregation_from_string(*v);
    if (auto v = lookup("per_fold_selection")) e.per_fold_selection = parse_bool("per_fold_selection", *v);
    if (auto v = lookup("categories")) {
        e.categories = parse_categories("categories", *v);
        if (std::set<int>(e.categories.begin(), e.categories.end()).size() != e.categories.size()) {
            bad_value("categories", *v, "distinct categories");
        }
    }
    if (auto v = lookup("models")) {
        e.models.clear();
        for (const auto& item : split_list(*v)) {
            const auto m = model_kind_from_string(item);
            if (std::find(e.models.begin(), e.models.end(), m) == e.models.end()) e.models.push_back(m);
        }
        if (e.models.empty()) bad_value("models", *v, "at least one model");
    }
    if (auto v = lookup("folds")) e.folds = parse_integer<std::size_t>("folds", *v);
    if (e.folds < 2) bad_value("folds", std::to_string(e.folds), "at least 2");
    if (auto v = lookup("seed")) e.seed = parse_integer<std::uint64_t>("seed", *v);
    if (auto v = lookup("jobs")) e.jobs = parse_integer<unsigned>("jobs", *v);
    if (auto v = lookup("format")) c.format = parse_format("format", *v);
    return c;
}

// --- data loading -------------------------------------------------------------

namespace {

fs::path resolve_idx(const RunConfig& c, const std::optional<fs::path>& explicit_path, const std::string& stem,
                     const char* key) {
    if (explicit_path) return *explicit_path;
    if (!c.data_dir) {
        throw Error(ErrorCode::InvalidConfig, std::string("no ") + key + " given and no data directory (--data-dir or " +
                                                  kDataDirEnv + ")");
    }
    for (const auto* suffix : {"", ".gz"}) {
        auto candidate = *c.data_dir / (stem + suffix);
        if (fs::exists(candidate)) return candidate;
    }
    return *c.data_dir / stem;  // reported as missing by the loader
}

Dataset load_split(const RunConfig& c, bool training) {
    const auto& csv = training ? c.train_csv : c.test_csv;
    if (csv) return load_csv(*csv, c.label_column);
    const auto images = resolve_idx(c, training ? c.train_images : c.test_images,
                                    training ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte",
                                    training ? "train_images" : "test_images");
    const auto labels = resolve_idx(c, training ? c.train_labels : c.test_labels,
                                    training ? "train-labels-idx1-ubyte" : "t10k-labels-idx1-ubyte",
                                    training ? "train_labels" : "test_labels");
    return load_idx(images, labels);
}

std::string model_file_name(ModelKind kind, int category) {
    return fmt::format("{}_{}.json", to_string(kind), category);
}

struct LoadedModel {
    ModelKind kind;
    int category;
    std::optional<BciqtModel> bciqt;
    std::optional<NbClassifier> nb;

    double score(std::span<const double> x) const { return bciqt ? bciqt->score(x) : nb->score(x); }
    int classify(std::span<const double> x) const { return bciqt ? bciqt->classify(x) : nb->classify(x); }
    const std::vector<std::size_t>& mask() const { return bciqt ? bciqt->feature_mask : nb->feature_mask; }
};

std::vector<LoadedModel> load_models(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "model directory " + dir.string() + " not found");
    std::vector<LoadedModel> models;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (entry.path().extension() != ".json") continue;
        if (name.rfind("bciqt_", 0) == 0) {
            auto m = bciqt_model_from_json(read_json_file(entry.path()));
            models.push_back(LoadedModel{ModelKind::Bciqt, m.category, std::move(m), std::nullopt});
        } else if (name.rfind("nb_", 0) == 0) {
            auto m = nb_classifier_from_json(read_json_file(entry.path()));
            models.push_back(LoadedModel{ModelKind::Nb, m.category, std::nullopt, std::move(m)});
        }
    }
    if (models.empty()) throw Error(ErrorCode::SchemaMismatch, "no bciqt_*.json or nb_*.json models in " + dir.string());
    std::sort(models.begin(), models.end(), [](const LoadedModel& l, const LoadedModel& r) {
        return std::tie(l.category, l.kind) < std::tie(r.category, r.kind);
    });
    return models;
}

FeatureMatrix load_prediction_input(const RunConfig& c) {
    if (!c.input) throw Error(ErrorCode::InvalidConfig, "predict needs --input");
    const auto bytes = read_file_bytes(*c.input);
    if (bytes.size() >= 4 && bytes[0] == 0 && bytes[1] == 0 && bytes[2] == 0x08 && bytes[3] == 0x03) {
        return parse_idx_images(bytes).pixels;
    }
    return parse_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), c.label_column)
        .feature_matrix();
}

}  // namespace

Dataset load_training_set(const RunConfig& config) { return load_split(config, true); }
Dataset load_test_set(const RunConfig& config) { return load_split(config, false); }

// --- subcommands ----------------------------------------------------------------

int cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream& /*err*/) {
    const auto train = load_training_set(config);
    const auto test = load_test_set(config);
    const auto report = run_experiment(train, test, config.experiment);
    const auto table = render_recall_table(report);

    std::string content;
    switch (config.format) {
        case OutputFormat::Table: content = table; break;
        case OutputFormat::Csv: content = report_to_csv(report); break;
        case OutputFormat::Json: content = dump_json(report_to_json(report)); break;
    }
    if (config.output) {
        write_file_atomic(*config.output, content);
        out << table;
    } else {
        out << content;
    }
    return kExitOk;
}

int cmd_train(const RunConfig& config, std::ostream& out, std::ostream& err) {
    if (!config.output) throw Error(ErrorCode::InvalidConfig, "train needs --output <directory>");
    const auto& e = config.experiment;
    std::vector<ModelKind> kinds;
    for (auto m : e.models) {
        if (m == ModelKind::Knn) {
            err << "note: knn keeps no model file (it is the training set); skipped\n";
        } else {
            kinds.push_back(m);
        }
    }
    if (kinds.empty()) throw Error(ErrorCode::InvalidConfig, "train supports the bciqt and nb models");

    const auto train = load_training_set(config);
    for (int c : e.categories) {
        if (!train.categories().contains(c)) {
            throw Error(ErrorCode::UnknownCategory, "category " + std::to_string(c) + " has no training samples");
        }
    }
    if (e.top_k > train.dimension()) {
        throw Error(ErrorCode::KOutOfRange, "top_k exceeds the feature dimension " + std::to_string(train.dimension()));
    }

    std::error_code ec;
    fs::create_directories(*config.output, ec);
    if (ec || !fs::is_directory(*config.output)) {
        throw Error(ErrorCode::Io, "cannot create output directory " + config.output->string());
    }

    // name -> content, written only after everything trained
    std::vector<std::pair<std::string, std::string>> files;
    std::map<int, FeatureMask> masks;
    if (e.aggregation == Aggregation::Max) {
        const auto mask = select_top_k(train, e.top_k);
        for (int c : e.categories) masks.emplace(c, mask);
        files.emplace_back("mask.json", dump_json(to_json(mask)));
    } else {
        for (int c : e.categories) {
            masks.emplace(c, select_top_k(train, e.top_k, c));
            files.emplace_back(fmt::format("mask_{}.json", c), dump_json(to_json(masks.at(c))));
        }
    }

    std::map<std::vector<std::size_t>, Dataset> masked;
    for (int c : e.categories) {
        const auto& idx = masks.at(c).indices;
        if (!masked.contains(idx)) masked.emplace(idx, apply_mask(train, idx, e.binarize));
        const auto& data = masked.at(idx);
        for (auto kind : kinds) {
            if (kind == ModelKind::Bciqt) {
                BciqtTrainingOptions options;
                options.decision = e.decision;
                options.binarize = e.binarize;
                options.score_mode = e.score_mode;
                const auto model = train_bciqt(data, c, idx, options);
                files.emplace_back(model_file_name(kind, c), dump_json(to_json(model)));
            } else {
                const auto split = one_vs_all_split(data, c);
                NbClassifier nb{c, nb_train(data.feature_matrix(), split.positives, split.negatives), idx};
                files.emplace_back(model_file_name(kind, c), dump_json(to_json(nb)));
            }
        }
    }

    std::vector<fs::path> written;
    try {
        for (const auto& [name, content] : files) {
            const auto path = *config.output / name;
            write_file_atomic(path, content);
            written.push_back(path);
        }
    } catch (...) {
        for (const auto& p : written) fs::remove(p, ec);
        throw;
    }
    out << "wrote " << files.size() << " files to " << config.output->string() << '\n';
    return kExitOk;
}

int cmd_predict(const RunConfig& config, std::ostream& out, std::ostream& /*err*/) {
    if (!config.model_dir) throw Error(ErrorCode::InvalidConfig, "predict needs --model-dir");
    const auto models = load_models(*config.model_dir);
    const auto input = load_prediction_input(config);

    std::string text = "index";
    for (const auto& m : models) {
        text += fmt::format(",{0}_{1}_score,{0}_{1}_decision", to_string(m.kind), m.category);
    }
    text += '\n';
    for (std::size_t i = 0; i < input.rows(); ++i) {
        const auto x = input.row(i);
        text += std::to_string(i);
        bool warned = false;
        for (const auto& m : models) {
            const auto masked = apply_mask(x, std::span<const std::size_t>(m.mask()));
            if (!warned && m.kind == ModelKind::Bciqt && is_zero_vector(masked)) {
                warn("sample " + std::to_string(i) + ": no selected feature present; BCIQT decision is 0");
                warned = true;
            }
            text += fmt::format(",{:.6f},{}", m.score(x), m.classify(x));
        }
        text += '\n';
    }
    if (config.output) {
        write_file_atomic(*config.output, text);
    } else {
        out << text;
    }
    return kExitOk;
}

int cmd_select_features(const RunConfig& config, std::ostream& out, std::ostream& /*err*/) {
    const auto train = load_training_set(config);
    const auto& e = config.experiment;
    nlohmann::ordered_json j;
    if (e.aggregation == Aggregation::Max) {
        j = to_json(select_top_k(train, e.top_k));
    } else {
        j = nlohmann::ordered_json::object();
        for (int c : e.categories) j[std::to_string(c)] = to_json(select_top_k(train, e.top_k, c));
    }
    const auto text = dump_json(j);
    if (config.output) {
        write_file_atomic(*config.output, text);
    } else {
        out << text;
    }
    return kExitOk;
}

// --- entry point -----------------------------------------------------------------

namespace {

struct OptionSpec {
    const char* flag;
    const char* key;
    const char* help;
};

constexpr OptionSpec kOptions[] = {
    {"--data-dir", "data_dir", "directory with the MNIST IDX files (env BCIQT_DATA_DIR)"},
    {"--train-images", "train_images", "IDX training images"},
    {"--train-labels", "train_labels", "IDX training labels"},
    {"--test-images", "test_images", "IDX test images"},
    {"--test-labels", "test_labels", "IDX test labels"},
    {"--train-csv", "train_csv", "CSV training set (instead of IDX)"},
    {"--test-csv", "test_csv", "CSV test set (instead of IDX)"},
    {"--label-column", "label_column", "CSV label column, by name or index (default: label)"},
    {"--top-k", "top_k", "number of chi-square features (default 100)"},
    {"--lambda", "lambda", "prior odds lambda (default 1)"},
    {"--xi", "xi", "negative-class prior; lambda = xi/(1-xi)"},
    {"--threshold", "threshold", "acceptance threshold (default 0.5)"},
    {"--binarize", "binarize", "presence-binarize features: on|off (default on)"},
    {"--score-mode", "score_mode", "raw|unit: score <w|D|w> as given or on the unit vector (default raw)"},
    {"--aggregation", "aggregation", "max|per-category feature selection (default max)"},
    {"--per-fold-selection", "per_fold_selection", "re-select features inside CV folds: on|off"},
    {"--categories", "categories", "categories, e.g. 0-8 or 0,3,5 (default 0-8)"},
    {"--models", "models", "comma list of knn,nb,bciqt (default all)"},
    {"--folds", "folds", "cross-validation folds (default 5)"},
    {"--seed", "seed", "fold shuffling seed (default 0)"},
    {"--format", "format", "table|csv|json (default table)"},
    {"--output,-o", "output", "output file (evaluate, predict, select-features) or directory (train)"},
    {"--jobs,-j", "jobs", "worker threads, 0 = all cores (default 1)"},
    {"--model-dir", "model_dir", "directory written by train (predict)"},
    {"--input", "input", "IDX images or CSV to score (predict)"},
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quantum-detection binary classifier: training, prediction and benchmark reproduction"};
    app.require_subcommand(1);
    std::string config_file;
    app.add_option("--config", config_file, "flat key=value settings file");

    std::map<std::string, std::string> storage;
    std::map<std::string, CLI::Option*> registered;
    const std::vector<std::pair<const char*, const char*>> commands{
        {"evaluate", "run the one-vs-all benchmark and print the recall table"},
        {"train", "train per-category models and write them as JSON"},
        {"predict", "score samples with trained models"},
        {"select-features", "rank features by chi-square and write the mask"},
    };
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_file, "flat key=value settings file");
        for (const auto& o : kOptions) {
            auto* opt = sub->add_option(o.flag, storage[std::string(name) + "/" + o.key], o.help);
            registered[std::string(name) + "/" + o.key] = opt;
        }
        subs[name] = sub;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    std::string command;
    for (const auto& [name, sub] : subs) {
        if (sub->parsed()) command = name;
    }

    RunConfig config;
    try {
        KeyValues flags;
        for (const auto& o : kOptions) {
            const auto id = command + "/" + o.key;
            if (registered.at(id)->count() > 0) flags[o.key] = storage.at(id);
        }
        KeyValues file;
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read config file " + config_file);
            std::stringstream buffer;
            buffer << in.rdbuf();
            file = parse_key_value_config(buffer.str());
        }
        std::optional<std::string> env;
        if (const char* v = std::getenv(kDataDirEnv)) env = v;
        config = resolve_run_config(flags, file, env);
    } catch (const Error& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }

    // library warnings go to this invocation's diagnostic stream
    struct SinkGuard {
        WarningSink previous;
        ~SinkGuard() { set_warning_sink(std::move(previous)); }
    } guard{set_warning_sink([&err](std::string_view m) { err << "warning: " << m << '\n'; })};

    try {
        if (command == "evaluate") return cmd_evaluate(config, out, err);
        if (command == "train") return cmd_train(config, out, err);
        if (command == "predict") return cmd_predict(config, out, err);
        return cmd_select_features(config, out, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.code() == ErrorCode::InvalidConfig ? kExitUsage : kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace bciqt::cli
