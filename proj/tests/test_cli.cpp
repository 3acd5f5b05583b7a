#include "doctest.h"
#include "support.hpp"

#include "bciqt/cli.hpp"
#include "bciqt/evaluation.hpp"
#include "bciqt/json_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bciqt;
using namespace bciqt::cli;
using bciqt::test::error_of;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "bciqt");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& b) {
    std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(b.data()),
                                             static_cast<std::streamsize>(b.size()));
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

// A 4x4-pixel synthetic MNIST lookalike with three categories.
struct Workspace {
    fs::path root;
    Dataset train;
    Dataset test;

    Workspace() : train(make(101, 150)), test(make(202, 60)) {
        root = fs::temp_directory_path() / ("bciqt_cli_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::remove_all(root);
        fs::create_directories(root / "data");
        save(train, "train");
        save(test, "t10k");
    }
    ~Workspace() { fs::remove_all(root); }

    fs::path data() const { return root / "data"; }

private:
    static Dataset make(std::uint64_t seed, std::size_t n) {
        test::Rng rng(seed);
        return test::random_dataset(rng, n, 16, 3);
    }
    void save(const Dataset& ds, const std::string& prefix) {
        write_bytes(data() / (prefix + "-images-idx3-ubyte"), serialize_idx_images(ds.feature_matrix(), 4, 4));
        write_bytes(data() / (prefix + "-labels-idx1-ubyte"), serialize_idx_labels(ds.labels()));
    }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("key=value config files") {
    const auto kv = parse_key_value_config("# comment\n\ntop_k = 50\nscore-mode=unit\n  seed=3  \n");
    CHECK(kv.at("top_k") == "50");
    CHECK(kv.at("score_mode") == "unit");
    CHECK(kv.at("seed") == "3");
    CHECK(error_of([] { parse_key_value_config("top_k 50\n"); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("defaults match the reference configuration") {
    const auto c = resolve_run_config({}, {}, std::nullopt);
    CHECK(c.experiment.top_k == 100);
    CHECK(c.experiment.decision.lambda == 1.0);
    CHECK(c.experiment.decision.xi == 0.5);
    CHECK(c.experiment.decision.threshold == 0.5);
    CHECK(c.experiment.binarize);
    CHECK(c.experiment.folds == 5);
    CHECK(c.experiment.categories == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8});
    CHECK_FALSE(c.data_dir.has_value());
}

TEST_CASE("precedence: flags over file over environment") {
    const auto c = resolve_run_config({{"top_k", "7"}}, {{"top_k", "9"}, {"seed", "4"}, {"data_dir", "/file"}},
                                      std::string("/env"));
    CHECK(c.experiment.top_k == 7);
    CHECK(c.experiment.seed == 4);
    CHECK(c.data_dir == fs::path("/file"));
    CHECK(resolve_run_config({}, {}, std::string("/env")).data_dir == fs::path("/env"));
    CHECK(resolve_run_config({{"data_dir", "/flag"}}, {{"data_dir", "/file"}}, std::string("/env")).data_dir ==
          fs::path("/flag"));
}

TEST_CASE("configuration errors") {
    CHECK(error_of([] { resolve_run_config({{"xi", "0.5"}, {"lambda", "1"}}, {}, {}); }) == ErrorCode::InvalidConfig);
    CHECK(error_of([] { resolve_run_config({{"xi", "0.5"}}, {{"lambda", "1"}}, {}); }) == ErrorCode::InvalidConfig);
    CHECK(error_of([] { resolve_run_config({{"top_k", "ten"}}, {}, {}); }) == ErrorCode::InvalidConfig);
    CHECK(error_of([] { resolve_run_config({{"threshold", "1.5"}}, {}, {}); }) == ErrorCode::InvalidConfig);
    CHECK(error_of([] { resolve_run_config({}, {{"colour", "red"}}, {}); }) == ErrorCode::InvalidConfig);
    CHECK(error_of([] { resolve_run_config({{"models", "svm"}}, {}, {}); }) == ErrorCode::InvalidConfig);
    CHECK(error_of([] { resolve_run_config({{"binarize", "maybe"}}, {}, {}); }) == ErrorCode::InvalidConfig);
    const auto c = resolve_run_config({{"xi", "0.9"}, {"categories", "0-2,5"}, {"models", "nb,BCIQT"}}, {}, {});
    CHECK(c.experiment.decision.lambda == doctest::Approx(9.0));
    CHECK(c.experiment.categories == std::vector<int>{0, 1, 2, 5});
    CHECK(c.experiment.models == std::vector<ModelKind>{ModelKind::Nb, ModelKind::Bciqt});
}

TEST_CASE("usage errors exit 2") {
    CHECK(run_cli({}).code == kExitUsage);
    CHECK(run_cli({"evaluate", "--no-such-flag"}).code == kExitUsage);
    const auto both = run_cli({"evaluate", "--xi", "0.5", "--lambda", "1"});
    CHECK(both.code == kExitUsage);
    CHECK(both.err.find("InvalidConfig") != std::string::npos);
    CHECK(run_cli({"evaluate", "--config", "/nonexistent/bciqt.conf"}).code == kExitUsage);
}

TEST_CASE("evaluate end to end") {
    Workspace ws;
    const std::vector<std::string> common{"--data-dir", ws.data().string(), "--top-k", "8", "--categories", "0-2",
                                          "--folds", "3"};
    SUBCASE("table to stdout") {
        auto args = common;
        args.insert(args.begin(), "evaluate");
        const auto r = run_cli(args);
        CHECK(r.code == kExitOk);
        CHECK(r.out.find("SVM[source=paper]") != std::string::npos);
    }
    SUBCASE("csv matches the library report") {
        auto args = common;
        args.insert(args.begin(), "evaluate");
        args.insert(args.end(), {"--format", "csv"});
        const auto r = run_cli(args);
        REQUIRE(r.code == kExitOk);
        ExperimentConfig cfg;
        cfg.top_k = 8;
        cfg.categories = {0, 1, 2};
        cfg.folds = 3;
        CHECK(r.out == report_to_csv(run_experiment(ws.train, ws.test, cfg)));
    }
    SUBCASE("json to a file, table to stdout, config file honoured") {
        const auto conf = ws.root / "run.conf";
        std::ofstream(conf) << "data_dir = " << ws.data().string() << "\ntop_k = 8\ncategories = 0,1\nfolds = 3\n";
        const auto report = ws.root / "report.json";
        const auto r = run_cli({"evaluate", "--config", conf.string(), "--format", "json", "-o", report.string()});
        REQUIRE(r.code == kExitOk);
        CHECK(r.out.find("BCIQT") != std::string::npos);
        const auto j = nlohmann::json::parse(read_text(report));
        CHECK(j["metadata"]["top_k"] == 8);
        CHECK(j["cells"].size() == 6);
        CHECK_FALSE(fs::exists(report.string() + ".tmp"));
    }
    SUBCASE("missing labels file exits 1 and names it") {
        fs::remove(ws.data() / "t10k-labels-idx1-ubyte");
        auto args = common;
        args.insert(args.begin(), "evaluate");
        const auto r = run_cli(args);
        CHECK(r.code == kExitRuntime);
        CHECK(r.err.find("t10k-labels-idx1-ubyte") != std::string::npos);
    }
    SUBCASE("data directory from the environment") {
        ::setenv(kDataDirEnv, ws.data().string().c_str(), 1);
        const auto r = run_cli({"select-features", "--top-k", "3"});
        ::unsetenv(kDataDirEnv);
        REQUIRE(r.code == kExitOk);
        const auto mask = nlohmann::json::parse(r.out);
        CHECK(mask["k"] == 3);
        CHECK(mask["indices"].size() == 3);
    }
}

TEST_CASE("train writes one file per model plus the mask, deterministically") {
    Workspace ws;
    const auto out1 = ws.root / "m1";
    const auto out2 = ws.root / "m2";
    for (const auto& out : {out1, out2}) {
        const auto r = run_cli({"train", "--data-dir", ws.data().string(), "--top-k", "8", "--categories", "0-2",
                                "--models", "bciqt", "-o", out.string()});
        REQUIRE(r.code == kExitOk);
    }
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(out1)) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    CHECK(names == std::vector<std::string>{"bciqt_0.json", "bciqt_1.json", "bciqt_2.json", "mask.json"});
    for (const auto& n : names) CHECK(read_text(out1 / n) == read_text(out2 / n));

    const auto knn = run_cli({"train", "--data-dir", ws.data().string(), "--models", "knn", "-o", out1.string()});
    CHECK(knn.code == kExitUsage);
    const auto blocked = run_cli({"train", "--data-dir", ws.data().string(), "--top-k", "8", "--categories", "0",
                                  "-o", "/proc/bciqt-not-writable/models"});
    CHECK(blocked.code == kExitRuntime);
}

TEST_CASE("predict") {
    Workspace ws;
    const auto models = ws.root / "models";
    REQUIRE(run_cli({"train", "--data-dir", ws.data().string(), "--top-k", "8", "--categories", "0,1", "--models",
                     "bciqt,nb", "-o", models.string()})
                .code == kExitOk);

    SUBCASE("one line per sample, zero samples warned and rejected") {
        const auto input = ws.root / "input.csv";
        std::string header_row = "label", zero_row = "0", full_row = "1";
        for (int i = 0; i < 16; ++i) {
            header_row += ",p" + std::to_string(i);
            zero_row += ",0";
            full_row += ",9";
        }
        std::ofstream(input) << header_row << '\n' << zero_row << '\n' << full_row << '\n';
        const auto r = run_cli({"predict", "--model-dir", models.string(), "--input", input.string()});
        REQUIRE(r.code == kExitOk);
        std::istringstream lines(r.out);
        std::string header, zero, full, extra;
        std::getline(lines, header);
        std::getline(lines, zero);
        std::getline(lines, full);
        CHECK_FALSE(std::getline(lines, extra));
        CHECK(header == "index,nb_0_score,nb_0_decision,bciqt_0_score,bciqt_0_decision,nb_1_score,nb_1_decision,"
                        "bciqt_1_score,bciqt_1_decision");
        CHECK(zero.rfind("0,", 0) == 0);
        CHECK(zero.find(",0.000000,0,") != std::string::npos);  // bciqt_0 score/decision
        CHECK(r.err.find("warning: sample 0") != std::string::npos);
        CHECK(r.err.find("sample 1") == std::string::npos);
    }
    SUBCASE("truncated model json") {
        const auto text = read_text(models / "bciqt_0.json");
        std::ofstream(models / "bciqt_0.json") << text.substr(0, text.size() / 2);
        const auto r = run_cli({"predict", "--model-dir", models.string(), "--input",
                                (ws.data() / "t10k-images-idx3-ubyte").string()});
        CHECK(r.code == kExitRuntime);
        CHECK(r.err.find("SchemaMismatch") != std::string::npos);
    }
    SUBCASE("input of the wrong width") {
        const auto input = ws.root / "narrow.csv";
        std::ofstream(input) << "label,a,b\n0,1,1\n";
        const auto r = run_cli({"predict", "--model-dir", models.string(), "--input", input.string()});
        CHECK(r.code == kExitRuntime);
        CHECK(r.err.find("DimensionMismatch") != std::string::npos);
    }
}

TEST_CASE("evaluate equals train, then predict, then metrics") {
    Workspace ws;
    const std::vector<std::string> cfg{"--data-dir", ws.data().string(), "--top-k", "8", "--categories", "0-2",
                                       "--models", "nb,bciqt"};
    auto eval_args = cfg;
    eval_args.insert(eval_args.begin(), "evaluate");
    eval_args.insert(eval_args.end(), {"--format", "json"});
    const auto eval = run_cli(eval_args);
    REQUIRE(eval.code == kExitOk);
    const auto report = nlohmann::json::parse(eval.out);

    const auto models = ws.root / "models";
    auto train_args = cfg;
    train_args.insert(train_args.begin(), "train");
    train_args.insert(train_args.end(), {"-o", models.string()});
    REQUIRE(run_cli(train_args).code == kExitOk);
    const auto pred = run_cli({"predict", "--model-dir", models.string(), "--input",
                               (ws.data() / "t10k-images-idx3-ubyte").string()});
    REQUIRE(pred.code == kExitOk);

    std::istringstream lines(pred.out);
    std::string line;
    std::getline(lines, line);
    std::vector<std::string> columns;
    for (std::stringstream h(line); std::getline(h, line, ',');) columns.push_back(line);

    std::map<std::string, ConfusionCounts> counts;
    std::size_t row = 0;
    while (std::getline(lines, line)) {
        std::vector<std::string> fields;
        for (std::stringstream f(line); std::getline(f, line, ',');) fields.push_back(line);
        REQUIRE(fields.size() == columns.size());
        for (std::size_t c = 1; c < columns.size(); ++c) {
            const auto& name = columns[c];
            if (name.size() < 9 || name.substr(name.size() - 9) != "_decision") continue;
            const auto key = name.substr(0, name.size() - 9);  // model_category
            const int category = std::stoi(key.substr(key.find('_') + 1));
            counts[key].add(std::stoi(fields[c]), ws.test.label(row) == category ? 1 : 0);
        }
        ++row;
    }
    CHECK(row == ws.test.size());

    REQUIRE(report["cells"].size() == 6);
    for (const auto& cell : report["cells"]) {
        const auto key = cell["model"].get<std::string>() + "_" + std::to_string(cell["category"].get<int>());
        REQUIRE(counts.contains(key));
        const auto& c = counts.at(key);
        CAPTURE(key);
        CHECK(cell["tp"] == c.tp);
        CHECK(cell["fp"] == c.fp);
        CHECK(cell["tn"] == c.tn);
        CHECK(cell["fn"] == c.fn);
        CHECK(cell["recall"].get<double>() == compute_metrics(c).recall);
    }
}

}  // TEST_SUITE
