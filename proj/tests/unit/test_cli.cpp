#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pefusion/datasets.hpp"
#include "pefusion/feature_file.hpp"
#include "pefusion/svm/model_file.hpp"

#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pefusion;

namespace {

const fs::path pool = fs::path(PEFUSION_TEST_DATA) / "fashion-mnist-pool";
const std::string train_images = (pool / "train-images-idx3-ubyte.gz").string();
const std::string train_labels = (pool / "train-labels-idx1-ubyte.gz").string();
const std::string test_images = (pool / "t10k-images-idx3-ubyte.gz").string();
const std::string test_labels = (pool / "t10k-labels-idx1-ubyte.gz").string();

struct Result {
    int status = -1;
    std::string out;
    std::string err;

    [[nodiscard]] std::string last_line() const {
        std::istringstream in(out);
        std::string line;
        std::string last;
        while (std::getline(in, line)) {
            if (!line.empty()) {
                last = line;
            }
        }
        return last;
    }
};

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string quote(const std::string &s) { return "'" + s + "'"; }

struct Sandbox {
    fs::path dir;
    Sandbox() {
        dir = fs::temp_directory_path() / ("pefusion_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(dir);
    }
    ~Sandbox() { fs::remove_all(dir); }

    [[nodiscard]] std::string at(const std::string &name) const { return (dir / name).string(); }

    Result run(const std::vector<std::string> &args) const {
        std::string cmd = quote(PEFUSION_CLI);
        for (const auto &a : args) {
            cmd += " " + quote(a);
        }
        cmd += " >" + quote(at("stdout.txt")) + " 2>" + quote(at("stderr.txt"));
        const int raw = std::system(cmd.c_str());
        Result r;
        r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
        r.out = slurp(at("stdout.txt"));
        r.err = slurp(at("stderr.txt"));
        return r;
    }

    Result extract_train(const std::string &out, std::size_t per_class, std::vector<std::string> extra = {}) const {
        std::vector<std::string> args{"extract", "--dataset", "fashion-mnist", "--images", train_images, "--labels",
                                      train_labels, "--limit-per-class", std::to_string(per_class), "--seed", "7",
                                      "--out", at(out)};
        args.insert(args.end(), extra.begin(), extra.end());
        return run(args);
    }

    Result extract_test(const std::string &out, std::size_t per_class, std::vector<std::string> extra = {}) const {
        std::vector<std::string> args{"extract", "--dataset", "fashion-mnist", "--images", test_images, "--labels",
                                      test_labels, "--limit-per-class", std::to_string(per_class), "--seed", "7",
                                      "--out", at(out)};
        args.insert(args.end(), extra.begin(), extra.end());
        return run(args);
    }
};

bool single_error_line(const Result &r, const std::string &code) {
    return r.err.rfind("error code=" + code + " message=", 0) == 0 && r.err.find('\n') == r.err.size() - 1;
}

double parse_accuracy(const std::string &line) {
    REQUIRE(line.rfind("accuracy=", 0) == 0);
    return std::stod(line.substr(9));
}

}  // namespace

TEST_CASE("extract honours --limit-per-class and writes sidecars") {
    Sandbox box;
    const auto r = box.extract_train("f.pefm", 20, {"--checksums", (pool / "SHA256SUMS").string()});
    REQUIRE(r.status == 0);
    const auto file = fusion::read_feature_file(box.at("f.pefm"));
    CHECK(file.features.rows() == 200);
    CHECK(file.features.cols() == 780);
    CHECK(file.manifest.metadata["split"] == "train");
    CHECK(file.manifest.metadata["dataset"] == "fashion-mnist");
    const auto labels = datasets::load_idx_labels(box.at("f.pefm.labels.idx"));
    REQUIRE(labels.size() == 200);
    std::vector<int> per(10, 0);
    for (const auto l : labels) {
        ++per[l];
    }
    CHECK(per == std::vector<int>(10, 20));
    const auto run = json::parse(slurp(box.at("f.pefm.run.json")));
    CHECK(run["command"] == "extract");
    CHECK(run["fingerprint"] == file.manifest.fingerprint);
    CHECK(run["seed"] == 7);
    CHECK(run["inputs"].size() == 2);
    CHECK(run["inputs"][0]["registry"] == "verified");
    CHECK(run["outputs"].size() == 3);
}

TEST_CASE("extract is byte-reproducible across thread counts") {
    Sandbox box;
    REQUIRE(box.extract_train("a.pefm", 10, {"--threads", "1"}).status == 0);
    REQUIRE(box.extract_train("b.pefm", 10, {"--threads", "3"}).status == 0);
    CHECK(slurp(box.at("a.pefm")) == slurp(box.at("b.pefm")));
    CHECK(slurp(box.at("a.pefm.labels.idx")) == slurp(box.at("b.pefm.labels.idx")));
}

TEST_CASE("invalid config exits 2 and leaves no output") {
    Sandbox box;
    auto cfg = json::parse(slurp(fs::path(PEFUSION_CONFIGS) / "fashion-mnist.json"));
    cfg["diagonal"]["half_range"] = 27;
    std::ofstream(box.at("bad.json")) << cfg.dump();
    const auto r = box.extract_train("f.pefm", 5, {"--config", box.at("bad.json")});
    CHECK(r.status == 2);
    CHECK(single_error_line(r, "config_error"));
    CHECK_FALSE(fs::exists(box.at("f.pefm")));
    CHECK_FALSE(fs::exists(box.at("f.pefm.labels.idx")));
    CHECK_FALSE(fs::exists(box.at("f.pefm.run.json")));
}

TEST_CASE("shipped configs parse and match their profiles") {
    Sandbox box;
    for (const char *name : {"fashion-mnist", "kmnist", "emnist-letters"}) {
        const auto cfg = fusion::load_pipeline_config((fs::path(PEFUSION_CONFIGS) / (std::string(name) + ".json")).string());
        CHECK(fusion::build_manifest(cfg).total_dim == 780);
    }
    const auto cifar = fusion::load_pipeline_config((fs::path(PEFUSION_CONFIGS) / "cifar10.json").string());
    CHECK(fusion::build_manifest(cifar).total_dim == 2961);
    const auto r = box.extract_train("f.pefm", 3, {"--config", (fs::path(PEFUSION_CONFIGS) / "fashion-mnist.json").string()});
    REQUIRE(r.status == 0);
    REQUIRE(box.extract_train("g.pefm", 3).status == 0);
    CHECK(slurp(box.at("f.pefm")) == slurp(box.at("g.pefm")));
}

TEST_CASE("checksum mismatch and usage errors exit 2") {
    Sandbox box;
    std::ofstream(box.at("sums")) << "train-images-idx3-ubyte.gz "
                                  << std::string(64, '0') << "\n";
    const auto bad = box.extract_train("f.pefm", 5, {"--checksums", box.at("sums")});
    CHECK(bad.status == 2);
    CHECK(single_error_line(bad, "bad_value"));
    CHECK_FALSE(fs::exists(box.at("f.pefm")));

    const auto missing = box.run({"extract", "--dataset", "fashion-mnist"});
    CHECK(missing.status == 2);
    CHECK(single_error_line(missing, "usage"));
    const auto unknown = box.run({"extract", "--dataset", "mnist", "--images", train_images, "--labels", train_labels,
                                  "--out", box.at("x.pefm")});
    CHECK(unknown.status == 2);
    CHECK(single_error_line(unknown, "invalid_argument"));
    const auto no_file = box.run({"evaluate", "--model", box.at("none.pesv"), "--features", box.at("none.pefm")});
    CHECK(no_file.status == 2);
    CHECK(single_error_line(no_file, "io_error"));
}

TEST_CASE("gridsearch reports, refits and embeds the fingerprint") {
    Sandbox box;
    REQUIRE(box.extract_train("tr.pefm", 15).status == 0);
    const auto features = fusion::read_feature_file(box.at("tr.pefm"));

    const auto single = box.run({"gridsearch", "--features", box.at("tr.pefm"), "--grid", "C=10;gamma=0.001", "--out",
                                 box.at("one.pesv")});
    REQUIRE(single.status == 0);
    const auto one = json::parse(slurp(box.at("one.pesv.report.json")));
    CHECK(one["cells"].size() == 1);
    CHECK(one["fit_count"] == 3);
    CHECK(one["best"]["C"] == 10.0);
    CHECK(one["best"]["gamma"] == 0.001);
    CHECK(one["fingerprint"] == features.manifest.fingerprint);

    const auto full = box.run({"gridsearch", "--features", box.at("tr.pefm"), "--out", box.at("full.pesv"), "--report",
                               box.at("full.json")});
    REQUIRE(full.status == 0);
    const auto report = json::parse(slurp(box.at("full.json")));
    CHECK(report["cells"].size() == 12);
    CHECK(report["fit_count"] == 36);
    CHECK(report["samples"] == 150);
    const auto model = svm::read_model(box.at("full.pesv"));
    CHECK(model.fingerprint == features.manifest.fingerprint);
    CHECK(model.C == report["best"]["C"].get<double>());
    CHECK(model.params.gamma == report["best"]["gamma"].get<double>());
    REQUIRE(model.standardizer.has_value());
    CHECK(model.standardizer->dimension() == 780);
    CHECK(model.machines.size() == 45);

    const auto again = box.run({"gridsearch", "--features", box.at("tr.pefm"), "--out", box.at("again.pesv"),
                                "--report", box.at("again.json")});
    REQUIRE(again.status == 0);
    CHECK(slurp(box.at("full.pesv")) == slurp(box.at("again.pesv")));
    CHECK(slurp(box.at("full.json")) == slurp(box.at("again.json")));
}

TEST_CASE("training refuses a test split") {
    Sandbox box;
    REQUIRE(box.extract_test("te.pefm", 5).status == 0);
    CHECK(fusion::read_feature_file(box.at("te.pefm")).manifest.metadata["split"] == "test");
    const auto r = box.run({"train", "--features", box.at("te.pefm"), "--out", box.at("m.pesv")});
    CHECK(r.status == 2);
    CHECK(single_error_line(r, "usage"));
    CHECK_FALSE(fs::exists(box.at("m.pesv")));
    const auto g = box.run({"gridsearch", "--features", box.at("te.pefm"), "--out", box.at("m.pesv")});
    CHECK(g.status == 2);
}

TEST_CASE("evaluate prints the accuracy line and a consistent report") {
    Sandbox box;
    REQUIRE(box.extract_train("tr.pefm", 10).status == 0);
    REQUIRE(box.extract_test("te.pefm", 10).status == 0);
    REQUIRE(box.run({"train", "--features", box.at("tr.pefm"), "--C", "10", "--gamma", "0.001", "--scheme", "ovr",
                     "--out", box.at("m.pesv")})
                .status == 0);
    const auto r = box.run({"evaluate", "--model", box.at("m.pesv"), "--features", box.at("te.pefm"), "--out",
                            box.at("ev.json")});
    REQUIRE(r.status == 0);
    const double acc = parse_accuracy(r.last_line());
    const auto report = json::parse(slurp(box.at("ev.json")));
    CHECK(report["accuracy"].get<double>() == acc);
    std::size_t diagonal = 0;
    std::size_t total = 0;
    const auto &confusion = report["confusion"];
    REQUIRE(confusion.size() == 10);
    for (std::size_t i = 0; i < confusion.size(); ++i) {
        for (std::size_t j = 0; j < confusion[i].size(); ++j) {
            total += confusion[i][j].get<std::size_t>();
            diagonal += i == j ? confusion[i][j].get<std::size_t>() : 0;
        }
    }
    CHECK(total == 100);
    CHECK(acc == doctest::Approx(static_cast<double>(diagonal) / 100.0).epsilon(1e-12));
    CHECK(report["precision"].size() == 10);
    CHECK(report["recall"].size() == 10);
    CHECK(report["scheme"] == "one-vs-rest");
}

TEST_CASE("a model scored on its own separable training data is perfect") {
    Sandbox box;
    REQUIRE(box.extract_train("tr.pefm", 4).status == 0);
    REQUIRE(box.run({"train", "--features", box.at("tr.pefm"), "--C", "1000", "--gamma", "0.01", "--out",
                     box.at("m.pesv")})
                .status == 0);
    const auto r = box.run({"evaluate", "--model", box.at("m.pesv"), "--features", box.at("tr.pefm")});
    REQUIRE(r.status == 0);
    CHECK(r.last_line() == "accuracy=1.0");
}

TEST_CASE("fingerprint mismatch exits 2") {
    Sandbox box;
    REQUIRE(box.extract_train("tr.pefm", 5).status == 0);
    auto cfg = json::parse(slurp(fs::path(PEFUSION_CONFIGS) / "fashion-mnist.json"));
    cfg["diagonal"]["aggregation"] = "arithmetic";
    std::ofstream(box.at("alt.json")) << cfg.dump();
    REQUIRE(box.extract_test("te.pefm", 5, {"--config", box.at("alt.json")}).status == 0);
    REQUIRE(box.run({"train", "--features", box.at("tr.pefm"), "--out", box.at("m.pesv")}).status == 0);
    const auto r = box.run({"evaluate", "--model", box.at("m.pesv"), "--features", box.at("te.pefm"), "--out",
                            box.at("ev.json")});
    CHECK(r.status == 2);
    CHECK(single_error_line(r, "fingerprint_mismatch"));
    CHECK(r.err.find("features built with different pipeline config") != std::string::npos);
    CHECK_FALSE(fs::exists(box.at("ev.json")));
}
