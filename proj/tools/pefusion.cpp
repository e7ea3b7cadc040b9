// pefusion: extract fused permutation-entropy features, grid-search and train RBF SVMs, evaluate.
#include "pefusion/datasets.hpp"
#include "pefusion/digest.hpp"
#include "pefusion/error.hpp"
#include "pefusion/feature_file.hpp"
#include "pefusion/fusion.hpp"
#include "pefusion/parallel.hpp"
#include "pefusion/svm/model_file.hpp"
#include "pefusion/svm/model_selection.hpp"
#include "pefusion/svm/multiclass.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pefusion;

namespace {

/// Failure raised by the command layer itself (bad flag combinations, split misuse).
class UsageError : public Error {
public:
    using Error::Error;
    [[nodiscard]] const char *code() const noexcept override { return "usage"; }
};

class FingerprintMismatch : public Error {
public:
    using Error::Error;
    [[nodiscard]] const char *code() const noexcept override { return "fingerprint_mismatch"; }
};

/// Outputs written so far; removed again if the command fails.
struct OutputSet {
    std::vector<fs::path> paths;
    bool committed = false;

    void add(const fs::path &p) { paths.push_back(p); }
    ~OutputSet() {
        if (committed) {
            return;
        }
        for (const auto &p : paths) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }
};

struct InputRecord {
    fs::path path;
    std::string sha256;
    std::string registry;  // verified | unlisted | unchecked
};

struct RunContext {
    std::string command;
    std::vector<std::string> argv;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    std::time_t started_at = std::time(nullptr);
    std::vector<InputRecord> inputs;
    OutputSet outputs;
};

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    return s;
}

std::string iso_time(std::time_t t) {
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(RunContext &run, const fs::path &path, const std::string &text) {
    run.outputs.add(path);
    fusion::write_file_bytes(path, text);
}

void record_input(RunContext &run, const fs::path &path, const std::optional<ChecksumRegistry> &registry) {
    InputRecord rec{path, sha256_file(path), "unchecked"};
    if (registry) {
        rec.registry = verify_checksum(path, *registry) ? "verified" : "unlisted";
    }
    run.inputs.push_back(std::move(rec));
}

json inputs_json(const RunContext &run) {
    json out = json::array();
    for (const auto &in : run.inputs) {
        out.push_back({{"path", in.path.string()}, {"sha256", in.sha256}, {"registry", in.registry}});
    }
    return out;
}

void write_run_manifest(RunContext &run, const fs::path &out, const std::string &dataset, const std::string &fp,
                        std::uint64_t seed) {
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - run.start).count();
    json outputs = json::array();
    for (const auto &p : run.outputs.paths) {
        outputs.push_back(p.string());
    }
    const fs::path path = out.string() + ".run.json";
    outputs.push_back(path.string());
    const json manifest{{"command", run.command},
                        {"argv", run.argv},
                        {"dataset", dataset},
                        {"fingerprint", fp},
                        {"seed", seed},
                        {"inputs", inputs_json(run)},
                        {"outputs", outputs},
                        {"started_at", iso_time(run.started_at)},
                        {"duration_seconds", elapsed}};
    write_text(run, path, manifest.dump(2) + "\n");
}

std::string infer_split(const std::vector<fs::path> &paths) {
    std::string found;
    for (const auto &p : paths) {
        const auto name = p.filename().string();
        std::string split;
        if (name.find("t10k") != std::string::npos || name.find("test") != std::string::npos) {
            split = "test";
        } else if (name.find("train") != std::string::npos || name.find("data_batch") != std::string::npos) {
            split = "train";
        }
        if (split.empty()) {
            continue;
        }
        if (!found.empty() && found != split) {
            return "mixed";
        }
        found = split;
    }
    return found.empty() ? "unknown" : found;
}

fusion::PipelineConfig default_config_for(const datasets::DatasetProfile &profile) {
    fusion::PipelineConfig c;
    c.image_height = profile.height;
    c.image_width = profile.width;
    c.channels = profile.channels;
    c.channel_mode = profile.channels == 1 ? fusion::ChannelMode::grayscale : fusion::ChannelMode::per_channel;
    return c;
}

std::vector<svm::ClassLabel> to_class_labels(const std::vector<datasets::Label> &labels) {
    return {labels.begin(), labels.end()};
}

fs::path default_labels_path(const fs::path &features) { return features.string() + ".labels.idx"; }

struct LoadedFeatures {
    fusion::FeatureFile file;
    std::vector<svm::ClassLabel> labels;
};

LoadedFeatures load_features(RunContext &run, const fs::path &features, std::string labels_path) {
    const fs::path labels = labels_path.empty() ? default_labels_path(features) : fs::path(labels_path);
    LoadedFeatures out{fusion::read_feature_file(features), to_class_labels(datasets::load_idx_labels(labels))};
    record_input(run, features, std::nullopt);
    record_input(run, labels, std::nullopt);
    if (out.labels.size() != static_cast<std::size_t>(out.file.features.rows())) {
        throw DimensionMismatch(features.string() + " has " + std::to_string(out.file.features.rows()) +
                                " rows but " + labels.string() + " holds " + std::to_string(out.labels.size()) +
                                " labels");
    }
    return out;
}

void refuse_test_split(const fusion::FeatureManifest &manifest, const fs::path &path) {
    const auto split = manifest.metadata.value("split", std::string("unknown"));
    if (split == "test") {
        throw UsageError(path.string() + " is marked as a test split; training needs a train split");
    }
}

// ---------------------------------------------------------------- extract

struct ExtractArgs {
    std::string dataset;
    std::string images;
    std::string labels;
    std::vector<std::string> batches;
    std::string config;
    std::size_t limit_per_class = 0;
    std::uint64_t seed = 0;
    std::string split;
    std::string transpose = "profile";
    std::string checksums;
    std::string out;
};

int cmd_extract(RunContext &run, const ExtractArgs &a, unsigned threads) {
    const auto &profile = datasets::find_profile(a.dataset);
    const auto config = a.config.empty() ? default_config_for(profile) : fusion::load_pipeline_config(a.config);
    config.validate();
    if (config.image_height != profile.height || config.image_width != profile.width ||
        config.channels != profile.channels) {
        throw ConfigError("config geometry " + std::to_string(config.image_height) + "x" +
                          std::to_string(config.image_width) + "x" + std::to_string(config.channels) +
                          " does not match dataset " + profile.name);
    }

    std::optional<ChecksumRegistry> registry;
    if (!a.checksums.empty()) {
        registry = read_checksum_registry(a.checksums);
    }

    std::vector<fs::path> sources;
    datasets::LabeledImageSet set;
    bool transpose = false;
    if (profile.format == datasets::FileFormat::idx) {
        if (a.images.empty() || a.labels.empty() || !a.batches.empty()) {
            throw UsageError("dataset " + profile.name + " needs --images and --labels");
        }
        auto options = profile.idx_options();
        if (a.transpose == "on") {
            options.transpose = true;
        } else if (a.transpose == "off") {
            options.transpose = false;
        }
        transpose = options.transpose;
        sources = {a.images, a.labels};
        for (const auto &p : sources) {
            record_input(run, p, registry);
        }
        set = datasets::load_idx(a.images, a.labels, options);
    } else {
        if (a.batches.empty() || !a.images.empty() || !a.labels.empty()) {
            throw UsageError("dataset " + profile.name + " needs --batches");
        }
        sources.assign(a.batches.begin(), a.batches.end());
        for (const auto &p : sources) {
            record_input(run, p, registry);
        }
        set = datasets::load_cifar10(sources);
    }
    set.class_count = std::max(set.class_count, profile.class_count);
    set.class_names = profile.class_names;

    if (a.limit_per_class > 0) {
        set = datasets::subsample(set, a.limit_per_class, a.seed);
    }

    auto batch = fusion::extract_batch(set.images, config, threads);
    const std::string split = a.split.empty() ? infer_split(sources) : a.split;
    json inputs = json::array();
    for (const auto &in : run.inputs) {
        inputs.push_back({{"name", in.path.filename().string()}, {"sha256", in.sha256}});
    }
    batch.manifest.metadata = {{"dataset", profile.name},
                               {"split", split},
                               {"rows", set.size()},
                               {"limit_per_class", a.limit_per_class},
                               {"seed", a.seed},
                               {"transpose", transpose},
                               {"label_offset", profile.label_offset},
                               {"inputs", inputs}};

    const fs::path out = a.out;
    run.outputs.add(out);
    fusion::write_feature_file(out, batch.features, batch.manifest);
    const auto labels_path = default_labels_path(out);
    run.outputs.add(labels_path);
    datasets::write_idx_labels(labels_path, set.labels);
    write_run_manifest(run, out, profile.name, batch.manifest.fingerprint, a.seed);

    std::cout << "rows=" << batch.features.rows() << " cols=" << batch.features.cols()
              << " fingerprint=" << batch.manifest.fingerprint << "\n";
    return 0;
}

// ---------------------------------------------------------------- train / gridsearch

struct FitArgs {
    std::string features;
    std::string labels;
    std::string grid;
    double C = 10.0;
    double gamma = 0.001;
    std::size_t folds = 3;
    std::uint64_t seed = 0;
    std::string scheme = "ovo";
    std::string out;
    std::string report;
};

svm::TrainOptions train_options(const FitArgs &a, unsigned threads) {
    svm::TrainOptions t;
    t.scheme = svm::scheme_from_string(a.scheme);
    t.threads = threads;
    return t;
}

void finish_fit(RunContext &run, const FitArgs &a, svm::MulticlassModel model, json report,
                const fusion::FeatureManifest &manifest) {
    model.fingerprint = manifest.fingerprint;
    report["fingerprint"] = manifest.fingerprint;
    report["scheme"] = svm::to_string(model.scheme);
    report["classes"] = model.classes;
    report["dataset"] = manifest.metadata.value("dataset", std::string());

    const fs::path out = a.out;
    run.outputs.add(out);
    svm::write_model(out, model);
    const fs::path report_path = a.report.empty() ? fs::path(out.string() + ".report.json") : fs::path(a.report);
    write_text(run, report_path, report.dump(2) + "\n");
    write_run_manifest(run, out, manifest.metadata.value("dataset", std::string()), manifest.fingerprint, a.seed);
}

int cmd_train(RunContext &run, const FitArgs &a, unsigned threads) {
    const auto data = load_features(run, a.features, a.labels);
    refuse_test_split(data.file.manifest, a.features);
    svm::KernelParams params;
    params.gamma = a.gamma;
    const auto options = train_options(a, threads);
    auto model = svm::train_multiclass(data.file.features, data.labels, a.C, params, options);
    const auto fit = svm::evaluate(model, data.file.features, data.labels, threads);
    json report{{"C", a.C},
                {"gamma", a.gamma},
                {"samples", data.labels.size()},
                {"training_accuracy", fit.accuracy},
                {"machines", model.machines.size()}};
    finish_fit(run, a, std::move(model), std::move(report), data.file.manifest);
    std::cout << "training_accuracy=" << json(fit.accuracy).dump() << "\n";
    return 0;
}

int cmd_gridsearch(RunContext &run, const FitArgs &a, unsigned threads) {
    const auto grid = a.grid.empty() ? svm::GridSpec{svm::default_C_grid, svm::default_gamma_grid}
                                     : svm::parse_grid(a.grid);
    const auto data = load_features(run, a.features, a.labels);
    refuse_test_split(data.file.manifest, a.features);
    svm::CvOptions cv;
    cv.folds = a.folds;
    cv.seed = a.seed;
    cv.train = train_options(a, threads);
    auto result = svm::grid_search(data.file.features, data.labels, grid.C, grid.gamma, cv);
    finish_fit(run, a, std::move(result.model), result.report.to_json(), data.file.manifest);
    std::cout << "best_C=" << json(result.report.best_C).dump() << " best_gamma=" << json(result.report.best_gamma).dump()
              << " cv_accuracy=" << json(result.report.best_mean_accuracy).dump() << "\n";
    return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string model;
    std::string features;
    std::string labels;
    std::string out;
};

int cmd_evaluate(RunContext &run, const EvaluateArgs &a, unsigned threads) {
    const auto model = svm::read_model(a.model);
    record_input(run, a.model, std::nullopt);
    const auto data = load_features(run, a.features, a.labels);
    if (model.fingerprint != data.file.manifest.fingerprint) {
        throw FingerprintMismatch("features built with different pipeline config (model " + model.fingerprint +
                                  ", features " + data.file.manifest.fingerprint + ")");
    }
    const auto evaluation = svm::evaluate(model, data.file.features, data.labels, threads);
    if (!a.out.empty()) {
        auto report = evaluation.to_json();
        report["fingerprint"] = model.fingerprint;
        report["C"] = model.C;
        report["gamma"] = model.params.gamma;
        report["scheme"] = svm::to_string(model.scheme);
        report["dataset"] = data.file.manifest.metadata.value("dataset", std::string());
        report["split"] = data.file.manifest.metadata.value("split", std::string());
        write_text(run, a.out, report.dump(2) + "\n");
        write_run_manifest(run, a.out, data.file.manifest.metadata.value("dataset", std::string()), model.fingerprint,
                           0);
    }
    std::cout << "accuracy=" << json(evaluation.accuracy).dump() << "\n";
    return 0;
}

int report_failure(const std::string &code, const std::string &message) {
    std::cerr << "error code=" << code << " message=" << one_line(message) << "\n";
    return 2;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Permutation-entropy feature fusion with RBF SVM classification"};
    app.require_subcommand(1);
    unsigned threads = default_threads();
    app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    ExtractArgs ex;
    auto *extract = app.add_subcommand("extract", "Compute the fused feature matrix of a dataset split");
    extract->add_option("--dataset", ex.dataset, "Profile: fashion-mnist, kmnist, emnist-letters, cifar10")->required();
    extract->add_option("--images", ex.images, "IDX image file (optionally gzip)");
    extract->add_option("--labels", ex.labels, "IDX label file (optionally gzip)");
    extract->add_option("--batches", ex.batches, "CIFAR-10 binary batch files");
    extract->add_option("--config", ex.config, "Pipeline config JSON (defaults to the profile geometry)");
    extract->add_option("--limit-per-class", ex.limit_per_class, "Class-balanced subsample size per class");
    extract->add_option("--seed", ex.seed, "Subsample seed");
    extract->add_option("--split", ex.split, "Split recorded in the manifest (inferred from file names if omitted)")
        ->check(CLI::IsMember({"train", "test"}));
    extract->add_option("--transpose", ex.transpose, "Orientation correction: profile, on, off")
        ->check(CLI::IsMember({"profile", "on", "off"}));
    extract->add_option("--checksums", ex.checksums, "SHA-256 registry to verify inputs against");
    extract->add_option("--out", ex.out, "Output PEFM path")->required();
    extract->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    FitArgs fit;
    const auto add_fit_options = [&](CLI::App *cmd) {
        cmd->add_option("--features", fit.features, "PEFM training features")->required();
        cmd->add_option("--labels", fit.labels, "IDX labels (defaults to <features>.labels.idx)");
        cmd->add_option("--scheme", fit.scheme, "Multiclass scheme: ovo or ovr")
            ->check(CLI::IsMember({"ovo", "ovr", "one-vs-one", "one-vs-rest"}));
        cmd->add_option("--seed", fit.seed, "Cross-validation seed");
        cmd->add_option("--out", fit.out, "Output PESV model path")->required();
        cmd->add_option("--report", fit.report, "JSON report path (defaults to <out>.report.json)");
        cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    };
    auto *train = app.add_subcommand("train", "Fit one (C, gamma) on all training features");
    add_fit_options(train);
    train->add_option("--C", fit.C, "Soft-margin penalty")->check(CLI::PositiveNumber);
    train->add_option("--gamma", fit.gamma, "RBF width")->check(CLI::PositiveNumber);
    auto *gridsearch = app.add_subcommand("gridsearch", "Stratified k-fold grid search, then refit the winner");
    add_fit_options(gridsearch);
    gridsearch->add_option("--grid", fit.grid, "e.g. \"C=1,10;gamma=0.01,0.001\"");
    gridsearch->add_option("--folds", fit.folds, "Cross-validation folds")->check(CLI::Range(2, 1 << 30));

    EvaluateArgs ev;
    auto *evaluate = app.add_subcommand("evaluate", "Score a model on a feature file");
    evaluate->add_option("--model", ev.model, "PESV model")->required();
    evaluate->add_option("--features", ev.features, "PEFM features")->required();
    evaluate->add_option("--labels", ev.labels, "IDX labels (defaults to <features>.labels.idx)");
    evaluate->add_option("--out", ev.out, "JSON report path");
    evaluate->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        return report_failure("usage", e.what());
    }

    RunContext run;
    run.argv.assign(argv, argv + argc);
    try {
        int status = 0;
        if (extract->parsed()) {
            run.command = "extract";
            status = cmd_extract(run, ex, threads);
        } else if (train->parsed()) {
            run.command = "train";
            status = cmd_train(run, fit, threads);
        } else if (gridsearch->parsed()) {
            run.command = "gridsearch";
            status = cmd_gridsearch(run, fit, threads);
        } else {
            run.command = "evaluate";
            status = cmd_evaluate(run, ev, threads);
        }
        run.outputs.committed = true;
        return status;
    } catch (const Error &e) {
        return report_failure(e.code(), e.what());
    } catch (const json::exception &e) {
        return report_failure("bad_value", e.what());
    } catch (const std::exception &e) {
        return report_failure("error", e.what());
    }
}
