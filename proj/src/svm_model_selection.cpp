#include "pefusion/svm/model_selection.hpp"

#include "pefusion/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <string>

namespace pefusion::svm {

namespace {

struct CellParams {
    double C;
    double gamma;
};

Matrix gather_rows(const Matrix &x, std::span<const std::size_t> rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
    }
    return out;
}

/// Fold accuracies for every cell: result[cell][fold].
std::vector<std::vector<double>> cross_validate(const Matrix &x, std::span<const ClassLabel> y,
                                                std::span<const CellParams> cells, const CvOptions &options) {
    if (static_cast<Eigen::Index>(y.size()) != x.rows()) {
        throw DimensionMismatch("label count " + std::to_string(y.size()) + " differs from sample count " +
                                std::to_string(x.rows()));
    }
    const auto fold_of = stratified_folds(y, options.folds, options.seed);
    const auto index = detail::index_classes(y);
    const std::size_t n = y.size();
    const std::size_t k = index.classes.size();
    std::vector<std::vector<double>> acc(cells.size(), std::vector<double>(options.folds, 0.0));

    for (std::size_t f = 0; f < options.folds; ++f) {
        std::vector<std::size_t> train;
        std::vector<std::size_t> test;
        for (std::size_t i = 0; i < n; ++i) {
            (fold_of[i] == f ? test : train).push_back(i);
        }
        Matrix z = x;
        if (options.train.standardize) {
            fusion::Standardizer::fit(gather_rows(x, train)).apply_in_place(z);
        }
        Matrix distances;
        const bool precompute = n <= options.distance_budget_bytes / sizeof(double) / std::max<std::size_t>(n, 1);
        if (precompute) {
            distances = squared_distances(z);
        }
        const Matrix z_test = precompute ? Matrix() : gather_rows(z, test);

        for (std::size_t c = 0; c < cells.size(); ++c) {
            const KernelParams params{cells[c].gamma};
            const auto machines = detail::fit_machines(z, precompute ? &distances : nullptr, train, index.index, k,
                                                       cells[c].C, params, options.train);
            std::vector<std::size_t> svs;
            for (const auto &mc : machines) {
                svs.insert(svs.end(), mc.sv_ids.begin(), mc.sv_ids.end());
            }
            std::sort(svs.begin(), svs.end());
            svs.erase(std::unique(svs.begin(), svs.end()), svs.end());

            Matrix d(static_cast<Eigen::Index>(test.size()), static_cast<Eigen::Index>(svs.size()));
            if (precompute) {
                for (std::size_t t = 0; t < test.size(); ++t) {
                    for (std::size_t s = 0; s < svs.size(); ++s) {
                        d(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) =
                            distances(static_cast<Eigen::Index>(test[t]), static_cast<Eigen::Index>(svs[s]));
                    }
                }
            } else {
                d = squared_distances(z_test, gather_rows(z, svs));
            }
            const Matrix kt = (-params.gamma * d.array()).exp().matrix();

            std::size_t correct = 0;
            std::vector<double> decisions(machines.size());
            for (std::size_t t = 0; t < test.size(); ++t) {
                for (std::size_t m = 0; m < machines.size(); ++m) {
                    const Machine &mc = machines[m];
                    double value = mc.bias;
                    for (std::size_t s = 0; s < mc.sv_ids.size(); ++s) {
                        const auto col = std::lower_bound(svs.begin(), svs.end(), mc.sv_ids[s]) - svs.begin();
                        value += mc.coefs[s] * kt(static_cast<Eigen::Index>(t), col);
                    }
                    decisions[m] = value;
                }
                if (combine_decisions(decisions, k, options.train.scheme) == index.index[test[t]]) {
                    ++correct;
                }
            }
            acc[c][f] = static_cast<double>(correct) / static_cast<double>(test.size());
        }
    }
    return acc;
}

double mean(const std::vector<double> &v) {
    double s = 0.0;
    for (const double a : v) {
        s += a;
    }
    return s / static_cast<double>(v.size());
}

std::vector<double> parse_list(const std::string &key, const std::string &values) {
    std::vector<double> out;
    std::stringstream ss(values);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception &) {
            used = 0;
        }
        if (item.empty() || used != item.size() || !(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError("grid value '" + item + "' for " + key + " is not a positive number");
        }
        out.push_back(v);
    }
    if (out.empty()) {
        throw ConfigError("grid entry " + key + " has no values");
    }
    return out;
}

}  // namespace

std::vector<std::size_t> stratified_folds(std::span<const ClassLabel> y, std::size_t folds, std::uint64_t seed) {
    const std::size_t n = y.size();
    if (folds < 2) {
        throw ConfigError("cross-validation needs at least 2 folds, got " + std::to_string(folds));
    }
    if (folds > n) {
        throw InvalidArgument("cannot split " + std::to_string(n) + " samples into " + std::to_string(folds) +
                              " folds");
    }
    const auto index = detail::index_classes(y);
    std::vector<std::vector<std::size_t>> members(index.classes.size());
    for (std::size_t i = 0; i < n; ++i) {
        members[index.index[i]].push_back(i);
    }
    const std::size_t required = folds == n ? 2 : folds;
    for (std::size_t c = 0; c < members.size(); ++c) {
        if (members[c].size() < required) {
            throw InvalidArgument("class " + std::to_string(index.classes[c]) + " has " +
                                  std::to_string(members[c].size()) + " samples, fewer than the " +
                                  std::to_string(required) + " required for " + std::to_string(folds) + " folds");
        }
    }
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> fold_of(n, 0);
    std::size_t offset = 0;
    for (auto &m : members) {
        for (std::size_t i = m.size() - 1; i > 0; --i) {
            std::swap(m[i], m[static_cast<std::size_t>(rng() % (i + 1))]);
        }
        for (std::size_t p = 0; p < m.size(); ++p) {
            fold_of[m[p]] = (offset + p) % folds;
        }
        offset += m.size();
    }
    return fold_of;
}

std::vector<double> kfold_cv(const Matrix &x, std::span<const ClassLabel> y, double C, const KernelParams &params,
                             const CvOptions &options) {
    const CellParams cell{C, params.gamma};
    return cross_validate(x, y, {&cell, 1}, options).front();
}

nlohmann::json GridSearchReport::to_json() const {
    nlohmann::json cells_json = nlohmann::json::array();
    for (const auto &c : cells) {
        cells_json.push_back(
            {{"C", c.C}, {"gamma", c.gamma}, {"fold_accuracies", c.fold_accuracies}, {"mean_accuracy", c.mean_accuracy}});
    }
    return {{"cells", cells_json},
            {"best", {{"C", best_C}, {"gamma", best_gamma}, {"mean_accuracy", best_mean_accuracy}}},
            {"folds", folds},
            {"seed", seed},
            {"fit_count", fit_count},
            {"samples", samples}};
}

GridSearchResult grid_search(const Matrix &x, std::span<const ClassLabel> y, std::span<const double> C_grid,
                             std::span<const double> gamma_grid, const CvOptions &options) {
    if (C_grid.empty() || gamma_grid.empty()) {
        throw ConfigError("grid search needs at least one C and one gamma value");
    }
    std::vector<CellParams> cells;
    for (const double C : C_grid) {
        for (const double g : gamma_grid) {
            if (!(C > 0.0) || !(g > 0.0) || !std::isfinite(C) || !std::isfinite(g)) {
                throw ConfigError("grid values must be positive and finite");
            }
            cells.push_back({C, g});
        }
    }
    const auto acc = cross_validate(x, y, cells, options);

    GridSearchResult out;
    auto &report = out.report;
    report.folds = options.folds;
    report.seed = options.seed;
    report.samples = y.size();
    report.fit_count = cells.size() * options.folds;
    std::size_t best = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        report.cells.push_back({cells[c].C, cells[c].gamma, acc[c], mean(acc[c])});
        const auto &cand = report.cells.back();
        const auto &cur = report.cells[best];
        if (cand.mean_accuracy > cur.mean_accuracy ||
            (cand.mean_accuracy == cur.mean_accuracy &&
             (cand.C < cur.C || (cand.C == cur.C && cand.gamma < cur.gamma)))) {
            best = c;
        }
    }
    report.best_C = report.cells[best].C;
    report.best_gamma = report.cells[best].gamma;
    report.best_mean_accuracy = report.cells[best].mean_accuracy;
    out.model = train_multiclass(x, y, report.best_C, KernelParams{report.best_gamma}, options.train);
    return out;
}

GridSpec parse_grid(std::string_view text) {
    std::string compact;
    for (const char ch : text) {
        if (ch != ' ' && ch != '\t') {
            compact.push_back(ch);
        }
    }
    GridSpec spec;
    std::set<std::string> seen;
    std::stringstream ss(compact);
    std::string part;
    while (std::getline(ss, part, ';')) {
        if (part.empty()) {
            continue;
        }
        const auto eq = part.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("grid entry '" + part + "' lacks '='");
        }
        const std::string key = part.substr(0, eq);
        if (!seen.insert(key).second) {
            throw ConfigError("grid key '" + key + "' given twice");
        }
        if (key == "C") {
            spec.C = parse_list(key, part.substr(eq + 1));
        } else if (key == "gamma") {
            spec.gamma = parse_list(key, part.substr(eq + 1));
        } else {
            throw ConfigError("unknown grid key '" + key + "' (expected C or gamma)");
        }
    }
    if (spec.C.empty()) {
        spec.C = default_C_grid;
    }
    if (spec.gamma.empty()) {
        spec.gamma = default_gamma_grid;
    }
    return spec;
}

Evaluation tally(std::span<const ClassLabel> classes, std::span<const ClassLabel> truth,
                 std::span<const ClassLabel> predicted) {
    if (truth.size() != predicted.size()) {
        throw DimensionMismatch("truth has " + std::to_string(truth.size()) + " labels, predictions " +
                                std::to_string(predicted.size()));
    }
    if (truth.empty()) {
        throw InvalidArgument("cannot evaluate on an empty set");
    }
    const std::size_t k = classes.size();
    const auto slot = [&](ClassLabel label) {
        const auto it = std::lower_bound(classes.begin(), classes.end(), label);
        if (it == classes.end() || *it != label) {
            throw InvalidArgument("label " + std::to_string(label) + " is not one of the model's classes");
        }
        return static_cast<std::size_t>(it - classes.begin());
    };
    Evaluation ev;
    ev.classes.assign(classes.begin(), classes.end());
    ev.confusion.assign(k, std::vector<std::size_t>(k, 0));
    ev.samples = truth.size();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto t = slot(truth[i]);
        const auto p = slot(predicted[i]);
        ++ev.confusion[t][p];
        correct += t == p ? 1 : 0;
    }
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
    ev.precision.assign(k, 0.0);
    ev.recall.assign(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t row = 0;
        std::size_t col = 0;
        for (std::size_t o = 0; o < k; ++o) {
            row += ev.confusion[c][o];
            col += ev.confusion[o][c];
        }
        if (col > 0) {
            ev.precision[c] = static_cast<double>(ev.confusion[c][c]) / static_cast<double>(col);
        }
        if (row > 0) {
            ev.recall[c] = static_cast<double>(ev.confusion[c][c]) / static_cast<double>(row);
        }
    }
    return ev;
}

nlohmann::json Evaluation::to_json() const {
    return {{"accuracy", accuracy},
            {"samples", samples},
            {"classes", classes},
            {"confusion", confusion},
            {"precision", precision},
            {"recall", recall}};
}

Evaluation evaluate(const MulticlassModel &model, const Matrix &x, std::span<const ClassLabel> y, unsigned threads) {
    if (static_cast<Eigen::Index>(y.size()) != x.rows()) {
        throw DimensionMismatch("label count " + std::to_string(y.size()) + " differs from sample count " +
                                std::to_string(x.rows()));
    }
    const auto predicted = model.predict(x, threads);
    return tally(model.classes, y, predicted);
}

}  // namespace pefusion::svm
