#include "pefusion/svm/multiclass.hpp"

#include "pefusion/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace pefusion::svm {

namespace {

constexpr Eigen::Index prediction_chunk = 256;

std::vector<std::pair<std::size_t, std::size_t>> machine_classes(std::size_t k, Scheme scheme) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (scheme == Scheme::one_vs_one) {
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = i + 1; j < k; ++j) {
                out.emplace_back(i, j);
            }
        }
    } else {
        for (std::size_t i = 0; i < k; ++i) {
            out.emplace_back(i, Machine::rest);
        }
    }
    return out;
}

bool same_matrix(const Matrix &a, const Matrix &b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

}  // namespace

std::string_view to_string(Scheme scheme) {
    return scheme == Scheme::one_vs_one ? "one-vs-one" : "one-vs-rest";
}

Scheme scheme_from_string(std::string_view text) {
    if (text == "ovo" || text == "one-vs-one") {
        return Scheme::one_vs_one;
    }
    if (text == "ovr" || text == "one-vs-rest") {
        return Scheme::one_vs_rest;
    }
    throw ConfigError("unknown multiclass scheme '" + std::string(text) + "' (expected one-vs-one or one-vs-rest)");
}

std::size_t machine_count(std::size_t classes, Scheme scheme) {
    return scheme == Scheme::one_vs_one ? classes * (classes - 1) / 2 : classes;
}

std::size_t combine_decisions(std::span<const double> decisions, std::size_t classes, Scheme scheme) {
    if (classes < 2) {
        throw InvalidArgument("at least two classes are required");
    }
    if (decisions.size() != machine_count(classes, scheme)) {
        throw DimensionMismatch("expected " + std::to_string(machine_count(classes, scheme)) +
                                " decision values, got " + std::to_string(decisions.size()));
    }
    if (scheme == Scheme::one_vs_rest) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < classes; ++c) {
            if (decisions[c] > decisions[best]) {
                best = c;
            }
        }
        return best;
    }
    std::vector<std::size_t> votes(classes, 0);
    std::vector<double> strength(classes, 0.0);
    std::size_t m = 0;
    for (std::size_t i = 0; i < classes; ++i) {
        for (std::size_t j = i + 1; j < classes; ++j, ++m) {
            const std::size_t winner = decisions[m] > 0.0 ? i : j;
            ++votes[winner];
            strength[winner] += std::abs(decisions[m]);
        }
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c) {
        if (votes[c] > votes[best] || (votes[c] == votes[best] && strength[c] > strength[best])) {
            best = c;
        }
    }
    return best;
}

namespace detail {

ClassIndex index_classes(std::span<const ClassLabel> y) {
    ClassIndex out;
    out.classes.assign(y.begin(), y.end());
    std::sort(out.classes.begin(), out.classes.end());
    out.classes.erase(std::unique(out.classes.begin(), out.classes.end()), out.classes.end());
    out.index.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        out.index[i] = static_cast<std::size_t>(
            std::lower_bound(out.classes.begin(), out.classes.end(), y[i]) - out.classes.begin());
    }
    return out;
}

std::vector<Machine> fit_machines(const Matrix &data, const Matrix *distances, std::span<const std::size_t> rows,
                                  std::span<const std::size_t> class_of_row, std::size_t classes, double C,
                                  const KernelParams &params, const TrainOptions &options) {
    params.validate();
    std::vector<std::size_t> members(classes, 0);
    for (const auto r : rows) {
        ++members.at(class_of_row[r]);
    }
    for (std::size_t c = 0; c < classes; ++c) {
        if (members[c] == 0) {
            throw InvalidArgument("class index " + std::to_string(c) + " has no training samples");
        }
    }
    const auto pairs = machine_classes(classes, options.scheme);
    std::vector<Machine> machines(pairs.size());
    parallel_for(pairs.size(), options.threads, [&](std::size_t m) {
        const auto [pos, neg] = pairs[m];
        std::vector<std::size_t> subset;
        std::vector<std::int8_t> y;
        for (const auto r : rows) {
            const std::size_t c = class_of_row[r];
            if (c == pos) {
                subset.push_back(r);
                y.push_back(1);
            } else if (neg == Machine::rest || c == neg) {
                subset.push_back(r);
                y.push_back(-1);
            }
        }
        DualSolution sol;
        if (distances != nullptr) {
            const RbfRowsFromDistances kernel(*distances, subset, params);
            sol = solve_dual(kernel, y, C, options.solver);
        } else {
            const RbfRowsFromData kernel(data, subset, params);
            sol = solve_dual(kernel, y, C, options.solver);
        }
        std::vector<std::pair<std::size_t, double>> svs;
        for (std::size_t t = 0; t < subset.size(); ++t) {
            if (sol.alpha[t] > 0.0) {
                svs.emplace_back(subset[t], sol.alpha[t] * y[t]);
            }
        }
        std::sort(svs.begin(), svs.end());
        Machine &out = machines[m];
        out.positive = pos;
        out.negative = neg;
        out.bias = sol.bias;
        out.iterations = sol.iterations;
        out.converged = sol.converged;
        for (const auto &[row, coef] : svs) {
            out.sv_ids.push_back(row);
            out.coefs.push_back(coef);
        }
    });
    return machines;
}

}  // namespace detail

Eigen::Index MulticlassModel::dimension() const {
    return standardizer ? standardizer->dimension() : pool.cols();
}

Matrix MulticlassModel::decision_values(const Matrix &x, unsigned threads) const {
    if (x.cols() != dimension()) {
        throw DimensionMismatch("input has " + std::to_string(x.cols()) + " features, model expects " +
                                std::to_string(dimension()));
    }
    Matrix out(x.rows(), static_cast<Eigen::Index>(machines.size()));
    const Eigen::Index chunks = (x.rows() + prediction_chunk - 1) / prediction_chunk;
    parallel_for(static_cast<std::size_t>(chunks), threads, [&](std::size_t chunk) {
        const Eigen::Index begin = static_cast<Eigen::Index>(chunk) * prediction_chunk;
        const Eigen::Index count = std::min(prediction_chunk, x.rows() - begin);
        Matrix z = x.middleRows(begin, count);
        if (standardizer) {
            standardizer->apply_in_place(z);
        }
        const Matrix k = (-params.gamma * squared_distances(z, pool).array()).exp().matrix();
        for (std::size_t m = 0; m < machines.size(); ++m) {
            const Machine &mc = machines[m];
            Vector f = Vector::Constant(count, mc.bias);
            for (std::size_t s = 0; s < mc.sv_ids.size(); ++s) {
                f += mc.coefs[s] * k.col(static_cast<Eigen::Index>(mc.sv_ids[s]));
            }
            out.block(begin, static_cast<Eigen::Index>(m), count, 1) = f;
        }
    });
    return out;
}

std::vector<ClassLabel> MulticlassModel::predict(const Matrix &x, unsigned threads) const {
    const Matrix d = decision_values(x, threads);
    std::vector<ClassLabel> out(static_cast<std::size_t>(x.rows()));
    std::vector<double> row(machines.size());
    for (Eigen::Index r = 0; r < d.rows(); ++r) {
        for (std::size_t m = 0; m < machines.size(); ++m) {
            row[m] = d(r, static_cast<Eigen::Index>(m));
        }
        out[static_cast<std::size_t>(r)] = classes[combine_decisions(row, classes.size(), scheme)];
    }
    return out;
}

BinarySvmModel MulticlassModel::binary(std::size_t m) const {
    const Machine &mc = machines.at(m);
    BinarySvmModel out;
    out.support_vectors.resize(static_cast<Eigen::Index>(mc.sv_ids.size()), pool.cols());
    for (std::size_t s = 0; s < mc.sv_ids.size(); ++s) {
        out.support_vectors.row(static_cast<Eigen::Index>(s)) = pool.row(static_cast<Eigen::Index>(mc.sv_ids[s]));
    }
    out.dual_coefs = mc.coefs;
    out.support_indices = mc.sv_ids;
    out.bias = mc.bias;
    out.params = params;
    out.C = C;
    out.iterations = mc.iterations;
    out.converged = mc.converged;
    return out;
}

void MulticlassModel::validate() const {
    const auto fail = [](const std::string &msg) { throw FormatError(FormatError::Kind::bad_value, msg); };
    if (classes.size() < 2) {
        fail("model needs at least two classes");
    }
    if (!std::is_sorted(classes.begin(), classes.end()) ||
        std::adjacent_find(classes.begin(), classes.end()) != classes.end()) {
        fail("model class list must be strictly increasing");
    }
    if (!(C > 0.0) || !std::isfinite(C) || !(params.gamma > 0.0) || !std::isfinite(params.gamma)) {
        fail("model C and gamma must be positive and finite");
    }
    const auto pairs = machine_classes(classes.size(), scheme);
    if (machines.size() != pairs.size()) {
        fail("model has " + std::to_string(machines.size()) + " machines, expected " + std::to_string(pairs.size()));
    }
    for (std::size_t m = 0; m < machines.size(); ++m) {
        const Machine &mc = machines[m];
        if (mc.positive != pairs[m].first || mc.negative != pairs[m].second) {
            fail("machine " + std::to_string(m) + " has an unexpected class pair");
        }
        if (mc.coefs.size() != mc.sv_ids.size() || !std::isfinite(mc.bias)) {
            fail("machine " + std::to_string(m) + " is inconsistent");
        }
        for (std::size_t s = 0; s < mc.sv_ids.size(); ++s) {
            if (mc.sv_ids[s] >= static_cast<std::size_t>(pool.rows()) || (s > 0 && mc.sv_ids[s] <= mc.sv_ids[s - 1])) {
                fail("machine " + std::to_string(m) + " has invalid support-vector ids");
            }
            if (!std::isfinite(mc.coefs[s]) || std::abs(mc.coefs[s]) > C * (1.0 + 1e-9)) {
                fail("machine " + std::to_string(m) + " violates the box constraint");
            }
        }
    }
    if (standardizer && standardizer->dimension() != pool.cols()) {
        fail("standardizer dimension differs from support-vector dimension");
    }
    if (!pool.allFinite()) {
        fail("support vectors contain non-finite values");
    }
}

bool operator==(const MulticlassModel &a, const MulticlassModel &b) {
    return a.classes == b.classes && a.scheme == b.scheme && a.C == b.C && a.params == b.params &&
           same_matrix(a.pool, b.pool) && a.machines == b.machines && a.standardizer == b.standardizer &&
           a.fingerprint == b.fingerprint;
}

MulticlassModel train_multiclass(const Matrix &x, std::span<const ClassLabel> y, double C, const KernelParams &params,
                                 const TrainOptions &options) {
    if (static_cast<Eigen::Index>(y.size()) != x.rows()) {
        throw DimensionMismatch("label count " + std::to_string(y.size()) + " differs from sample count " +
                                std::to_string(x.rows()));
    }
    const auto index = detail::index_classes(y);
    if (index.classes.size() < 2) {
        throw InvalidArgument("multiclass training needs at least two distinct labels");
    }
    MulticlassModel model;
    model.classes = index.classes;
    model.scheme = options.scheme;
    model.C = C;
    model.params = params;
    Matrix z;
    if (options.standardize) {
        model.standardizer = fusion::Standardizer::fit(x);
        z = model.standardizer->apply(x);
    } else {
        z = x;
    }
    std::vector<std::size_t> rows(y.size());
    std::iota(rows.begin(), rows.end(), 0);
    model.machines = detail::fit_machines(z, nullptr, rows, index.index, index.classes.size(), C, params, options);

    std::map<std::size_t, std::size_t> pool_row;
    for (const auto &mc : model.machines) {
        for (const auto r : mc.sv_ids) {
            pool_row.emplace(r, 0);
        }
    }
    model.pool.resize(static_cast<Eigen::Index>(pool_row.size()), z.cols());
    Eigen::Index next = 0;
    for (auto &[row, slot] : pool_row) {
        slot = static_cast<std::size_t>(next);
        model.pool.row(next++) = z.row(static_cast<Eigen::Index>(row)).cast<float>().cast<double>();
    }
    for (auto &mc : model.machines) {
        for (auto &r : mc.sv_ids) {
            r = pool_row.at(r);
        }
    }
    return model;
}

}  // namespace pefusion::svm
