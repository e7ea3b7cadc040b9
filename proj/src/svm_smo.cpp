#include "pefusion/svm/smo.hpp"

#include "pefusion/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace pefusion::svm {

namespace {

constexpr double tau = 1e-12;
constexpr double inf = std::numeric_limits<double>::infinity();

class Solver {
  public:
    Solver(const KernelRows &kernel, std::span<const std::int8_t> y, double C, const SolverOptions &options)
        : kernel_(kernel), cache_(kernel, options.cache_bytes), y_(y), C_(C), tol_(options.tol),
          n_(kernel.size()), alpha_(n_, 0.0), grad_(n_, -1.0), diag_(n_) {
        for (std::size_t i = 0; i < n_; ++i) {
            diag_[i] = kernel_.diagonal(i);
        }
        max_iter_ = options.max_iterations != 0 ? options.max_iterations
                                                : std::max<std::size_t>(10'000'000, 100 * n_);
    }

    DualSolution run() {
        DualSolution out;
        std::size_t iter = 0;
        for (; iter < max_iter_; ++iter) {
            std::size_t i = 0;
            std::size_t j = 0;
            if (!select_pair(i, j)) {
                out.converged = true;
                break;
            }
            update(i, j);
        }
        out.iterations = iter;
        out.bias = -compute_rho();
        double obj = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            obj += alpha_[i] * (grad_[i] - 1.0);
        }
        out.objective = 0.5 * obj;
        out.alpha = std::move(alpha_);
        return out;
    }

  private:
    [[nodiscard]] bool at_upper(std::size_t t) const { return alpha_[t] >= C_; }
    [[nodiscard]] bool at_lower(std::size_t t) const { return alpha_[t] <= 0.0; }
    [[nodiscard]] bool in_up(std::size_t t) const { return y_[t] > 0 ? !at_upper(t) : !at_lower(t); }
    [[nodiscard]] bool in_low(std::size_t t) const { return y_[t] > 0 ? !at_lower(t) : !at_upper(t); }

    bool select_pair(std::size_t &out_i, std::size_t &out_j) {
        double gmax = -inf;
        std::size_t i = n_;
        for (std::size_t t = 0; t < n_; ++t) {
            if (in_up(t)) {
                const double v = -y_[t] * grad_[t];
                if (v >= gmax) {
                    gmax = v;
                    i = t;
                }
            }
        }
        if (i == n_) {
            return false;
        }
        const auto ki = cache_.row(i);
        double gmax2 = -inf;
        double best = inf;
        std::size_t j = n_;
        for (std::size_t t = 0; t < n_; ++t) {
            if (!in_low(t)) {
                continue;
            }
            const double v = y_[t] * grad_[t];
            gmax2 = std::max(gmax2, v);
            const double diff = gmax + v;
            if (diff > 0.0) {
                // Curvature of the objective along the feasible direction (e_i/y_i - e_t/y_t).
                double quad = diag_[i] + diag_[t] - 2.0 * ki[t];
                if (quad <= 0.0) {
                    quad = tau;
                }
                const double gain = -(diff * diff) / quad;
                if (gain <= best) {
                    best = gain;
                    j = t;
                }
            }
        }
        if (gmax + gmax2 < tol_ || j == n_) {
            return false;
        }
        out_i = i;
        out_j = j;
        return true;
    }

    void update(std::size_t i, std::size_t j) {
        const auto ki = cache_.row(i);
        const auto kj = cache_.row(j);
        // Q_ij = y_i y_j K_ij.
        const double qij = y_[i] * y_[j] * ki[j];
        const double old_i = alpha_[i];
        const double old_j = alpha_[j];
        double &ai = alpha_[i];
        double &aj = alpha_[j];
        if (y_[i] != y_[j]) {
            double quad = diag_[i] + diag_[j] + 2.0 * qij;
            if (quad <= 0.0) {
                quad = tau;
            }
            const double delta = (-grad_[i] - grad_[j]) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0.0) {
                if (aj < 0.0) {
                    aj = 0.0;
                    ai = diff;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = -diff;
            }
            if (diff > 0.0) {
                if (ai > C_) {
                    ai = C_;
                    aj = C_ - diff;
                }
            } else if (aj > C_) {
                aj = C_;
                ai = C_ + diff;
            }
        } else {
            double quad = diag_[i] + diag_[j] - 2.0 * qij;
            if (quad <= 0.0) {
                quad = tau;
            }
            const double delta = (grad_[i] - grad_[j]) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > C_) {
                if (ai > C_) {
                    ai = C_;
                    aj = sum - C_;
                }
                if (aj > C_) {
                    aj = C_;
                    ai = sum - C_;
                }
            } else {
                if (aj < 0.0) {
                    aj = 0.0;
                    ai = sum;
                }
                if (ai < 0.0) {
                    ai = 0.0;
                    aj = sum;
                }
            }
        }
        const double di = ai - old_i;
        const double dj = aj - old_j;
        // G_t += Q_ti * da_i + Q_tj * da_j.
        const double si = y_[i] * di;
        const double sj = y_[j] * dj;
        for (std::size_t t = 0; t < n_; ++t) {
            grad_[t] += y_[t] * (ki[t] * si + kj[t] * sj);
        }
    }

    double compute_rho() const {
        double ub = inf;
        double lb = -inf;
        double sum_free = 0.0;
        std::size_t n_free = 0;
        for (std::size_t t = 0; t < n_; ++t) {
            const double yg = y_[t] * grad_[t];
            if (at_upper(t)) {
                if (y_[t] < 0) {
                    ub = std::min(ub, yg);
                } else {
                    lb = std::max(lb, yg);
                }
            } else if (at_lower(t)) {
                if (y_[t] > 0) {
                    ub = std::min(ub, yg);
                } else {
                    lb = std::max(lb, yg);
                }
            } else {
                ++n_free;
                sum_free += yg;
            }
        }
        if (n_free > 0) {
            return sum_free / static_cast<double>(n_free);
        }
        return 0.5 * (ub + lb);
    }

    const KernelRows &kernel_;
    KernelCache cache_;
    std::span<const std::int8_t> y_;
    double C_;
    double tol_;
    std::size_t n_;
    std::size_t max_iter_ = 0;
    std::vector<double> alpha_;
    std::vector<double> grad_;
    std::vector<double> diag_;
};

}  // namespace

DualSolution solve_dual(const KernelRows &kernel, std::span<const std::int8_t> labels, double C,
                        const SolverOptions &options) {
    if (labels.size() != kernel.size()) {
        throw DimensionMismatch("label count " + std::to_string(labels.size()) + " differs from kernel size " +
                                std::to_string(kernel.size()));
    }
    if (!(C > 0.0) || !std::isfinite(C)) {
        throw ConfigError("SVM regularisation C must be positive and finite");
    }
    if (!(options.tol > 0.0)) {
        throw ConfigError("SMO tolerance must be positive");
    }
    bool pos = false;
    bool neg = false;
    for (const auto y : labels) {
        if (y == 1) {
            pos = true;
        } else if (y == -1) {
            neg = true;
        } else {
            throw InvalidArgument("binary SVM labels must be -1 or +1");
        }
    }
    if (labels.size() < 2 || !pos || !neg) {
        throw InvalidArgument("binary SVM training needs at least one sample of each class");
    }
    return Solver(kernel, labels, C, options).run();
}

double BinarySvmModel::decision(std::span<const double> x) const {
    if (static_cast<Eigen::Index>(x.size()) != support_vectors.cols()) {
        throw DimensionMismatch("input has " + std::to_string(x.size()) + " features, model expects " +
                                std::to_string(support_vectors.cols()));
    }
    double f = bias;
    for (Eigen::Index s = 0; s < support_vectors.rows(); ++s) {
        const auto sv = support_vectors.row(s);
        f += dual_coefs[static_cast<std::size_t>(s)] *
             rbf_kernel({sv.data(), static_cast<std::size_t>(sv.size())}, x, params);
    }
    return f;
}

std::vector<double> BinarySvmModel::decisions(const Matrix &x) const {
    if (x.cols() != support_vectors.cols()) {
        throw DimensionMismatch("input has " + std::to_string(x.cols()) + " features, model expects " +
                                std::to_string(support_vectors.cols()));
    }
    const Matrix d = squared_distances(x, support_vectors);
    const Eigen::Map<const Vector> coefs(dual_coefs.data(), static_cast<Eigen::Index>(dual_coefs.size()));
    const Vector f = (-params.gamma * d.array()).exp().matrix() * coefs;
    std::vector<double> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        out[static_cast<std::size_t>(r)] = f[r] + bias;
    }
    return out;
}

BinarySvmModel smo_train_binary(const Matrix &x, std::span<const int> labels, double C, const KernelParams &params,
                                const SolverOptions &options) {
    params.validate();
    if (static_cast<Eigen::Index>(labels.size()) != x.rows()) {
        throw DimensionMismatch("label count differs from sample count");
    }
    std::vector<std::int8_t> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 1 && labels[i] != -1) {
            throw InvalidArgument("binary SVM labels must be -1 or +1");
        }
        y[i] = static_cast<std::int8_t>(labels[i]);
    }
    std::vector<std::size_t> all(labels.size());
    std::iota(all.begin(), all.end(), 0);
    const RbfRowsFromData kernel(x, all, params);
    auto sol = solve_dual(kernel, y, C, options);

    BinarySvmModel model;
    model.params = params;
    model.C = C;
    model.bias = sol.bias;
    model.iterations = sol.iterations;
    model.converged = sol.converged;
    for (std::size_t i = 0; i < sol.alpha.size(); ++i) {
        if (sol.alpha[i] > 0.0) {
            model.support_indices.push_back(i);
            model.dual_coefs.push_back(sol.alpha[i] * y[i]);
        }
    }
    model.support_vectors.resize(static_cast<Eigen::Index>(model.support_indices.size()), x.cols());
    for (std::size_t s = 0; s < model.support_indices.size(); ++s) {
        model.support_vectors.row(static_cast<Eigen::Index>(s)) = x.row(static_cast<Eigen::Index>(model.support_indices[s]));
    }
    return model;
}

}  // namespace pefusion::svm
