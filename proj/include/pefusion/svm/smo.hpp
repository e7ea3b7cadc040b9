#pragma once

// Soft-margin C-SVM dual solved by sequential minimal optimisation.
//
//   min_a  1/2 a^T Q a - e^T a   s.t.  y^T a = 0,  0 <= a_i <= C,   Q_ij = y_i y_j k(x_i, x_j)
//
// Working pairs: i maximises the KKT violation over I_up, j is the member of I_low with the largest
// second-order decrease of the objective. The solver stops once max_{I_up} -y G - min_{I_low} -y G < tol.

#include "pefusion/matrix.hpp"
#include "pefusion/svm/kernel.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pefusion::svm {

struct SolverOptions {
    double tol = 1e-3;
    /// 0 selects max(10'000'000, 100 n).
    std::size_t max_iterations = 0;
    std::size_t cache_bytes = std::size_t{256} << 20;
};

struct DualSolution {
    std::vector<double> alpha;
    /// Decision function offset: f(x) = sum_i alpha_i y_i k(x_i, x) + bias.
    double bias = 0.0;
    double objective = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Solves the dual for labels in {-1, +1}. Throws InvalidArgument unless both labels occur.
[[nodiscard]] DualSolution solve_dual(const KernelRows &kernel, std::span<const std::int8_t> labels, double C,
                                      const SolverOptions &options = {});

struct BinarySvmModel {
    Matrix support_vectors;
    /// alpha_i * y_i per support vector.
    std::vector<double> dual_coefs;
    /// Row of each support vector in the training matrix.
    std::vector<std::size_t> support_indices;
    double bias = 0.0;
    KernelParams params;
    double C = 1.0;
    std::size_t iterations = 0;
    bool converged = false;

    [[nodiscard]] double decision(std::span<const double> x) const;
    [[nodiscard]] std::vector<double> decisions(const Matrix &x) const;
    /// +1 when decision >= 0, else -1.
    [[nodiscard]] int predict(std::span<const double> x) const { return decision(x) >= 0.0 ? 1 : -1; }
};

/// Trains on the rows of `x` with labels in {-1, +1}.
[[nodiscard]] BinarySvmModel smo_train_binary(const Matrix &x, std::span<const int> labels, double C,
                                              const KernelParams &params, const SolverOptions &options = {});

}  // namespace pefusion::svm
