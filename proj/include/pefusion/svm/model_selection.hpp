#pragma once

#include "pefusion/matrix.hpp"
#include "pefusion/svm/multiclass.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pefusion::svm {

struct CvOptions {
    std::size_t folds = 3;
    std::uint64_t seed = 0;
    TrainOptions train;
    /// Each fold precomputes pairwise distances when n*n*8 bytes fit in this budget.
    std::size_t distance_budget_bytes = std::size_t{1} << 30;
};

/// Fold id per sample. Classes are shuffled independently and dealt round-robin, so every fold
/// receives floor or ceil of each class's share. Requires folds >= 2 and every class to have at
/// least `folds` members, except leave-one-out (folds == n) which needs two members per class.
[[nodiscard]] std::vector<std::size_t> stratified_folds(std::span<const ClassLabel> y, std::size_t folds,
                                                        std::uint64_t seed);

/// Accuracy of each fold in fold order. The standardizer (if enabled) is fitted on the training part only.
[[nodiscard]] std::vector<double> kfold_cv(const Matrix &x, std::span<const ClassLabel> y, double C,
                                           const KernelParams &params, const CvOptions &options = {});

struct GridCell {
    double C = 0.0;
    double gamma = 0.0;
    std::vector<double> fold_accuracies;
    double mean_accuracy = 0.0;
};

struct GridSearchReport {
    std::vector<GridCell> cells;
    double best_C = 0.0;
    double best_gamma = 0.0;
    double best_mean_accuracy = 0.0;
    std::size_t folds = 0;
    std::uint64_t seed = 0;
    std::size_t fit_count = 0;
    std::size_t samples = 0;

    [[nodiscard]] nlohmann::json to_json() const;
};

struct GridSearchResult {
    GridSearchReport report;
    /// Refit on all samples with the winning cell.
    MulticlassModel model;
};

inline const std::vector<double> default_C_grid{1.0, 10.0, 100.0, 200.0};
inline const std::vector<double> default_gamma_grid{0.01, 0.001, 0.0001};

/// Cross-validates every (C, gamma) pair; the winner has the highest mean accuracy, ties going to the
/// smaller C and then the smaller gamma.
[[nodiscard]] GridSearchResult grid_search(const Matrix &x, std::span<const ClassLabel> y,
                                           std::span<const double> C_grid, std::span<const double> gamma_grid,
                                           const CvOptions &options = {});

/// Parses "C=1,10;gamma=0.001" (either order, whitespace ignored).
struct GridSpec {
    std::vector<double> C;
    std::vector<double> gamma;
};
[[nodiscard]] GridSpec parse_grid(std::string_view text);

struct Evaluation {
    std::vector<ClassLabel> classes;
    /// Rows are true classes, columns predicted classes.
    std::vector<std::vector<std::size_t>> confusion;
    double accuracy = 0.0;
    /// NaN-free: a class never predicted (or never present) scores 0.
    std::vector<double> precision;
    std::vector<double> recall;
    std::size_t samples = 0;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Tallies predictions against truth over the given class list; labels outside it are an error.
[[nodiscard]] Evaluation tally(std::span<const ClassLabel> classes, std::span<const ClassLabel> truth,
                               std::span<const ClassLabel> predicted);

[[nodiscard]] Evaluation evaluate(const MulticlassModel &model, const Matrix &x, std::span<const ClassLabel> y,
                                  unsigned threads = default_threads());

}  // namespace pefusion::svm
