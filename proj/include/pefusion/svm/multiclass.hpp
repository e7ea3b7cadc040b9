#pragma once

#include "pefusion/matrix.hpp"
#include "pefusion/parallel.hpp"
#include "pefusion/standardizer.hpp"
#include "pefusion/svm/kernel.hpp"
#include "pefusion/svm/smo.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pefusion::svm {

using ClassLabel = std::uint32_t;

enum class Scheme { one_vs_one, one_vs_rest };

[[nodiscard]] std::string_view to_string(Scheme scheme);
/// Accepts "ovo" / "one-vs-one" and "ovr" / "one-vs-rest".
[[nodiscard]] Scheme scheme_from_string(std::string_view text);

/// One binary machine. Class indices refer to MulticlassModel::classes.
struct Machine {
    static constexpr std::size_t rest = static_cast<std::size_t>(-1);

    std::size_t positive = 0;
    /// `rest` for one-vs-rest machines.
    std::size_t negative = rest;
    double bias = 0.0;
    std::vector<double> coefs;
    /// Rows of the support-vector pool, strictly increasing.
    std::vector<std::size_t> sv_ids;
    std::size_t iterations = 0;
    bool converged = true;

    friend bool operator==(const Machine &, const Machine &) = default;
};

struct TrainOptions {
    Scheme scheme = Scheme::one_vs_one;
    SolverOptions solver;
    unsigned threads = default_threads();
    /// Fit a Standardizer on the training matrix and embed it in the model.
    bool standardize = true;
};

struct MulticlassModel {
    /// Sorted distinct training labels.
    std::vector<ClassLabel> classes;
    Scheme scheme = Scheme::one_vs_one;
    double C = 1.0;
    KernelParams params;
    /// Support vectors shared by all machines, in standardized space when a standardizer is present.
    Matrix pool;
    /// One-vs-one: pairs (i<j) in lexicographic order. One-vs-rest: one machine per class.
    std::vector<Machine> machines;
    std::optional<fusion::Standardizer> standardizer;
    /// Fingerprint of the feature pipeline that produced the training matrix (may be empty).
    std::string fingerprint;

    [[nodiscard]] Eigen::Index dimension() const;
    /// n x machines matrix of binary decision values for raw (unstandardized) inputs.
    [[nodiscard]] Matrix decision_values(const Matrix &x, unsigned threads = default_threads()) const;
    [[nodiscard]] std::vector<ClassLabel> predict(const Matrix &x, unsigned threads = default_threads()) const;
    /// Standalone binary model of machine m (standardization not included).
    [[nodiscard]] BinarySvmModel binary(std::size_t m) const;
    /// Checks structural invariants; throws FormatError(bad_value) on violation.
    void validate() const;

    friend bool operator==(const MulticlassModel &a, const MulticlassModel &b);
};

/// Machine count for k classes under a scheme.
[[nodiscard]] std::size_t machine_count(std::size_t classes, Scheme scheme);

/// Combines one row of decision values into a class index.
/// One-vs-one: majority vote (decision > 0 votes for the first class of the pair); ties go to the larger
/// sum of |decision| over the machines each tied class won, then to the smaller index.
/// One-vs-rest: largest decision, ties to the smaller index.
[[nodiscard]] std::size_t combine_decisions(std::span<const double> decisions, std::size_t classes, Scheme scheme);

[[nodiscard]] MulticlassModel train_multiclass(const Matrix &x, std::span<const ClassLabel> y, double C,
                                               const KernelParams &params, const TrainOptions &options = {});

namespace detail {

/// Sorted distinct labels and the class index of every sample.
struct ClassIndex {
    std::vector<ClassLabel> classes;
    std::vector<std::size_t> index;
};
[[nodiscard]] ClassIndex index_classes(std::span<const ClassLabel> y);

/// Trains all machines on data rows `rows`; sv_ids in the result are rows of `data`.
/// With `distances` (squared distances over all rows of data) kernel rows are read from it.
[[nodiscard]] std::vector<Machine> fit_machines(const Matrix &data, const Matrix *distances,
                                                std::span<const std::size_t> rows,
                                                std::span<const std::size_t> class_of_row, std::size_t classes,
                                                double C, const KernelParams &params, const TrainOptions &options);

}  // namespace detail

}  // namespace pefusion::svm
