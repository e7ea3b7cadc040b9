#pragma once

// RBF kernel and the kernel-row sources used by the SMO solver.

#include "pefusion/matrix.hpp"

#include <cstddef>
#include <list>
#include <memory>
#include <span>
#include <vector>

namespace pefusion::svm {

struct KernelParams {
    double gamma = 0.001;

    void validate() const;
    friend bool operator==(const KernelParams &, const KernelParams &) = default;
};

/// exp(-gamma * ||x - y||^2).
[[nodiscard]] double rbf_kernel(std::span<const double> x, std::span<const double> y, const KernelParams &params);

/// Squared Euclidean distances between the rows of a and the rows of b (clamped at 0).
[[nodiscard]] Matrix squared_distances(const Matrix &a, const Matrix &b);
/// Symmetric variant with an exact zero diagonal.
[[nodiscard]] Matrix squared_distances(const Matrix &a);

/// Produces rows of the kernel matrix of one training subproblem of size().
class KernelRows {
  public:
    virtual ~KernelRows() = default;
    [[nodiscard]] virtual std::size_t size() const noexcept = 0;
    /// out[t] = k(x_i, x_t) for every t in the subproblem.
    virtual void compute_row(std::size_t i, std::span<double> out) const = 0;
    [[nodiscard]] virtual double diagonal(std::size_t i) const = 0;
};

/// Computes rows from feature vectors; the selected rows are copied into a contiguous block.
class RbfRowsFromData final : public KernelRows {
  public:
    RbfRowsFromData(const Matrix &data, std::span<const std::size_t> rows, const KernelParams &params);
    [[nodiscard]] std::size_t size() const noexcept override { return static_cast<std::size_t>(data_.rows()); }
    void compute_row(std::size_t i, std::span<double> out) const override;
    [[nodiscard]] double diagonal(std::size_t) const override { return 1.0; }

  private:
    Matrix data_;
    Vector norms_;
    double gamma_;
};

/// Reads rows out of a precomputed squared-distance matrix over a larger sample set.
class RbfRowsFromDistances final : public KernelRows {
  public:
    /// `distances` must outlive this object.
    RbfRowsFromDistances(const Matrix &distances, std::span<const std::size_t> rows, const KernelParams &params);
    [[nodiscard]] std::size_t size() const noexcept override { return rows_.size(); }
    void compute_row(std::size_t i, std::span<double> out) const override;
    [[nodiscard]] double diagonal(std::size_t) const override { return 1.0; }

  private:
    const Matrix *distances_;
    std::vector<std::size_t> rows_;
    double gamma_;
};

/// Least-recently-used cache of kernel rows bounded by a byte budget (always at least two rows).
class KernelCache {
  public:
    KernelCache(const KernelRows &source, std::size_t budget_bytes);

    /// The returned span stays valid until two further distinct rows have been requested.
    [[nodiscard]] std::span<const double> row(std::size_t i);

    [[nodiscard]] std::size_t capacity_rows() const noexcept { return capacity_; }
    [[nodiscard]] std::size_t hits() const noexcept { return hits_; }
    [[nodiscard]] std::size_t misses() const noexcept { return misses_; }

  private:
    const KernelRows &source_;
    std::size_t capacity_;
    std::vector<std::vector<double>> rows_;
    std::list<std::size_t> lru_;
    std::vector<std::list<std::size_t>::iterator> position_;
    std::vector<bool> cached_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

}  // namespace pefusion::svm
