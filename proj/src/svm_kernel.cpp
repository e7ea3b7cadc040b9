#include "pefusion/svm/kernel.hpp"

#include "pefusion/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pefusion::svm {

void KernelParams::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw ConfigError("RBF gamma must be a positive finite number");
    }
}

double rbf_kernel(std::span<const double> x, std::span<const double> y, const KernelParams &params) {
    if (x.size() != y.size()) {
        throw DimensionMismatch("rbf_kernel: vectors of length " + std::to_string(x.size()) + " and " +
                                std::to_string(y.size()));
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        sq += d * d;
    }
    return std::exp(-params.gamma * sq);
}

Matrix squared_distances(const Matrix &a, const Matrix &b) {
    if (a.cols() != b.cols()) {
        throw DimensionMismatch("squared_distances: " + std::to_string(a.cols()) + " vs " + std::to_string(b.cols()) +
                                " columns");
    }
    const Vector na = a.rowwise().squaredNorm();
    const Vector nb = b.rowwise().squaredNorm();
    Matrix d = -2.0 * (a * b.transpose());
    d.colwise() += na;
    d.rowwise() += nb.transpose();
    return d.cwiseMax(0.0);
}

Matrix squared_distances(const Matrix &a) {
    const Vector na = a.rowwise().squaredNorm();
    Matrix d = Matrix::Zero(a.rows(), a.rows());
    d.selfadjointView<Eigen::Lower>().rankUpdate(a, -2.0);
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
        d(j, j) = 0.0;
        for (Eigen::Index i = j + 1; i < d.rows(); ++i) {
            const double v = std::max(0.0, d(i, j) + (na[i] + na[j]));
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

RbfRowsFromData::RbfRowsFromData(const Matrix &data, std::span<const std::size_t> rows, const KernelParams &params)
    : data_(static_cast<Eigen::Index>(rows.size()), data.cols()), gamma_(params.gamma) {
    params.validate();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        data_.row(static_cast<Eigen::Index>(i)) = data.row(static_cast<Eigen::Index>(rows[i]));
    }
    norms_ = data_.rowwise().squaredNorm();
}

void RbfRowsFromData::compute_row(std::size_t i, std::span<double> out) const {
    const auto ii = static_cast<Eigen::Index>(i);
    Eigen::Map<Vector> result(out.data(), static_cast<Eigen::Index>(out.size()));
    result.noalias() = data_ * data_.row(ii).transpose();
    const double ni = norms_[ii];
    for (Eigen::Index t = 0; t < result.size(); ++t) {
        result[t] = std::exp(-gamma_ * std::max(0.0, ni + norms_[t] - 2.0 * result[t]));
    }
    result[ii] = 1.0;
}

RbfRowsFromDistances::RbfRowsFromDistances(const Matrix &distances, std::span<const std::size_t> rows,
                                           const KernelParams &params)
    : distances_(&distances), rows_(rows.begin(), rows.end()), gamma_(params.gamma) {
    params.validate();
}

void RbfRowsFromDistances::compute_row(std::size_t i, std::span<double> out) const {
    const auto *src = distances_->row(static_cast<Eigen::Index>(rows_[i])).data();
    for (std::size_t t = 0; t < rows_.size(); ++t) {
        out[t] = std::exp(-gamma_ * src[rows_[t]]);
    }
}

KernelCache::KernelCache(const KernelRows &source, std::size_t budget_bytes)
    : source_(source),
      capacity_(std::max<std::size_t>(2, budget_bytes / std::max<std::size_t>(1, source.size() * sizeof(double)))),
      rows_(source.size()),
      position_(source.size()),
      cached_(source.size(), false) {
    capacity_ = std::min(capacity_, std::max<std::size_t>(2, source.size()));
}

std::span<const double> KernelCache::row(std::size_t i) {
    if (cached_[i]) {
        ++hits_;
        lru_.splice(lru_.begin(), lru_, position_[i]);
        return rows_[i];
    }
    ++misses_;
    std::vector<double> buffer;
    if (lru_.size() >= capacity_) {
        const std::size_t victim = lru_.back();
        lru_.pop_back();
        cached_[victim] = false;
        buffer = std::move(rows_[victim]);
        rows_[victim] = {};
    }
    buffer.resize(source_.size());
    source_.compute_row(i, buffer);
    rows_[i] = std::move(buffer);
    lru_.push_front(i);
    position_[i] = lru_.begin();
    cached_[i] = true;
    return rows_[i];
}

}  // namespace pefusion::svm
