#include "pefusion/standardizer.hpp"

#include "pefusion/error.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace pefusion::fusion {

Standardizer::Standardizer(Vector means, Vector stds) : means_(std::move(means)), stds_(std::move(stds)) {
    if (means_.size() != stds_.size()) {
        throw DimensionMismatch("standardizer means and stds differ in length");
    }
    for (Eigen::Index i = 0; i < stds_.size(); ++i) {
        if (!(stds_[i] > 0.0) || !std::isfinite(stds_[i]) || !std::isfinite(means_[i])) {
            throw InvalidArgument("standardizer statistics must be finite with positive stds");
        }
    }
}

Standardizer Standardizer::fit(const Matrix &data) {
    if (data.rows() < 2) {
        throw InvalidArgument("fitting a standardizer needs at least 2 rows, got " + std::to_string(data.rows()));
    }
    const auto n = static_cast<double>(data.rows());
    Vector means = data.colwise().sum().transpose() / n;
    Vector stds(data.cols());
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
        const double var = (data.col(c).array() - means[c]).square().sum() / n;
        const double sd = std::sqrt(var);
        stds[c] = sd < min_std ? 1.0 : sd;
    }
    return {std::move(means), std::move(stds)};
}

void Standardizer::apply_in_place(Matrix &data) const {
    if (data.cols() != means_.size()) {
        throw DimensionMismatch("matrix has " + std::to_string(data.cols()) + " columns, standardizer expects " +
                                std::to_string(means_.size()));
    }
    const Eigen::RowVectorXd mu = means_.transpose();
    const Eigen::RowVectorXd inv = stds_.cwiseInverse().transpose();
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        data.row(r) = (data.row(r) - mu).cwiseProduct(inv);
    }
}

Matrix Standardizer::apply(const Matrix &data) const {
    Matrix out = data;
    apply_in_place(out);
    return out;
}

nlohmann::json Standardizer::to_json() const {
    return {{"means", std::vector<double>(means_.begin(), means_.end())},
            {"stds", std::vector<double>(stds_.begin(), stds_.end())}};
}

Standardizer Standardizer::from_json(const nlohmann::json &j) {
    try {
        const auto m = j.at("means").get<std::vector<double>>();
        const auto s = j.at("stds").get<std::vector<double>>();
        return {Eigen::Map<const Vector>(m.data(), static_cast<Eigen::Index>(m.size())),
                Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()))};
    } catch (const nlohmann::json::exception &e) {
        throw FormatError(FormatError::Kind::bad_header, std::string("malformed standardizer: ") + e.what());
    }
}

}  // namespace pefusion::fusion
