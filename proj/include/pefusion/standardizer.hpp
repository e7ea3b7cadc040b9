#pragma once

#include "pefusion/matrix.hpp"

#include <json.hpp>

namespace pefusion::fusion {

/// Per-column z-scoring fitted on a training matrix (population standard deviation).
class Standardizer {
  public:
    /// Columns whose std falls below this are treated as constant (std := 1).
    static constexpr double min_std = 1e-12;

    Standardizer() = default;
    Standardizer(Vector means, Vector stds);

    /// Requires at least two rows.
    static Standardizer fit(const Matrix &data);

    [[nodiscard]] Matrix apply(const Matrix &data) const;
    void apply_in_place(Matrix &data) const;

    [[nodiscard]] const Vector &means() const noexcept { return means_; }
    [[nodiscard]] const Vector &stds() const noexcept { return stds_; }
    [[nodiscard]] Eigen::Index dimension() const noexcept { return means_.size(); }

    [[nodiscard]] nlohmann::json to_json() const;
    static Standardizer from_json(const nlohmann::json &j);

    friend bool operator==(const Standardizer &a, const Standardizer &b) {
        return a.means_.size() == b.means_.size() && a.means_ == b.means_ && a.stds_ == b.stds_;
    }

  private:
    Vector means_;
    Vector stds_;
};

}  // namespace pefusion::fusion
