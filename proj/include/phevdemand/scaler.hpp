#pragma once

#include "phevdemand/svr.hpp"

#include <span>
#include <vector>

namespace phevdemand::data {

/// Min-max map of one dimension onto [0, 1]. A constant dimension
/// (max == min) maps every value to 0.5 and inverts to the constant.
struct MinMax {
    double min = 0.0;
    double max = 1.0;

    bool is_constant() const noexcept { return max == min; }
    double forward(double v) const noexcept;
    double inverse(double y) const noexcept;
};

/// Throws DomainError on fewer than 2 values or non-finite entries.
MinMax fit_min_max(std::span<const double> values);

/// Per-dimension input ranges plus the target range, fitted on one dataset
/// and carried with the trained model to undo the target scaling.
struct Scaler {
    std::vector<MinMax> inputs;
    MinMax target;

    static Scaler fit(const svr::DenseMatrix& inputs, std::span<const double> targets);

    svr::DenseMatrix transform_inputs(const svr::DenseMatrix& x) const;
    std::vector<double> transform_input(std::span<const double> row) const;
    svr::DenseMatrix inverse_inputs(const svr::DenseMatrix& y) const;
    std::vector<double> transform_targets(std::span<const double> t) const;
    std::vector<double> inverse_targets(std::span<const double> y) const;
};

}  // namespace phevdemand::data
