#include "phevdemand/scaler.hpp"

#include "phevdemand/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace phevdemand::data {

double MinMax::forward(double v) const noexcept {
    if (is_constant()) {
        return 0.5;
    }
    return (v - min) / (max - min);
}

double MinMax::inverse(double y) const noexcept {
    if (is_constant()) {
        return min;
    }
    return min + y * (max - min);
}

MinMax fit_min_max(std::span<const double> values) {
    if (values.size() < 2) {
        throw DomainError("scaler needs at least 2 rows, got " + std::to_string(values.size()));
    }
    MinMax r{values[0], values[0]};
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw DomainError("scaler input contains a non-finite value");
        }
        r.min = std::min(r.min, v);
        r.max = std::max(r.max, v);
    }
    return r;
}

Scaler Scaler::fit(const svr::DenseMatrix& inputs, std::span<const double> targets) {
    if (inputs.rows() != targets.size()) {
        throw ShapeError("scaler fit: " + std::to_string(inputs.rows()) + " input rows but " +
                         std::to_string(targets.size()) + " targets");
    }
    Scaler s;
    s.target = fit_min_max(targets);
    std::vector<double> column(inputs.rows());
    for (std::size_t c = 0; c < inputs.cols(); ++c) {
        for (std::size_t r = 0; r < inputs.rows(); ++r) {
            column[r] = inputs(r, c);
        }
        s.inputs.push_back(fit_min_max(column));
    }
    return s;
}

std::vector<double> Scaler::transform_input(std::span<const double> row) const {
    if (row.size() != inputs.size()) {
        throw ShapeError("scaler expects " + std::to_string(inputs.size()) + " features, got " +
                         std::to_string(row.size()));
    }
    std::vector<double> out(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) {
        out[c] = inputs[c].forward(row[c]);
    }
    return out;
}

svr::DenseMatrix Scaler::transform_inputs(const svr::DenseMatrix& x) const {
    svr::DenseMatrix out;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        out.append_row(transform_input(x.row(r)));
    }
    return out;
}

svr::DenseMatrix Scaler::inverse_inputs(const svr::DenseMatrix& y) const {
    if (y.cols() != inputs.size()) {
        throw ShapeError("scaler expects " + std::to_string(inputs.size()) + " features, got " +
                         std::to_string(y.cols()));
    }
    svr::DenseMatrix out(y.rows(), y.cols());
    for (std::size_t r = 0; r < y.rows(); ++r) {
        for (std::size_t c = 0; c < y.cols(); ++c) {
            out(r, c) = inputs[c].inverse(y(r, c));
        }
    }
    return out;
}

std::vector<double> Scaler::transform_targets(std::span<const double> t) const {
    std::vector<double> out(t.size());
    std::transform(t.begin(), t.end(), out.begin(), [&](double v) { return target.forward(v); });
    return out;
}

std::vector<double> Scaler::inverse_targets(std::span<const double> y) const {
    std::vector<double> out(y.size());
    std::transform(y.begin(), y.end(), out.begin(), [&](double v) { return target.inverse(v); });
    return out;
}

}  // namespace phevdemand::data
