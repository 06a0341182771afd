#include "phevdemand/metrics.hpp"

#include "phevdemand/error.hpp"

#include <cmath>
#include <string>

namespace phevdemand::eval {

namespace {

void check_shapes(std::span<const double> t, std::span<const double> f) {
    if (t.size() != f.size()) {
        throw ShapeError("metric inputs differ in length: " + std::to_string(t.size()) + " targets, " +
                         std::to_string(f.size()) + " predictions");
    }
    if (t.empty()) {
        throw ShapeError("metric inputs are empty");
    }
}

}  // namespace

double mse(std::span<const double> targets, std::span<const double> predictions) {
    check_shapes(targets, predictions);
    double sum = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double d = targets[i] - predictions[i];
        sum += d * d;
    }
    return sum / static_cast<double>(targets.size());
}

double mape(std::span<const double> targets, std::span<const double> predictions, MapeMode mode) {
    check_shapes(targets, predictions);
    double sum = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] == 0.0) {
            throw ZeroTargetError(i);
        }
        sum += std::fabs(targets[i] - predictions[i]) / std::fabs(targets[i]);
    }
    const double fraction = sum / static_cast<double>(targets.size());
    return mode == MapeMode::Percent ? 100.0 * fraction : fraction;
}

}  // namespace phevdemand::eval
