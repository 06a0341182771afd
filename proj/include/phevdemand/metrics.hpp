#pragma once

#include <span>

namespace phevdemand::eval {

enum class MapeMode { Percent, Fraction };

/// (1/N) sum (t_i - f_i)^2. Throws ShapeError on a length mismatch or empty input.
double mse(std::span<const double> targets, std::span<const double> predictions);

/// (1/N) sum |t_i - f_i| / |t_i|, times 100 in percent mode. Throws
/// ZeroTargetError naming the first zero target.
double mape(std::span<const double> targets, std::span<const double> predictions, MapeMode mode = MapeMode::Fraction);

}  // namespace phevdemand::eval
