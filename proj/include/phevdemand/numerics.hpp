#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace phevdemand::numerics {

inline constexpr double kPi = 3.14159265358979323846;

double normal_pdf(double z);
double normal_cdf(double z);

/// Exponentially scaled modified Bessel function exp(-x) * I0(x), x >= 0.
double bessel_i0e(double x);

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Nodes/weights by Newton iteration on P_n; cached per order.
const GaussLegendreRule& gauss_legendre(std::size_t order);

/// Composite Gauss-Legendre over [a, b] with `panels` equal panels.
double integrate(const std::function<double(double)>& f, double a, double b,
                 std::size_t panels = 64, std::size_t order = 10);

/// Kahan-compensated sum.
double stable_sum(std::span<const double> values);

}  // namespace phevdemand::numerics
