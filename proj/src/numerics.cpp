#include "phevdemand/numerics.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace phevdemand::numerics {

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi);
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double bessel_i0e(double x) {
    x = std::fabs(x);
    if (x < 500.0) {
        return std::cyl_bessel_i(0.0, x) * std::exp(-x);
    }
    // Asymptotic expansion; terms are (1*3*...*(2k-1))^2 / (k! (8x)^k).
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 8; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= odd * odd / (k * 8.0 * x);
        sum += term;
    }
    return sum / std::sqrt(2.0 * kPi * x);
}

namespace {

GaussLegendreRule build_rule(std::size_t order) {
    GaussLegendreRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const auto n = static_cast<double>(order);
    for (std::size_t i = 0; i < (order + 1) / 2; ++i) {
        double x = std::cos(kPi * (static_cast<double>(i) + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= order; ++k) {
                const auto kd = static_cast<double>(k);
                const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-16) {
                break;
            }
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[order - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    return rule;
}

}  // namespace

const GaussLegendreRule& gauss_legendre(std::size_t order) {
    if (order < 2) {
        throw std::invalid_argument("gauss_legendre: order must be >= 2");
    }
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<GaussLegendreRule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[order];
    if (!slot) {
        slot = std::make_unique<GaussLegendreRule>(build_rule(order));
    }
    return *slot;
}

double integrate(const std::function<double(double)>& f, double a, double b, std::size_t panels,
                 std::size_t order) {
    if (b <= a || panels == 0) {
        return 0.0;
    }
    const auto& rule = gauss_legendre(order);
    const double width = (b - a) / static_cast<double>(panels);
    double total = 0.0;
    double carry = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        const double lo = a + width * static_cast<double>(p);
        const double mid = lo + 0.5 * width;
        double panel = 0.0;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
            panel += rule.weights[k] * f(mid + 0.5 * width * rule.nodes[k]);
        }
        panel *= 0.5 * width;
        const double y = panel - carry;
        const double t = total + y;
        carry = (t - total) - y;
        total = t;
    }
    return total;
}

double stable_sum(std::span<const double> values) {
    double total = 0.0;
    double carry = 0.0;
    for (double v : values) {
        const double y = v - carry;
        const double t = total + y;
        carry = (t - total) - y;
        total = t;
    }
    return total;
}

}  // namespace phevdemand::numerics
