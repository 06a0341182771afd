#pragma once

// Independent reference computations used only by the tests. They share no
// code paths with the library beyond distribution survival functions.

#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

/// Wrapped normal slot masses on centred bins, summing 2K + 1 wraps in long
/// double straight from erfc.
inline std::vector<double> wrapped_normal_pmf(double mu, double sigma_sq, std::size_t slots, int wraps = 12) {
    const long double sigma = std::sqrt(static_cast<long double>(sigma_sq));
    const long double width = 24.0L / static_cast<long double>(slots);
    const auto cdf = [&](long double x) { return 0.5L * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0L))); };
    std::vector<double> pmf(slots);
    for (std::size_t s = 0; s < slots; ++s) {
        long double mass = 0.0L;
        const long double lo = (static_cast<long double>(s) - 0.5L) * width;
        for (int k = -wraps; k <= wraps; ++k) {
            mass += cdf(lo + width + 24.0L * k) - cdf(lo + 24.0L * k);
        }
        pmf[s] = static_cast<double>(mass);
    }
    return pmf;
}

/// Eq.-6 style demand evaluated on an unrolled [0, 48) timeline: the window
/// [a, a + d) is laid out once and t is tested both as t and t + 24.
inline double unrolled_demand(double arrival, double duration, double power, double t) {
    const auto inside = [&](double x) { return x >= arrival && x < arrival + duration; };
    return (inside(t) || inside(t + 24.0)) ? power : 0.0;
}

/// Expected slot-mean demand by direct double quadrature:
///   (p / width) * int_slot int_0^24 f(a) S((t - a) mod 24) da dt
/// with f the wrapped normal density and S the duration survival function.
inline std::vector<double> curve_by_quadrature(double mu, double sigma_sq, const std::function<double(double)>& survival,
                                               double power, std::size_t slots, std::size_t a_cells = 4800,
                                               std::size_t t_cells = 24) {
    const double width = 24.0 / static_cast<double>(slots);
    const double sigma = std::sqrt(sigma_sq);
    const double pi = 3.14159265358979323846;
    std::vector<double> density(a_cells);
    const double da = 24.0 / static_cast<double>(a_cells);
    for (std::size_t k = 0; k < a_cells; ++k) {
        const double a = (static_cast<double>(k) + 0.5) * da;
        double f = 0.0;
        for (int w = -6; w <= 6; ++w) {
            const double z = (a + 24.0 * w - mu) / sigma;
            f += std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * pi));
        }
        density[k] = f;
    }
    std::vector<double> out(slots, 0.0);
    for (std::size_t i = 0; i < slots; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < t_cells; ++j) {
            const double t = (static_cast<double>(i) + (static_cast<double>(j) + 0.5) / static_cast<double>(t_cells)) * width;
            double inner = 0.0;
            for (std::size_t k = 0; k < a_cells; ++k) {
                const double a = (static_cast<double>(k) + 0.5) * da;
                const double lag = std::fmod(t - a + 24.0, 24.0);
                inner += density[k] * survival(lag);
            }
            acc += inner * da;
        }
        out[i] = power * acc / static_cast<double>(t_cells);
    }
    return out;
}

struct SampleMoments {
    double mean;
    double variance;
    double mean_se;
    double variance_se;
};

/// Sample mean and variance with their standard errors.
template <typename Sampler>
SampleMoments sample_moments(Sampler&& draw, std::size_t n) {
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = draw();
        s1 += xs[i];
    }
    const double mean = s1 / static_cast<double>(n);
    for (double x : xs) {
        const double d = x - mean;
        s2 += d * d;
        s3 += d * d * d;
        s4 += d * d * d * d;
    }
    const double var = s2 / static_cast<double>(n - 1);
    const double m4 = s4 / static_cast<double>(n);
    return {mean, var, std::sqrt(var / static_cast<double>(n)),
            std::sqrt(std::max(0.0, m4 - var * var) / static_cast<double>(n))};
}

}  // namespace oracle
