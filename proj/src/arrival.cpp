#include "phevdemand/arrival.hpp"

#include "phevdemand/error.hpp"
#include "phevdemand/numerics.hpp"

#include <cmath>
#include <string>

namespace phevdemand::demand {
namespace {

double reduce_hour(double hour) {
    double r = std::fmod(hour, kHoursPerDay);
    if (r < 0.0) {
        r += kHoursPerDay;
    }
    return r >= kHoursPerDay ? 0.0 : r;
}

// Two-sided tail beyond 7.2 sigma is ~6e-13.
constexpr double kTailSigmas = 7.2;

}  // namespace

ArrivalTimeDist ArrivalTimeDist::wrapped_normal(double mu, double sigma_sq) {
    if (!std::isfinite(mu)) {
        throw DomainError("arrival mu must be finite");
    }
    if (!(sigma_sq > 0.0) || !std::isfinite(sigma_sq)) {
        throw DomainError("arrival sigma_sq must be > 0, got " + std::to_string(sigma_sq));
    }
    return {reduce_hour(mu), sigma_sq};
}

ArrivalTimeDist ArrivalTimeDist::point_mass(double hour) {
    if (!std::isfinite(hour)) {
        throw DomainError("arrival hour must be finite");
    }
    return {reduce_hour(hour), 0.0};
}

ArrivalTimeDist ArrivalTimeDist::shifted(double hours) const {
    return {reduce_hour(mu_ + hours), sigma_sq_};
}

int ArrivalTimeDist::wrap_count() const noexcept {
    if (is_point_mass()) {
        return 0;
    }
    const double sigma = std::sqrt(sigma_sq_);
    return 1 + static_cast<int>(std::ceil(kTailSigmas * sigma / kHoursPerDay));
}

double ArrivalTimeDist::interval_mass(double lo, double hi) const {
    if (hi <= lo) {
        return 0.0;
    }
    if (is_point_mass()) {
        return (mu_ >= lo && mu_ < hi) ? 1.0 : 0.0;
    }
    const double sigma = std::sqrt(sigma_sq_);
    const int wraps = wrap_count();
    double mass = 0.0;
    for (int k = -wraps; k <= wraps; ++k) {
        const double shift = kHoursPerDay * k - mu_;
        const double zlo = (lo + shift) / sigma;
        const double zhi = (hi + shift) / sigma;
        // Difference of upper tails on the right half keeps precision far from mu.
        if (zlo > 0.0) {
            mass += numerics::normal_cdf(-zlo) - numerics::normal_cdf(-zhi);
        } else {
            mass += numerics::normal_cdf(zhi) - numerics::normal_cdf(zlo);
        }
    }
    return mass;
}

double ArrivalTimeDist::sample(std::mt19937_64& rng) const {
    if (is_point_mass()) {
        return mu_;
    }
    std::normal_distribution<double> normal(mu_, std::sqrt(sigma_sq_));
    return reduce_hour(normal(rng));
}

std::vector<double> wrapped_arrival_pmf(const ArrivalTimeDist& dist, std::size_t grid_slots) {
    if (grid_slots == 0) {
        throw DomainError("grid_slots must be >= 1");
    }
    const double width = kHoursPerDay / static_cast<double>(grid_slots);
    std::vector<double> pmf(grid_slots, 0.0);
    if (dist.is_point_mass()) {
        auto slot = static_cast<std::size_t>(std::floor(dist.mu() / width + 0.5));
        pmf[slot % grid_slots] = 1.0;
        return pmf;
    }
    for (std::size_t s = 0; s < grid_slots; ++s) {
        const double centre = width * static_cast<double>(s);
        const double lo = centre - 0.5 * width;
        const double hi = centre + 0.5 * width;
        if (lo < 0.0) {
            pmf[s] = dist.interval_mass(lo + kHoursPerDay, kHoursPerDay) + dist.interval_mass(0.0, hi);
        } else {
            pmf[s] = dist.interval_mass(lo, hi);
        }
    }
    return pmf;
}

}  // namespace phevdemand::demand
