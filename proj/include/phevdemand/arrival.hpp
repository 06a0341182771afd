#pragma once

#include <cstddef>
#include <random>
#include <vector>

namespace phevdemand::demand {

inline constexpr double kHoursPerDay = 24.0;
inline constexpr std::size_t kDefaultGridSlots = 96;

/// Vehicle arrival time on the 24 h circle: a Gaussian folded modulo 24,
/// or a degenerate point mass (used for box-shaped reference curves).
class ArrivalTimeDist {
public:
    /// Throws DomainError unless sigma_sq > 0 and mu is finite.
    static ArrivalTimeDist wrapped_normal(double mu, double sigma_sq);
    static ArrivalTimeDist point_mass(double hour);

    /// Location reduced to [0, 24).
    double mu() const noexcept { return mu_; }
    double sigma_sq() const noexcept { return sigma_sq_; }
    bool is_point_mass() const noexcept { return sigma_sq_ == 0.0; }

    /// Same spread, location moved by `hours` around the circle.
    ArrivalTimeDist shifted(double hours) const;

    /// P(arrival mod 24 in [lo, hi)) for 0 <= lo <= hi <= 24.
    double interval_mass(double lo, double hi) const;

    /// Number of wraps K such that wraps beyond +-K carry < 1e-12 mass.
    int wrap_count() const noexcept;

    double sample(std::mt19937_64& rng) const;

private:
    ArrivalTimeDist(double mu, double sigma_sq) : mu_(mu), sigma_sq_(sigma_sq) {}
    double mu_;
    double sigma_sq_;
};

/// Slot s collects the arrivals that round to the grid point s * 24 / grid_slots,
/// i.e. the mass of [s - 1/2, s + 1/2) slot widths on the circle.
std::vector<double> wrapped_arrival_pmf(const ArrivalTimeDist& dist, std::size_t grid_slots);

}  // namespace phevdemand::demand
