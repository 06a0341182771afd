#include "phevdemand/demand_model.hpp"

#include "phevdemand/error.hpp"
#include "phevdemand/numerics.hpp"
#include "phevdemand/text_format.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace phevdemand::demand {
namespace {

constexpr std::size_t kSubCellsPerSlot = 16;

void check_power(double power) {
    if (!(power > 0.0) || !std::isfinite(power)) {
        throw DomainError("outlet power must be > 0 kW, got " + std::to_string(power));
    }
}

// Expected time spent charging inside [d, d + width) hours after arrival, d in [0, 24).
// Offsets past 24 belong to the next lap of the circle.
class SlotOverlap {
public:
    SlotOverlap(const ChargingTimeDist& charging, double width) : charging_(charging), width_(width) {}

    double operator()(double d) const { return lapped(d + width_) - lapped(d); }

private:
    double lapped(double x) const {
        if (x < kHoursPerDay) {
            return charging_.expected_min(x);
        }
        return charging_.mean() + charging_.expected_min(x - kHoursPerDay);
    }

    const ChargingTimeDist& charging_;
    double width_;
};

}  // namespace

double charging_demand(const ChargingEvent& event, double t) {
    if (!(t >= 0.0 && t < kHoursPerDay)) {
        throw DomainError("charging_demand: t must lie in [0, 24), got " + std::to_string(t));
    }
    if (!(event.arrival >= 0.0 && event.arrival < kHoursPerDay)) {
        throw DomainError("charging event arrival must lie in [0, 24)");
    }
    if (!(event.duration >= 0.0 && event.duration < kHoursPerDay)) {
        throw DomainError("charging event duration must lie in [0, 24)");
    }
    check_power(event.power);
    double offset = t - event.arrival;
    if (offset < 0.0) {
        offset += kHoursPerDay;
    }
    return offset < event.duration ? event.power : 0.0;
}

double ExpectedDemandCurve::energy() const {
    return numerics::stable_sum(values) * slot_duration;
}

ExpectedDemandCurve expected_demand_curve(const ArrivalTimeDist& arrival, const ChargingTimeDist& charging,
                                          double power, std::size_t grid_slots) {
    check_power(power);
    if (grid_slots == 0) {
        throw DomainError("grid_slots must be >= 1");
    }
    const double width = kHoursPerDay / static_cast<double>(grid_slots);
    const SlotOverlap overlap(charging, width);

    ExpectedDemandCurve curve;
    curve.slot_duration = width;
    curve.outlet_power = power;
    curve.values.assign(grid_slots, 0.0);

    if (arrival.is_point_mass()) {
        for (std::size_t i = 0; i < grid_slots; ++i) {
            double d = width * static_cast<double>(i) - arrival.mu();
            if (d < 0.0) {
                d += kHoursPerDay;
            }
            curve.values[i] = power / width * overlap(d);
        }
        return curve;
    }

    // Arrival mass on sub-cells of width h, computed for the location reduced
    // into the first sub-cell and then rotated by q cells. Rotation keeps the
    // result exactly equivariant to whole-slot shifts of mu.
    const std::size_t cells = grid_slots * kSubCellsPerSlot;
    const double h = width / static_cast<double>(kSubCellsPerSlot);
    const auto q = static_cast<std::size_t>(std::floor(arrival.mu() / h)) % cells;
    const double r = arrival.mu() - static_cast<double>(q) * h;
    const auto local = ArrivalTimeDist::wrapped_normal(r, arrival.sigma_sq());
    std::vector<double> mass(cells);
    for (std::size_t j = 0; j < cells; ++j) {
        mass[j] = local.interval_mass(h * static_cast<double>(j), h * static_cast<double>(j + 1));
    }

    // kernel[n]: overlap for an arrival at the midpoint of the sub-cell n cells
    // before the slot start.
    std::vector<double> kernel(cells);
    for (std::size_t n = 0; n < cells; ++n) {
        const double d = n == 0 ? kHoursPerDay - 0.5 * h : (static_cast<double>(n) - 0.5) * h;
        kernel[n] = overlap(d);
    }

    for (std::size_t i = 0; i < grid_slots; ++i) {
        const std::size_t base = (i * kSubCellsPerSlot + cells - q) % cells;
        double acc = 0.0;
        for (std::size_t j = 0; j < cells; ++j) {
            const std::size_t n = base >= j ? base - j : base + cells - j;
            acc += mass[j] * kernel[n];
        }
        curve.values[i] = power / width * acc;
    }
    return curve;
}

double MonteCarloEstimate::standard_error(std::size_t slot) const {
    return std::sqrt(sample_variance.at(slot) / static_cast<double>(n_samples));
}

MonteCarloEstimate monte_carlo_demand_oracle(const ArrivalTimeDist& arrival, const ChargingTimeDist& charging,
                                             double power, std::size_t grid_slots, std::size_t n_samples,
                                             std::uint64_t seed) {
    check_power(power);
    if (grid_slots == 0 || n_samples == 0) {
        throw DomainError("monte carlo oracle needs grid_slots >= 1 and n_samples >= 1");
    }
    const double width = kHoursPerDay / static_cast<double>(grid_slots);
    std::mt19937_64 rng(seed);

    std::vector<double> sum(grid_slots, 0.0);
    std::vector<double> sum_sq(grid_slots, 0.0);
    std::vector<double> scratch(grid_slots, 0.0);
    std::vector<std::size_t> touched;
    touched.reserve(grid_slots + 2);

    for (std::size_t s = 0; s < n_samples; ++s) {
        const double a = arrival.sample(rng);
        const double t_c = charging.sample(rng);
        const double end = a + t_c;
        // Unrolled timeline [0, 48): slot u covers [u, u + 1) * width.
        const auto first = static_cast<std::size_t>(std::floor(a / width));
        for (std::size_t u = first; static_cast<double>(u) * width < end; ++u) {
            const double lo = std::max(a, static_cast<double>(u) * width);
            const double hi = std::min(end, static_cast<double>(u + 1) * width);
            if (hi <= lo) {
                continue;
            }
            const std::size_t slot = u % grid_slots;
            if (scratch[slot] == 0.0) {
                touched.push_back(slot);
            }
            scratch[slot] += power * (hi - lo) / width;
        }
        for (std::size_t slot : touched) {
            sum[slot] += scratch[slot];
            sum_sq[slot] += scratch[slot] * scratch[slot];
            scratch[slot] = 0.0;
        }
        touched.clear();
    }

    MonteCarloEstimate est;
    est.n_samples = n_samples;
    est.curve.slot_duration = width;
    est.curve.outlet_power = power;
    est.curve.values.resize(grid_slots);
    est.sample_variance.resize(grid_slots);
    const auto n = static_cast<double>(n_samples);
    for (std::size_t i = 0; i < grid_slots; ++i) {
        const double mean = sum[i] / n;
        est.curve.values[i] = mean;
        est.sample_variance[i] = n_samples > 1 ? std::max(0.0, (sum_sq[i] - n * mean * mean) / (n - 1.0)) : 0.0;
    }
    return est;
}

std::vector<double> total_demand(std::span<const double> base_kw, const ExpectedDemandCurve& fleet_curve,
                                 std::size_t n_vehicles) {
    if (base_kw.size() != fleet_curve.size()) {
        throw ShapeError("total_demand: base has " + std::to_string(base_kw.size()) + " slots, curve has " +
                         std::to_string(fleet_curve.size()));
    }
    std::vector<double> out(base_kw.begin(), base_kw.end());
    if (n_vehicles == 0) {
        return out;
    }
    const auto fleet = static_cast<double>(n_vehicles);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += fleet * fleet_curve.values[i];
    }
    return out;
}

void write_curve_csv(std::ostream& out, const ExpectedDemandCurve& curve) {
    out << "slot_index,hour_start,expected_kw\n";
    for (std::size_t i = 0; i < curve.size(); ++i) {
        out << i << ',' << text::format_double(curve.slot_duration * static_cast<double>(i)) << ','
            << text::format_double(curve.values[i]) << '\n';
    }
}

}  // namespace phevdemand::demand
