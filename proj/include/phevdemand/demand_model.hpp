#pragma once

#include "phevdemand/arrival.hpp"
#include "phevdemand/charging_time.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace phevdemand::demand {

/// One uncoordinated charging session: full outlet power from arrival until
/// the required duration has elapsed, continuing past midnight if needed.
struct ChargingEvent {
    double arrival;   // hours in [0, 24)
    double duration;  // hours in [0, 24)
    double power;     // kW, > 0
};

/// Outlet power if t lies in [arrival, arrival + duration) on the 24 h circle.
/// Throws DomainError for t outside [0, 24) or an invalid event.
double charging_demand(const ChargingEvent& event, double t);

/// Expected PHEV demand per grid slot. values[i] is the expected mean power
/// over slot i, i.e. over [i, i + 1) * slot_duration hours.
struct ExpectedDemandCurve {
    std::vector<double> values;  // kW
    double slot_duration = 0.25;
    double outlet_power = 0.0;

    std::size_t size() const noexcept { return values.size(); }
    /// Sum of values * slot_duration (kWh per day).
    double energy() const;
};

/// Expected demand E[C_d] of one vehicle on a grid of `grid_slots` slots.
///
/// Each slot is the circular convolution of the arrival density with the
/// slot overlap E[|[a, a + T_c) cap slot|], which is a difference of
/// E[min(T_c, x)] values. The arrival density is resolved on a sub-grid of
/// 16 cells per slot; energy is conserved exactly for every input because
/// slot overlaps tile the circle.
ExpectedDemandCurve expected_demand_curve(const ArrivalTimeDist& arrival, const ChargingTimeDist& charging,
                                          double power, std::size_t grid_slots = kDefaultGridSlots);

struct MonteCarloEstimate {
    ExpectedDemandCurve curve;
    std::vector<double> sample_variance;  // per slot, of the per-sample slot mean
    std::size_t n_samples = 0;

    /// sqrt(sample_variance[i] / n_samples).
    double standard_error(std::size_t slot) const;
};

/// Sampling oracle for expected_demand_curve: draws n_samples charging events
/// and averages their exact per-slot mean power. Deterministic in `seed`.
MonteCarloEstimate monte_carlo_demand_oracle(const ArrivalTimeDist& arrival, const ChargingTimeDist& charging,
                                             double power, std::size_t grid_slots, std::size_t n_samples,
                                             std::uint64_t seed);

/// D_T = R_d + n_vehicles * E_d, slot by slot; base_kw is R_d in kW.
std::vector<double> total_demand(std::span<const double> base_kw, const ExpectedDemandCurve& fleet_curve,
                                 std::size_t n_vehicles = 1);

/// CSV with header slot_index,hour_start,expected_kw.
void write_curve_csv(std::ostream& out, const ExpectedDemandCurve& curve);

}  // namespace phevdemand::demand
