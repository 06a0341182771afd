#pragma once

#include "phevdemand/experiment.hpp"

#include <iosfwd>
#include <string_view>
#include <vector>

namespace phevdemand::eval {

enum class GridObjective {
    Mse,              // mean scaled MSE over cells
    Mape,             // mean MAPE fraction over cells
    MaxOverScenarios, // worst-cell scaled MSE, worst-cell MAPE breaks ties
};

std::string_view to_string(GridObjective objective);
/// "mse", "mape" or "max-over-scenarios"; throws ConfigError otherwise.
GridObjective parse_grid_objective(std::string_view name);

struct GridSearchSpec {
    std::vector<double> c;
    std::vector<double> nu;
    std::vector<double> gamma;
    /// Stage d of refinement probes x / f_d, x, x * f_d per parameter around
    /// the incumbent, with f_d = factor^(1 / 2^(d-1)). nu is clipped to 1.
    double refinement_factor = 2.0;
    std::size_t depth = 0;
    GridObjective objective = GridObjective::MaxOverScenarios;

    /// Throws ConfigError on an empty grid or a value outside its domain.
    void validate() const;
};

struct GridPoint {
    double c;
    double nu;
    double gamma;

    bool operator==(const GridPoint&) const = default;
};

struct TraceEntry {
    GridPoint point;
    double objective = 0.0;  // +inf when any cell failed to converge
    double tie_break = 0.0;
    bool converged = true;
    std::size_t stage = 0;  // 0 = coarse grid
};

struct GridSearchResult {
    GridPoint incumbent{};
    double objective = 0.0;
    std::vector<TraceEntry> trace;
};

/// Objective and tie-break value of a finished report.
std::pair<double, double> score_report(const EvalReport& report, GridObjective objective);

/// Evaluates every coarse point (c-major, then nu, then gamma), then refines
/// around the incumbent. Each point runs the full table experiment with the
/// kernel replaced by rbf(gamma). Points of one stage run on up to `jobs`
/// threads; the trace keeps grid order.
GridSearchResult grid_search(const GridSearchSpec& spec, const ExperimentSetup& context, std::size_t jobs = 1);

/// CSV c,nu,gamma,objective,converged.
void write_trace_csv(std::ostream& out, const GridSearchResult& result);

}  // namespace phevdemand::eval
