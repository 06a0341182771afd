#include "phevdemand/grid_search.hpp"

#include "phevdemand/error.hpp"
#include "phevdemand/text_format.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace phevdemand::eval {

std::string_view to_string(GridObjective objective) {
    switch (objective) {
        case GridObjective::Mse:
            return "mse";
        case GridObjective::Mape:
            return "mape";
        case GridObjective::MaxOverScenarios:
            return "max-over-scenarios";
    }
    return "max-over-scenarios";
}

GridObjective parse_grid_objective(std::string_view name) {
    if (name == "mse") {
        return GridObjective::Mse;
    }
    if (name == "mape") {
        return GridObjective::Mape;
    }
    if (name == "max-over-scenarios") {
        return GridObjective::MaxOverScenarios;
    }
    throw ConfigError("unknown grid objective '" + std::string(name) + "'");
}

void GridSearchSpec::validate() const {
    if (c.empty() || nu.empty() || gamma.empty()) {
        throw ConfigError("grid search needs non-empty c, nu and gamma grids");
    }
    for (double v : c) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError("grid value c = " + text::format_double(v) + " must be positive");
        }
    }
    for (double v : nu) {
        if (!(v > 0.0 && v <= 1.0)) {
            throw ConfigError("grid value nu = " + text::format_double(v) + " must lie in (0, 1]");
        }
    }
    for (double v : gamma) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError("grid value gamma = " + text::format_double(v) + " must be positive");
        }
    }
    if (!(refinement_factor > 1.0) || !std::isfinite(refinement_factor)) {
        throw ConfigError("refinement factor must be > 1");
    }
}

std::pair<double, double> score_report(const EvalReport& report, GridObjective objective) {
    if (!report.all_converged() || report.rows.empty()) {
        return {HUGE_VAL, HUGE_VAL};
    }
    double sum_mse = 0.0;
    double sum_mape = 0.0;
    for (const auto& r : report.rows) {
        sum_mse += r.mse_scaled;
        sum_mape += r.mape_fraction;
    }
    const auto n = static_cast<double>(report.rows.size());
    switch (objective) {
        case GridObjective::Mse:
            return {sum_mse / n, sum_mape / n};
        case GridObjective::Mape:
            return {sum_mape / n, sum_mse / n};
        case GridObjective::MaxOverScenarios:
            break;
    }
    return {report.max_mse, report.max_mape};
}

namespace {

bool better(const TraceEntry& a, const TraceEntry& b) {
    if (a.objective != b.objective) {
        return a.objective < b.objective;
    }
    return a.tie_break < b.tie_break;
}

std::vector<TraceEntry> evaluate(const std::vector<GridPoint>& points, std::size_t stage,
                                 const GridSearchSpec& spec, const ExperimentSetup& context, std::size_t jobs) {
    std::vector<TraceEntry> out(points.size());
    // Parallelism is spent across points; each experiment runs its cells serially.
    parallel_for(points.size(), jobs, [&](std::size_t i) {
        ExperimentSetup setup = context;
        setup.fail_fast = false;
        setup.params.c = points[i].c;
        setup.params.nu = points[i].nu;
        setup.kernel = svr::KernelSpec::rbf(points[i].gamma);
        const auto report = run_table_experiment(setup, 1);
        const auto [obj, tie] = score_report(report, spec.objective);
        out[i] = TraceEntry{points[i], obj, tie, report.all_converged(), stage};
    });
    return out;
}

}  // namespace

GridSearchResult grid_search(const GridSearchSpec& spec, const ExperimentSetup& context, std::size_t jobs) {
    spec.validate();
    GridSearchResult result;
    std::vector<GridPoint> coarse;
    for (double c : spec.c) {
        for (double nu : spec.nu) {
            for (double g : spec.gamma) {
                coarse.push_back({c, nu, g});
            }
        }
    }
    result.trace = evaluate(coarse, 0, spec, context, jobs);
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.trace.size(); ++i) {
        if (better(result.trace[i], result.trace[best])) {
            best = i;
        }
    }
    for (std::size_t stage = 1; stage <= spec.depth; ++stage) {
        const double f = std::pow(spec.refinement_factor, 1.0 / std::pow(2.0, static_cast<double>(stage - 1)));
        const GridPoint centre = result.trace[best].point;
        std::vector<GridPoint> local;
        for (double mc : {1.0 / f, 1.0, f}) {
            for (double mn : {1.0 / f, 1.0, f}) {
                for (double mg : {1.0 / f, 1.0, f}) {
                    const GridPoint p{centre.c * mc, std::min(1.0, centre.nu * mn), centre.gamma * mg};
                    const bool seen = std::any_of(result.trace.begin(), result.trace.end(),
                                                  [&](const TraceEntry& e) { return e.point == p; }) ||
                                      std::find(local.begin(), local.end(), p) != local.end();
                    if (!seen) {
                        local.push_back(p);
                    }
                }
            }
        }
        const auto entries = evaluate(local, stage, spec, context, jobs);
        for (const auto& e : entries) {
            result.trace.push_back(e);
            if (better(e, result.trace[best])) {
                best = result.trace.size() - 1;
            }
        }
    }
    result.incumbent = result.trace[best].point;
    result.objective = result.trace[best].objective;
    return result;
}

void write_trace_csv(std::ostream& out, const GridSearchResult& result) {
    out << "c,nu,gamma,objective,converged\n";
    for (const auto& e : result.trace) {
        out << text::format_double(e.point.c) << ',' << text::format_double(e.point.nu) << ','
            << text::format_double(e.point.gamma) << ',' << text::format_double(e.objective) << ','
            << (e.converged ? "true" : "false") << '\n';
    }
}

}  // namespace phevdemand::eval
