#pragma once

#include "phevdemand/dataset.hpp"
#include "phevdemand/load_profile.hpp"
#include "phevdemand/svr.hpp"

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace phevdemand::eval {

/// One (month, scenario) cell of the table.
struct ReportRow {
    unsigned month = 1;
    data::ScenarioTag scenario = data::ScenarioTag::NoPhev;
    double mse_scaled = 0.0;     // on [0, 1]-scaled targets
    double mape_fraction = 0.0;  // on the kW scale
    double mse_kw2 = 0.0;
    double mape_percent = 0.0;
    std::size_t n_points = 0;
    std::size_t iterations = 0;
    std::size_t support_vectors = 0;
    bool converged = true;
    std::string error;  // set when training failed
};

struct EvalReport {
    /// Scenario-major, month-minor.
    std::vector<ReportRow> rows;
    /// Worst values over converged rows; +inf if any row failed.
    double max_mse = 0.0;
    double max_mape = 0.0;

    bool all_converged() const;
};

/// Inputs shared by every cell.
struct ExperimentSetup {
    std::map<unsigned, data::LoadProfile> profiles;  // by month 1..12
    std::vector<data::Scenario> scenarios;
    svr::NuSvrParams params;
    svr::KernelSpec kernel = svr::KernelSpec::rbf(10.0);
    data::FeatureMap feature_map = data::FeatureMap::Calendar;
    /// Throw on the first failing cell instead of recording it.
    bool fail_fast = true;
    /// 0: fit and score on the whole month. Otherwise the last `holdout_days`
    /// days of each month are held out of training and scored alone.
    std::size_t holdout_days = 0;
};

/// Fits one model per (month, scenario) on that cell's dataset and scores it
/// in-sample, or on the held-out tail days. Throws ConfigError for an empty setup and, with fail_fast,
/// ConvergenceError annotated with the month and scenario of the failing cell.
/// Cells run on up to `jobs` threads; the report order does not depend on it.
EvalReport run_table_experiment(const ExperimentSetup& setup, std::size_t jobs = 1);

/// Scores `predicted_scaled` against a dataset: MSE on the scaled targets,
/// MAPE and MSE on the kW scale after inverting the target scaling.
ReportRow score_cell(const data::SupervisedDataset& dataset, const std::vector<double>& predicted_scaled);

/// Recomputes max_mse and max_mape from the rows.
void summarize(EvalReport& report);

/// CSV month,scenario,mse_scaled,mape_fraction,mse_kw2,mape_percent,n_points.
void write_report_csv(std::ostream& out, const EvalReport& report);

std::string month_name(unsigned month);
/// "jan".."dec" or "1".."12"; throws ConfigError otherwise.
unsigned parse_month(std::string_view text);

/// Runs fn(i) for i in [0, n) on up to `jobs` worker threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace phevdemand::eval
