#include "phevdemand/experiment.hpp"

#include "phevdemand/error.hpp"
#include "phevdemand/metrics.hpp"
#include "phevdemand/text_format.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

namespace phevdemand::eval {

namespace {

constexpr std::array<std::string_view, 12> kMonthNames{"jan", "feb", "mar", "apr", "may", "jun",
                                                         "jul", "aug", "sep", "oct", "nov", "dec"};

struct CellSpec {
    unsigned month;
    const data::Scenario* scenario;
};

}  // namespace

bool EvalReport::all_converged() const {
    return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.converged; });
}

std::string month_name(unsigned month) {
    if (month < 1 || month > 12) {
        throw DomainError("month must be in 1..12, got " + std::to_string(month));
    }
    return std::string(kMonthNames[month - 1]);
}

unsigned parse_month(std::string_view text) {
    const auto t = text::trim(text);
    for (std::size_t i = 0; i < kMonthNames.size(); ++i) {
        if (t == kMonthNames[i]) {
            return static_cast<unsigned>(i + 1);
        }
    }
    if (const auto v = text::parse_double(t); v && *v >= 1 && *v <= 12 && *v == std::floor(*v)) {
        return static_cast<unsigned>(*v);
    }
    throw ConfigError("unknown month '" + std::string(t) + "' (want jan..dec or 1..12)");
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

ReportRow score_cell(const data::SupervisedDataset& dataset, const std::vector<double>& predicted_scaled) {
    ReportRow row;
    row.n_points = dataset.size();
    row.mse_scaled = mse(dataset.targets, predicted_scaled);
    const auto predicted_kw = dataset.scaler.inverse_targets(predicted_scaled);
    row.mse_kw2 = mse(dataset.target_kw, predicted_kw);
    row.mape_fraction = mape(dataset.target_kw, predicted_kw, MapeMode::Fraction);
    row.mape_percent = mape(dataset.target_kw, predicted_kw, MapeMode::Percent);
    return row;
}

void summarize(EvalReport& report) {
    report.max_mse = 0.0;
    report.max_mape = 0.0;
    for (const auto& r : report.rows) {
        if (!r.converged) {
            report.max_mse = HUGE_VAL;
            report.max_mape = HUGE_VAL;
            return;
        }
        report.max_mse = std::max(report.max_mse, r.mse_scaled);
        report.max_mape = std::max(report.max_mape, r.mape_fraction);
    }
}

EvalReport run_table_experiment(const ExperimentSetup& setup, std::size_t jobs) {
    if (setup.profiles.empty()) {
        throw ConfigError("table experiment needs at least one month");
    }
    if (setup.scenarios.empty()) {
        throw ConfigError("table experiment needs at least one scenario");
    }
    setup.params.validate();

    std::vector<CellSpec> cells;
    for (const auto& scenario : setup.scenarios) {
        for (const auto& [month, profile] : setup.profiles) {
            cells.push_back({month, &scenario});
        }
    }
    EvalReport report;
    report.rows.resize(cells.size());
    parallel_for(cells.size(), jobs, [&](std::size_t i) {
        const auto& cell = cells[i];
        const auto& profile = setup.profiles.at(cell.month);
        const auto full = data::assemble_dataset(profile, *cell.scenario, setup.feature_map);
        data::SupervisedDataset fit_part;
        data::SupervisedDataset score_part;
        if (setup.holdout_days == 0) {
            fit_part = score_part = full;
        } else {
            const std::size_t days = profile.days();
            if (setup.holdout_days >= days) {
                throw ConfigError("holdout of " + std::to_string(setup.holdout_days) + " days leaves no training days in " +
                                  month_name(cell.month));
            }
            std::tie(fit_part, score_part) =
                data::split_dataset(full, (days - setup.holdout_days) * data::kSlotsPerDay);
        }
        const auto& dataset = score_part;
        ReportRow row;
        try {
            const auto result = svr::train_nu_svr(fit_part.training_set(), setup.params, setup.kernel);
            row = score_cell(score_part, svr::predict_all(result.model, score_part.features));
            row.iterations = result.iterations;
            row.support_vectors = result.model.dual_coefs.size();
        } catch (const ConvergenceError& e) {
            const std::string where =
                month_name(cell.month) + "/" + std::string(data::to_string(cell.scenario->tag)) + ": ";
            if (setup.fail_fast) {
                throw ConvergenceError(where + e.what(), e.final_violation());
            }
            row.n_points = dataset.size();
            row.converged = false;
            row.error = where + e.what();
            row.mse_scaled = row.mape_fraction = row.mse_kw2 = row.mape_percent = HUGE_VAL;
        }
        row.month = cell.month;
        row.scenario = cell.scenario->tag;
        report.rows[i] = std::move(row);
    });
    summarize(report);
    return report;
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
    out << "month,scenario,mse_scaled,mape_fraction,mse_kw2,mape_percent,n_points\n";
    for (const auto& r : report.rows) {
        out << month_name(r.month) << ',' << data::to_string(r.scenario) << ',' << text::format_double(r.mse_scaled)
            << ',' << text::format_double(r.mape_fraction) << ',' << text::format_double(r.mse_kw2) << ','
            << text::format_double(r.mape_percent) << ',' << r.n_points << '\n';
    }
}

}  // namespace phevdemand::eval
