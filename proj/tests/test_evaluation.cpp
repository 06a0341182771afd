#include "phevdemand/error.hpp"
#include "phevdemand/experiment.hpp"
#include "phevdemand/grid_search.hpp"
#include "phevdemand/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace phevdemand;
using namespace phevdemand::eval;

namespace {

data::Scenario uniform_scenario() {
    return data::Scenario::with_fleet(
        data::ScenarioTag::UniformTc, 1,
        demand::expected_demand_curve(demand::ArrivalTimeDist::wrapped_normal(19.0, 10.0),
                                      demand::ChargingTimeDist::uniform(1.0, 11.0), 2.0));
}

ExperimentSetup small_setup() {
    ExperimentSetup s;
    s.profiles.emplace(1, data::synthesize_profile(1, 2, 1));
    s.profiles.emplace(7, data::synthesize_profile(7, 2, 1));
    s.scenarios = {data::Scenario::no_phev(), uniform_scenario()};
    return s;
}

}  // namespace

// ---------------------------------------------------------------- metrics

TEST(Mse, HandValues) {
    const std::vector<double> t{1.0, 2.0};
    const std::vector<double> f{0.0, 2.0};
    EXPECT_EQ(mse(t, t), 0.0);
    EXPECT_EQ(mse(t, f), 0.5);
    EXPECT_EQ(mse(f, t), mse(t, f));
    EXPECT_THROW(mse(t, std::vector<double>{1.0}), ShapeError);
    EXPECT_THROW(mse(std::vector<double>{}, std::vector<double>{}), ShapeError);
}

TEST(Mape, HandValues) {
    const std::vector<double> t{2.0, 4.0};
    const std::vector<double> f{1.0, 4.0};
    EXPECT_EQ(mape(t, t), 0.0);
    EXPECT_EQ(mape(t, f, MapeMode::Percent), 25.0);
    EXPECT_EQ(mape(t, f, MapeMode::Fraction), 0.25);
}

TEST(Mape, ZeroTargetIsAnError) {
    const std::vector<double> t{2.0, 0.0};
    const std::vector<double> f{1.0, 4.0};
    try {
        mape(t, f);
        FAIL();
    } catch (const ZeroTargetError& e) {
        EXPECT_EQ(e.index(), 1u);
    }
}

TEST(Metrics, PercentIsExactlyHundredTimesFraction) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.5, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> t(17), f(17);
        for (std::size_t i = 0; i < t.size(); ++i) {
            t[i] = u(rng);
            f[i] = u(rng);
        }
        EXPECT_EQ(mape(t, f, MapeMode::Percent), 100.0 * mape(t, f, MapeMode::Fraction));
        EXPECT_GT(mse(t, f), 0.0);
        EXPECT_GT(mape(t, f), 0.0);
    }
}

// ---------------------------------------------------------------- table experiment

TEST(TableExperiment, ConstantProfileFitsExactly) {
    data::LoadProfile flat = data::synthesize_profile(1, 1, 1);
    for (auto& r : flat.records) {
        r.kwh = 0.4;
    }
    ExperimentSetup s;
    s.profiles.emplace(1, flat);
    s.scenarios = {data::Scenario::no_phev()};
    const auto report = run_table_experiment(s);
    ASSERT_EQ(report.rows.size(), 1u);
    EXPECT_EQ(report.rows[0].mse_scaled, 0.0);
    EXPECT_EQ(report.rows[0].mape_fraction, 0.0);
    EXPECT_EQ(report.rows[0].n_points, 96u);
}

TEST(TableExperiment, ScenarioMajorRowsAndMaxSummary) {
    const auto report = run_table_experiment(small_setup());
    ASSERT_EQ(report.rows.size(), 4u);
    EXPECT_EQ(report.rows[0].scenario, data::ScenarioTag::NoPhev);
    EXPECT_EQ(report.rows[0].month, 1u);
    EXPECT_EQ(report.rows[1].month, 7u);
    EXPECT_EQ(report.rows[2].scenario, data::ScenarioTag::UniformTc);
    double max_mse = 0.0;
    double max_mape = 0.0;
    for (const auto& r : report.rows) {
        EXPECT_TRUE(std::isfinite(r.mse_scaled));
        EXPECT_GE(r.mse_scaled, 0.0);
        EXPECT_EQ(r.n_points, 192u);
        EXPECT_EQ(r.mape_percent, 100.0 * r.mape_fraction);
        max_mse = std::max(max_mse, r.mse_scaled);
        max_mape = std::max(max_mape, r.mape_fraction);
    }
    EXPECT_EQ(report.max_mse, max_mse);
    EXPECT_EQ(report.max_mape, max_mape);
    EXPECT_TRUE(report.all_converged());
}

TEST(TableExperiment, DeterministicAcrossJobCounts) {
    const auto a = run_table_experiment(small_setup(), 1);
    const auto b = run_table_experiment(small_setup(), 3);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(a.rows[i].mse_scaled, b.rows[i].mse_scaled);
        EXPECT_EQ(a.rows[i].mape_fraction, b.rows[i].mape_fraction);
    }
}

TEST(TableExperiment, NonConvergenceIsAnnotatedOrRecorded) {
    auto s = small_setup();
    s.params.max_iterations = 3;
    try {
        run_table_experiment(s);
        FAIL();
    } catch (const ConvergenceError& e) {
        EXPECT_NE(std::string(e.what()).find("jan/nophev"), std::string::npos);
    }
    s.fail_fast = false;
    const auto report = run_table_experiment(s);
    EXPECT_FALSE(report.all_converged());
    EXPECT_TRUE(std::isinf(report.max_mse));
}

TEST(TableExperiment, RejectsEmptySetup) {
    ExperimentSetup s;
    EXPECT_THROW(run_table_experiment(s), ConfigError);
}

TEST(ReportCsv, Layout) {
    const auto report = run_table_experiment(small_setup());
    std::ostringstream out;
    write_report_csv(out, report);
    const std::string s = out.str();
    EXPECT_EQ(s.substr(0, s.find('\n')), "month,scenario,mse_scaled,mape_fraction,mse_kw2,mape_percent,n_points");
    EXPECT_NE(s.find("\njan,nophev,"), std::string::npos);
    EXPECT_NE(s.find("\njul,uniform,"), std::string::npos);
}

TEST(Months, ParseNamesAndNumbers) {
    EXPECT_EQ(parse_month("jan"), 1u);
    EXPECT_EQ(parse_month("10"), 10u);
    EXPECT_EQ(month_name(4), "apr");
    EXPECT_THROW(parse_month("13"), ConfigError);
    EXPECT_THROW(parse_month("janu"), ConfigError);
}

// ---------------------------------------------------------------- grid search

TEST(GridSearch, SinglePointIsTheIncumbent) {
    GridSearchSpec spec{{1000.0}, {0.5}, {10.0}};
    const auto r = grid_search(spec, small_setup());
    EXPECT_EQ(r.incumbent, (GridPoint{1000.0, 0.5, 10.0}));
    ASSERT_EQ(r.trace.size(), 1u);
    EXPECT_EQ(r.trace[0].objective, r.objective);
}

TEST(GridSearch, IncumbentIsTheArgmin) {
    GridSearchSpec spec{{10.0, 1000.0}, {0.25, 0.5}, {1.0, 10.0}};
    const auto r = grid_search(spec, small_setup(), 2);
    ASSERT_EQ(r.trace.size(), 8u);
    EXPECT_NE(std::find_if(r.trace.begin(), r.trace.end(),
                           [](const TraceEntry& e) { return e.point == GridPoint{1000.0, 0.5, 10.0}; }),
              r.trace.end());
    for (const auto& e : r.trace) {
        EXPECT_LE(r.objective, e.objective);
    }
    // Trace keeps grid order: c-major, then nu, then gamma.
    EXPECT_EQ(r.trace[0].point, (GridPoint{10.0, 0.25, 1.0}));
    EXPECT_EQ(r.trace[1].point, (GridPoint{10.0, 0.25, 10.0}));
    EXPECT_EQ(r.trace[7].point, (GridPoint{1000.0, 0.5, 10.0}));
}

TEST(GridSearch, AddingAWorsePointKeepsTheIncumbent) {
    GridSearchSpec spec{{1000.0}, {0.5}, {10.0}};
    const auto base = grid_search(spec, small_setup());
    spec.gamma.push_back(1e-4);  // nearly constant kernel, poor fit
    const auto more = grid_search(spec, small_setup());
    EXPECT_GT(more.trace[1].objective, base.objective);
    EXPECT_EQ(more.incumbent, base.incumbent);
}

TEST(GridSearch, RefinementProbesAroundIncumbent) {
    GridSearchSpec spec{{100.0}, {1.0}, {10.0}};
    spec.depth = 1;
    spec.refinement_factor = 4.0;
    spec.objective = GridObjective::Mse;
    const auto r = grid_search(spec, small_setup());
    // 27 neighbours minus the centre; nu * 4 clips to 1 and duplicates are skipped.
    EXPECT_EQ(r.trace.size(), 1u + 17u);
    for (const auto& e : r.trace) {
        EXPECT_LE(e.point.nu, 1.0);
        EXPECT_LE(r.objective, e.objective);
    }
}

TEST(GridSearch, FailedPointsScoreInfinity) {
    auto setup = small_setup();
    setup.params.max_iterations = 3;
    GridSearchSpec spec{{1000.0}, {0.5}, {10.0}};
    const auto r = grid_search(spec, setup);
    EXPECT_TRUE(std::isinf(r.trace[0].objective));
    EXPECT_FALSE(r.trace[0].converged);
}

TEST(GridSearch, ValidatesSpec) {
    EXPECT_THROW((GridSearchSpec{{}, {0.5}, {10.0}}.validate()), ConfigError);
    EXPECT_THROW((GridSearchSpec{{1.0}, {1.5}, {10.0}}.validate()), ConfigError);
    EXPECT_THROW((GridSearchSpec{{1.0}, {0.5}, {-1.0}}.validate()), ConfigError);
    EXPECT_EQ(parse_grid_objective("max-over-scenarios"), GridObjective::MaxOverScenarios);
    EXPECT_THROW(parse_grid_objective("r2"), ConfigError);
}

TEST(GridTraceCsv, Header) {
    GridSearchSpec spec{{1000.0}, {0.5}, {10.0}};
    const auto r = grid_search(spec, small_setup());
    std::ostringstream out;
    write_trace_csv(out, r);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "c,nu,gamma,objective,converged");
    EXPECT_NE(out.str().find("\n1000,0.5,10,"), std::string::npos);
}
