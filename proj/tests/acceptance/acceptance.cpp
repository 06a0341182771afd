// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "cli.hpp"
#include "phevdemand/dataset.hpp"
#include "phevdemand/demand_model.hpp"
#include "phevdemand/experiment.hpp"
#include "phevdemand/metrics.hpp"
#include "phevdemand/qp_oracle.hpp"
#include "phevdemand/scaler.hpp"
#include "phevdemand/svr.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <numeric>
#include <thread>
#include <vector>

using namespace phevdemand;
namespace fs = std::filesystem;

namespace {

// Largest L-infinity distance of a moment-matched family from the
// Uniform(1, 11) curve that still counts as "the same curve".
constexpr double kFamilyDelta = 0.03;

struct Verdict {
    bool pass;
    std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double budget_seconds, const std::function<Verdict()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v{false, ""};
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < budget_seconds;
    const bool pass = v.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("%s  %-28s %8.2fs (budget %.0fs)  %s%s\n", pass ? "PASS" : "FAIL", name.c_str(), seconds,
                budget_seconds, v.detail.c_str(), in_time ? "" : "  [over time budget]");
    std::fflush(stdout);
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

svr::TrainingSet random_instance(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 0.1);
    svr::TrainingSet d;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(dim);
        for (auto& v : x) {
            v = u(rng);
        }
        d.targets.push_back(std::sin(3.0 * x[0]) + 0.5 * x.back() + noise(rng));
        d.inputs.append_row(x);
    }
    return d;
}

const demand::ArrivalTimeDist& reference_arrival() {
    static const auto a = demand::ArrivalTimeDist::wrapped_normal(19.0, 10.0);
    return a;
}

const demand::ChargingTimeDist& reference_charging() {
    static const auto c = demand::ChargingTimeDist::uniform(1.0, 11.0);
    return c;
}

double linf(const demand::ExpectedDemandCurve& a, const demand::ExpectedDemandCurve& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, std::fabs(a.values[i] - b.values[i]));
    }
    return d;
}

// ---------------------------------------------------------------- criteria

Verdict oracle_equivalence() {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::size_t> size(6, 20);
    std::uniform_real_distribution<double> nu(0.1, 0.9);
    std::uniform_real_distribution<double> log_c(-1.0, 2.0);
    const std::vector<svr::KernelSpec> kernels{svr::KernelSpec::rbf(2.0), svr::KernelSpec::rbf(10.0),
                                               svr::KernelSpec::polynomial(2, 1.0, 1.0), svr::KernelSpec::linear()};
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto data = random_instance(rng, size(rng), 1 + trial % 3);
        svr::NuSvrParams p;
        p.c = std::pow(10.0, log_c(rng));
        p.nu = nu(rng);
        const auto& k = kernels[trial % kernels.size()];
        const auto smo = svr::train_nu_svr(data, p, k);
        const auto ref = svr::brute_force_qp_oracle(data, p, k);
        worst = std::max(worst, std::fabs(smo.duals.objective - ref.objective));
    }
    return {worst <= 1e-6, fmt("20 instances, max |objective gap| %.3g (tol 1e-6)", worst)};
}

Verdict nu_property() {
    std::mt19937_64 rng(2);
    const std::size_t n = 50;
    const double dn = static_cast<double>(n);
    std::size_t violations = 0;
    double min_sv_margin = HUGE_VAL;
    double min_err_margin = HUGE_VAL;
    for (int seed = 0; seed < 50; ++seed) {
        const auto data = random_instance(rng, n, 2);
        for (double nu : {0.25, 0.5, 0.75}) {
            svr::NuSvrParams p;
            p.c = 100.0;
            p.nu = nu;
            const auto result = svr::train_nu_svr(data, p, svr::KernelSpec::rbf(10.0));
            const auto f = svr::predict_all(result.model, data.inputs);
            std::size_t errors = 0;
            for (std::size_t i = 0; i < n; ++i) {
                errors += std::fabs(data.targets[i] - f[i]) > result.model.epsilon + 1e-6 ? 1 : 0;
            }
            const double sv_margin = result.model.dual_coefs.size() / dn - (nu - 2.0 / dn);
            const double err_margin = (nu + 2.0 / dn) - errors / dn;
            min_sv_margin = std::min(min_sv_margin, sv_margin);
            min_err_margin = std::min(min_err_margin, err_margin);
            violations += (sv_margin < 0.0 || err_margin < 0.0) ? 1 : 0;
        }
    }
    return {violations == 0, fmt("150 fits, %.0f violations, min margins sv %.3f err %.3f", static_cast<double>(violations),
                                 min_sv_margin, min_err_margin)};
}

Verdict energy_conservation() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> mu(0.0, 24.0);
    std::uniform_real_distribution<double> s2(0.5, 30.0);
    std::uniform_real_distribution<double> power(0.5, 7.0);
    std::uniform_real_distribution<double> mean(2.0, 10.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto arrival = demand::ArrivalTimeDist::wrapped_normal(mu(rng), s2(rng));
        demand::ChargingTimeDist charging = reference_charging();
        const double m = mean(rng);
        const double v = 0.5 + 3.0 * unit(rng);
        switch (i % 4) {
        case 0:
            charging = demand::ChargingTimeDist::uniform(m - 0.9 * m * unit(rng), m + 6.0 * unit(rng) + 0.1);
            break;
        case 1:
            charging = demand::ChargingTimeDist::truncated_gaussian(m, std::sqrt(v));
            break;
        case 2:
            charging = demand::ChargingTimeDist::rician(m, std::sqrt(v));
            break;
        default: {
            std::vector<double> edges{0.0};
            std::vector<double> masses;
            for (int k = 0; k < 6; ++k) {
                edges.push_back(edges.back() + 0.5 + 3.0 * unit(rng));
                masses.push_back(0.05 + unit(rng));
            }
            const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
            for (auto& x : masses) {
                x /= total;
            }
            charging = demand::ChargingTimeDist::empirical(edges, masses);
        }
        }
        const double p = power(rng);
        const auto curve = demand::expected_demand_curve(arrival, charging, p);
        const double expected = p * charging.mean();
        worst = std::max(worst, std::fabs(curve.energy() - expected) / expected);
    }
    return {worst <= 1e-6, fmt("100 configs x 4 families, max relative error %.3g (tol 1e-6)", worst)};
}

Verdict monte_carlo() {
    const auto analytic = demand::expected_demand_curve(reference_arrival(), reference_charging(), 2.0);
    const auto mc = demand::monte_carlo_demand_oracle(reference_arrival(), reference_charging(), 2.0, 96, 1'000'000, 20140101);
    std::size_t within = 0;
    for (std::size_t i = 0; i < 96; ++i) {
        within += std::fabs(mc.curve.values[i] - analytic.values[i]) <= 3.0 * mc.standard_error(i) ? 1 : 0;
    }
    return {within >= 92, fmt("%.0f/96 slots within 3 SE (need >= 92, i.e. 95%%)", static_cast<double>(within))};
}

Verdict family_convergence() {
    const auto reference = demand::expected_demand_curve(reference_arrival(), reference_charging(), 2.0);
    const double m = reference_charging().mean();
    const double v = reference_charging().variance();
    const double d_gauss = linf(reference, demand::expected_demand_curve(
                                               reference_arrival(),
                                               demand::moment_match(demand::ChargingFamily::TruncatedGaussian, m, v), 2.0));
    const double d_rice = linf(reference, demand::expected_demand_curve(
                                              reference_arrival(), demand::moment_match(demand::ChargingFamily::Rician, m, v),
                                              2.0));
    const double d_pmf =
        linf(reference, demand::expected_demand_curve(reference_arrival(), demand::default_nonuniform_pmf(), 2.0));
    const bool ok = d_gauss <= kFamilyDelta && d_rice <= kFamilyDelta && d_pmf > kFamilyDelta;
    return {ok, fmt("L-inf vs uniform: trunc-gaussian %.4f, rician %.4f <= 0.03 < non-uniform %.4f", d_gauss, d_rice,
                    d_pmf)};
}

Verdict table_run() {
    eval::ExperimentSetup setup;
    const std::uint64_t seed = 20140101;
    for (unsigned month : {1u, 4u, 7u, 10u}) {
        const auto days = static_cast<unsigned>(
            std::chrono::year_month_day_last{std::chrono::year{2014} / std::chrono::month{month} / std::chrono::last}
                .day());
        setup.profiles.emplace(month, data::synthesize_profile(month, days, seed));
    }
    const auto curve_uniform = demand::expected_demand_curve(reference_arrival(), reference_charging(), 2.0);
    const auto curve_pmf = demand::expected_demand_curve(reference_arrival(), demand::default_nonuniform_pmf(), 2.0);
    setup.scenarios = {data::Scenario::no_phev(),
                       data::Scenario::with_fleet(data::ScenarioTag::UniformTc, 1, curve_uniform),
                       data::Scenario::with_fleet(data::ScenarioTag::NonUniformTc, 1, curve_pmf)};
    setup.params.c = 1000.0;
    setup.params.nu = 0.5;
    setup.kernel = svr::KernelSpec::rbf(10.0);
    setup.fail_fast = false;
    const auto report = eval::run_table_experiment(setup, std::max(1u, std::thread::hardware_concurrency()));
    std::size_t finite = 0;
    bool mape_ok = true;
    for (const auto& r : report.rows) {
        const bool f = r.converged && std::isfinite(r.mse_scaled) && std::isfinite(r.mape_fraction);
        finite += f ? 1 : 0;
        mape_ok = mape_ok && f && r.mape_fraction <= 0.05;
    }
    return {report.rows.size() == 12 && finite == 12 && mape_ok,
            fmt("%.0f/12 finite cells, max mape_fraction %.4f (tol 0.05), max mse_scaled %.3g",
                static_cast<double>(finite), report.max_mape, report.max_mse)};
}

Verdict metric_exactness() {
    const std::vector<double> t1{1.0, 2.0};
    const std::vector<double> f1{0.0, 2.0};
    const std::vector<double> t2{2.0, 4.0};
    const std::vector<double> f2{1.0, 4.0};
    const bool exact = eval::mse(t1, t1) == 0.0 && eval::mse(t1, f1) == 0.5 && eval::mape(t2, t2) == 0.0 &&
                       eval::mape(t2, f2, eval::MapeMode::Percent) == 25.0 &&
                       eval::mape(t2, f2, eval::MapeMode::Fraction) == 0.25;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    svr::DenseMatrix x;
    std::vector<double> t;
    for (int r = 0; r < 1000; ++r) {
        x.append_row(std::vector<double>{u(rng), u(rng) * 1e-3, u(rng) + 5e3});
        t.push_back(u(rng));
    }
    const auto scaler = data::Scaler::fit(x, t);
    const auto back = scaler.inverse_inputs(scaler.transform_inputs(x));
    const auto tb = scaler.inverse_targets(scaler.transform_targets(t));
    double worst = 0.0;
    for (std::size_t i = 0; i < x.data().size(); ++i) {
        worst = std::max(worst, std::fabs(back.data()[i] - x.data()[i]) / std::max(1.0, std::fabs(x.data()[i])));
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        worst = std::max(worst, std::fabs(tb[i] - t[i]) / std::max(1.0, std::fabs(t[i])));
    }
    return {exact && worst <= 1e-12,
            std::string(exact ? "hand values bit-exact" : "hand values DIFFER") + fmt(", scaler round trip %.3g (tol 1e-12)", worst)};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::ifstream f(e.path(), std::ios::binary);
        std::string line;
        std::string kept;
        while (std::getline(f, line)) {
            if (line.find("\"generated_at\"") == std::string::npos) {
                kept += line + "\n";
            }
        }
        out[e.path().filename().string()] = kept;
    }
    return out;
}

Verdict cli_determinism() {
    const fs::path root = fs::temp_directory_path() / ("phevdemand_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    {
        std::ofstream cfg(root / "config.json");
        cfg << R"({"seed": 11, "days": 3, "months": ["jan", "jul"], "families": ["uniform", "non-uniform", "trunc-gaussian", "rician"],
                  "grid": {"c": [100, 1000], "nu": [0.5], "gamma": [10]}})";
    }
    const std::vector<std::string> commands{"demand-curve", "synth-profile", "train", "evaluate", "grid-search", "table"};
    std::map<std::string, std::string> runs[2];
    std::string problem;
    for (int run = 0; run < 2 && problem.empty(); ++run) {
        const fs::path out = root / ("run" + std::to_string(run));
        for (const auto& cmd : commands) {
            std::ostringstream o;
            std::ostringstream e;
            const int code = cli::run({cmd, "--config", (root / "config.json").string(), "--out", out.string()}, o, e);
            if (code != 0) {
                problem = cmd + " exited " + std::to_string(code) + ": " + e.str();
                break;
            }
        }
        if (problem.empty()) {
            runs[run] = snapshot(out);
        }
    }
    fs::remove_all(root);
    if (!problem.empty()) {
        return {false, problem};
    }
    std::size_t differing = 0;
    for (const auto& [name, body] : runs[0]) {
        const auto it = runs[1].find(name);
        differing += (it == runs[1].end() || it->second != body) ? 1 : 0;
    }
    differing += runs[0].size() != runs[1].size() ? 1 : 0;
    return {differing == 0 && !runs[0].empty(),
            fmt("6 commands, %.0f files compared, %.0f differ", static_cast<double>(runs[0].size()),
                static_cast<double>(differing))};
}

}  // namespace

int main() {
    criterion("qp-oracle-equivalence", 10.0, oracle_equivalence);
    criterion("nu-property", 60.0, nu_property);
    criterion("energy-conservation", 5.0, energy_conservation);
    criterion("monte-carlo-agreement", 30.0, monte_carlo);
    criterion("family-convergence", 5.0, family_convergence);
    criterion("end-to-end-table", 900.0, table_run);
    criterion("metric-exactness", 1.0, metric_exactness);
    criterion("cli-determinism", 300.0, cli_determinism);
    std::printf("%s: %d of 8 criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
    return failures == 0 ? 0 : 1;
}
