#include "cli.hpp"

#include "phevdemand/charging_time.hpp"
#include "phevdemand/dataset.hpp"
#include "phevdemand/demand_model.hpp"
#include "phevdemand/error.hpp"
#include "phevdemand/experiment.hpp"
#include "phevdemand/grid_search.hpp"
#include "phevdemand/load_profile.hpp"
#include "phevdemand/model_io.hpp"
#include "phevdemand/text_format.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace phevdemand::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kDefaultSeed = 20140101;

struct RunConfig {
    std::string command;
    std::uint64_t seed = kDefaultSeed;
    bool seed_given = false;
    std::string out = "out";
    std::size_t jobs = 1;

    std::vector<unsigned> months{1, 4, 7, 10};
    std::vector<data::ScenarioTag> scenarios{data::ScenarioTag::NoPhev, data::ScenarioTag::UniformTc,
                                             data::ScenarioTag::NonUniformTc};
    std::size_t fleet_size = 1;
    std::vector<demand::ChargingFamily> families{demand::ChargingFamily::Uniform};

    double arrival_mu = 19.0;
    double arrival_sigma_sq = 10.0;
    std::optional<double> arrival_point_mass;
    double uniform_a = 1.0;
    double uniform_b = 11.0;
    std::optional<double> charging_point_mass;
    std::string nonuniform_pmf;  // empty: built-in PMF
    double power_kw = 2.0;
    std::size_t grid_slots = demand::kDefaultGridSlots;

    std::optional<std::size_t> days;  // per month; default whole month
    std::size_t holdout_days = 0;      // 0: in-sample
    std::map<unsigned, std::string> profiles;
    data::FeatureMap feature_map = data::FeatureMap::Calendar;
    data::SynthesisConfig synthesis;

    svr::NuSvrParams params;
    std::string kernel = "rbf";
    double gamma = 10.0;
    int degree = 3;
    double coef0 = 0.0;

    eval::GridSearchSpec grid{{100.0, 1000.0}, {0.25, 0.5, 0.75}, {1.0, 10.0}, 2.0, 0,
                              eval::GridObjective::MaxOverScenarios};

    std::string model_dir;  // empty: same as out
};

// ---------------------------------------------------------------- parsing

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    for (auto part : text::split(text, ',')) {
        const auto t = text::trim(part);
        if (!t.empty()) {
            out.emplace_back(t);
        }
    }
    return out;
}

std::vector<unsigned> parse_months(const std::vector<std::string>& names) {
    if (names.size() == 1 && names[0] == "all") {
        return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    }
    std::vector<unsigned> out;
    for (const auto& n : names) {
        const unsigned m = eval::parse_month(n);
        if (std::find(out.begin(), out.end(), m) == out.end()) {
            out.push_back(m);
        }
    }
    if (out.empty()) {
        throw ConfigError("months: list is empty");
    }
    return out;
}

std::vector<data::ScenarioTag> parse_scenarios(const std::vector<std::string>& names) {
    if (names.size() == 1 && names[0] == "all") {
        return {data::ScenarioTag::NoPhev, data::ScenarioTag::UniformTc, data::ScenarioTag::NonUniformTc};
    }
    std::vector<data::ScenarioTag> out;
    for (const auto& n : names) {
        const auto s = data::parse_scenario(n);
        if (std::find(out.begin(), out.end(), s) == out.end()) {
            out.push_back(s);
        }
    }
    if (out.empty()) {
        throw ConfigError("scenarios: list is empty");
    }
    return out;
}

std::vector<demand::ChargingFamily> parse_families(const std::vector<std::string>& names) {
    if (names.size() == 1 && names[0] == "all") {
        return {demand::ChargingFamily::Uniform, demand::ChargingFamily::EmpiricalPmf,
                demand::ChargingFamily::TruncatedGaussian, demand::ChargingFamily::Rician};
    }
    std::vector<demand::ChargingFamily> out;
    for (const auto& n : names) {
        demand::ChargingFamily f;
        try {
            f = demand::parse_charging_family(n);
        } catch (const Error& e) {
            throw ConfigError(std::string("families: ") + e.what());
        }
        if (std::find(out.begin(), out.end(), f) == out.end()) {
            out.push_back(f);
        }
    }
    if (out.empty()) {
        throw ConfigError("families: list is empty");
    }
    return out;
}

template <typename T>
T get_field(const json& obj, const std::string& key, const std::string& path) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config field '" + path + "' has the wrong type");
    }
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) {
        throw ConfigError("config field '" + where + "' must be an object");
    }
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("unknown config field '" + (where.empty() ? key : where + "." + key) + "'");
        }
    }
}

std::vector<std::string> string_list(const json& j, const std::string& path) {
    if (j.is_string()) {
        return split_list(j.get<std::string>());
    }
    if (!j.is_array()) {
        throw ConfigError("config field '" + path + "' must be a list");
    }
    std::vector<std::string> out;
    for (const auto& v : j) {
        out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
    return out;
}

std::string resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

void apply_file(RunConfig& cfg, const std::string& config_path) {
    std::ifstream in(config_path);
    if (!in) {
        throw ConfigError("cannot open config file '" + config_path + "'");
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + config_path + "' is not valid JSON: " + e.what());
    }
    const fs::path base = fs::path(config_path).parent_path();
    check_keys(doc, "",
               {"seed", "out", "jobs", "months", "scenarios", "fleet_size", "families", "arrival", "charging",
                "power_kw", "grid_slots", "days", "holdout_days", "profiles", "feature_map", "synthesis", "svr", "grid", "model_dir"});
    if (doc.contains("seed")) {
        cfg.seed = get_field<std::uint64_t>(doc, "seed", "seed");
        cfg.seed_given = true;
    }
    if (doc.contains("out")) {
        cfg.out = resolve(base, get_field<std::string>(doc, "out", "out"));
    }
    if (doc.contains("jobs")) {
        cfg.jobs = get_field<std::size_t>(doc, "jobs", "jobs");
    }
    if (doc.contains("months")) {
        cfg.months = parse_months(string_list(doc["months"], "months"));
    }
    if (doc.contains("scenarios")) {
        cfg.scenarios = parse_scenarios(string_list(doc["scenarios"], "scenarios"));
    }
    if (doc.contains("fleet_size")) {
        cfg.fleet_size = get_field<std::size_t>(doc, "fleet_size", "fleet_size");
    }
    if (doc.contains("families")) {
        cfg.families = parse_families(string_list(doc["families"], "families"));
    }
    if (doc.contains("arrival")) {
        const auto& a = doc["arrival"];
        check_keys(a, "arrival", {"mu", "sigma_sq", "point_mass_hour"});
        if (a.contains("mu")) {
            cfg.arrival_mu = get_field<double>(a, "mu", "arrival.mu");
        }
        if (a.contains("sigma_sq")) {
            cfg.arrival_sigma_sq = get_field<double>(a, "sigma_sq", "arrival.sigma_sq");
        }
        if (a.contains("point_mass_hour")) {
            cfg.arrival_point_mass = get_field<double>(a, "point_mass_hour", "arrival.point_mass_hour");
        }
    }
    if (doc.contains("charging")) {
        const auto& c = doc["charging"];
        check_keys(c, "charging", {"uniform_a", "uniform_b", "point_mass_hours", "nonuniform_pmf"});
        if (c.contains("uniform_a")) {
            cfg.uniform_a = get_field<double>(c, "uniform_a", "charging.uniform_a");
        }
        if (c.contains("uniform_b")) {
            cfg.uniform_b = get_field<double>(c, "uniform_b", "charging.uniform_b");
        }
        if (c.contains("point_mass_hours")) {
            cfg.charging_point_mass = get_field<double>(c, "point_mass_hours", "charging.point_mass_hours");
        }
        if (c.contains("nonuniform_pmf")) {
            cfg.nonuniform_pmf = resolve(base, get_field<std::string>(c, "nonuniform_pmf", "charging.nonuniform_pmf"));
        }
    }
    if (doc.contains("power_kw")) {
        cfg.power_kw = get_field<double>(doc, "power_kw", "power_kw");
    }
    if (doc.contains("grid_slots")) {
        cfg.grid_slots = get_field<std::size_t>(doc, "grid_slots", "grid_slots");
    }
    if (doc.contains("holdout_days")) {
        cfg.holdout_days = get_field<std::size_t>(doc, "holdout_days", "holdout_days");
    }
    if (doc.contains("days")) {
        cfg.days = get_field<std::size_t>(doc, "days", "days");
    }
    if (doc.contains("profiles")) {
        const auto& p = doc["profiles"];
        if (!p.is_object()) {
            throw ConfigError("config field 'profiles' must map months to CSV paths");
        }
        for (const auto& [key, value] : p.items()) {
            if (!value.is_string()) {
                throw ConfigError("config field 'profiles." + key + "' must be a path");
            }
            cfg.profiles[eval::parse_month(key)] = resolve(base, value.get<std::string>());
        }
    }
    if (doc.contains("feature_map")) {
        cfg.feature_map = data::parse_feature_map(get_field<std::string>(doc, "feature_map", "feature_map"));
    }
    if (doc.contains("synthesis")) {
        const auto& s = doc["synthesis"];
        check_keys(s, "synthesis", {"year", "day_noise", "slot_noise", "scale"});
        if (s.contains("year")) {
            cfg.synthesis.year = get_field<int>(s, "year", "synthesis.year");
        }
        if (s.contains("day_noise")) {
            cfg.synthesis.day_noise = get_field<double>(s, "day_noise", "synthesis.day_noise");
        }
        if (s.contains("slot_noise")) {
            cfg.synthesis.slot_noise = get_field<double>(s, "slot_noise", "synthesis.slot_noise");
        }
        if (s.contains("scale")) {
            cfg.synthesis.scale = get_field<double>(s, "scale", "synthesis.scale");
        }
    }
    if (doc.contains("svr")) {
        const auto& s = doc["svr"];
        check_keys(s, "svr",
                   {"c", "nu", "kernel", "gamma", "degree", "coef0", "kkt_tolerance", "max_iterations", "working_set"});
        if (s.contains("c")) {
            cfg.params.c = get_field<double>(s, "c", "svr.c");
        }
        if (s.contains("nu")) {
            cfg.params.nu = get_field<double>(s, "nu", "svr.nu");
        }
        if (s.contains("kernel")) {
            cfg.kernel = get_field<std::string>(s, "kernel", "svr.kernel");
        }
        if (s.contains("gamma")) {
            cfg.gamma = get_field<double>(s, "gamma", "svr.gamma");
        }
        if (s.contains("degree")) {
            cfg.degree = get_field<int>(s, "degree", "svr.degree");
        }
        if (s.contains("coef0")) {
            cfg.coef0 = get_field<double>(s, "coef0", "svr.coef0");
        }
        if (s.contains("kkt_tolerance")) {
            cfg.params.kkt_tolerance = get_field<double>(s, "kkt_tolerance", "svr.kkt_tolerance");
        }
        if (s.contains("max_iterations")) {
            cfg.params.max_iterations = get_field<std::size_t>(s, "max_iterations", "svr.max_iterations");
        }
        if (s.contains("working_set")) {
            const auto ws = get_field<std::string>(s, "working_set", "svr.working_set");
            if (ws == "second-order") {
                cfg.params.working_set = svr::WorkingSetRule::SecondOrder;
            } else if (ws == "max-violating-pair") {
                cfg.params.working_set = svr::WorkingSetRule::MaximalViolatingPair;
            } else {
                throw ConfigError("config field 'svr.working_set' must be second-order or max-violating-pair");
            }
        }
    }
    if (doc.contains("grid")) {
        const auto& g = doc["grid"];
        check_keys(g, "grid", {"c", "nu", "gamma", "refinement_factor", "depth", "objective"});
        if (g.contains("c")) {
            cfg.grid.c = get_field<std::vector<double>>(g, "c", "grid.c");
        }
        if (g.contains("nu")) {
            cfg.grid.nu = get_field<std::vector<double>>(g, "nu", "grid.nu");
        }
        if (g.contains("gamma")) {
            cfg.grid.gamma = get_field<std::vector<double>>(g, "gamma", "grid.gamma");
        }
        if (g.contains("refinement_factor")) {
            cfg.grid.refinement_factor = get_field<double>(g, "refinement_factor", "grid.refinement_factor");
        }
        if (g.contains("depth")) {
            cfg.grid.depth = get_field<std::size_t>(g, "depth", "grid.depth");
        }
        if (g.contains("objective")) {
            cfg.grid.objective = eval::parse_grid_objective(get_field<std::string>(g, "objective", "grid.objective"));
        }
    }
    if (doc.contains("model_dir")) {
        cfg.model_dir = resolve(base, get_field<std::string>(doc, "model_dir", "model_dir"));
    }
}

void require(bool ok, const std::string& field, const std::string& rule) {
    if (!ok) {
        throw ConfigError("config field '" + field + "' " + rule);
    }
}

void validate(const RunConfig& cfg) {
    if (cfg.arrival_point_mass) {
        require(std::isfinite(*cfg.arrival_point_mass), "arrival.point_mass_hour", "must be finite");
    } else {
        require(std::isfinite(cfg.arrival_mu), "arrival.mu", "must be finite");
        require(cfg.arrival_sigma_sq > 0.0 && std::isfinite(cfg.arrival_sigma_sq), "arrival.sigma_sq", "must be > 0");
    }
    require(cfg.uniform_a > 0.0 && cfg.uniform_a < cfg.uniform_b && cfg.uniform_b <= demand::kMaxChargingHours,
            "charging.uniform_a/uniform_b", "must satisfy 0 < a < b <= 24");
    if (cfg.charging_point_mass) {
        require(*cfg.charging_point_mass > 0.0 && *cfg.charging_point_mass < demand::kMaxChargingHours,
                "charging.point_mass_hours", "must lie in (0, 24)");
    }
    require(cfg.power_kw > 0.0 && std::isfinite(cfg.power_kw), "power_kw", "must be > 0");
    require(cfg.grid_slots >= 1, "grid_slots", "must be >= 1");
    require(!cfg.days || *cfg.days >= 1, "days", "must be >= 1");
    require(cfg.params.c > 0.0 && std::isfinite(cfg.params.c), "svr.c", "must be > 0");
    require(cfg.params.nu > 0.0 && cfg.params.nu <= 1.0, "svr.nu", "must lie in (0, 1]");
    require(cfg.params.kkt_tolerance > 0.0, "svr.kkt_tolerance", "must be > 0");
    require(cfg.params.max_iterations >= 1, "svr.max_iterations", "must be >= 1");
    require(cfg.kernel == "rbf" || cfg.kernel == "polynomial" || cfg.kernel == "linear", "svr.kernel",
            "must be rbf, polynomial or linear");
    require(cfg.gamma > 0.0 && std::isfinite(cfg.gamma), "svr.gamma", "must be > 0");
    require(cfg.degree >= 1, "svr.degree", "must be >= 1");
    require(cfg.synthesis.day_noise >= 0.0 && cfg.synthesis.day_noise < 1.0, "synthesis.day_noise",
            "must lie in [0, 1)");
    require(cfg.synthesis.slot_noise >= 0.0 && cfg.synthesis.slot_noise < 1.0, "synthesis.slot_noise",
            "must lie in [0, 1)");
    require(cfg.synthesis.scale > 0.0, "synthesis.scale", "must be > 0");
    if (cfg.command == "grid-search") {
        cfg.grid.validate();
    }
    for (const auto& [month, path] : cfg.profiles) {
        if (!fs::exists(path)) {
            throw ConfigError("profile for " + eval::month_name(month) + " not found: '" + path + "'");
        }
    }
    if (!cfg.nonuniform_pmf.empty() && !fs::exists(cfg.nonuniform_pmf)) {
        throw ConfigError("charging PMF file not found: '" + cfg.nonuniform_pmf + "'");
    }
}

// Everything that influences output files; `out` and `jobs` do not.
json canonical_config(const RunConfig& cfg) {
    json j;
    j["command"] = cfg.command;
    j["seed"] = cfg.seed;
    json months = json::array();
    for (unsigned m : cfg.months) {
        months.push_back(eval::month_name(m));
    }
    j["months"] = months;
    json scenarios = json::array();
    for (auto s : cfg.scenarios) {
        scenarios.push_back(std::string(data::to_string(s)));
    }
    j["scenarios"] = scenarios;
    j["fleet_size"] = cfg.fleet_size;
    json families = json::array();
    for (auto f : cfg.families) {
        families.push_back(std::string(demand::to_string(f)));
    }
    j["families"] = families;
    j["arrival"] = cfg.arrival_point_mass ? json{{"point_mass_hour", *cfg.arrival_point_mass}}
                                          : json{{"mu", cfg.arrival_mu}, {"sigma_sq", cfg.arrival_sigma_sq}};
    json charging{{"uniform_a", cfg.uniform_a}, {"uniform_b", cfg.uniform_b}, {"nonuniform_pmf", cfg.nonuniform_pmf}};
    if (cfg.charging_point_mass) {
        charging["point_mass_hours"] = *cfg.charging_point_mass;
    }
    j["charging"] = charging;
    j["power_kw"] = cfg.power_kw;
    j["grid_slots"] = cfg.grid_slots;
    j["days"] = cfg.days ? json(*cfg.days) : json(nullptr);
    j["holdout_days"] = cfg.holdout_days;
    json profiles = json::object();
    for (const auto& [m, p] : cfg.profiles) {
        profiles[eval::month_name(m)] = p;
    }
    j["profiles"] = profiles;
    j["feature_map"] = std::string(data::to_string(cfg.feature_map));
    j["synthesis"] = {{"year", cfg.synthesis.year},
                      {"day_noise", cfg.synthesis.day_noise},
                      {"slot_noise", cfg.synthesis.slot_noise},
                      {"scale", cfg.synthesis.scale}};
    j["svr"] = {{"c", cfg.params.c},
                {"nu", cfg.params.nu},
                {"kernel", cfg.kernel},
                {"gamma", cfg.gamma},
                {"degree", cfg.degree},
                {"coef0", cfg.coef0},
                {"kkt_tolerance", cfg.params.kkt_tolerance},
                {"max_iterations", cfg.params.max_iterations},
                {"working_set", cfg.params.working_set == svr::WorkingSetRule::SecondOrder ? "second-order"
                                                                                           : "max-violating-pair"}};
    j["grid"] = {{"c", cfg.grid.c},
                 {"nu", cfg.grid.nu},
                 {"gamma", cfg.grid.gamma},
                 {"refinement_factor", cfg.grid.refinement_factor},
                 {"depth", cfg.grid.depth},
                 {"objective", std::string(eval::to_string(cfg.grid.objective))}};
    return j;
}

// ---------------------------------------------------------------- helpers

struct Context {
    RunConfig cfg;
    std::string config_hash;
    fs::path out_dir;
    std::ostream& out;
    std::ostream& err;
};

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw Error("cannot write '" + path.string() + "'");
    }
    f << content;
    if (!f) {
        throw Error("write failed for '" + path.string() + "'");
    }
}

void write_sidecar(const Context& ctx, const std::string& name, json body) {
    body["config_hash"] = ctx.config_hash;
    body["generated_at"] = utc_now();
    write_file(ctx.out_dir / name, body.dump(2) + "\n");
}

std::string csv_preamble(const Context& ctx) {
    return "# config_hash=" + ctx.config_hash + "\n";
}

demand::ArrivalTimeDist arrival_of(const RunConfig& cfg) {
    return cfg.arrival_point_mass ? demand::ArrivalTimeDist::point_mass(*cfg.arrival_point_mass)
                                  : demand::ArrivalTimeDist::wrapped_normal(cfg.arrival_mu, cfg.arrival_sigma_sq);
}

demand::ChargingTimeDist nonuniform_of(const RunConfig& cfg) {
    return cfg.nonuniform_pmf.empty() ? demand::default_nonuniform_pmf() : demand::load_empirical_pmf(cfg.nonuniform_pmf);
}

svr::KernelSpec kernel_of(const RunConfig& cfg) {
    if (cfg.kernel == "polynomial") {
        return svr::KernelSpec::polynomial(cfg.degree, cfg.gamma, cfg.coef0);
    }
    if (cfg.kernel == "linear") {
        return svr::KernelSpec::linear();
    }
    return svr::KernelSpec::rbf(cfg.gamma);
}

std::size_t days_in_month(int year, unsigned month) {
    using namespace std::chrono;
    return static_cast<unsigned>(year_month_day_last{std::chrono::year{year} / std::chrono::month{month} / last}.day());
}

data::LoadProfile profile_for(const RunConfig& cfg, unsigned month) {
    if (const auto it = cfg.profiles.find(month); it != cfg.profiles.end()) {
        return data::ingest_csv_file(it->second);
    }
    const std::size_t days = cfg.days.value_or(days_in_month(cfg.synthesis.year, month));
    return data::synthesize_profile(month, days, cfg.seed, cfg.synthesis);
}

data::Scenario scenario_for(const RunConfig& cfg, data::ScenarioTag tag) {
    if (tag == data::ScenarioTag::NoPhev) {
        return data::Scenario::no_phev();
    }
    const auto charging = tag == data::ScenarioTag::UniformTc
                              ? demand::ChargingTimeDist::uniform(cfg.uniform_a, cfg.uniform_b)
                              : nonuniform_of(cfg);
    return data::Scenario::with_fleet(tag, cfg.fleet_size,
                                      demand::expected_demand_curve(arrival_of(cfg), charging, cfg.power_kw));
}

json charging_params(const demand::ChargingTimeDist& d) {
    if (const auto* u = d.as_uniform()) {
        return {{"a", u->a}, {"b", u->b}};
    }
    if (const auto* g = d.as_truncated_gaussian()) {
        return {{"mu", g->mu}, {"sigma", g->sigma}};
    }
    if (const auto* r = d.as_rician()) {
        return {{"nu", r->nu}, {"sigma", r->sigma}};
    }
    const auto* e = d.as_empirical();
    return {{"bin_edges_hours", e->bin_edges}, {"masses", e->masses}};
}

json report_json(const eval::EvalReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows) {
        json row{{"month", eval::month_name(r.month)},
                 {"scenario", std::string(data::to_string(r.scenario))},
                 {"n_points", r.n_points},
                 {"converged", r.converged}};
        if (r.converged) {
            row["mse_scaled"] = r.mse_scaled;
            row["mape_fraction"] = r.mape_fraction;
            row["mse_kw2"] = r.mse_kw2;
            row["mape_percent"] = r.mape_percent;
            row["iterations"] = r.iterations;
            row["support_vectors"] = r.support_vectors;
        } else {
            row["error"] = r.error;
        }
        rows.push_back(row);
    }
    json summary{{"all_converged", report.all_converged()}};
    if (report.all_converged()) {
        summary["max_mse_scaled"] = report.max_mse;
        summary["max_mape_fraction"] = report.max_mape;
    }
    return {{"rows", rows}, {"summary", summary}, {"mape_units", "fraction (mape_percent = 100 x)"}};
}

// ---------------------------------------------------------------- commands

int cmd_demand_curve(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto arrival = arrival_of(cfg);
    std::vector<std::pair<std::string, demand::ChargingTimeDist>> dists;
    if (cfg.charging_point_mass) {
        dists.emplace_back("point-mass", demand::ChargingTimeDist::point_mass(*cfg.charging_point_mass));
    } else {
        const auto reference = demand::ChargingTimeDist::uniform(cfg.uniform_a, cfg.uniform_b);
        for (auto family : cfg.families) {
            std::string name(demand::to_string(family));
            if (family == demand::ChargingFamily::EmpiricalPmf) {
                dists.emplace_back(name, nonuniform_of(cfg));
            } else {
                dists.emplace_back(name, demand::moment_match(family, reference.mean(), reference.variance()));
            }
        }
    }
    json curves = json::array();
    for (const auto& [name, dist] : dists) {
        const auto curve = demand::expected_demand_curve(arrival, dist, cfg.power_kw, cfg.grid_slots);
        std::ostringstream csv;
        csv << csv_preamble(ctx);
        demand::write_curve_csv(csv, curve);
        const std::string file = "curve_" + name + ".csv";
        write_file(ctx.out_dir / file, csv.str());
        const double expected = cfg.power_kw * dist.mean();
        curves.push_back({{"family", name},
                          {"file", file},
                          {"parameters", charging_params(dist)},
                          {"mean_hours", dist.mean()},
                          {"variance_hours2", dist.variance()},
                          {"energy_kwh", curve.energy()},
                          {"expected_energy_kwh", expected},
                          {"relative_energy_error", std::fabs(curve.energy() - expected) / expected}});
        ctx.out << name << ": " << file << " energy " << text::format_double(curve.energy()) << " kWh\n";
    }
    json arrival_json = cfg.arrival_point_mass ? json{{"point_mass_hour", *cfg.arrival_point_mass}}
                                               : json{{"mu", cfg.arrival_mu}, {"sigma_sq", cfg.arrival_sigma_sq}};
    write_sidecar(ctx, "demand_curve.json",
                  {{"arrival", arrival_json},
                   {"power_kw", cfg.power_kw},
                   {"grid_slots", cfg.grid_slots},
                   {"curves", curves}});
    return kExitOk;
}

int cmd_synth_profile(Context& ctx) {
    const auto& cfg = ctx.cfg;
    json files = json::array();
    for (unsigned month : cfg.months) {
        const std::size_t days = cfg.days.value_or(days_in_month(cfg.synthesis.year, month));
        auto profile = data::synthesize_profile(month, days, cfg.seed, cfg.synthesis);
        profile.metadata.insert(profile.metadata.begin(), {"config_hash", ctx.config_hash});
        std::ostringstream csv;
        data::export_csv(csv, profile);
        const std::string file = "profile_" + eval::month_name(month) + ".csv";
        write_file(ctx.out_dir / file, csv.str());
        files.push_back({{"month", eval::month_name(month)}, {"file", file}, {"days", days}});
        ctx.out << file << ": " << profile.records.size() << " records\n";
    }
    write_sidecar(ctx, "synth_profile.json", {{"seed", cfg.seed}, {"files", files}});
    return kExitOk;
}

// Rows used for training when the last `holdout` days are held out.
std::size_t leading_rows(const data::LoadProfile& profile, std::size_t holdout) {
    if (holdout >= profile.days()) {
        throw ConfigError("config field 'holdout_days' must be smaller than the " + std::to_string(profile.days()) +
                          " days of each month");
    }
    return (profile.days() - holdout) * data::kSlotsPerDay;
}

std::string model_file_name(unsigned month, data::ScenarioTag tag) {
    return "model_" + eval::month_name(month) + "_" + std::string(data::to_string(tag)) + ".json";
}

int cmd_train(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto kernel = kernel_of(cfg);
    std::vector<data::Scenario> scenarios;
    for (auto tag : cfg.scenarios) {
        scenarios.push_back(scenario_for(cfg, tag));
    }
    std::vector<std::pair<unsigned, const data::Scenario*>> cells;
    for (const auto& s : scenarios) {
        for (unsigned m : cfg.months) {
            cells.emplace_back(m, &s);
        }
    }
    std::map<unsigned, data::LoadProfile> profiles;
    for (unsigned m : cfg.months) {
        profiles.emplace(m, profile_for(cfg, m));
    }
    std::vector<json> entries(cells.size());
    std::vector<int> ok(cells.size(), 1);
    eval::parallel_for(cells.size(), cfg.jobs, [&](std::size_t i) {
        const auto [month, scenario] = cells[i];
        auto dataset = data::assemble_dataset(profiles.at(month), *scenario, cfg.feature_map);
        if (cfg.holdout_days > 0) {
            dataset = data::split_dataset(dataset, leading_rows(profiles.at(month), cfg.holdout_days)).first;
        }
        const std::string file = model_file_name(month, scenario->tag);
        json entry{{"month", eval::month_name(month)}, {"scenario", std::string(data::to_string(scenario->tag))}};
        try {
            const auto result = svr::train_nu_svr(dataset.training_set(), cfg.params, kernel);
            io::StoredModel stored{result.model, dataset.scaler, cfg.feature_map, ctx.config_hash};
            io::save_model((ctx.out_dir / file).string(), stored);
            entry["file"] = file;
            entry["iterations"] = result.iterations;
            entry["support_vectors"] = result.model.dual_coefs.size();
            entry["final_violation"] = result.final_violation;
            entry["epsilon"] = result.model.epsilon;
        } catch (const ConvergenceError& e) {
            entry["error"] = e.what();
            ok[i] = 0;
        }
        entries[i] = entry;
    });
    json models = json::array();
    bool all_ok = true;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        models.push_back(entries[i]);
        if (!ok[i]) {
            all_ok = false;
            ctx.err << "training failed: " << entries[i]["error"].get<std::string>() << "\n";
        } else {
            ctx.out << entries[i]["file"].get<std::string>() << "\n";
        }
    }
    write_sidecar(ctx, "train.json", {{"models", models}});
    return all_ok ? kExitOk : kExitRuntime;
}

int cmd_evaluate(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const fs::path model_dir = cfg.model_dir.empty() ? ctx.out_dir : fs::path(cfg.model_dir);
    // Check every model exists before doing any work.
    for (auto tag : cfg.scenarios) {
        for (unsigned m : cfg.months) {
            const auto path = model_dir / model_file_name(m, tag);
            if (!fs::exists(path)) {
                throw ConfigError("model file not found: '" + path.string() + "'");
            }
        }
    }
    eval::EvalReport report;
    for (auto tag : cfg.scenarios) {
        const auto scenario = scenario_for(cfg, tag);
        for (unsigned m : cfg.months) {
            const auto stored = io::load_model((model_dir / model_file_name(m, tag)).string());
            if (!stored.scaler) {
                throw ConfigError("model for " + eval::month_name(m) + "/" + std::string(data::to_string(tag)) +
                                  " carries no scaler");
            }
            const auto profile = profile_for(cfg, m);
            auto dataset = data::assemble_dataset(profile, scenario, stored.feature_map.value_or(cfg.feature_map));
            if (cfg.holdout_days > 0) {
                dataset = data::split_dataset(dataset, leading_rows(profile, cfg.holdout_days)).second;
            }
            // Score in the model's own scaled space.
            svr::DenseMatrix raw;
            for (const auto& t : dataset.timestamps) {
                raw.append_row(data::build_features(t, dataset.feature_map));
            }
            dataset.scaler = *stored.scaler;
            dataset.features = dataset.scaler.transform_inputs(raw);
            dataset.targets = dataset.scaler.transform_targets(dataset.target_kw);
            auto row = eval::score_cell(dataset, svr::predict_all(stored.model, dataset.features));
            row.month = m;
            row.scenario = tag;
            row.support_vectors = stored.model.dual_coefs.size();
            report.rows.push_back(row);
        }
    }
    eval::summarize(report);
    std::ostringstream csv;
    csv << csv_preamble(ctx);
    eval::write_report_csv(csv, report);
    write_file(ctx.out_dir / "evaluation.csv", csv.str());
    write_sidecar(ctx, "evaluation.json", report_json(report));
    ctx.out << "max mse_scaled " << text::format_double(report.max_mse) << ", max mape_fraction "
            << text::format_double(report.max_mape) << "\n";
    return kExitOk;
}

eval::ExperimentSetup experiment_of(const RunConfig& cfg) {
    eval::ExperimentSetup setup;
    for (unsigned m : cfg.months) {
        setup.profiles.emplace(m, profile_for(cfg, m));
    }
    for (auto tag : cfg.scenarios) {
        setup.scenarios.push_back(scenario_for(cfg, tag));
    }
    setup.params = cfg.params;
    setup.kernel = kernel_of(cfg);
    setup.feature_map = cfg.feature_map;
    setup.fail_fast = false;
    setup.holdout_days = cfg.holdout_days;
    return setup;
}

int cmd_table(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto setup = experiment_of(cfg);
    // Months are evaluated in the order given; the report is scenario-major.
    auto report = eval::run_table_experiment(setup, cfg.jobs);
    std::vector<eval::ReportRow> ordered;
    for (auto tag : cfg.scenarios) {
        for (unsigned m : cfg.months) {
            for (const auto& r : report.rows) {
                if (r.month == m && r.scenario == tag) {
                    ordered.push_back(r);
                }
            }
        }
    }
    report.rows = ordered;
    std::ostringstream csv;
    csv << csv_preamble(ctx);
    eval::write_report_csv(csv, report);
    write_file(ctx.out_dir / "table.csv", csv.str());
    json body = report_json(report);
    body["parameters"] = {{"c", cfg.params.c}, {"nu", cfg.params.nu}, {"kernel", cfg.kernel}, {"gamma", cfg.gamma}};
    write_sidecar(ctx, "table.json", body);
    for (const auto& r : report.rows) {
        if (r.converged) {
            ctx.out << eval::month_name(r.month) << ' ' << data::to_string(r.scenario) << " mse_scaled "
                    << text::format_double(r.mse_scaled) << " mape_fraction " << text::format_double(r.mape_fraction)
                    << "\n";
        } else {
            ctx.err << "cell failed: " << r.error << "\n";
        }
    }
    return report.all_converged() ? kExitOk : kExitRuntime;
}

int cmd_grid_search(Context& ctx) {
    const auto& cfg = ctx.cfg;
    if (cfg.kernel != "rbf") {
        throw ConfigError("grid search tunes gamma of the rbf kernel; config field 'svr.kernel' must be rbf");
    }
    const auto setup = experiment_of(cfg);
    const auto result = eval::grid_search(cfg.grid, setup, cfg.jobs);
    std::ostringstream csv;
    csv << csv_preamble(ctx);
    eval::write_trace_csv(csv, result);
    write_file(ctx.out_dir / "grid_trace.csv", csv.str());
    json incumbent{{"c", result.incumbent.c}, {"nu", result.incumbent.nu}, {"gamma", result.incumbent.gamma}};
    json body{{"incumbent", incumbent},
              {"objective", std::string(eval::to_string(cfg.grid.objective))},
              {"points_evaluated", result.trace.size()}};
    if (std::isfinite(result.objective)) {
        body["objective_value"] = result.objective;
    } else {
        body["objective_value"] = nullptr;
    }
    write_sidecar(ctx, "grid_incumbent.json", body);
    ctx.out << "incumbent c=" << text::format_double(result.incumbent.c)
            << " nu=" << text::format_double(result.incumbent.nu)
            << " gamma=" << text::format_double(result.incumbent.gamma)
            << " objective=" << text::format_double(result.objective) << "\n";
    return std::isfinite(result.objective) ? kExitOk : kExitRuntime;
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Expected PHEV charging demand and nu-SVR load modelling", "phevdemand"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> months;
    std::optional<std::string> scenarios;
    std::optional<std::size_t> fleet_size;
    std::optional<std::string> families;
    std::optional<std::size_t> jobs;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--seed", seed, "RNG seed (unsigned 64-bit)");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--months", months, "Comma-separated months (jan..dec, 1..12 or all)");
    app.add_option("--scenarios", scenarios, "Comma-separated scenarios (nophev, uniform, nonuniform or all)");
    app.add_option("--fleet-size", fleet_size, "Vehicles per household in PHEV scenarios");
    app.add_option("--families", families, "Charging-time families (uniform, non-uniform, trunc-gaussian, rician or all)");
    app.add_option("--jobs", jobs, "Worker threads (default: available cores)")->check(CLI::PositiveNumber);

    const std::vector<std::pair<std::string, std::string>> commands{
        {"demand-curve", "Expected daily demand curve of one vehicle per charging-time family"},
        {"synth-profile", "Synthetic 15-minute residential load profiles"},
        {"train", "Train one model per month and scenario"},
        {"evaluate", "Score previously trained models"},
        {"grid-search", "Coarse/fine search over (c, nu, gamma)"},
        {"table", "Train and score every month x scenario cell"},
    };
    for (const auto& [name, help] : commands) {
        app.add_subcommand(name, help);
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    Context ctx{RunConfig{}, "", {}, out, err};
    auto& cfg = ctx.cfg;
    try {
        cfg.command = app.get_subcommands().front()->get_name();
        cfg.jobs = std::max(1u, std::thread::hardware_concurrency());
        if (!config_path.empty()) {
            apply_file(cfg, config_path);
        }
        if (seed) {
            cfg.seed = *seed;
            cfg.seed_given = true;
        }
        if (out_dir) {
            cfg.out = *out_dir;
        }
        if (months) {
            cfg.months = parse_months(split_list(*months));
        }
        if (scenarios) {
            cfg.scenarios = parse_scenarios(split_list(*scenarios));
        }
        if (fleet_size) {
            cfg.fleet_size = *fleet_size;
        }
        if (families) {
            cfg.families = parse_families(split_list(*families));
        }
        if (jobs) {
            cfg.jobs = *jobs;
        }
        validate(cfg);
        if (!cfg.seed_given) {
            err << "seed not given, using " << cfg.seed << "\n";
        }
        ctx.config_hash = fnv1a_hex(canonical_config(cfg).dump());
        ctx.out_dir = cfg.out;
        std::error_code ec;
        fs::create_directories(ctx.out_dir, ec);
        if (ec || !fs::is_directory(ctx.out_dir)) {
            throw ConfigError("output directory '" + cfg.out + "' is not writable");
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (cfg.command == "demand-curve") {
            return cmd_demand_curve(ctx);
        }
        if (cfg.command == "synth-profile") {
            return cmd_synth_profile(ctx);
        }
        if (cfg.command == "train") {
            return cmd_train(ctx);
        }
        if (cfg.command == "evaluate") {
            return cmd_evaluate(ctx);
        }
        if (cfg.command == "grid-search") {
            return cmd_grid_search(ctx);
        }
        return cmd_table(ctx);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InfeasibleTargetError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace phevdemand::cli
