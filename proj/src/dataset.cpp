#include "phevdemand/dataset.hpp"

#include "phevdemand/error.hpp"
#include "phevdemand/text_format.hpp"

#include <ostream>
#include <string>

namespace phevdemand::data {

std::string_view to_string(ScenarioTag tag) {
    switch (tag) {
        case ScenarioTag::NoPhev:
            return "nophev";
        case ScenarioTag::UniformTc:
            return "uniform";
        case ScenarioTag::NonUniformTc:
            return "nonuniform";
    }
    return "nophev";
}

ScenarioTag parse_scenario(std::string_view name) {
    if (name == "nophev") {
        return ScenarioTag::NoPhev;
    }
    if (name == "uniform") {
        return ScenarioTag::UniformTc;
    }
    if (name == "nonuniform" || name == "non-uniform") {
        return ScenarioTag::NonUniformTc;
    }
    throw ConfigError("unknown scenario '" + std::string(name) + "' (want nophev, uniform or nonuniform)");
}

Scenario Scenario::no_phev() {
    return Scenario{};
}

Scenario Scenario::with_fleet(ScenarioTag tag, std::size_t fleet_size, demand::ExpectedDemandCurve curve) {
    Scenario s{tag, fleet_size, std::move(curve)};
    s.validate();
    return s;
}

void Scenario::validate() const {
    if (tag == ScenarioTag::NoPhev && demand_curve) {
        throw DomainError("nophev scenario must not carry a demand curve");
    }
    if (tag != ScenarioTag::NoPhev && !demand_curve) {
        throw DomainError(std::string(to_string(tag)) + " scenario needs a demand curve");
    }
}

SupervisedDataset assemble_dataset(const LoadProfile& profile, const Scenario& scenario, FeatureMap map) {
    profile.validate();
    scenario.validate();
    const std::vector<double> base = profile.kw();
    std::vector<double> total = base;
    if (scenario.demand_curve) {
        const auto& curve = *scenario.demand_curve;
        if (curve.size() != kSlotsPerDay) {
            throw ShapeError("demand curve has " + std::to_string(curve.size()) + " slots, profile grid has " +
                             std::to_string(kSlotsPerDay));
        }
        for (std::size_t d = 0; d < profile.days(); ++d) {
            const std::span<const double> day(base.data() + d * kSlotsPerDay, kSlotsPerDay);
            const auto with_fleet = demand::total_demand(day, curve, scenario.fleet_size);
            std::copy(with_fleet.begin(), with_fleet.end(), total.begin() + static_cast<std::ptrdiff_t>(d * kSlotsPerDay));
        }
    }

    svr::DenseMatrix raw;
    SupervisedDataset ds;
    ds.timestamps.reserve(profile.records.size());
    for (const auto& r : profile.records) {
        raw.append_row(build_features(r.time, map));
        ds.timestamps.push_back(r.time);
    }
    ds.scaler = Scaler::fit(raw, total);
    ds.features = ds.scaler.transform_inputs(raw);
    ds.targets = ds.scaler.transform_targets(total);
    ds.target_kw = std::move(total);
    ds.feature_map = map;
    ds.months = profile.months();
    ds.scenario = scenario.tag;
    return ds;
}

void export_dataset_csv(std::ostream& out, const SupervisedDataset& dataset) {
    out << "timestamp";
    for (std::size_t c = 0; c < dataset.features.cols(); ++c) {
        out << ",f" << c + 1;
    }
    out << ",target_kw\n";
    for (std::size_t r = 0; r < dataset.size(); ++r) {
        out << format_timestamp(dataset.timestamps[r]);
        for (double v : dataset.features.row(r)) {
            out << ',' << text::format_double(v);
        }
        out << ',' << text::format_double(dataset.target_kw[r]) << '\n';
    }
}

std::pair<SupervisedDataset, SupervisedDataset> split_dataset(const SupervisedDataset& dataset, std::size_t split) {
    const std::size_t n = dataset.size();
    if (split < 2 || split + 1 > n) {
        throw DomainError("split point " + std::to_string(split) + " leaves an empty or one-row part of " +
                          std::to_string(n) + " rows");
    }
    SupervisedDataset parts[2];
    for (std::size_t i = 0; i < n; ++i) {
        auto& part = parts[i < split ? 0 : 1];
        part.features.append_row(dataset.features.row(i));
        part.targets.push_back(dataset.targets[i]);
        part.target_kw.push_back(dataset.target_kw[i]);
        part.timestamps.push_back(dataset.timestamps[i]);
    }
    for (auto& part : parts) {
        part.scaler = dataset.scaler;
        part.feature_map = dataset.feature_map;
        part.months = dataset.months;
        part.scenario = dataset.scenario;
    }
    return {std::move(parts[0]), std::move(parts[1])};
}

}  // namespace phevdemand::data
