#pragma once

#include "phevdemand/demand_model.hpp"
#include "phevdemand/features.hpp"
#include "phevdemand/load_profile.hpp"
#include "phevdemand/scaler.hpp"
#include "phevdemand/svr.hpp"

#include <iosfwd>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace phevdemand::data {

enum class ScenarioTag { NoPhev, UniformTc, NonUniformTc };

/// "nophev", "uniform", "nonuniform".
std::string_view to_string(ScenarioTag tag);
/// Throws ConfigError on an unknown name.
ScenarioTag parse_scenario(std::string_view name);

/// One column of the experiment table: base load alone, or base load plus a
/// fleet whose per-vehicle expected demand is `demand_curve`.
struct Scenario {
    ScenarioTag tag = ScenarioTag::NoPhev;
    std::size_t fleet_size = 0;
    std::optional<demand::ExpectedDemandCurve> demand_curve;

    static Scenario no_phev();
    static Scenario with_fleet(ScenarioTag tag, std::size_t fleet_size, demand::ExpectedDemandCurve curve);

    /// NoPhev carries no curve; the others carry one. Throws DomainError.
    void validate() const;
};

struct SupervisedDataset {
    svr::DenseMatrix features;  // scaled to [0, 1]
    std::vector<double> targets;  // scaled to [0, 1]
    std::vector<double> target_kw;  // D_T before scaling
    std::vector<Timestamp> timestamps;
    Scaler scaler;
    FeatureMap feature_map = FeatureMap::Calendar;
    std::vector<unsigned> months;
    ScenarioTag scenario = ScenarioTag::NoPhev;

    std::size_t size() const noexcept { return targets.size(); }
    svr::TrainingSet training_set() const { return {features, targets}; }
};

/// Rows [0, split) and [split, size), keeping the scaler fitted on the whole
/// dataset. Throws DomainError unless 2 <= split <= size - 1.
std::pair<SupervisedDataset, SupervisedDataset> split_dataset(const SupervisedDataset& dataset, std::size_t split);

/// One row per quarter-hour of `profile`. The target is D_T = R_d + n E_d in
/// kW, min-max scaled together with the features by a scaler fitted here.
/// Throws ShapeError when the curve grid differs from 96 slots.
SupervisedDataset assemble_dataset(const LoadProfile& profile, const Scenario& scenario,
                                   FeatureMap map = FeatureMap::Calendar);

/// CSV `timestamp,f1..fn,target_kw` with the scaled features.
void export_dataset_csv(std::ostream& out, const SupervisedDataset& dataset);

}  // namespace phevdemand::data
