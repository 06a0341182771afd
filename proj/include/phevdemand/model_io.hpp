#pragma once

#include "phevdemand/features.hpp"
#include "phevdemand/scaler.hpp"
#include "phevdemand/svr.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace phevdemand::io {

inline constexpr int kModelFormatVersion = 1;

/// A trained model plus what is needed to apply it to raw timestamps.
struct StoredModel {
    svr::SvrModel model;
    std::optional<data::Scaler> scaler;
    std::optional<data::FeatureMap> feature_map;
    /// Free-form provenance (config hash); written only when non-empty.
    std::string config_hash;
};

/// JSON document {version, kernel, support_inputs, dual_coefs, bias, epsilon,
/// scaler, ...}. Doubles use the shortest round-trip decimal, so a load of a
/// saved model reproduces every value bit for bit.
std::string model_to_json(const StoredModel& stored);
StoredModel model_from_json(const std::string& text);

void save_model(const std::string& path, const StoredModel& stored);
/// Throws ConfigError if the file cannot be opened, ParseError on bad content.
StoredModel load_model(const std::string& path);

}  // namespace phevdemand::io
