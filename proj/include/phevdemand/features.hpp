#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace phevdemand::data {

/// Local wall-clock time at minute resolution. Time zones and DST are not
/// modelled; a profile is a plain sequence of local quarter-hours.
using Timestamp = std::chrono::sys_time<std::chrono::minutes>;

inline constexpr int kMinutesPerSlot = 15;
inline constexpr std::size_t kSlotsPerDay = 96;

/// Parses YYYY-MM-DDTHH:MM. Returns nullopt for anything else, including
/// impossible dates.
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour = 0, int minute = 0);

/// Quarter-hour index within the day, 0..95.
std::size_t quarter_of_day(Timestamp t);
/// 0 = Monday .. 6 = Sunday.
unsigned day_of_week(Timestamp t);
/// 1..12.
unsigned month_of(Timestamp t);
std::chrono::sys_days day_of(Timestamp t);
bool on_quarter_grid(Timestamp t);

enum class FeatureMap {
    /// [quarter/95, sin(2 pi q/96), cos(2 pi q/96), weekday/6, is_weekend, (month-1)/11]
    Calendar,
    /// [quarter/95, sin(2 pi q/96), cos(2 pi q/96)]
    TimeOfDay,
};

std::string_view to_string(FeatureMap map);
/// "calendar" or "time-of-day"; throws ConfigError otherwise.
FeatureMap parse_feature_map(std::string_view name);
std::size_t feature_dimension(FeatureMap map);

/// Input vector x for the quarter-hour starting at t. Throws DomainError when
/// t is not on the 15-minute grid.
std::vector<double> build_features(Timestamp t, FeatureMap map = FeatureMap::Calendar);

}  // namespace phevdemand::data
