#pragma once

#include "phevdemand/features.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace phevdemand::data {

enum class ProfileSource { Measured, Synthetic };

struct LoadRecord {
    Timestamp time;
    double kwh;  // energy over the quarter-hour starting at `time`
};

/// Residential load R_d as 15-minute energy readings.
///
/// Metadata is kept as the ordered `# key=value` header lines of the CSV so
/// that ingest followed by export reproduces the file. The keys profile_type,
/// weather_zone and source have accessors.
struct LoadProfile {
    std::vector<LoadRecord> records;
    std::vector<std::pair<std::string, std::string>> metadata;

    std::string meta(const std::string& key) const;
    void set_meta(const std::string& key, const std::string& value);
    ProfileSource source() const;

    std::size_t days() const noexcept { return records.size() / kSlotsPerDay; }
    /// Average power per slot, kWh / 0.25 h.
    std::vector<double> kw() const;
    /// Sorted distinct months covered (1..12).
    std::vector<unsigned> months() const;

    /// Whole days only, 15-minute cadence inside each day, later days strictly
    /// after earlier ones, energy finite and >= 0. Throws DomainError.
    void validate() const;
};

/// Reads `timestamp,kwh` CSV. Lines starting with '#' before the header are
/// metadata (`# key=value`). Errors are ParseError carrying the 1-based line
/// and column.
LoadProfile ingest_csv(std::istream& in);
/// Throws ConfigError naming the path if it cannot be opened.
LoadProfile ingest_csv_file(const std::string& path);

/// Canonical form: metadata lines, header, one `timestamp,kwh` row per record
/// with the shortest round-trip decimal for kwh, '\n' line endings.
void export_csv(std::ostream& out, const LoadProfile& profile);

struct SynthesisConfig {
    int year = 2014;
    /// Each day is scaled by a factor drawn from [1 - day_noise, 1 + day_noise].
    double day_noise = 0.04;
    /// Each slot is scaled by a factor drawn from [1 - slot_noise, 1 + slot_noise].
    double slot_noise = 0.02;
    /// Multiplies the whole seasonal shape (kW).
    double scale = 1.0;
};

/// Noise-free average household demand (kW) at `hour` of a day in `month`,
/// blending winter (double peak), summer (afternoon cooling peak) and
/// shoulder-season shapes by month. Weekends get a later morning peak.
double seasonal_shape_kw(unsigned month, double hour, bool weekend);

/// `days` consecutive days starting on the first of `month`, deterministic
/// in (month, days, seed, config). All values are strictly positive.
LoadProfile synthesize_profile(unsigned month, std::size_t days, std::uint64_t seed,
                               const SynthesisConfig& config = {});

}  // namespace phevdemand::data
