#include "phevdemand/load_profile.hpp"

#include "phevdemand/error.hpp"
#include "phevdemand/numerics.hpp"
#include "phevdemand/text_format.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>

namespace phevdemand::data {

using namespace std::chrono;

std::string LoadProfile::meta(const std::string& key) const {
    for (const auto& [k, v] : metadata) {
        if (k == key) {
            return v;
        }
    }
    return {};
}

void LoadProfile::set_meta(const std::string& key, const std::string& value) {
    for (auto& [k, v] : metadata) {
        if (k == key) {
            v = value;
            return;
        }
    }
    metadata.emplace_back(key, value);
}

ProfileSource LoadProfile::source() const {
    return meta("source") == "synthetic" ? ProfileSource::Synthetic : ProfileSource::Measured;
}

std::vector<double> LoadProfile::kw() const {
    std::vector<double> out(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        out[i] = records[i].kwh * 4.0;
    }
    return out;
}

std::vector<unsigned> LoadProfile::months() const {
    std::set<unsigned> seen;
    for (const auto& r : records) {
        seen.insert(month_of(r.time));
    }
    return {seen.begin(), seen.end()};
}

void LoadProfile::validate() const {
    if (records.empty() || records.size() % kSlotsPerDay != 0) {
        throw DomainError("load profile must hold whole days of 96 records, got " + std::to_string(records.size()));
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!std::isfinite(r.kwh) || r.kwh < 0.0) {
            throw DomainError("load profile energy at " + format_timestamp(r.time) + " is negative or not finite");
        }
        if (i % kSlotsPerDay == 0) {
            if (quarter_of_day(r.time) != 0 || !on_quarter_grid(r.time)) {
                throw DomainError("load profile day does not start at 00:00: " + format_timestamp(r.time));
            }
            if (i > 0 && r.time <= records[i - 1].time) {
                throw DomainError("load profile days out of order at " + format_timestamp(r.time));
            }
        } else if (r.time - records[i - 1].time != minutes{kMinutesPerSlot}) {
            throw DomainError("load profile cadence gap at " + format_timestamp(r.time));
        }
    }
}

namespace {

bool blank(std::string_view line) {
    return text::trim(line).empty();
}

}  // namespace

LoadProfile ingest_csv(std::istream& in) {
    LoadProfile profile;
    std::string raw;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t day_start_line = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (blank(line)) {
            continue;
        }
        if (!header_seen) {
            if (line.front() == '#') {
                const auto body = text::trim(line.substr(1));
                const auto eq = body.find('=');
                if (eq == std::string_view::npos) {
                    throw ParseError("metadata line must have the form '# key=value'", line_no, 1);
                }
                profile.metadata.emplace_back(std::string(text::trim(body.substr(0, eq))),
                                              std::string(text::trim(body.substr(eq + 1))));
                continue;
            }
            const auto cols = text::split(line, ',');
            if (cols.size() != 2 || text::trim(cols[0]) != "timestamp" || text::trim(cols[1]) != "kwh") {
                throw ParseError("expected header 'timestamp,kwh'", line_no, 1);
            }
            header_seen = true;
            continue;
        }
        const auto cols = text::split(line, ',');
        if (cols.size() != 2) {
            throw ParseError("expected 2 fields, found " + std::to_string(cols.size()), line_no,
                             std::min<std::size_t>(cols.size(), 3));
        }
        const auto ts_text = text::trim(cols[0]);
        const auto ts = parse_timestamp(ts_text);
        if (!ts) {
            throw ParseError("malformed timestamp '" + std::string(ts_text) + "' (want YYYY-MM-DDTHH:MM)", line_no, 1);
        }
        if (!on_quarter_grid(*ts)) {
            throw ParseError("timestamp " + std::string(ts_text) + " is not on the 15-minute grid", line_no, 1);
        }
        const auto kwh = text::parse_double(cols[1]);
        if (!kwh || !std::isfinite(*kwh)) {
            throw ParseError("malformed energy value '" + std::string(text::trim(cols[1])) + "'", line_no, 2);
        }
        if (*kwh < 0.0) {
            throw ParseError("negative energy " + std::string(text::trim(cols[1])), line_no, 2);
        }
        const std::size_t idx = profile.records.size();
        if (idx % kSlotsPerDay == 0) {
            if (quarter_of_day(*ts) != 0) {
                if (idx > 0 && day_of(*ts) == day_of(profile.records.back().time) + std::chrono::days{1}) {
                    throw ParseError("cadence gap: missing " + format_timestamp(Timestamp{day_of(*ts)}) +
                                         " before " + std::string(ts_text),
                                     line_no, 1);
                }
                throw ParseError("day must start at 00:00, found " + std::string(ts_text), line_no, 1);
            }
            if (idx > 0 && *ts <= profile.records.back().time) {
                throw ParseError("timestamp " + std::string(ts_text) + " is not after the previous record", line_no,
                                 1);
            }
            day_start_line = line_no;
        } else {
            const Timestamp expected = profile.records.back().time + minutes{kMinutesPerSlot};
            if (*ts != expected) {
                if (*ts <= profile.records.back().time) {
                    throw ParseError("timestamp " + std::string(ts_text) + " is not after the previous record",
                                     line_no, 1);
                }
                throw ParseError("cadence gap: missing " + format_timestamp(expected) + " before " +
                                     std::string(ts_text),
                                 line_no, 1);
            }
        }
        profile.records.push_back({*ts, *kwh});
    }
    if (!header_seen) {
        throw ParseError("missing header 'timestamp,kwh'", line_no == 0 ? 1 : line_no);
    }
    if (profile.records.empty()) {
        throw ParseError("no data rows", line_no);
    }
    if (const std::size_t rem = profile.records.size() % kSlotsPerDay; rem != 0) {
        throw ParseError("partial day " + format_timestamp(profile.records.back().time).substr(0, 10) + ": " +
                             std::to_string(rem) + " of 96 records",
                         day_start_line);
    }
    return profile;
}

LoadProfile ingest_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open load profile '" + path + "'");
    }
    try {
        return ingest_csv(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), 0);
    }
}

void export_csv(std::ostream& out, const LoadProfile& profile) {
    for (const auto& [k, v] : profile.metadata) {
        out << "# " << k << '=' << v << '\n';
    }
    out << "timestamp,kwh\n";
    for (const auto& r : profile.records) {
        out << format_timestamp(r.time) << ',' << text::format_double(r.kwh) << '\n';
    }
}

namespace {

double bump(double hour, double centre, double width) {
    // Circular distance so evening bumps carry past midnight.
    double d = std::fabs(hour - centre);
    d = std::min(d, 24.0 - d);
    return std::exp(-0.5 * d * d / (width * width));
}

double winter_shape(double hour, bool weekend) {
    const double morning = weekend ? 9.0 : 7.5;
    return 0.9 + 1.0 * bump(hour, morning, 1.5) + 1.4 * bump(hour, 19.0, 2.2);
}

double summer_shape(double hour, bool weekend) {
    const double morning = weekend ? 9.0 : 7.5;
    return 0.8 + 0.2 * bump(hour, morning, 1.5) + 2.2 * bump(hour, 17.0, 3.0);
}

double shoulder_shape(double hour, bool weekend) {
    const double morning = weekend ? 9.0 : 7.5;
    return 0.7 + 0.5 * bump(hour, morning, 1.5) + 0.3 * bump(hour, 15.0, 3.0) + 0.8 * bump(hour, 19.5, 2.0);
}

}  // namespace

double seasonal_shape_kw(unsigned month, double hour, bool weekend) {
    if (month < 1 || month > 12) {
        throw DomainError("month must be in 1..12, got " + std::to_string(month));
    }
    const double m = static_cast<double>(month);
    const double w_winter = std::max(0.0, std::cos(2.0 * numerics::kPi * (m - 1.0) / 12.0));
    const double w_summer = std::max(0.0, std::cos(2.0 * numerics::kPi * (m - 7.0) / 12.0));
    // cos is not exactly 0 at the quarter points; treat tiny weights as zero.
    const double ww = w_winter < 1e-12 ? 0.0 : w_winter;
    const double ws = w_summer < 1e-12 ? 0.0 : w_summer;
    const double level = ww * winter_shape(hour, weekend) + ws * summer_shape(hour, weekend) +
                         (1.0 - ww - ws) * shoulder_shape(hour, weekend);
    return weekend ? 1.08 * level : level;
}

LoadProfile synthesize_profile(unsigned month, std::size_t days, std::uint64_t seed, const SynthesisConfig& config) {
    if (month < 1 || month > 12) {
        throw DomainError("month must be in 1..12, got " + std::to_string(month));
    }
    if (days < 1) {
        throw DomainError("synthesize_profile needs days >= 1");
    }
    if (!(config.day_noise >= 0.0 && config.day_noise < 1.0) || !(config.slot_noise >= 0.0 && config.slot_noise < 1.0) ||
        !(config.scale > 0.0)) {
        throw DomainError("synthesis noise must lie in [0, 1) and scale must be positive");
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(month), static_cast<std::uint32_t>(config.year)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    LoadProfile profile;
    profile.metadata = {{"profile_type", "synthetic-residential"}, {"weather_zone", "none"}, {"source", "synthetic"}};
    profile.records.reserve(days * kSlotsPerDay);
    const Timestamp first = make_timestamp(config.year, month, 1);
    for (std::size_t d = 0; d < days; ++d) {
        const Timestamp day_start = first + std::chrono::days{static_cast<int>(d)};
        const bool weekend = day_of_week(day_start) >= 5;
        const double day_factor = 1.0 + config.day_noise * unit(rng);
        for (std::size_t q = 0; q < kSlotsPerDay; ++q) {
            // Slot-mean of the shape is approximated by its midpoint.
            const double hour = (static_cast<double>(q) + 0.5) * 0.25;
            const double kw = config.scale * seasonal_shape_kw(month, hour, weekend) * day_factor *
                              (1.0 + config.slot_noise * unit(rng));
            profile.records.push_back({day_start + minutes{static_cast<int>(q) * kMinutesPerSlot}, kw * 0.25});
        }
    }
    return profile;
}

}  // namespace phevdemand::data
