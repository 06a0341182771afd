#include "phevdemand/features.hpp"

#include "phevdemand/error.hpp"
#include "phevdemand/numerics.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace phevdemand::data {

using namespace std::chrono;

namespace {

bool read_int(std::string_view s, int& out) {
    if (s.empty()) {
        return false;
    }
    for (char c : s) {
        if (c < '0' || c > '9') {
            return false;
        }
    }
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    // YYYY-MM-DDTHH:MM
    if (text.size() != 16 || text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':') {
        return std::nullopt;
    }
    int y = 0, mo = 0, d = 0, h = 0, mi = 0;
    if (!read_int(text.substr(0, 4), y) || !read_int(text.substr(5, 2), mo) || !read_int(text.substr(8, 2), d) ||
        !read_int(text.substr(11, 2), h) || !read_int(text.substr(14, 2), mi)) {
        return std::nullopt;
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59) {
        return std::nullopt;
    }
    return Timestamp{sys_days{ymd}} + hours{h} + minutes{mi};
}

std::string format_timestamp(Timestamp t) {
    const auto d = floor<days>(t);
    const year_month_day ymd{d};
    const auto mins = (t - d).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(mins / 60),
                  static_cast<int>(mins % 60));
    return buf;
}

Timestamp make_timestamp(int y, unsigned m, unsigned d, int hour, int minute) {
    const year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) {
        throw DomainError("invalid calendar date");
    }
    return Timestamp{sys_days{ymd}} + hours{hour} + minutes{minute};
}

std::size_t quarter_of_day(Timestamp t) {
    return static_cast<std::size_t>((t - floor<days>(t)).count() / kMinutesPerSlot);
}

unsigned day_of_week(Timestamp t) {
    // iso_encoding: Monday = 1 .. Sunday = 7
    return weekday{floor<days>(t)}.iso_encoding() - 1;
}

unsigned month_of(Timestamp t) {
    return static_cast<unsigned>(year_month_day{floor<days>(t)}.month());
}

sys_days day_of(Timestamp t) {
    return floor<days>(t);
}

bool on_quarter_grid(Timestamp t) {
    return (t - floor<days>(t)).count() % kMinutesPerSlot == 0;
}

std::string_view to_string(FeatureMap map) {
    return map == FeatureMap::Calendar ? "calendar" : "time-of-day";
}

FeatureMap parse_feature_map(std::string_view name) {
    if (name == "calendar") {
        return FeatureMap::Calendar;
    }
    if (name == "time-of-day") {
        return FeatureMap::TimeOfDay;
    }
    throw ConfigError("unknown feature map '" + std::string(name) + "'");
}

std::size_t feature_dimension(FeatureMap map) {
    return map == FeatureMap::Calendar ? 6 : 3;
}

std::vector<double> build_features(Timestamp t, FeatureMap map) {
    if (!on_quarter_grid(t)) {
        throw DomainError("timestamp " + format_timestamp(t) + " is not on the 15-minute grid");
    }
    const double q = static_cast<double>(quarter_of_day(t));
    const double angle = 2.0 * numerics::kPi * q / static_cast<double>(kSlotsPerDay);
    std::vector<double> x{q / 95.0, std::sin(angle), std::cos(angle)};
    if (map == FeatureMap::Calendar) {
        const unsigned dow = day_of_week(t);
        x.push_back(static_cast<double>(dow) / 6.0);
        x.push_back(dow >= 5 ? 1.0 : 0.0);
        x.push_back(static_cast<double>(month_of(t) - 1) / 11.0);
    }
    return x;
}

}  // namespace phevdemand::data
