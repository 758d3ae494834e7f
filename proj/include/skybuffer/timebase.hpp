#pragma once

// Minute-resolution timestamps in airport-local time, stored as minutes since
// 1970-01-01 00:00. Flights and weather keep the local clock they were
// reported in; turnaround and join arithmetic never crosses airports, and
// cross-airport arithmetic is restricted to scheduled-vs-actual differences,
// so no timezone conversion is performed anywhere.

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

namespace skybuffer {

using Minutes = std::int64_t;
inline constexpr Minutes kMinutesPerDay = 1440;

struct CivilDate {
    int year;
    unsigned month;  // 1..12
    unsigned day;    // 1..31
};

inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const auto y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {static_cast<int>(y + (m <= 2)), m, d};
}

// ISO weekday, Monday = 1 .. Sunday = 7 (the flight-file convention).
inline int day_of_week(std::int64_t days) {
    return static_cast<int>(((days % 7) + 10) % 7) + 1;
}

inline std::optional<std::int64_t> parse_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
    const int y = std::stoi(s.substr(0, 4));
    const int m = std::stoi(s.substr(5, 2));
    const int d = std::stoi(s.substr(8, 2));
    if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
    return days_from_civil(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

struct HhmmValue {
    int minute_of_day;  // 0..1439
    int day_offset;     // "2400" resolves to 00:00 of the next day
};

// Accepts 1-4 digit clock strings, zero-padded on the left. Valid iff
// 00 <= HH <= 24 and 00 <= MM <= 59, where HH == 24 requires MM == 00.
inline std::optional<HhmmValue> parse_hhmm(const std::string& raw) {
    if (raw.empty() || raw.size() > 4) return std::nullopt;
    for (char c : raw)
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    std::string s = std::string(4 - raw.size(), '0') + raw;
    const int hh = (s[0] - '0') * 10 + (s[1] - '0');
    const int mm = (s[2] - '0') * 10 + (s[3] - '0');
    if (mm > 59 || hh > 24) return std::nullopt;
    if (hh == 24) {
        if (mm != 0) return std::nullopt;
        return HhmmValue{0, 1};
    }
    return HhmmValue{hh * 60 + mm, 0};
}

inline std::string format_hhmm(int minute_of_day) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d%02d", minute_of_day / 60, minute_of_day % 60);
    return buf;
}

inline std::string format_date(std::int64_t days) {
    const CivilDate c = civil_from_days(days);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", c.year, c.month, c.day);
    return buf;
}

inline std::string format_minutes(Minutes t) {
    const std::int64_t days = t >= 0 ? t / kMinutesPerDay : (t - kMinutesPerDay + 1) / kMinutesPerDay;
    const int mod = static_cast<int>(t - days * kMinutesPerDay);
    char buf[48];
    const CivilDate c = civil_from_days(days);
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d", c.year, c.month, c.day, mod / 60,
                  mod % 60);
    return buf;
}

// "YYYY-MM-DDTHH:MM[:SS]"; seconds are truncated toward the minute.
inline std::optional<Minutes> parse_minutes(const std::string& s) {
    if (s.size() < 16 || (s[10] != 'T' && s[10] != ' ') || s[13] != ':') return std::nullopt;
    const auto days = parse_date(s.substr(0, 10));
    if (!days) return std::nullopt;
    const std::string hh = s.substr(11, 2);
    const std::string mm = s.substr(14, 2);
    for (char c : hh + mm)
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    const int h = std::stoi(hh);
    const int m = std::stoi(mm);
    if (h > 23 || m > 59) return std::nullopt;
    return *days * kMinutesPerDay + h * 60 + m;
}

// Departure-time block labels: one block for the early morning, hourly after.
inline std::string dep_time_block(int minute_of_day) {
    if (minute_of_day < 360) return "0001-0559";
    const int h = minute_of_day / 60;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d00-%02d59", h, h);
    return buf;
}

}  // namespace skybuffer
