#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "skybuffer/timebase.hpp"

namespace skybuffer {

// One flight leg. Timestamps are absolute local minutes, already resolved
// against the flight date (clock strings never survive past parsing).
struct FlightRecord {
    std::int64_t date_days = 0;  // civil date of scheduled departure day
    std::string carrier;
    std::optional<std::string> tail;
    std::string origin;
    std::string dest;
    Minutes sched_dep = 0;
    Minutes sched_arr = 0;
    std::optional<Minutes> actual_dep;
    std::optional<Minutes> actual_arr;
    std::optional<double> dep_delay_min;  // actual_dep - sched_dep when actual_dep present
    double distance = 0;                  // statute miles
    bool cancelled = false;
    bool diverted = false;
    int day_of_week = 1;  // 1 = Monday .. 7 = Sunday
    std::string dep_time_block;
    int source_index = 0;  // file order; tie-break and key disambiguation
};

inline std::string flight_key(const FlightRecord& f) {
    std::string tail = f.tail ? *f.tail : "-";
    return tail + "|" + format_date(f.date_days) + "|" +
           format_hhmm(static_cast<int>(((f.sched_dep % kMinutesPerDay) + kMinutesPerDay) %
                                        kMinutesPerDay)) +
           "|" + f.origin + "-" + f.dest;
}

struct WeatherObservation {
    std::string station;  // airport code
    Minutes obs_time = 0;
    std::optional<double> wind_speed;     // knots
    std::optional<double> precipitation;  // inches/hr
    std::optional<double> visibility;     // statute miles
    std::optional<double> humidity;       // percent
};

struct JoinedFlight {
    FlightRecord flight;
    std::optional<WeatherObservation> weather;
    bool weather_missing = true;
};

// Row-level accounting for a parse or clean pass.
struct ParseReport {
    std::int64_t rows_read = 0;
    std::int64_t rows_kept = 0;
    std::map<std::string, std::int64_t> rejected;  // reason -> count

    void reject(const std::string& reason) { ++rejected[reason]; }

    std::int64_t rejected_total() const {
        std::int64_t n = 0;
        for (const auto& [_, c] : rejected) n += c;
        return n;
    }

    // One key=value pair per line.
    std::string to_text(const std::string& label) const {
        std::ostringstream out;
        out << "report=" << label << "\n";
        out << "rows_read=" << rows_read << "\n";
        out << "rows_kept=" << rows_kept << "\n";
        for (const auto& [reason, count] : rejected) out << "rejected." << reason << "=" << count << "\n";
        return out.str();
    }
};

}  // namespace skybuffer
