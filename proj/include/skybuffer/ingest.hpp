#pragma once

// Flight and weather file ingestion: schema checks, row validation, clock
// resolution, and the nearest-prior weather join.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skybuffer/csv.hpp"
#include "skybuffer/records.hpp"

namespace skybuffer {

// Logical column -> header name. Defaults follow the on-time performance
// file convention; override when feeding files with renamed headers.
struct FlightSchema {
    std::string flight_date = "FlightDate";
    std::string carrier = "Operating_Airline";
    std::string tail = "Tail_Number";
    std::string origin = "Origin";
    std::string dest = "Dest";
    std::string sched_dep = "CRSDepTime";
    std::string sched_arr = "CRSArrTime";
    std::string actual_dep = "DepTime";
    std::string actual_arr = "ArrTime";
    std::string dep_delay = "DepDelay";
    std::string distance = "Distance";
    std::string cancelled = "Cancelled";
    std::string diverted = "Diverted";
    std::string day_of_week = "DayOfWeek";
    std::string dep_time_block = "DepTimeBlk";
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::optional<double> parse_double(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return std::nullopt;
    return v;
}

// Observation values may carry trailing quality letters ("0.12s") or "*".
// "T" marks trace precipitation, reported below the 0.01 in floor.
inline std::optional<double> parse_weather_value(const std::string& raw, bool is_precip) {
    std::string s = trim(raw);
    if (s.empty() || s == "*") return std::nullopt;
    if (is_precip && (s == "T" || s[0] == 'T')) return 0.005;
    while (!s.empty() &&
           (std::isalpha(static_cast<unsigned char>(s.back())) || s.back() == '*'))
        s.pop_back();
    return parse_double(s);
}

}  // namespace detail

struct FlightParseResult {
    std::vector<FlightRecord> records;
    ParseReport report;
};

inline FlightRecord parse_flight_row_or_throw(const std::vector<std::string>& row,
                                              const std::vector<int>& cols, int source_index) {
    // cols layout mirrors FlightSchema field order.
    enum {
        kDate, kCarrier, kTail, kOrigin, kDest, kSchedDep, kSchedArr,
        kActDep, kActArr, kDepDelay, kDistance, kCancelled, kDiverted, kDow, kBlock
    };
    FlightRecord rec;
    rec.source_index = source_index;

    const auto date = parse_date(detail::trim(field_at(row, cols[kDate])));
    if (!date) throw DataError("bad date");
    rec.date_days = *date;

    rec.carrier = detail::trim(field_at(row, cols[kCarrier]));
    rec.origin = detail::trim(field_at(row, cols[kOrigin]));
    rec.dest = detail::trim(field_at(row, cols[kDest]));
    if (rec.carrier.empty()) throw DataError("missing carrier");
    if (rec.origin.empty() || rec.dest.empty()) throw DataError("missing airport");

    const std::string tail = detail::trim(field_at(row, cols[kTail]));
    if (!tail.empty()) rec.tail = tail;

    const auto sched_dep = parse_hhmm(detail::trim(field_at(row, cols[kSchedDep])));
    const auto sched_arr = parse_hhmm(detail::trim(field_at(row, cols[kSchedArr])));
    if (!sched_dep || !sched_arr) throw DataError("invalid HHMM");
    rec.sched_dep =
        (rec.date_days + sched_dep->day_offset) * kMinutesPerDay + sched_dep->minute_of_day;
    rec.sched_arr =
        (rec.date_days + sched_arr->day_offset) * kMinutesPerDay + sched_arr->minute_of_day;
    // Arrival clocks carry no date; a red-eye resolves to the next day.
    if (rec.sched_arr < rec.sched_dep) rec.sched_arr += kMinutesPerDay;

    const auto cancelled = detail::parse_double(field_at(row, cols[kCancelled]));
    const auto diverted = detail::parse_double(field_at(row, cols[kDiverted]));
    if (!cancelled || !diverted) throw DataError("bad flag");
    rec.cancelled = *cancelled != 0.0;
    rec.diverted = *diverted != 0.0;

    const std::string act_dep_raw = detail::trim(field_at(row, cols[kActDep]));
    const std::string dep_delay_raw = detail::trim(field_at(row, cols[kDepDelay]));
    if (!act_dep_raw.empty()) {
        const auto act_dep = parse_hhmm(act_dep_raw);
        if (!act_dep) throw DataError("invalid HHMM");
        if (!dep_delay_raw.empty()) {
            const auto delay = detail::parse_double(dep_delay_raw);
            if (!delay) throw DataError("bad delay");
            // The reported delay fixes the date of the actual departure; its
            // clock must agree with the departure-time field.
            const Minutes actual = rec.sched_dep + static_cast<Minutes>(*delay);
            const Minutes mod = ((actual % kMinutesPerDay) + kMinutesPerDay) % kMinutesPerDay;
            if (static_cast<int>(mod) != act_dep->minute_of_day)
                throw DataError("inconsistent dep delay");
            rec.actual_dep = actual;
            rec.dep_delay_min = *delay;
        } else {
            rec.actual_dep =
                (rec.date_days + act_dep->day_offset) * kMinutesPerDay + act_dep->minute_of_day;
            rec.dep_delay_min = static_cast<double>(*rec.actual_dep - rec.sched_dep);
        }
    }

    const std::string act_arr_raw = detail::trim(field_at(row, cols[kActArr]));
    if (!act_arr_raw.empty()) {
        const auto act_arr = parse_hhmm(act_arr_raw);
        if (!act_arr) throw DataError("invalid HHMM");
        Minutes arr =
            (rec.date_days + act_arr->day_offset) * kMinutesPerDay + act_arr->minute_of_day;
        while (rec.actual_dep && arr < *rec.actual_dep) arr += kMinutesPerDay;
        rec.actual_arr = arr;
    }

    const auto distance = detail::parse_double(field_at(row, cols[kDistance]));
    if (!distance || *distance < 0) throw DataError("bad distance");
    rec.distance = *distance;

    const auto dow = detail::parse_double(field_at(row, cols[kDow]));
    if (!dow || *dow < 1 || *dow > 7) throw DataError("bad day_of_week");
    rec.day_of_week = static_cast<int>(*dow);

    rec.dep_time_block = detail::trim(field_at(row, cols[kBlock]));
    return rec;
}

inline FlightParseResult parse_flight_csv(const std::string& path,
                                          const FlightSchema& schema = FlightSchema{}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open flight file: " + path);

    CsvReader reader(in);
    std::vector<std::string> row;
    if (!reader.next_row(row)) throw SchemaError("empty flight file: " + path);
    const HeaderIndex header(row);
    const std::vector<int> cols = {
        header.require(schema.flight_date), header.require(schema.carrier),
        header.require(schema.tail),        header.require(schema.origin),
        header.require(schema.dest),        header.require(schema.sched_dep),
        header.require(schema.sched_arr),   header.require(schema.actual_dep),
        header.require(schema.actual_arr),  header.require(schema.dep_delay),
        header.require(schema.distance),    header.require(schema.cancelled),
        header.require(schema.diverted),    header.require(schema.day_of_week),
        header.require(schema.dep_time_block)};

    FlightParseResult out;
    while (reader.next_row(row)) {
        ++out.report.rows_read;
        try {
            FlightRecord rec =
                parse_flight_row_or_throw(row, cols, static_cast<int>(out.records.size()));
            out.records.push_back(std::move(rec));
            ++out.report.rows_kept;
        } catch (const DataError& e) {
            out.report.reject(e.what());
        }
    }
    return out;
}

struct WeatherParseResult {
    std::vector<WeatherObservation> observations;
    ParseReport report;
};

inline WeatherParseResult parse_weather_csv(const std::string& path, const std::string& airport) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open weather file: " + path);

    CsvReader reader(in);
    std::vector<std::string> row;
    if (!reader.next_row(row)) throw SchemaError("empty weather file: " + path);
    const HeaderIndex header(row);
    const int c_date = header.require("DATE");
    const int c_wind = header.find("HourlyWindSpeed");
    const int c_precip = header.find("HourlyPrecipitation");
    const int c_vis = header.find("HourlyVisibility");
    const int c_rh = header.find("HourlyRelativeHumidity");
    if (c_wind < 0 && c_precip < 0 && c_vis < 0 && c_rh < 0)
        throw SchemaError("weather file has no hourly observation columns: " + path);

    WeatherParseResult out;
    while (reader.next_row(row)) {
        ++out.report.rows_read;
        const auto t = parse_minutes(detail::trim(field_at(row, c_date)));
        if (!t) {
            out.report.reject("bad date");
            continue;
        }
        WeatherObservation obs;
        obs.station = airport;
        obs.obs_time = *t;
        obs.wind_speed = detail::parse_weather_value(field_at(row, c_wind), false);
        obs.precipitation = detail::parse_weather_value(field_at(row, c_precip), true);
        obs.visibility = detail::parse_weather_value(field_at(row, c_vis), false);
        obs.humidity = detail::parse_weather_value(field_at(row, c_rh), false);
        if (obs.wind_speed && *obs.wind_speed < 0) obs.wind_speed.reset();
        if (obs.precipitation && *obs.precipitation < 0) obs.precipitation.reset();
        if (obs.visibility && *obs.visibility < 0) obs.visibility.reset();
        if (obs.humidity && (*obs.humidity < 0 || *obs.humidity > 100)) obs.humidity.reset();
        if (!obs.wind_speed && !obs.precipitation && !obs.visibility && !obs.humidity) {
            out.report.reject("all fields missing");
            continue;
        }
        out.observations.push_back(std::move(obs));
        ++out.report.rows_kept;
    }

    std::stable_sort(out.observations.begin(), out.observations.end(),
                     [](const WeatherObservation& a, const WeatherObservation& b) {
                         return a.obs_time < b.obs_time;
                     });
    // Keep the first record of a duplicated minute so times strictly increase.
    std::vector<WeatherObservation> dedup;
    dedup.reserve(out.observations.size());
    for (auto& obs : out.observations) {
        if (!dedup.empty() && dedup.back().obs_time == obs.obs_time) {
            out.report.reject("duplicate time");
            --out.report.rows_kept;
            continue;
        }
        dedup.push_back(std::move(obs));
    }
    out.observations = std::move(dedup);
    return out;
}

struct CleanResult {
    std::vector<FlightRecord> records;
    ParseReport report;  // rejected reasons: cancelled, diverted, no tail, no actual dep
};

inline CleanResult clean_flights(const std::vector<FlightRecord>& records) {
    CleanResult out;
    out.report.rows_read = static_cast<std::int64_t>(records.size());
    for (const auto& rec : records) {
        if (rec.cancelled) {
            out.report.reject("cancelled");
        } else if (rec.diverted) {
            out.report.reject("diverted");
        } else if (!rec.tail) {
            out.report.reject("no tail");
        } else if (!rec.actual_dep) {
            out.report.reject("no actual dep");
        } else {
            out.records.push_back(rec);
            ++out.report.rows_kept;
        }
    }
    return out;
}

using WeatherByAirport = std::map<std::string, std::vector<WeatherObservation>>;

// Latest observation at the origin with obs_time <= sched_dep, no older than
// `window_min`. Input flight order is preserved.
inline std::vector<JoinedFlight> join_weather(const std::vector<FlightRecord>& flights,
                                              const WeatherByAirport& weather,
                                              Minutes window_min = 120) {
    std::vector<JoinedFlight> out;
    out.reserve(flights.size());
    for (const auto& f : flights) {
        JoinedFlight jf;
        jf.flight = f;
        const auto it = weather.find(f.origin);
        if (it != weather.end() && !it->second.empty()) {
            const auto& obs = it->second;
            auto pos = std::upper_bound(
                obs.begin(), obs.end(), f.sched_dep,
                [](Minutes t, const WeatherObservation& o) { return t < o.obs_time; });
            if (pos != obs.begin()) {
                --pos;
                if (f.sched_dep - pos->obs_time <= window_min) {
                    jf.weather = *pos;
                    jf.weather_missing = false;
                }
            }
        }
        out.push_back(std::move(jf));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Canonical cleaned-flights file: the handoff format between CLI stages.

inline void write_clean_flights_csv(const std::vector<JoinedFlight>& flights,
                                    const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    write_csv_row(out, {"key", "flight_date", "carrier", "tail", "origin", "dest", "sched_dep",
                        "sched_arr", "actual_dep", "actual_arr", "dep_delay_min", "distance",
                        "day_of_week", "dep_time_block", "wind", "precip", "visibility",
                        "humidity", "weather_missing"});
    auto opt_time = [](const std::optional<Minutes>& t) {
        return t ? format_minutes(*t) : std::string{};
    };
    auto opt_num = [](const std::optional<double>& v) {
        return v ? detail::fmt_double(*v) : std::string{};
    };
    for (const auto& jf : flights) {
        const auto& f = jf.flight;
        const auto& w = jf.weather;
        write_csv_row(
            out,
            {flight_key(f), format_date(f.date_days), f.carrier, f.tail ? *f.tail : "",
             f.origin, f.dest, format_minutes(f.sched_dep), format_minutes(f.sched_arr),
             opt_time(f.actual_dep), opt_time(f.actual_arr), opt_num(f.dep_delay_min),
             detail::fmt_double(f.distance), std::to_string(f.day_of_week), f.dep_time_block,
             w ? opt_num(w->wind_speed) : "", w ? opt_num(w->precipitation) : "",
             w ? opt_num(w->visibility) : "", w ? opt_num(w->humidity) : "",
             jf.weather_missing ? "1" : "0"});
    }
}

inline std::vector<JoinedFlight> read_clean_flights_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    CsvReader reader(in);
    std::vector<std::string> row;
    if (!reader.next_row(row)) throw SchemaError("empty file: " + path);
    const HeaderIndex h(row);
    const int c_date = h.require("flight_date"), c_carrier = h.require("carrier"),
              c_tail = h.require("tail"), c_origin = h.require("origin"),
              c_dest = h.require("dest"), c_sd = h.require("sched_dep"),
              c_sa = h.require("sched_arr"), c_ad = h.require("actual_dep"),
              c_aa = h.require("actual_arr"), c_delay = h.require("dep_delay_min"),
              c_dist = h.require("distance"), c_dow = h.require("day_of_week"),
              c_blk = h.require("dep_time_block"), c_wind = h.require("wind"),
              c_precip = h.require("precip"), c_vis = h.require("visibility"),
              c_hum = h.require("humidity"), c_miss = h.require("weather_missing");

    std::vector<JoinedFlight> out;
    int source_index = 0;
    while (reader.next_row(row)) {
        JoinedFlight jf;
        FlightRecord& f = jf.flight;
        f.source_index = source_index++;
        const auto date = parse_date(field_at(row, c_date));
        if (!date) throw DataError("bad date in " + path);
        f.date_days = *date;
        f.carrier = field_at(row, c_carrier);
        const std::string tail = field_at(row, c_tail);
        if (!tail.empty()) f.tail = tail;
        f.origin = field_at(row, c_origin);
        f.dest = field_at(row, c_dest);
        auto req_time = [&](int col) {
            const auto t = parse_minutes(field_at(row, col));
            if (!t) throw DataError("bad timestamp in " + path);
            return *t;
        };
        f.sched_dep = req_time(c_sd);
        f.sched_arr = req_time(c_sa);
        if (!field_at(row, c_ad).empty()) f.actual_dep = req_time(c_ad);
        if (!field_at(row, c_aa).empty()) f.actual_arr = req_time(c_aa);
        f.dep_delay_min = detail::parse_double(field_at(row, c_delay));
        const auto dist = detail::parse_double(field_at(row, c_dist));
        f.distance = dist ? *dist : 0.0;
        const auto dow = detail::parse_double(field_at(row, c_dow));
        f.day_of_week = dow ? static_cast<int>(*dow) : 1;
        f.dep_time_block = field_at(row, c_blk);
        jf.weather_missing = field_at(row, c_miss) == "1";
        if (!jf.weather_missing) {
            WeatherObservation w;
            w.station = f.origin;
            w.obs_time = 0;
            w.wind_speed = detail::parse_double(field_at(row, c_wind));
            w.precipitation = detail::parse_double(field_at(row, c_precip));
            w.visibility = detail::parse_double(field_at(row, c_vis));
            w.humidity = detail::parse_double(field_at(row, c_hum));
            jf.weather = std::move(w);
        }
        out.push_back(std::move(jf));
    }
    return out;
}

}  // namespace skybuffer
