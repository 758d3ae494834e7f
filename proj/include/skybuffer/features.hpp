#pragma once

// Feature encoding: categorical dictionaries, weather standardization and
// imputation, the composite weather-severity index, and interaction terms.
// An EncoderState is fitted on training rows once and then frozen.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "skybuffer/common.hpp"
#include "skybuffer/records.hpp"
#include "skybuffer/rotation.hpp"

namespace skybuffer {

inline constexpr double kLowVisibilityMiles = 3.0;  // below this the low-visibility flag is set

inline const std::vector<std::string>& categorical_features() {
    static const std::vector<std::string> names = {"carrier", "origin", "dest", "month",
                                                   "dep_time_block"};
    return names;
}

inline const std::vector<std::string>& weather_fields() {
    static const std::vector<std::string> names = {"wind", "precip", "visibility", "humidity"};
    return names;
}

// Canonical coordinate order. Every encoded vector uses exactly this layout,
// plus a trailing absorb_score when one is supplied.
inline std::vector<std::string> feature_names(bool with_absorb_score) {
    std::vector<std::string> names = {
        "carrier", "origin", "dest", "month", "dep_time_block", "day_of_week", "dep_hour",
        "sched_dep_minute_of_day", "sched_arr_minute_of_day", "distance", "prev_delay_min",
        "sched_turnaround_min", "wind", "precip", "visibility", "humidity", "wx_severity",
        "low_vis_flag", "dep_hour_x_low_vis", "turnaround_x_wx_severity", "weather_missing_flag",
        "no_predecessor_flag"};
    if (with_absorb_score) names.push_back("absorb_score");
    return names;
}

struct NumericStats {
    double mean = 0;
    double sd = 1;
    bool sd_flagged = false;  // zero variance in training; sd stored as 1
};

struct EncoderState {
    // category string -> ordinal index >= 1; 0 is reserved for unseen
    std::map<std::string, std::map<std::string, int>> dictionaries;
    std::map<std::string, NumericStats> weather_stats;
    std::map<std::string, std::map<std::string, double>> airport_medians;  // field -> airport -> median
    std::map<std::string, double> global_medians;
};

namespace detail {

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) return 0;
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

inline std::optional<double> weather_field_value(const WeatherObservation& w,
                                                 const std::string& field) {
    if (field == "wind") return w.wind_speed;
    if (field == "precip") return w.precipitation;
    if (field == "visibility") return w.visibility;
    return w.humidity;
}

inline std::string month_category(const FlightRecord& f) {
    return std::to_string(civil_from_days(f.date_days).month);
}

inline std::string category_value(const JoinedFlight& jf, const std::string& feature) {
    const FlightRecord& f = jf.flight;
    if (feature == "carrier") return f.carrier;
    if (feature == "origin") return f.origin;
    if (feature == "dest") return f.dest;
    if (feature == "month") return month_category(f);
    return f.dep_time_block;
}

}  // namespace detail

inline EncoderState fit_encoders(const std::vector<JoinedFlight>& flights,
                                 const std::vector<int>& training_rows) {
    if (training_rows.empty()) throw DataError("empty training set");
    EncoderState enc;

    for (const auto& feature : categorical_features()) {
        std::vector<std::string> cats;
        for (int r : training_rows)
            cats.push_back(detail::category_value(flights[static_cast<std::size_t>(r)], feature));
        std::sort(cats.begin(), cats.end());
        cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
        auto& dict = enc.dictionaries[feature];
        int index = 1;  // 0 stays reserved for unseen categories
        for (const auto& c : cats) dict[c] = index++;
    }

    for (const auto& field : weather_fields()) {
        std::vector<double> observed;
        std::map<std::string, std::vector<double>> per_airport;
        for (int r : training_rows) {
            const auto& jf = flights[static_cast<std::size_t>(r)];
            if (!jf.weather) continue;
            const auto v = detail::weather_field_value(*jf.weather, field);
            if (!v) continue;
            observed.push_back(*v);
            per_airport[jf.flight.origin].push_back(*v);
        }
        NumericStats stats;
        if (!observed.empty()) {
            double sum = 0;
            for (double v : observed) sum += v;
            stats.mean = sum / static_cast<double>(observed.size());
            double ss = 0;
            for (double v : observed) ss += (v - stats.mean) * (v - stats.mean);
            const double sd = std::sqrt(ss / static_cast<double>(observed.size()));
            if (sd > 0) {
                stats.sd = sd;
            } else {
                stats.sd = 1;
                stats.sd_flagged = true;
            }
        } else {
            stats.sd_flagged = true;
        }
        enc.weather_stats[field] = stats;
        enc.global_medians[field] = detail::median_of(observed);
        auto& med = enc.airport_medians[field];
        for (auto& [airport, values] : per_airport)
            med[airport] = detail::median_of(std::move(values));
    }
    return enc;
}

inline double imputed_weather(const EncoderState& enc, const JoinedFlight& jf,
                              const std::string& field) {
    if (jf.weather) {
        const auto v = detail::weather_field_value(*jf.weather, field);
        if (v) return *v;
    }
    const auto fm = enc.airport_medians.find(field);
    if (fm != enc.airport_medians.end()) {
        const auto am = fm->second.find(jf.flight.origin);
        if (am != fm->second.end()) return am->second;
    }
    const auto gm = enc.global_medians.find(field);
    return gm != enc.global_medians.end() ? gm->second : 0.0;
}

// Mean of the four standardized fields, with visibility inverted so that
// worse weather always raises the index.
inline double compute_wx_severity(double wind, double precip, double visibility, double humidity,
                                  const EncoderState& enc) {
    auto z = [&](const std::string& field, double v) {
        const auto& s = enc.weather_stats.at(field);
        return (v - s.mean) / s.sd;
    };
    return (z("wind", wind) + z("precip", precip) + z("humidity", humidity) -
            z("visibility", visibility)) /
           4.0;
}

inline std::vector<double> build_feature_vector(const JoinedFlight& jf, const RotationLink* link,
                                                std::optional<double> absorb_score,
                                                const EncoderState& enc) {
    const FlightRecord& f = jf.flight;
    auto lookup = [&](const std::string& feature) {
        const auto& dict = enc.dictionaries.at(feature);
        const auto it = dict.find(detail::category_value(jf, feature));
        return it == dict.end() ? 0.0 : static_cast<double>(it->second);
    };

    const double minute_of_day =
        static_cast<double>(((f.sched_dep % kMinutesPerDay) + kMinutesPerDay) % kMinutesPerDay);
    const double arr_minute_of_day =
        static_cast<double>(((f.sched_arr % kMinutesPerDay) + kMinutesPerDay) % kMinutesPerDay);
    const double dep_hour = std::floor(minute_of_day / 60.0);

    const double wind = imputed_weather(enc, jf, "wind");
    const double precip = imputed_weather(enc, jf, "precip");
    const double visibility = imputed_weather(enc, jf, "visibility");
    const double humidity = imputed_weather(enc, jf, "humidity");
    const double severity = compute_wx_severity(wind, precip, visibility, humidity, enc);
    const double low_vis = visibility < kLowVisibilityMiles ? 1.0 : 0.0;

    const double prev_delay = link ? link->prev_delay_min : 0.0;
    const double sched_turn = link ? link->sched_turnaround_min : 0.0;

    std::vector<double> x = {lookup("carrier"),
                             lookup("origin"),
                             lookup("dest"),
                             lookup("month"),
                             lookup("dep_time_block"),
                             static_cast<double>(f.day_of_week),
                             dep_hour,
                             minute_of_day,
                             arr_minute_of_day,
                             f.distance,
                             prev_delay,
                             sched_turn,
                             wind,
                             precip,
                             visibility,
                             humidity,
                             severity,
                             low_vis,
                             dep_hour * low_vis,
                             sched_turn * severity,
                             jf.weather_missing ? 1.0 : 0.0,
                             link ? 0.0 : 1.0};
    if (absorb_score) x.push_back(*absorb_score);
    return x;
}

// ---------------------------------------------------------------------------
// Encoder document

inline std::string serialize_encoder(const EncoderState& enc) {
    nlohmann::ordered_json doc;
    doc["format_version"] = "1";
    doc["kind"] = "encoder";
    for (const auto& [feature, dict] : enc.dictionaries) doc["dictionaries"][feature] = dict;
    for (const auto& [field, s] : enc.weather_stats)
        doc["weather_stats"][field] = {{"mean", s.mean}, {"sd", s.sd}, {"sd_flagged", s.sd_flagged}};
    for (const auto& [field, med] : enc.airport_medians) doc["airport_medians"][field] = med;
    doc["global_medians"] = enc.global_medians;
    return doc.dump(2) + "\n";
}

inline EncoderState deserialize_encoder(const std::string& text) {
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::ordered_json::exception& e) {
        throw SchemaError(std::string("encoder document is not valid: ") + e.what());
    }
    if (!doc.contains("format_version") || doc["format_version"] != "1")
        throw SchemaError("unknown encoder format version");
    EncoderState enc;
    for (const auto& [feature, dict] : doc.at("dictionaries").items())
        enc.dictionaries[feature] = dict.get<std::map<std::string, int>>();
    for (const auto& [field, s] : doc.at("weather_stats").items()) {
        NumericStats stats;
        stats.mean = s.at("mean").get<double>();
        stats.sd = s.at("sd").get<double>();
        stats.sd_flagged = s.at("sd_flagged").get<bool>();
        enc.weather_stats[field] = stats;
    }
    for (const auto& [field, med] : doc.at("airport_medians").items())
        enc.airport_medians[field] = med.get<std::map<std::string, double>>();
    enc.global_medians = doc.at("global_medians").get<std::map<std::string, double>>();
    return enc;
}

}  // namespace skybuffer
