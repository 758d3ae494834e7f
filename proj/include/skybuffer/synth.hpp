#pragma once

// Synthetic rotation networks with known ground truth. Each tail flies a
// feasible chain of legs; delays arise fresh at a leg or propagate from the
// previous leg after the pair's ground buffer has absorbed its share. Emitted
// flight files use the same schema the ingest module reads, so the full
// pipeline runs on generated data unmodified, while a sidecar truth table
// keeps the hidden quantities for assertions.

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "skybuffer/csv.hpp"
#include "skybuffer/ingest.hpp"
#include "skybuffer/records.hpp"
#include "skybuffer/rng.hpp"
#include "skybuffer/rotation.hpp"

namespace skybuffer {

// How the ground buffer is allocated between newly formed and inherited delay.
enum class BufferScenario { kPropagatedFirst, kNewlyFirst, kProportional };

struct SynthConfig {
    int n_tails = 50;
    int legs_per_tail = 6;
    int n_airports = 8;
    int n_carriers = 3;
    int n_days = 3;
    std::int64_t start_date_days = days_from_civil(2023, 6, 1);

    // New-delay mixture: a leg is disrupted with this probability and then
    // draws a delay magnitude uniformly from [lo, hi] minutes.
    double p_disrupt = 0.25;
    int new_delay_lo = 5;
    int new_delay_hi = 60;

    // Ground buffer per (airport, carrier) pair, drawn once per pair.
    int buffer_lo = 0;
    int buffer_hi = 40;

    // The minimum ground time an airport needs; drawn once per airport from
    // [min_turnaround_min, min_turnaround_max]. The scheduled turnaround is
    // this minimum plus the pair's buffer, so a spread keeps the buffer from
    // being a plain offset of one schedule field.
    int min_turnaround_min = 35;
    int min_turnaround_max = 35;
    int block_lo = 55;   // scheduled air time bounds
    int block_hi = 180;

    // Weather regime: one severity scalar per airport-day in [0, 1], raising
    // the disruption probability at the departure airport by wx_coeff * s.
    double wx_coeff = 0.35;
    std::vector<double> wx_regimes;  // when non-empty, severity is drawn from these values only

    // Deterministic-rule mode: chained legs are disrupted (by exactly
    // `chained_new_delay` minutes) iff origin-day severity exceeds the
    // threshold; first legs keep the stochastic mixture. Off when < 0.
    double wx_disrupt_threshold = -1;
    int chained_new_delay = 45;

    double cancel_prob = 0.0;
    BufferScenario scenario = BufferScenario::kPropagatedFirst;
    std::uint64_t seed = 7;

    void validate() const {
        if (n_tails < 1 || legs_per_tail < 1 || n_airports < 2 || n_carriers < 1 || n_days < 1)
            throw DataError("counts must be >= 1 (and at least two airports)");
        if (p_disrupt < 0 || p_disrupt > 1 || cancel_prob < 0 || cancel_prob > 1)
            throw DataError("probabilities must lie in [0, 1]");
        if (new_delay_lo < 0 || new_delay_hi < new_delay_lo)
            throw DataError("bad new-delay range");
        if (buffer_lo < 0 || buffer_hi < buffer_lo) throw DataError("bad buffer range");
        if (min_turnaround_min <= 0 || min_turnaround_max < min_turnaround_min ||
            block_lo <= 0 || block_hi < block_lo)
            throw DataError("legs overlap at zero turnaround");
    }
};

// Hidden per-leg truth, keyed like the emitted flight rows.
struct SynthTruth {
    std::string key;
    int tail_index = 0;
    int leg_index = 0;
    double new_delay_min = 0;        // N, formed at this leg
    double inherited_delay_min = 0;  // previous leg's arrival delay
    double buffer_true_min = 0;      // the pair's ground buffer
    double propagated_min = 0;       // inherited delay surviving the buffer
    double observed_dep_delay = 0;
    bool eligible = false;  // chained, positive inherited delay, feasible, not overnight
    bool absorbed_truth = false;
};

struct SynthOutput {
    std::vector<FlightRecord> flights;
    std::vector<SynthTruth> truth;
    WeatherByAirport weather;
    std::map<std::pair<std::string, std::string>, double> pair_buffers;
};

namespace detail {

inline std::string synth_airport(int i) {
    std::string s = "AAA";
    s[1] = static_cast<char>('A' + i / 26);
    s[2] = static_cast<char>('A' + i % 26);
    return s;
}

inline std::string synth_carrier(int i) {
    std::string s = "C0";
    s[1] = static_cast<char>('0' + i % 10);
    if (i >= 10) s = "C" + std::to_string(i);
    return s;
}

inline std::string synth_tail(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "N%04dSB", i);
    return buf;
}

inline double severity_of(const SynthConfig& cfg, int airport, std::int64_t day) {
    Rng rng(Rng::substream(cfg.seed, 0xC0FFEE00u + static_cast<std::uint64_t>(airport) * 4099u +
                                         static_cast<std::uint64_t>(day) * 31u));
    if (!cfg.wx_regimes.empty())
        return cfg.wx_regimes[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(cfg.wx_regimes.size()) - 1))];
    return rng.uniform();
}

inline double pair_buffer_of(const SynthConfig& cfg, int airport, int carrier) {
    Rng rng(Rng::substream(cfg.seed, 0xB0F00000u + static_cast<std::uint64_t>(airport) * 257u +
                                         static_cast<std::uint64_t>(carrier)));
    return static_cast<double>(rng.uniform_int(cfg.buffer_lo, cfg.buffer_hi));
}

inline int min_turn_of(const SynthConfig& cfg, int airport) {
    if (cfg.min_turnaround_max == cfg.min_turnaround_min) return cfg.min_turnaround_min;
    Rng rng(Rng::substream(cfg.seed, 0x717E0000u + static_cast<std::uint64_t>(airport)));
    return static_cast<int>(rng.uniform_int(cfg.min_turnaround_min, cfg.min_turnaround_max));
}

// Observed departure delay given newly formed delay, inherited delay, and the
// buffer, under the configured allocation scenario.
inline double observed_delay(const SynthConfig& cfg, double new_delay, double inherited,
                             double buffer) {
    switch (cfg.scenario) {
        case BufferScenario::kPropagatedFirst:
            return new_delay + std::max(0.0, inherited - buffer);
        case BufferScenario::kNewlyFirst: {
            const double leftover = std::max(0.0, buffer - new_delay);
            return std::max(0.0, new_delay - buffer) + std::max(0.0, inherited - leftover);
        }
        case BufferScenario::kProportional:
        default:
            return std::max(0.0, new_delay + inherited - buffer);
    }
}

}  // namespace detail

inline SynthOutput generate_network(const SynthConfig& cfg) {
    cfg.validate();
    SynthOutput out;

    // Weather first: one severity per airport-day drives both the emitted
    // hourly observations and the leg disruption odds.
    for (int a = 0; a < cfg.n_airports; ++a) {
        const std::string airport = detail::synth_airport(a);
        auto& obs_list = out.weather[airport];
        for (int d = 0; d < cfg.n_days + 1; ++d) {  // +1 day: late chains spill past midnight
            const std::int64_t day = cfg.start_date_days + d;
            const double s = detail::severity_of(cfg, a, day);
            Rng rng(Rng::substream(cfg.seed, 0xAE000000u + static_cast<std::uint64_t>(a) * 8191u +
                                                 static_cast<std::uint64_t>(d)));
            for (int h = 0; h < 24; ++h) {
                WeatherObservation w;
                w.station = airport;
                w.obs_time = day * kMinutesPerDay + h * 60 + 51;  // :51 past, the usual cadence
                w.wind_speed = std::max(0.0, 4.0 + 28.0 * s + rng.uniform(-2.0, 2.0));
                w.precipitation =
                    s > 0.55 ? 0.02 + 0.5 * (s - 0.55) + rng.uniform(0.0, 0.05)
                             : (s > 0.45 ? 0.005 : 0.0);
                w.visibility = std::min(10.0, std::max(0.25, 10.0 - 9.0 * s + rng.uniform(-0.6, 0.6)));
                w.humidity = std::min(100.0, std::max(5.0, 35.0 + 60.0 * s + rng.uniform(-5.0, 5.0)));
                obs_list.push_back(std::move(w));
            }
        }
    }

    for (int t = 0; t < cfg.n_tails; ++t) {
        Rng rng(Rng::substream(cfg.seed, 0x7A110000u + static_cast<std::uint64_t>(t)));
        const int carrier_idx = static_cast<int>(rng.uniform_int(0, cfg.n_carriers - 1));
        const std::string carrier = detail::synth_carrier(carrier_idx);
        const std::string tail = detail::synth_tail(t);
        const std::int64_t day =
            cfg.start_date_days + rng.uniform_int(0, cfg.n_days - 1);

        int origin_idx = static_cast<int>(rng.uniform_int(0, cfg.n_airports - 1));
        Minutes sched_dep = day * kMinutesPerDay + 6 * 60 + rng.uniform_int(0, 150);
        double prev_arr_delay = 0;  // arrival delay of the previous emitted leg
        bool prev_exists = false;
        Minutes prev_actual_arr = 0;

        for (int leg = 0; leg < cfg.legs_per_tail; ++leg) {
            int dest_idx = static_cast<int>(rng.uniform_int(0, cfg.n_airports - 2));
            if (dest_idx >= origin_idx) ++dest_idx;  // never a self-loop
            const int block = static_cast<int>(rng.uniform_int(cfg.block_lo, cfg.block_hi));
            const double buffer =
                prev_exists ? detail::pair_buffer_of(cfg, origin_idx, carrier_idx) : 0.0;

            const std::int64_t dep_day = sched_dep / kMinutesPerDay;
            const double severity = detail::severity_of(cfg, origin_idx, dep_day);

            // Newly formed delay at this leg.
            double new_delay = 0;
            if (cfg.wx_disrupt_threshold >= 0 && prev_exists) {
                new_delay = severity > cfg.wx_disrupt_threshold
                                ? static_cast<double>(cfg.chained_new_delay)
                                : 0.0;
            } else {
                const double p =
                    std::min(0.95, std::max(0.0, cfg.p_disrupt + cfg.wx_coeff * severity));
                if (rng.uniform() < p)
                    new_delay =
                        static_cast<double>(rng.uniform_int(cfg.new_delay_lo, cfg.new_delay_hi));
            }

            const double inherited = prev_exists ? prev_arr_delay : 0.0;
            const double observed =
                prev_exists ? detail::observed_delay(cfg, new_delay, inherited, buffer)
                            : new_delay;

            const bool cancelled = rng.uniform() < cfg.cancel_prob;

            FlightRecord f;
            f.date_days = sched_dep / kMinutesPerDay;
            f.carrier = carrier;
            f.tail = tail;
            f.origin = detail::synth_airport(origin_idx);
            f.dest = detail::synth_airport(dest_idx);
            f.sched_dep = sched_dep;
            f.sched_arr = sched_dep + block;
            f.distance = std::max(50.0, block * 7.0 - 100.0);
            f.cancelled = cancelled;
            f.diverted = false;
            f.day_of_week = day_of_week(f.date_days);
            f.dep_time_block = dep_time_block(
                static_cast<int>(((sched_dep % kMinutesPerDay) + kMinutesPerDay) % kMinutesPerDay));
            if (!cancelled) {
                f.actual_dep = sched_dep + static_cast<Minutes>(observed);
                f.actual_arr = f.sched_arr + static_cast<Minutes>(observed);
                f.dep_delay_min = observed;
            }
            f.source_index = static_cast<int>(out.flights.size());

            SynthTruth truth;
            truth.key = flight_key(f);
            truth.tail_index = t;
            truth.leg_index = leg;
            truth.new_delay_min = new_delay;
            truth.inherited_delay_min = inherited;
            truth.buffer_true_min = buffer;
            truth.propagated_min = prev_exists ? observed - new_delay : 0.0;
            truth.observed_dep_delay = observed;
            if (!cancelled && prev_exists && inherited > 0) {
                const bool feasible = prev_actual_arr < sched_dep;
                const double actual_turn =
                    static_cast<double>(*f.actual_dep - prev_actual_arr);
                const bool overnight = actual_turn > kDefaultOvernightMin;
                truth.eligible = feasible && !overnight;
                truth.absorbed_truth = inherited - observed >= buffer;
            }

            out.flights.push_back(f);
            out.truth.push_back(std::move(truth));
            out.pair_buffers[{f.origin, carrier}] =
                detail::pair_buffer_of(cfg, origin_idx, carrier_idx);

            // Next leg departs after the scheduled turnaround (the arrival
            // airport's minimum turnaround plus this pair's buffer).
            const double next_buffer = detail::pair_buffer_of(cfg, dest_idx, carrier_idx);
            const Minutes next_sched_dep = f.sched_arr + detail::min_turn_of(cfg, dest_idx) +
                                           static_cast<Minutes>(next_buffer);

            if (cancelled) {
                // The airframe is swapped; the chain restarts cleanly.
                prev_exists = false;
                prev_arr_delay = 0;
            } else {
                prev_exists = true;
                prev_arr_delay = observed;  // arrival delay equals departure delay en route
                prev_actual_arr = *f.actual_arr;
            }
            origin_idx = dest_idx;
            sched_dep = next_sched_dep;
        }
    }
    return out;
}

inline double truth_absorption_rate(const std::vector<SynthTruth>& truth) {
    std::int64_t eligible = 0, absorbed = 0;
    for (const auto& t : truth) {
        if (!t.eligible) continue;
        ++eligible;
        absorbed += t.absorbed_truth;
    }
    if (eligible == 0) throw DataError("no eligible legs");
    return static_cast<double>(absorbed) / static_cast<double>(eligible);
}

// ---------------------------------------------------------------------------
// File emission in the ingest schema.

inline void write_flights_bts_csv(const std::vector<FlightRecord>& flights,
                                  const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    write_csv_row(out, {"FlightDate", "Operating_Airline", "Tail_Number", "Origin", "Dest",
                        "CRSDepTime", "CRSArrTime", "DepTime", "ArrTime", "DepDelay", "Distance",
                        "Cancelled", "Diverted", "DayOfWeek", "DepTimeBlk"});
    auto clock_of = [](Minutes t) {
        return format_hhmm(static_cast<int>(((t % kMinutesPerDay) + kMinutesPerDay) % kMinutesPerDay));
    };
    for (const auto& f : flights) {
        write_csv_row(out,
                      {format_date(f.date_days), f.carrier, f.tail ? *f.tail : "", f.origin,
                       f.dest, clock_of(f.sched_dep), clock_of(f.sched_arr),
                       f.actual_dep ? clock_of(*f.actual_dep) : "",
                       f.actual_arr ? clock_of(*f.actual_arr) : "",
                       f.dep_delay_min ? detail::fmt_double(*f.dep_delay_min) : "",
                       detail::fmt_double(f.distance), f.cancelled ? "1.00" : "0.00",
                       f.diverted ? "1.00" : "0.00", std::to_string(f.day_of_week),
                       f.dep_time_block});
    }
}

inline void write_truth_csv(const std::vector<SynthTruth>& truth, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    write_csv_row(out, {"key", "tail_index", "leg_index", "new_delay_min", "inherited_delay_min",
                        "buffer_true_min", "propagated_min", "observed_dep_delay", "eligible",
                        "absorbed_truth"});
    for (const auto& t : truth) {
        write_csv_row(out, {t.key, std::to_string(t.tail_index), std::to_string(t.leg_index),
                            detail::fmt_double(t.new_delay_min),
                            detail::fmt_double(t.inherited_delay_min),
                            detail::fmt_double(t.buffer_true_min),
                            detail::fmt_double(t.propagated_min),
                            detail::fmt_double(t.observed_dep_delay), t.eligible ? "1" : "0",
                            t.absorbed_truth ? "1" : "0"});
    }
}

inline void write_weather_csv(const std::vector<WeatherObservation>& obs,
                              const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    write_csv_row(out, {"DATE", "HourlyWindSpeed", "HourlyPrecipitation", "HourlyVisibility",
                        "HourlyRelativeHumidity"});
    auto fmt = [](const std::optional<double>& v) {
        return v ? detail::fmt_double(*v) : std::string{};
    };
    for (const auto& w : obs) {
        write_csv_row(out, {format_minutes(w.obs_time) + ":00", fmt(w.wind_speed),
                            fmt(w.precipitation), fmt(w.visibility), fmt(w.humidity)});
    }
}

}  // namespace skybuffer
