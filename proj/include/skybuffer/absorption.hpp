#pragma once

// Delay-absorption analytics: per airport-carrier buffer statistics, the
// DelayAbsorbed labeling rule, turnover indices, and binned absorbed-delay
// profiles.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skybuffer/csv.hpp"
#include "skybuffer/records.hpp"
#include "skybuffer/rotation.hpp"

namespace skybuffer {

inline constexpr std::int64_t kDefaultBufferFloor = 5;

struct BufferStats {
    std::string airport;
    std::string carrier;
    double mean_buffer_min = 0;  // mean of (sched_turnaround - actual_turnaround)
    std::int64_t n_samples = 0;
    enum class Source { kPair, kAirport, kGlobal } source = Source::kPair;
};

// Pair means plus the airport-level and global fallbacks used for sparse
// pairs. Built from one set of links and then frozen.
struct BufferTable {
    std::map<std::pair<std::string, std::string>, BufferStats> pairs;
    std::map<std::string, double> airport_mean;
    double global_mean = 0;
    std::int64_t floor = kDefaultBufferFloor;

    // Lookup for any (airport, carrier), falling back pair -> airport -> global.
    BufferStats lookup(const std::string& airport, const std::string& carrier) const {
        const auto it = pairs.find({airport, carrier});
        if (it != pairs.end()) return it->second;
        BufferStats s;
        s.airport = airport;
        s.carrier = carrier;
        s.n_samples = 0;
        const auto ap = airport_mean.find(airport);
        if (ap != airport_mean.end()) {
            s.mean_buffer_min = ap->second;
            s.source = BufferStats::Source::kAirport;
        } else {
            s.mean_buffer_min = global_mean;
            s.source = BufferStats::Source::kGlobal;
        }
        return s;
    }
};

// A link turns around at the previous leg's destination; the carrier is the
// departing flight's operator.
inline std::string turnaround_airport(const std::vector<FlightRecord>& flights,
                                      const RotationLink& link) {
    return flights[link.curr_index].origin;
}

inline BufferTable compute_buffer_stats(const std::vector<FlightRecord>& flights,
                                        const std::vector<RotationLink>& links,
                                        std::int64_t floor = kDefaultBufferFloor) {
    struct Acc {
        double sum = 0;
        std::int64_t n = 0;
    };
    std::map<std::pair<std::string, std::string>, Acc> pair_acc;
    std::map<std::string, Acc> airport_acc;
    Acc global;

    for (const auto& link : links) {
        if (link.overnight) continue;
        const double buffer = link.sched_turnaround_min - link.actual_turnaround_min;
        const std::string airport = turnaround_airport(flights, link);
        const std::string carrier = flights[link.curr_index].carrier;
        auto& pa = pair_acc[{airport, carrier}];
        pa.sum += buffer;
        ++pa.n;
        auto& aa = airport_acc[airport];
        aa.sum += buffer;
        ++aa.n;
        global.sum += buffer;
        ++global.n;
    }
    if (global.n == 0) throw DataError("no turnaround data");

    BufferTable table;
    table.floor = floor;
    table.global_mean = global.sum / static_cast<double>(global.n);
    for (const auto& [airport, acc] : airport_acc)
        table.airport_mean[airport] = acc.sum / static_cast<double>(acc.n);

    for (const auto& [key, acc] : pair_acc) {
        BufferStats s;
        s.airport = key.first;
        s.carrier = key.second;
        s.n_samples = acc.n;
        if (acc.n >= floor) {
            s.mean_buffer_min = acc.sum / static_cast<double>(acc.n);
            s.source = BufferStats::Source::kPair;
        } else if (airport_acc[key.first].n >= floor) {
            s.mean_buffer_min = table.airport_mean[key.first];
            s.source = BufferStats::Source::kAirport;
        } else {
            s.mean_buffer_min = table.global_mean;
            s.source = BufferStats::Source::kGlobal;
        }
        table.pairs[key] = s;
    }
    return table;
}

struct AbsorptionLabel {
    int link_index = -1;
    double delta_min = 0;       // prev arrival delay minus current departure delay
    double buffer_ref_min = 0;  // buffer mean used for the comparison
    bool absorbed = false;      // delta >= buffer_ref
};

// One label per link with positive inherited delay that is not an overnight
// stay. Boundary cases (delta == buffer) count as absorbed.
inline std::vector<AbsorptionLabel> label_delay_absorbed(const std::vector<FlightRecord>& flights,
                                                         const std::vector<RotationLink>& links,
                                                         const BufferTable& table) {
    std::vector<AbsorptionLabel> labels;
    for (std::size_t i = 0; i < links.size(); ++i) {
        const auto& link = links[i];
        if (link.overnight || link.prev_delay_min <= 0) continue;
        const FlightRecord& curr = flights[link.curr_index];
        AbsorptionLabel lab;
        lab.link_index = static_cast<int>(i);
        lab.delta_min = link.prev_delay_min - curr.dep_delay_min.value_or(0.0);
        lab.buffer_ref_min =
            table.lookup(turnaround_airport(flights, link), curr.carrier).mean_buffer_min;
        lab.absorbed = lab.delta_min >= lab.buffer_ref_min;
        labels.push_back(lab);
    }
    return labels;
}

// Actual over scheduled turnaround. Excluded for overnight stays and for
// links whose schedule itself is infeasible.
inline std::optional<double> turnover_index(const RotationLink& link) {
    if (link.overnight || link.sched_turnaround_min <= 0) return std::nullopt;
    return link.actual_turnaround_min / link.sched_turnaround_min;
}

struct AirportTurnover {
    std::string airport;
    std::int64_t traffic = 0;  // valid turnarounds observed at the airport
    double mean_index = 0;
};

inline std::vector<AirportTurnover> airport_turnover_summary(
    const std::vector<FlightRecord>& flights, const std::vector<RotationLink>& links) {
    struct Acc {
        double sum = 0;
        std::int64_t n = 0;
    };
    std::map<std::string, Acc> acc;
    for (const auto& link : links) {
        const auto idx = turnover_index(link);
        if (!idx) continue;
        auto& a = acc[turnaround_airport(flights, link)];
        a.sum += *idx;
        ++a.n;
    }
    std::vector<AirportTurnover> out;
    for (const auto& [airport, a] : acc)
        out.push_back({airport, a.n, a.sum / static_cast<double>(a.n)});
    std::sort(out.begin(), out.end(), [](const AirportTurnover& x, const AirportTurnover& y) {
        if (x.traffic != y.traffic) return x.traffic > y.traffic;
        return x.airport < y.airport;
    });
    return out;
}

// Upstream-delay bins for absorbed-delay profiles; partition of (0, 120].
inline constexpr double kProfileBinEdges[] = {0, 15, 30, 60, 90, 120};
inline constexpr int kProfileBins = 5;

inline int profile_bin(double prev_delay) {
    if (prev_delay <= 0 || prev_delay > 120) return -1;
    for (int b = 0; b < kProfileBins; ++b)
        if (prev_delay <= kProfileBinEdges[b + 1]) return b;
    return -1;
}

struct AbsorptionProfile {
    std::string airport;
    std::optional<std::int64_t> date_days;  // present when grouped by airport+date
    std::int64_t count[kProfileBins] = {0, 0, 0, 0, 0};
    double mean_absorbed[kProfileBins] = {0, 0, 0, 0, 0};  // meaningful where count > 0
};

enum class ProfileGroupBy { kAirport, kAirportDate };

// Mean of (upstream arrival delay - downstream departure delay) per bin of
// upstream delay in (0, 120]. Larger upstream delays excluded entirely.
inline std::vector<AbsorptionProfile> absorption_profile(const std::vector<FlightRecord>& flights,
                                                         const std::vector<RotationLink>& links,
                                                         ProfileGroupBy group_by) {
    struct Acc {
        double sum[kProfileBins] = {0, 0, 0, 0, 0};
        std::int64_t n[kProfileBins] = {0, 0, 0, 0, 0};
    };
    std::map<std::pair<std::string, std::int64_t>, Acc> acc;
    for (const auto& link : links) {
        if (link.overnight) continue;
        const int bin = profile_bin(link.prev_delay_min);
        if (bin < 0) continue;
        const FlightRecord& curr = flights[link.curr_index];
        const std::int64_t date =
            group_by == ProfileGroupBy::kAirportDate ? curr.date_days : -1;
        auto& a = acc[{turnaround_airport(flights, link), date}];
        a.sum[bin] += link.prev_delay_min - curr.dep_delay_min.value_or(0.0);
        ++a.n[bin];
    }
    std::vector<AbsorptionProfile> out;
    for (const auto& [key, a] : acc) {
        AbsorptionProfile p;
        p.airport = key.first;
        if (key.second >= 0) p.date_days = key.second;
        for (int b = 0; b < kProfileBins; ++b) {
            p.count[b] = a.n[b];
            if (a.n[b] > 0) p.mean_absorbed[b] = a.sum[b] / static_cast<double>(a.n[b]);
        }
        out.push_back(std::move(p));
    }
    return out;
}

// Departure-delay category counts for the dataset at large.
inline std::vector<std::pair<std::string, std::int64_t>> delay_category_histogram(
    const std::vector<FlightRecord>& flights) {
    const char* labels[] = {"<=0", "0-15", "15-30", "30-60", "60-90", "90-120", ">120"};
    std::int64_t counts[7] = {0, 0, 0, 0, 0, 0, 0};
    for (const auto& f : flights) {
        if (!f.dep_delay_min) continue;
        const double d = *f.dep_delay_min;
        int k;
        if (d <= 0) k = 0;
        else if (d <= 15) k = 1;
        else if (d <= 30) k = 2;
        else if (d <= 60) k = 3;
        else if (d <= 90) k = 4;
        else if (d <= 120) k = 5;
        else k = 6;
        ++counts[k];
    }
    std::vector<std::pair<std::string, std::int64_t>> out;
    for (int k = 0; k < 7; ++k) out.emplace_back(labels[k], counts[k]);
    return out;
}

// ---------------------------------------------------------------------------
// Delimited analytics exports (plot-ready data, one file per figure).

inline void write_buffer_table_csv(const BufferTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    write_csv_row(out, {"airport", "carrier", "mean_buffer_min", "n_samples", "source"});
    for (const auto& [key, s] : table.pairs) {
        const char* src = s.source == BufferStats::Source::kPair      ? "pair"
                          : s.source == BufferStats::Source::kAirport ? "airport"
                                                                      : "global";
        write_csv_row(out, {key.first, key.second, detail::fmt_double(s.mean_buffer_min),
                            std::to_string(s.n_samples), src});
    }
}

inline BufferTable read_buffer_table_csv(const std::string& path,
                                         std::int64_t floor = kDefaultBufferFloor) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    CsvReader reader(in);
    std::vector<std::string> row;
    if (!reader.next_row(row)) throw SchemaError("empty file: " + path);
    const HeaderIndex h(row);
    const int c_a = h.require("airport"), c_c = h.require("carrier"),
              c_m = h.require("mean_buffer_min");
    const int c_n = h.find("n_samples");
    BufferTable table;
    table.floor = floor;
    double sum = 0;
    std::int64_t n = 0;
    std::map<std::string, std::pair<double, std::int64_t>> by_airport;
    while (reader.next_row(row)) {
        BufferStats s;
        s.airport = field_at(row, c_a);
        s.carrier = field_at(row, c_c);
        s.mean_buffer_min = std::stod(field_at(row, c_m));
        s.n_samples = c_n >= 0 && !field_at(row, c_n).empty()
                          ? std::stoll(field_at(row, c_n))
                          : floor;  // externally supplied tables count as dense
        table.pairs[{s.airport, s.carrier}] = s;
        auto& ap = by_airport[s.airport];
        ap.first += s.mean_buffer_min;
        ++ap.second;
        sum += s.mean_buffer_min;
        ++n;
    }
    if (n == 0) throw DataError("no turnaround data");
    table.global_mean = sum / static_cast<double>(n);
    for (const auto& [airport, acc] : by_airport)
        table.airport_mean[airport] = acc.first / static_cast<double>(acc.second);
    return table;
}

inline void write_labels_csv(const std::vector<FlightRecord>& flights,
                             const std::vector<RotationLink>& links,
                             const std::vector<AbsorptionLabel>& labels,
                             const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    write_csv_row(out, {"curr_key", "link_index", "delta_min", "buffer_ref_min", "absorbed"});
    for (const auto& lab : labels) {
        const auto& link = links[lab.link_index];
        write_csv_row(out, {flight_key(flights[link.curr_index]), std::to_string(lab.link_index),
                            detail::fmt_double(lab.delta_min),
                            detail::fmt_double(lab.buffer_ref_min), lab.absorbed ? "1" : "0"});
    }
}

inline void write_turnover_summary_csv(const std::vector<AirportTurnover>& summary,
                                       const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    write_csv_row(out, {"airport", "traffic", "mean_turnover_index"});
    for (const auto& row : summary)
        write_csv_row(out, {row.airport, std::to_string(row.traffic),
                            detail::fmt_double(row.mean_index)});
}

inline void write_profiles_csv(const std::vector<AbsorptionProfile>& profiles,
                               const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    write_csv_row(out, {"airport", "date", "bin_lo", "bin_hi", "count", "mean_absorbed_min"});
    for (const auto& p : profiles) {
        for (int b = 0; b < kProfileBins; ++b) {
            write_csv_row(out, {p.airport, p.date_days ? format_date(*p.date_days) : "",
                                detail::fmt_double(kProfileBinEdges[b]),
                                detail::fmt_double(kProfileBinEdges[b + 1]),
                                std::to_string(p.count[b]),
                                p.count[b] > 0 ? detail::fmt_double(p.mean_absorbed[b]) : ""});
        }
    }
}

inline void write_delay_histogram_csv(
    const std::vector<std::pair<std::string, std::int64_t>>& hist, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    write_csv_row(out, {"category", "count"});
    for (const auto& [label, count] : hist) write_csv_row(out, {label, std::to_string(count)});
}

}  // namespace skybuffer
