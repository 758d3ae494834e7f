#pragma once

// Aircraft rotation reconstruction: for each flight, find the previous leg
// flown by the same airframe and derive turnaround durations and the delay
// inherited from it.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skybuffer/csv.hpp"
#include "skybuffer/records.hpp"

namespace skybuffer {

inline constexpr double kDefaultOvernightMin = 300;  // ground time above this is an overnight stay

struct RotationLink {
    int prev_index = -1;  // indices into the cleaned flight vector
    int curr_index = -1;
    double sched_turnaround_min = 0;   // curr sched_dep - prev sched_arr
    double actual_turnaround_min = 0;  // curr actual_dep - prev actual_arr
    double prev_delay_min = 0;         // prev actual_arr - prev sched_arr
    bool overnight = false;
    bool infeasible_schedule = false;  // sched_turnaround <= 0; flagged, never dropped
};

struct ChainResult {
    std::vector<RotationLink> links;
    std::int64_t unchained = 0;            // flights with no qualifying predecessor
    std::int64_t duplicate_warnings = 0;   // same (tail, date, sched_dep) seen more than once
};

namespace detail {

inline bool flight_order_lt(const FlightRecord& a, const FlightRecord& b) {
    if (a.date_days != b.date_days) return a.date_days < b.date_days;
    if (a.sched_dep != b.sched_dep) return a.sched_dep < b.sched_dep;
    return a.source_index < b.source_index;
}

inline RotationLink make_link(const std::vector<FlightRecord>& flights, int prev, int curr,
                              double overnight_min) {
    const FlightRecord& p = flights[prev];
    const FlightRecord& c = flights[curr];
    RotationLink link;
    link.prev_index = prev;
    link.curr_index = curr;
    link.sched_turnaround_min = static_cast<double>(c.sched_dep - p.sched_arr);
    link.actual_turnaround_min = static_cast<double>(*c.actual_dep - *p.actual_arr);
    link.prev_delay_min = static_cast<double>(*p.actual_arr - p.sched_arr);
    link.overnight = link.actual_turnaround_min > overnight_min;
    link.infeasible_schedule = link.sched_turnaround_min <= 0;
    return link;
}

}  // namespace detail

// Groups flights by tail, sorts by (date, scheduled departure), and picks as
// predecessor the most recent earlier leg whose destination matches the
// current origin and whose actual arrival precedes the current scheduled
// departure. Output order follows tail lexicographic order, then schedule.
inline ChainResult chain_rotations(const std::vector<FlightRecord>& flights,
                                   double overnight_min = kDefaultOvernightMin) {
    std::map<std::string, std::vector<int>> by_tail;
    ChainResult out;
    for (std::size_t i = 0; i < flights.size(); ++i) {
        if (!flights[i].tail || !flights[i].actual_dep) {
            ++out.unchained;
            continue;
        }
        by_tail[*flights[i].tail].push_back(static_cast<int>(i));
    }

    for (auto& [tail, idx] : by_tail) {
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            return detail::flight_order_lt(flights[a], flights[b]);
        });
        for (std::size_t k = 1; k < idx.size(); ++k) {
            const FlightRecord& a = flights[idx[k - 1]];
            const FlightRecord& b = flights[idx[k]];
            if (a.date_days == b.date_days && a.sched_dep == b.sched_dep)
                ++out.duplicate_warnings;
        }
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const FlightRecord& curr = flights[idx[k]];
            int prev = -1;
            for (std::size_t j = k; j-- > 0;) {
                const FlightRecord& cand = flights[idx[j]];
                if (cand.dest == curr.origin && cand.actual_arr &&
                    *cand.actual_arr < curr.sched_dep) {
                    prev = idx[j];
                    break;
                }
            }
            if (prev < 0) {
                ++out.unchained;
            } else {
                out.links.push_back(detail::make_link(flights, prev, idx[k], overnight_min));
            }
        }
    }
    return out;
}

// Independent O(n^2) recomputation of the chaining rule; true iff `links`
// matches it exactly (pairing and all derived fields).
inline bool verify_chain(const std::vector<FlightRecord>& flights,
                         const std::vector<RotationLink>& links,
                         double overnight_min = kDefaultOvernightMin) {
    std::map<int, RotationLink> by_curr;
    for (const auto& link : links) {
        if (by_curr.count(link.curr_index)) return false;  // curr appears at most once
        by_curr[link.curr_index] = link;
    }

    std::size_t expected_links = 0;
    for (std::size_t i = 0; i < flights.size(); ++i) {
        const FlightRecord& curr = flights[i];
        if (!curr.tail || !curr.actual_dep) {
            if (by_curr.count(static_cast<int>(i))) return false;
            continue;
        }
        int best = -1;
        for (std::size_t j = 0; j < flights.size(); ++j) {
            if (i == j) continue;
            const FlightRecord& cand = flights[j];
            if (!cand.tail || *cand.tail != *curr.tail || !cand.actual_dep) continue;
            if (!detail::flight_order_lt(cand, curr)) continue;
            if (cand.dest != curr.origin) continue;
            if (!cand.actual_arr || *cand.actual_arr >= curr.sched_dep) continue;
            if (best < 0 || detail::flight_order_lt(flights[best], cand)) best = static_cast<int>(j);
        }
        const auto it = by_curr.find(static_cast<int>(i));
        if (best < 0) {
            if (it != by_curr.end()) return false;
            continue;
        }
        if (it == by_curr.end()) return false;
        const RotationLink expect = detail::make_link(flights, best, static_cast<int>(i), overnight_min);
        const RotationLink& got = it->second;
        if (got.prev_index != expect.prev_index || got.curr_index != expect.curr_index ||
            got.sched_turnaround_min != expect.sched_turnaround_min ||
            got.actual_turnaround_min != expect.actual_turnaround_min ||
            got.prev_delay_min != expect.prev_delay_min || got.overnight != expect.overnight ||
            got.infeasible_schedule != expect.infeasible_schedule)
            return false;
        ++expected_links;
    }
    return expected_links == links.size();
}

inline void write_links_csv(const std::vector<FlightRecord>& flights,
                            const std::vector<RotationLink>& links, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    write_csv_row(out, {"tail", "prev_key", "curr_key", "prev_index", "curr_index",
                        "sched_turnaround_min", "actual_turnaround_min", "prev_delay_min",
                        "overnight", "infeasible_schedule"});
    for (const auto& link : links) {
        const FlightRecord& p = flights[link.prev_index];
        const FlightRecord& c = flights[link.curr_index];
        write_csv_row(out, {c.tail ? *c.tail : "", flight_key(p), flight_key(c),
                            std::to_string(link.prev_index), std::to_string(link.curr_index),
                            detail::fmt_double(link.sched_turnaround_min),
                            detail::fmt_double(link.actual_turnaround_min),
                            detail::fmt_double(link.prev_delay_min),
                            link.overnight ? "1" : "0", link.infeasible_schedule ? "1" : "0"});
    }
}

inline std::vector<RotationLink> read_links_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    CsvReader reader(in);
    std::vector<std::string> row;
    if (!reader.next_row(row)) throw SchemaError("empty file: " + path);
    const HeaderIndex h(row);
    const int c_pi = h.require("prev_index"), c_ci = h.require("curr_index"),
              c_st = h.require("sched_turnaround_min"), c_at = h.require("actual_turnaround_min"),
              c_pd = h.require("prev_delay_min"), c_on = h.require("overnight"),
              c_inf = h.require("infeasible_schedule");
    std::vector<RotationLink> links;
    while (reader.next_row(row)) {
        RotationLink link;
        link.prev_index = std::stoi(field_at(row, c_pi));
        link.curr_index = std::stoi(field_at(row, c_ci));
        link.sched_turnaround_min = std::stod(field_at(row, c_st));
        link.actual_turnaround_min = std::stod(field_at(row, c_at));
        link.prev_delay_min = std::stod(field_at(row, c_pd));
        link.overnight = field_at(row, c_on) == "1";
        link.infeasible_schedule = field_at(row, c_inf) == "1";
        links.push_back(link);
    }
    return links;
}

}  // namespace skybuffer
