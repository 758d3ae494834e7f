#pragma once

// End-to-end fixture: run the generator output through the same preparation
// chain the CLI uses (clean, weather join, rotation, split, frozen training
// statistics, encoding) and hand back everything the stage runners need.

#include <cstdint>
#include <vector>

#include "skybuffer/absorption.hpp"
#include "skybuffer/features.hpp"
#include "skybuffer/ingest.hpp"
#include "skybuffer/pipeline.hpp"
#include "skybuffer/rotation.hpp"
#include "skybuffer/split.hpp"
#include "skybuffer/synth.hpp"

namespace testutil {

struct PreparedRun {
    skybuffer::SynthOutput synth;
    std::vector<skybuffer::JoinedFlight> joined;
    std::vector<skybuffer::FlightRecord> flights;
    std::vector<skybuffer::RotationLink> links;
    skybuffer::BufferTable table;
    std::vector<skybuffer::AbsorptionLabel> labels;
    skybuffer::EncoderState encoder;
    skybuffer::Dataset dataset;
    skybuffer::SplitPlan split;
};

inline PreparedRun prepare_run(const skybuffer::SynthConfig& cfg, std::uint64_t split_seed,
                               std::int64_t buffer_floor = skybuffer::kDefaultBufferFloor) {
    PreparedRun run;
    run.synth = skybuffer::generate_network(cfg);
    auto cleaned = skybuffer::clean_flights(run.synth.flights);
    run.flights = std::move(cleaned.records);
    run.joined = skybuffer::join_weather(run.flights, run.synth.weather, 120);
    run.links = skybuffer::chain_rotations(run.flights).links;

    std::vector<int> dep15(run.flights.size());
    for (std::size_t i = 0; i < run.flights.size(); ++i)
        dep15[i] = run.flights[i].dep_delay_min.value_or(0.0) > skybuffer::kDepDelayThresholdMin;
    run.split = skybuffer::make_split(dep15, split_seed);

    std::vector<char> in_train(run.flights.size(), 0);
    for (int r : run.split.train_indices) in_train[static_cast<std::size_t>(r)] = 1;
    std::vector<skybuffer::RotationLink> train_links;
    for (const auto& link : run.links)
        if (in_train[static_cast<std::size_t>(link.curr_index)]) train_links.push_back(link);
    run.table = skybuffer::compute_buffer_stats(run.flights, train_links, buffer_floor);
    run.labels = skybuffer::label_delay_absorbed(run.flights, run.links, run.table);
    run.encoder = skybuffer::fit_encoders(run.joined, run.split.train_indices);
    run.dataset = skybuffer::assemble_dataset(run.joined, run.links, run.labels, run.encoder);
    return run;
}

// Two crisp weather regimes; chained legs are disrupted exactly when the
// origin-day regime is the bad one, so absorption is a deterministic function
// of observable features. Chains stay inside one calendar day so every leg
// sees its own day's regime in the joined weather.
inline skybuffer::SynthConfig deterministic_rule_config(std::uint64_t seed, int n_tails = 700) {
    skybuffer::SynthConfig cfg;
    cfg.n_tails = n_tails;
    cfg.legs_per_tail = 5;
    cfg.n_airports = 6;
    cfg.n_carriers = 2;
    cfg.n_days = 4;
    cfg.p_disrupt = 0.55;
    cfg.new_delay_lo = 15;
    cfg.new_delay_hi = 75;
    cfg.buffer_lo = 0;
    cfg.buffer_hi = 40;
    cfg.block_hi = 110;
    cfg.wx_regimes = {0.1, 0.9};
    cfg.wx_disrupt_threshold = 0.5;
    cfg.chained_new_delay = 45;
    cfg.seed = seed;
    return cfg;
}

// Propagation-heavy world: sparse fresh disruptions with wide magnitudes,
// a broad pair-buffer spread, and per-airport minimum turnarounds, so a large
// share of late departures trace back to delay inherited through the rotation
// and the buffer cannot be read off a single schedule column.
inline skybuffer::SynthConfig absorption_driven_config(std::uint64_t seed, int n_tails = 700) {
    skybuffer::SynthConfig cfg;
    cfg.n_tails = n_tails;
    cfg.legs_per_tail = 6;
    cfg.n_airports = 12;
    cfg.n_carriers = 4;
    cfg.n_days = 3;
    cfg.p_disrupt = 0.16;
    cfg.new_delay_lo = 5;
    cfg.new_delay_hi = 90;
    cfg.buffer_lo = 0;
    cfg.buffer_hi = 45;
    cfg.min_turnaround_max = 65;
    cfg.wx_coeff = 0.25;
    cfg.seed = seed;
    return cfg;
}

}  // namespace testutil
