// Command-line front end. Subcommands hand data to each other through files
// only, every command writes a manifest beside its outputs, and all
// randomness flows from --seed.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "skybuffer/absorption.hpp"
#include "skybuffer/booster.hpp"
#include "skybuffer/features.hpp"
#include "skybuffer/ingest.hpp"
#include "skybuffer/model_io.hpp"
#include "skybuffer/pipeline.hpp"
#include "skybuffer/report.hpp"
#include "skybuffer/rotation.hpp"
#include "skybuffer/synth.hpp"

namespace fs = std::filesystem;
using skybuffer::Json;

namespace {

struct GlobalOpts {
    std::uint64_t seed = 7;
    int threads = 1;
};

class ManifestWriter {
public:
    ManifestWriter(std::string command, const GlobalOpts& g)
        : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {
        doc_["command"] = command_;
        doc_["tool_version"] = skybuffer::kToolVersion;
        doc_["seed"] = g.seed;
        doc_["threads"] = g.threads;
        doc_["inputs"] = Json::object();
        doc_["outputs"] = Json::array();
        doc_["config"] = Json::object();
    }

    void input(const std::string& name, const std::string& path) { doc_["inputs"][name] = path; }
    void output(const std::string& path) { doc_["outputs"].push_back(path); }
    template <typename T>
    void config(const std::string& name, const T& value) { doc_["config"][name] = value; }

    void write(const fs::path& dir) {
        const auto elapsed = std::chrono::steady_clock::now() - start_;
        doc_["duration_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
        std::ofstream out(dir / "manifest.json", std::ios::binary);
        if (!out) throw skybuffer::IoError("cannot write manifest in " + dir.string());
        out << doc_.dump(2) << "\n";
    }

private:
    std::string command_;
    std::chrono::steady_clock::time_point start_;
    Json doc_;
};

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw skybuffer::IoError("cannot create directory: " + dir.string());
}

skybuffer::WeatherByAirport load_weather_dir(const std::string& dir,
                                             skybuffer::ParseReport* report = nullptr) {
    skybuffer::WeatherByAirport weather;
    if (dir.empty() || !fs::exists(dir)) return weather;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
        const std::string airport = file.stem().string();
        auto parsed = skybuffer::parse_weather_csv(file.string(), airport);
        if (report) {
            report->rows_read += parsed.report.rows_read;
            report->rows_kept += parsed.report.rows_kept;
            for (const auto& [reason, n] : parsed.report.rejected)
                report->rejected[reason] += n;
        }
        weather[airport] = std::move(parsed.observations);
    }
    return weather;
}

// Commands accept either an ingested directory (flights_clean.csv) or a raw
// one (flights.csv plus optional weather/). The raw path runs the full
// ingest in memory.
std::vector<skybuffer::JoinedFlight> load_flights(const std::string& data_dir,
                                                  skybuffer::Minutes join_window) {
    const fs::path dir(data_dir);
    if (fs::exists(dir / "flights_clean.csv"))
        return skybuffer::read_clean_flights_csv((dir / "flights_clean.csv").string());
    if (!fs::exists(dir / "flights.csv"))
        throw skybuffer::IoError("no flights_clean.csv or flights.csv in " + data_dir);
    auto parsed = skybuffer::parse_flight_csv((dir / "flights.csv").string());
    auto cleaned = skybuffer::clean_flights(parsed.records);
    for (std::size_t i = 0; i < cleaned.records.size(); ++i)
        cleaned.records[i].source_index = static_cast<int>(i);
    const auto weather = load_weather_dir((dir / "weather").string());
    return skybuffer::join_weather(cleaned.records, weather, join_window);
}

std::vector<skybuffer::FlightRecord> bare_flights(const std::vector<skybuffer::JoinedFlight>& jf) {
    std::vector<skybuffer::FlightRecord> out;
    out.reserve(jf.size());
    for (const auto& j : jf) out.push_back(j.flight);
    return out;
}

std::vector<skybuffer::RotationLink> load_or_chain_links(
    const std::string& data_dir, const std::vector<skybuffer::FlightRecord>& flights,
    double overnight_min) {
    const fs::path links_path = fs::path(data_dir) / "links.csv";
    if (fs::exists(links_path)) return skybuffer::read_links_csv(links_path.string());
    return skybuffer::chain_rotations(flights, overnight_min).links;
}

// ---------------------------------------------------------------------------

int cmd_synth(const GlobalOpts& g, const std::string& out_dir, skybuffer::SynthConfig cfg) {
    cfg.seed = g.seed;
    ManifestWriter manifest("synth", g);
    ensure_dir(out_dir);
    const auto data = skybuffer::generate_network(cfg);

    const fs::path dir(out_dir);
    skybuffer::write_flights_bts_csv(data.flights, (dir / "flights.csv").string());
    skybuffer::write_truth_csv(data.truth, (dir / "truth.csv").string());
    ensure_dir(dir / "weather");
    for (const auto& [airport, obs] : data.weather)
        skybuffer::write_weather_csv(obs, (dir / "weather" / (airport + ".csv")).string());

    manifest.config("tails", cfg.n_tails);
    manifest.config("legs", cfg.legs_per_tail);
    manifest.config("airports", cfg.n_airports);
    manifest.config("carriers", cfg.n_carriers);
    manifest.config("days", cfg.n_days);
    manifest.config("p_disrupt", cfg.p_disrupt);
    manifest.config("buffer_lo", cfg.buffer_lo);
    manifest.config("buffer_hi", cfg.buffer_hi);
    manifest.config("scenario", static_cast<int>(cfg.scenario));
    manifest.output("flights.csv");
    manifest.output("truth.csv");
    manifest.output("weather/");
    manifest.write(dir);
    std::cout << "synth: " << data.flights.size() << " flights, "
              << data.weather.size() << " airports -> " << out_dir << "\n";
    return 0;
}

int cmd_ingest(const GlobalOpts& g, const std::string& flights_path,
               const std::string& weather_dir, const std::string& out_dir,
               skybuffer::Minutes join_window) {
    ManifestWriter manifest("ingest", g);
    ensure_dir(out_dir);
    manifest.input("flights", flights_path);
    if (!weather_dir.empty()) manifest.input("weather_dir", weather_dir);
    manifest.config("join_window_min", join_window);

    auto parsed = skybuffer::parse_flight_csv(flights_path);
    auto cleaned = skybuffer::clean_flights(parsed.records);
    for (std::size_t i = 0; i < cleaned.records.size(); ++i)
        cleaned.records[i].source_index = static_cast<int>(i);
    skybuffer::ParseReport weather_report;
    const auto weather = load_weather_dir(weather_dir, &weather_report);
    const auto joined = skybuffer::join_weather(cleaned.records, weather, join_window);

    const fs::path dir(out_dir);
    skybuffer::write_clean_flights_csv(joined, (dir / "flights_clean.csv").string());

    std::int64_t missing = 0;
    for (const auto& jf : joined) missing += jf.weather_missing;
    {
        std::ofstream rep(dir / "ingest_report.txt", std::ios::binary);
        rep << parsed.report.to_text("flights_parse");
        rep << cleaned.report.to_text("flights_clean");
        rep << weather_report.to_text("weather_parse");
        rep << "report=weather_join\nflights=" << joined.size()
            << "\nweather_missing=" << missing << "\n";
    }
    {
        Json j;
        j["flights_parse"] = {{"rows_read", parsed.report.rows_read},
                              {"rows_kept", parsed.report.rows_kept},
                              {"rejected", parsed.report.rejected}};
        j["flights_clean"] = {{"rows_read", cleaned.report.rows_read},
                              {"rows_kept", cleaned.report.rows_kept},
                              {"rejected", cleaned.report.rejected}};
        j["weather_parse"] = {{"rows_read", weather_report.rows_read},
                              {"rows_kept", weather_report.rows_kept},
                              {"rejected", weather_report.rejected}};
        j["weather_join"] = {{"flights", joined.size()}, {"weather_missing", missing}};
        std::ofstream rep(dir / "ingest_report.json", std::ios::binary);
        rep << j.dump(2) << "\n";
    }
    manifest.output("flights_clean.csv");
    manifest.output("ingest_report.txt");
    manifest.output("ingest_report.json");
    manifest.write(dir);
    std::cout << "ingest: kept " << cleaned.report.rows_kept << "/" << parsed.report.rows_read
              << " rows, weather missing on " << missing << "\n";
    return 0;
}

int cmd_chain(const GlobalOpts& g, const std::string& data_dir, const std::string& out_dir,
              double overnight_min, skybuffer::Minutes join_window) {
    ManifestWriter manifest("chain", g);
    ensure_dir(out_dir);
    manifest.input("data", data_dir);
    manifest.config("overnight_min", overnight_min);

    const auto joined = load_flights(data_dir, join_window);
    const auto flights = bare_flights(joined);
    const auto chained = skybuffer::chain_rotations(flights, overnight_min);

    const fs::path dir(out_dir);
    skybuffer::write_links_csv(flights, chained.links, (dir / "links.csv").string());
    {
        std::ofstream rep(dir / "chain_report.txt", std::ios::binary);
        rep << "report=chain\nflights=" << flights.size() << "\nlinks=" << chained.links.size()
            << "\nunchained=" << chained.unchained
            << "\nduplicate_warnings=" << chained.duplicate_warnings << "\n";
    }
    manifest.output("links.csv");
    manifest.output("chain_report.txt");
    manifest.write(dir);
    std::cout << "chain: " << chained.links.size() << " links, " << chained.unchained
              << " unchained\n";
    return 0;
}

int cmd_label(const GlobalOpts& g, const std::string& data_dir, const std::string& out_dir,
              std::int64_t buffer_floor, double overnight_min, skybuffer::Minutes join_window,
              const std::string& buffers_path) {
    ManifestWriter manifest("label", g);
    ensure_dir(out_dir);
    manifest.input("data", data_dir);
    manifest.config("buffer_floor", buffer_floor);
    manifest.config("overnight_min", overnight_min);

    const auto joined = load_flights(data_dir, join_window);
    const auto flights = bare_flights(joined);
    const auto links = load_or_chain_links(data_dir, flights, overnight_min);

    skybuffer::BufferTable table;
    if (!buffers_path.empty()) {
        manifest.input("buffers", buffers_path);
        table = skybuffer::read_buffer_table_csv(buffers_path, buffer_floor);
    } else {
        table = skybuffer::compute_buffer_stats(flights, links, buffer_floor);
    }
    const auto labels = skybuffer::label_delay_absorbed(flights, links, table);

    const fs::path dir(out_dir);
    skybuffer::write_buffer_table_csv(table, (dir / "buffers.csv").string());
    skybuffer::write_labels_csv(flights, links, labels, (dir / "labels.csv").string());
    manifest.output("buffers.csv");
    manifest.output("labels.csv");
    manifest.write(dir);

    std::int64_t absorbed = 0;
    for (const auto& lab : labels) absorbed += lab.absorbed;
    std::cout << "label: " << labels.size() << " labeled links, " << absorbed << " absorbed\n";
    return 0;
}

int cmd_analyze(const GlobalOpts& g, const std::string& data_dir, const std::string& out_dir,
                double overnight_min, skybuffer::Minutes join_window) {
    ManifestWriter manifest("analyze", g);
    ensure_dir(out_dir);
    manifest.input("data", data_dir);

    const auto joined = load_flights(data_dir, join_window);
    const auto flights = bare_flights(joined);
    const auto links = load_or_chain_links(data_dir, flights, overnight_min);

    const fs::path dir(out_dir);
    skybuffer::write_delay_histogram_csv(skybuffer::delay_category_histogram(flights),
                                         (dir / "delay_categories.csv").string());
    skybuffer::write_turnover_summary_csv(skybuffer::airport_turnover_summary(flights, links),
                                          (dir / "turnover_by_airport.csv").string());
    skybuffer::write_profiles_csv(
        skybuffer::absorption_profile(flights, links, skybuffer::ProfileGroupBy::kAirport),
        (dir / "absorption_profile_airport.csv").string());
    skybuffer::write_profiles_csv(
        skybuffer::absorption_profile(flights, links, skybuffer::ProfileGroupBy::kAirportDate),
        (dir / "absorption_profile_airport_day.csv").string());
    for (const char* f : {"delay_categories.csv", "turnover_by_airport.csv",
                          "absorption_profile_airport.csv", "absorption_profile_airport_day.csv"})
        manifest.output(f);
    manifest.write(dir);
    std::cout << "analyze: wrote 4 analytics files to " << out_dir << "\n";
    return 0;
}

int cmd_featurize(const GlobalOpts& g, const std::string& data_dir, const std::string& out_dir,
                  const std::string& encoder_path, std::int64_t buffer_floor,
                  double overnight_min, skybuffer::Minutes join_window) {
    ManifestWriter manifest("featurize", g);
    ensure_dir(out_dir);
    manifest.input("data", data_dir);

    const auto joined = load_flights(data_dir, join_window);
    const auto flights = bare_flights(joined);
    const auto links = load_or_chain_links(data_dir, flights, overnight_min);
    const auto table = skybuffer::compute_buffer_stats(flights, links, buffer_floor);
    const auto labels = skybuffer::label_delay_absorbed(flights, links, table);

    skybuffer::EncoderState enc;
    if (!encoder_path.empty()) {
        manifest.input("encoder", encoder_path);
        enc = skybuffer::deserialize_encoder(skybuffer::load_text_file(encoder_path));
    } else {
        std::vector<int> all_rows(joined.size());
        std::iota(all_rows.begin(), all_rows.end(), 0);
        enc = skybuffer::fit_encoders(joined, all_rows);
    }
    const auto ds = skybuffer::assemble_dataset(joined, links, labels, enc);

    const fs::path dir(out_dir);
    {
        std::ofstream out(dir / "features.csv", std::ios::binary);
        std::vector<std::string> header = {"key"};
        header.insert(header.end(), ds.names.begin(), ds.names.end());
        header.push_back("stage1_label");
        header.push_back("stage2_label");
        skybuffer::write_csv_row(out, header);
        for (std::size_t r = 0; r < ds.rows.size(); ++r) {
            std::vector<std::string> row = {ds.rows[r].key};
            for (std::size_t c = 0; c < ds.x.cols; ++c)
                row.push_back(skybuffer::detail::fmt_double(ds.x.at(r, c)));
            row.push_back(ds.rows[r].stage1_label ? std::to_string(*ds.rows[r].stage1_label) : "");
            row.push_back(std::to_string(ds.rows[r].stage2_label));
            skybuffer::write_csv_row(out, row);
        }
    }
    skybuffer::save_text_file(skybuffer::serialize_encoder(enc),
                              (dir / "encoder.json").string());
    manifest.output("features.csv");
    manifest.output("encoder.json");
    manifest.write(dir);
    std::cout << "featurize: " << ds.rows.size() << " rows x " << ds.x.cols << " features\n";
    return 0;
}

struct TrainFlags {
    int trees = 60, depth = 3, bins = 32;
    double lr = 0.15;
    int stage1_trees = 200, stage1_depth = 6, stage1_bins = 64;
    double stage1_lr = 0.1;
    double beta = 1.0;
    double pos_weight = 0;  // 0 = empirical ratio
    std::int64_t buffer_floor = skybuffer::kDefaultBufferFloor;
    double overnight_min = skybuffer::kDefaultOvernightMin;
    skybuffer::Minutes join_window = 120;
    bool no_baselines = false;
    int search_trials = 0;
};

int cmd_train(const GlobalOpts& g, const std::string& data_dir, const std::string& out_dir,
              const TrainFlags& flags) {
    ManifestWriter manifest("train", g);
    ensure_dir(out_dir);
    manifest.input("data", data_dir);

    const auto joined = load_flights(data_dir, flags.join_window);
    if (joined.empty()) throw skybuffer::DataError("no flights in " + data_dir);
    const auto flights = bare_flights(joined);
    const auto links = skybuffer::chain_rotations(flights, flags.overnight_min).links;

    // Split first; buffer statistics and encoders are fitted on training rows
    // only and frozen before any labels or features exist.
    std::vector<int> dep15(flights.size());
    for (std::size_t i = 0; i < flights.size(); ++i)
        dep15[i] = flights[i].dep_delay_min.value_or(0.0) > skybuffer::kDepDelayThresholdMin;
    const auto split = skybuffer::make_split(dep15, g.seed);

    std::vector<char> in_train(flights.size(), 0);
    for (int r : split.train_indices) in_train[static_cast<std::size_t>(r)] = 1;
    std::vector<skybuffer::RotationLink> train_links;
    for (const auto& link : links)
        if (in_train[static_cast<std::size_t>(link.curr_index)]) train_links.push_back(link);
    const auto table = skybuffer::compute_buffer_stats(flights, train_links, flags.buffer_floor);
    const auto labels = skybuffer::label_delay_absorbed(flights, links, table);
    const auto enc = skybuffer::fit_encoders(joined, split.train_indices);
    const auto ds = skybuffer::assemble_dataset(joined, links, labels, enc);

    skybuffer::StageConfig cfg;
    cfg.stage1.n_trees = flags.stage1_trees;
    cfg.stage1.max_depth = flags.stage1_depth;
    cfg.stage1.learning_rate = flags.stage1_lr;
    cfg.stage1.n_bins = flags.stage1_bins;
    cfg.stage1.seed = g.seed;
    cfg.stage2.n_trees = flags.trees;
    cfg.stage2.max_depth = flags.depth;
    cfg.stage2.learning_rate = flags.lr;
    cfg.stage2.n_bins = flags.bins;
    cfg.stage2.seed = g.seed;
    cfg.beta = flags.beta;
    cfg.pos_weight_override = flags.pos_weight;
    cfg.with_baselines = !flags.no_baselines;

    if (flags.search_trials > 0) {
        // Tune the Stage II learner by out-of-fold AUC on training data only.
        const auto x2 = skybuffer::with_column(ds.x, std::vector<double>(ds.rows.size(), 0.5));
        const auto found = skybuffer::search_hyperparameters(
            x2, skybuffer::stage2_labels(ds), split.folds, skybuffer::SearchSpace{},
            flags.search_trials, g.seed, cfg.stage2);
        cfg.stage2 = found.best;
        manifest.config("search_trials", flags.search_trials);
        manifest.config("search_best_auc", found.best_auc);
    }

    const auto outputs = skybuffer::run_two_stage(ds, split, cfg);

    const fs::path dir(out_dir);
    skybuffer::save_text_file(skybuffer::serialize_model(outputs.stage1.model),
                              (dir / "stage1_model.json").string());
    skybuffer::save_text_file(skybuffer::serialize_model(outputs.stage2.model),
                              (dir / "stage2_model.json").string());
    skybuffer::save_text_file(skybuffer::serialize_encoder(enc),
                              (dir / "encoder.json").string());
    skybuffer::write_buffer_table_csv(table, (dir / "buffers.csv").string());
    skybuffer::write_scores_csv(ds, split, outputs, (dir / "scores.csv").string());
    const auto eval_doc = skybuffer::stage_outputs_to_json(ds, outputs, cfg.beta);
    skybuffer::save_text_file(eval_doc.dump(2) + "\n", (dir / "eval.json").string());
    skybuffer::save_text_file(skybuffer::render_text_report(eval_doc),
                              (dir / "report.txt").string());

    manifest.config("trees", cfg.stage2.n_trees);
    manifest.config("depth", cfg.stage2.max_depth);
    manifest.config("lr", cfg.stage2.learning_rate);
    manifest.config("bins", cfg.stage2.n_bins);
    manifest.config("stage1_trees", cfg.stage1.n_trees);
    manifest.config("stage1_depth", cfg.stage1.max_depth);
    manifest.config("beta", cfg.beta);
    manifest.config("pos_weight", outputs.stage2.pos_weight_used);
    manifest.config("buffer_floor", flags.buffer_floor);
    manifest.config("overnight_min", flags.overnight_min);
    manifest.config("join_window_min", flags.join_window);
    for (const char* f : {"stage1_model.json", "stage2_model.json", "encoder.json", "buffers.csv",
                          "scores.csv", "eval.json", "report.txt"})
        manifest.output(f);
    manifest.write(dir);

    const auto& test = outputs.stage2.test_at_half;
    std::cout << "train: stage2 test auc=" << (test.roc_auc ? *test.roc_auc : 0.0)
              << " accuracy=" << test.accuracy << " (threshold 0.5); tuned threshold "
              << outputs.stage2.tuned.threshold << "\n";
    return 0;
}

int cmd_evaluate(const GlobalOpts& g, const std::string& model_dir, const std::string& data_dir,
                 const std::string& out_dir, double threshold, double overnight_min,
                 skybuffer::Minutes join_window, std::int64_t buffer_floor) {
    ManifestWriter manifest("evaluate", g);
    ensure_dir(out_dir);
    manifest.input("model_dir", model_dir);
    manifest.input("data", data_dir);
    manifest.config("threshold", threshold);

    const fs::path mdir(model_dir);
    const auto enc =
        skybuffer::deserialize_encoder(skybuffer::load_text_file((mdir / "encoder.json").string()));
    const auto stage1 =
        skybuffer::deserialize_model(skybuffer::load_text_file((mdir / "stage1_model.json").string()));
    const auto stage2 =
        skybuffer::deserialize_model(skybuffer::load_text_file((mdir / "stage2_model.json").string()));
    const auto table =
        skybuffer::read_buffer_table_csv((mdir / "buffers.csv").string(), buffer_floor);

    const auto joined = load_flights(data_dir, join_window);
    const auto flights = bare_flights(joined);
    const auto links = skybuffer::chain_rotations(flights, overnight_min).links;
    const auto labels = skybuffer::label_delay_absorbed(flights, links, table);
    const auto ds = skybuffer::assemble_dataset(joined, links, labels, enc);

    // Score absorption for eligible rows with the final Stage I model; others
    // take the standing defaults.
    std::vector<double> absorb(ds.rows.size());
    std::vector<int> eligible_rows;
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        if (ds.rows[i].stage1_label)
            eligible_rows.push_back(static_cast<int>(i));
        else
            absorb[i] = skybuffer::default_absorb_score(ds.rows[i]);
    }
    if (!eligible_rows.empty()) {
        const auto scores = skybuffer::predict_proba(
            stage1, skybuffer::detail::gather_rows(ds.x, eligible_rows));
        for (std::size_t k = 0; k < eligible_rows.size(); ++k)
            absorb[static_cast<std::size_t>(eligible_rows[k])] = scores[k];
    }
    const auto x2 = skybuffer::with_column(ds.x, absorb);
    const auto scores = skybuffer::predict_proba(stage2, x2);
    const auto y = skybuffer::stage2_labels(ds);

    Json doc;
    doc["format_version"] = "1";
    doc["kind"] = "evaluation_scores";
    doc["rows"] = ds.rows.size();
    doc["at_0.5"] = skybuffer::eval_report_to_json(skybuffer::compute_metrics(scores, y, 0.5));
    if (threshold != 0.5)
        doc["at_threshold"] =
            skybuffer::eval_report_to_json(skybuffer::compute_metrics(scores, y, threshold));

    const fs::path dir(out_dir);
    {
        std::ofstream out(dir / "eval_scores.csv", std::ios::binary);
        skybuffer::write_csv_row(out, {"key", "stage2_label", "absorb_score", "stage2_score"});
        for (std::size_t i = 0; i < ds.rows.size(); ++i)
            skybuffer::write_csv_row(out, {ds.rows[i].key, std::to_string(y[i]),
                                           skybuffer::detail::fmt_double(absorb[i]),
                                           skybuffer::detail::fmt_double(scores[i])});
    }
    skybuffer::save_text_file(doc.dump(2) + "\n", (dir / "eval.json").string());
    manifest.output("eval_scores.csv");
    manifest.output("eval.json");
    manifest.write(dir);
    std::cout << "evaluate: " << ds.rows.size() << " rows scored; accuracy at 0.5 = "
              << doc["at_0.5"]["accuracy"].get<double>() << "\n";
    return 0;
}

int cmd_report(const GlobalOpts& g, const std::string& eval_path, const std::string& out_path) {
    ManifestWriter manifest("report", g);
    manifest.input("eval", eval_path);
    Json doc;
    try {
        doc = Json::parse(skybuffer::load_text_file(eval_path));
    } catch (const Json::exception& e) {
        throw skybuffer::SchemaError(std::string("bad evaluation document: ") + e.what());
    }
    const std::string text = skybuffer::render_text_report(doc);
    std::cout << text;
    if (!out_path.empty()) {
        skybuffer::save_text_file(text, out_path);
        manifest.output(out_path);
        manifest.write(fs::path(out_path).parent_path().empty()
                           ? fs::path(".")
                           : fs::path(out_path).parent_path());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"aircraft rotation, delay absorption, and departure-delay prediction toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "config file overriding defaults; flags override the file");

    GlobalOpts g;
    app.add_option("--seed", g.seed, "seed for every random choice")->capture_default_str();
    app.add_option("--threads", g.threads, "worker parallelism cap (outputs are invariant)")
        ->capture_default_str();

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic rotation network");
    std::string synth_out;
    skybuffer::SynthConfig synth_cfg;
    std::string scenario = "propagated";
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--tails", synth_cfg.n_tails, "airframes")->capture_default_str();
    synth->add_option("--legs", synth_cfg.legs_per_tail, "legs per airframe")->capture_default_str();
    synth->add_option("--airports", synth_cfg.n_airports)->capture_default_str();
    synth->add_option("--carriers", synth_cfg.n_carriers)->capture_default_str();
    synth->add_option("--days", synth_cfg.n_days)->capture_default_str();
    synth->add_option("--p-disrupt", synth_cfg.p_disrupt)->capture_default_str();
    synth->add_option("--delay-lo", synth_cfg.new_delay_lo)->capture_default_str();
    synth->add_option("--delay-hi", synth_cfg.new_delay_hi)->capture_default_str();
    synth->add_option("--buffer-lo", synth_cfg.buffer_lo)->capture_default_str();
    synth->add_option("--buffer-hi", synth_cfg.buffer_hi)->capture_default_str();
    synth->add_option("--min-turn", synth_cfg.min_turnaround_min)->capture_default_str();
    synth->add_option("--min-turn-max", synth_cfg.min_turnaround_max,
                      "per-airport minimum turnaround upper bound")
        ->capture_default_str();
    synth->add_option("--block-lo", synth_cfg.block_lo)->capture_default_str();
    synth->add_option("--block-hi", synth_cfg.block_hi)->capture_default_str();
    synth->add_option("--wx-coeff", synth_cfg.wx_coeff)->capture_default_str();
    synth->add_option("--wx-regimes", synth_cfg.wx_regimes,
                      "restrict airport-day severity to these values");
    synth->add_option("--cancel-prob", synth_cfg.cancel_prob)->capture_default_str();
    synth->add_option("--wx-rule-threshold", synth_cfg.wx_disrupt_threshold,
                      "deterministic weather rule for chained legs (off when < 0)")
        ->capture_default_str();
    synth->add_option("--chained-delay", synth_cfg.chained_new_delay,
                      "new delay on chained legs under the weather rule")
        ->capture_default_str();
    synth->add_option("--scenario", scenario, "propagated | newly | proportional")
        ->capture_default_str();

    // ingest
    auto* ingest = app.add_subcommand("ingest", "parse, clean, and weather-join flight files");
    std::string in_flights, in_weather_dir, ingest_out;
    skybuffer::Minutes join_window = 120;
    ingest->add_option("--flights", in_flights, "flight records file")->required();
    ingest->add_option("--weather-dir", in_weather_dir, "directory of per-airport weather files");
    ingest->add_option("--out", ingest_out, "output directory")->required();
    ingest->add_option("--join-window-min", join_window)->capture_default_str();

    // chain
    auto* chain = app.add_subcommand("chain", "reconstruct aircraft rotations");
    std::string chain_data, chain_out;
    double overnight_min = skybuffer::kDefaultOvernightMin;
    chain->add_option("--data", chain_data, "ingested or raw data directory")->required();
    chain->add_option("--out", chain_out, "output directory (defaults to --data)");
    chain->add_option("--overnight-min", overnight_min)->capture_default_str();
    chain->add_option("--join-window-min", join_window)->capture_default_str();

    // label
    auto* label = app.add_subcommand("label", "buffer statistics and absorption labels");
    std::string label_data, label_out, label_buffers;
    std::int64_t buffer_floor = skybuffer::kDefaultBufferFloor;
    label->add_option("--data", label_data)->required();
    label->add_option("--out", label_out, "output directory (defaults to --data)");
    label->add_option("--buffer-floor", buffer_floor)->capture_default_str();
    label->add_option("--overnight-min", overnight_min)->capture_default_str();
    label->add_option("--join-window-min", join_window)->capture_default_str();
    label->add_option("--buffers", label_buffers, "externally supplied buffer table");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "turnover and absorption analytics files");
    std::string analyze_data, analyze_out;
    analyze->add_option("--data", analyze_data)->required();
    analyze->add_option("--out", analyze_out, "output directory (defaults to --data)");
    analyze->add_option("--overnight-min", overnight_min)->capture_default_str();
    analyze->add_option("--join-window-min", join_window)->capture_default_str();

    // featurize
    auto* featurize = app.add_subcommand("featurize", "encode the feature matrix");
    std::string feat_data, feat_out, feat_encoder;
    featurize->add_option("--data", feat_data)->required();
    featurize->add_option("--out", feat_out, "output directory (defaults to --data)");
    featurize->add_option("--encoder", feat_encoder, "apply an existing encoder document");
    featurize->add_option("--buffer-floor", buffer_floor)->capture_default_str();
    featurize->add_option("--overnight-min", overnight_min)->capture_default_str();
    featurize->add_option("--join-window-min", join_window)->capture_default_str();

    // train
    auto* train = app.add_subcommand("train", "full two-stage training run");
    std::string train_data, train_out;
    TrainFlags tf;
    train->add_option("--data", train_data)->required();
    train->add_option("--out", train_out, "output directory")->required();
    train->add_option("--trees", tf.trees, "stage II trees")->capture_default_str();
    train->add_option("--depth", tf.depth, "stage II depth")->capture_default_str();
    train->add_option("--lr", tf.lr, "stage II learning rate")->capture_default_str();
    train->add_option("--bins", tf.bins, "stage II histogram bins (0 = exact)")
        ->capture_default_str();
    train->add_option("--stage1-trees", tf.stage1_trees)->capture_default_str();
    train->add_option("--stage1-depth", tf.stage1_depth)->capture_default_str();
    train->add_option("--stage1-lr", tf.stage1_lr)->capture_default_str();
    train->add_option("--stage1-bins", tf.stage1_bins)->capture_default_str();
    train->add_option("--beta", tf.beta, "F-beta for threshold tuning")->capture_default_str();
    train->add_option("--pos-weight", tf.pos_weight,
                      "positive class weight (0 = negative/positive ratio)")
        ->capture_default_str();
    train->add_option("--buffer-floor", tf.buffer_floor)->capture_default_str();
    train->add_option("--overnight-min", tf.overnight_min)->capture_default_str();
    train->add_option("--join-window-min", tf.join_window)->capture_default_str();
    train->add_flag("--no-baselines", tf.no_baselines, "skip baseline models");
    train->add_option("--search-trials", tf.search_trials,
                      "random hyperparameter search trials for stage II")
        ->capture_default_str();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score new data with trained models");
    std::string eval_model_dir, eval_data, eval_out;
    double eval_threshold = 0.5;
    evaluate->add_option("--model-dir", eval_model_dir, "directory produced by train")->required();
    evaluate->add_option("--data", eval_data)->required();
    evaluate->add_option("--out", eval_out)->required();
    evaluate->add_option("--threshold", eval_threshold)->capture_default_str();
    evaluate->add_option("--overnight-min", overnight_min)->capture_default_str();
    evaluate->add_option("--join-window-min", join_window)->capture_default_str();
    evaluate->add_option("--buffer-floor", buffer_floor)->capture_default_str();

    // report
    auto* report = app.add_subcommand("report", "render the metric tables from eval.json");
    std::string report_eval, report_out;
    report->add_option("--eval", report_eval, "eval.json from a train run")->required();
    report->add_option("--out", report_out, "also write the text report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e, std::cout, std::cerr);
        return 1;  // usage errors land on exit code 1
    }

    try {
        if (*synth) {
            if (scenario == "newly") synth_cfg.scenario = skybuffer::BufferScenario::kNewlyFirst;
            else if (scenario == "proportional")
                synth_cfg.scenario = skybuffer::BufferScenario::kProportional;
            else if (scenario != "propagated")
                throw skybuffer::DataError("unknown scenario: " + scenario);
            return cmd_synth(g, synth_out, synth_cfg);
        }
        if (*ingest) return cmd_ingest(g, in_flights, in_weather_dir, ingest_out, join_window);
        if (*chain)
            return cmd_chain(g, chain_data, chain_out.empty() ? chain_data : chain_out,
                             overnight_min, join_window);
        if (*label)
            return cmd_label(g, label_data, label_out.empty() ? label_data : label_out,
                             buffer_floor, overnight_min, join_window, label_buffers);
        if (*analyze)
            return cmd_analyze(g, analyze_data, analyze_out.empty() ? analyze_data : analyze_out,
                               overnight_min, join_window);
        if (*featurize)
            return cmd_featurize(g, feat_data, feat_out.empty() ? feat_data : feat_out,
                                 feat_encoder, buffer_floor, overnight_min, join_window);
        if (*train) return cmd_train(g, train_data, train_out, tf);
        if (*evaluate)
            return cmd_evaluate(g, eval_model_dir, eval_data, eval_out, eval_threshold,
                                overnight_min, join_window, buffer_floor);
        if (*report) return cmd_report(g, report_eval, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;  // data, schema, and I/O failures
    }
    return 1;
}
