#pragma once

// Evaluation documents and the formatted text report. The JSON document
// carries every metric the text tables are built from, so downstream runs
// can re-render without recomputing.

#include <cstdio>
#include <string>

#include "json.hpp"
#include "skybuffer/metrics.hpp"
#include "skybuffer/pipeline.hpp"

namespace skybuffer {

inline nlohmann::ordered_json eval_report_to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["threshold"] = r.threshold;
    if (r.roc_auc) j["roc_auc"] = *r.roc_auc;
    if (r.average_precision) j["average_precision"] = *r.average_precision;
    j["accuracy"] = r.accuracy;
    j["positive"] = {{"precision", r.positive.precision},
                     {"recall", r.positive.recall},
                     {"f1", r.positive.f1}};
    j["negative"] = {{"precision", r.negative.precision},
                     {"recall", r.negative.recall},
                     {"f1", r.negative.f1}};
    j["confusion"] = {{"tn", r.confusion.tn},
                      {"fp", r.confusion.fp},
                      {"fn", r.confusion.fn},
                      {"tp", r.confusion.tp}};
    return j;
}

inline EvalReport eval_report_from_json(const nlohmann::ordered_json& j) {
    EvalReport r;
    r.threshold = j.at("threshold").get<double>();
    if (j.contains("roc_auc")) r.roc_auc = j.at("roc_auc").get<double>();
    if (j.contains("average_precision"))
        r.average_precision = j.at("average_precision").get<double>();
    r.accuracy = j.at("accuracy").get<double>();
    r.positive = {j.at("positive").at("precision").get<double>(),
                  j.at("positive").at("recall").get<double>(),
                  j.at("positive").at("f1").get<double>()};
    r.negative = {j.at("negative").at("precision").get<double>(),
                  j.at("negative").at("recall").get<double>(),
                  j.at("negative").at("f1").get<double>()};
    r.confusion.tn = j.at("confusion").at("tn").get<std::int64_t>();
    r.confusion.fp = j.at("confusion").at("fp").get<std::int64_t>();
    r.confusion.fn = j.at("confusion").at("fn").get<std::int64_t>();
    r.confusion.tp = j.at("confusion").at("tp").get<std::int64_t>();
    return r;
}

inline nlohmann::ordered_json stage_outputs_to_json(const Dataset& ds,
                                                    const StageOutputs& outputs,
                                                    double beta) {
    nlohmann::ordered_json doc;
    doc["format_version"] = "1";
    doc["kind"] = "evaluation";
    doc["beta"] = beta;
    doc["rows"] = ds.rows.size();
    doc["train_rows"] = outputs.split.train_indices.size();
    doc["test_rows"] = outputs.split.test_indices.size();

    std::int64_t stage1_population = 0, stage2_pos = 0;
    for (const auto& m : ds.rows) {
        stage1_population += m.stage1_label.has_value();
        stage2_pos += m.stage2_label;
    }
    doc["stage1_population"] = stage1_population;
    doc["stage2_positive_rate"] =
        static_cast<double>(stage2_pos) / static_cast<double>(ds.rows.size());

    doc["thresholds"] = {{"stage1_tuned", outputs.stage1.tuned.threshold},
                         {"stage1_f_beta", outputs.stage1.tuned.f_beta},
                         {"stage2_tuned", outputs.stage2.tuned.threshold},
                         {"stage2_f_beta", outputs.stage2.tuned.f_beta}};
    doc["stage1"] = {{"oof_at_0.5", eval_report_to_json(outputs.stage1.oof_at_half)},
                     {"oof_at_tuned", eval_report_to_json(outputs.stage1.oof_at_tuned)}};
    doc["stage2"] = {{"pos_weight", outputs.stage2.pos_weight_used},
                     {"cv_at_0.5", eval_report_to_json(outputs.stage2.cv_at_half)},
                     {"test_at_0.5", eval_report_to_json(outputs.stage2.test_at_half)},
                     {"test_at_tuned", eval_report_to_json(outputs.stage2.test_at_tuned)}};
    if (outputs.baselines) {
        doc["baselines"] = {
            {"logistic_test_at_0.5", eval_report_to_json(outputs.baselines->logistic_test)},
            {"booster_test_at_0.5", eval_report_to_json(outputs.baselines->booster_test)}};
    }
    return doc;
}

// Text rendering: a model-comparison table and the per-threshold Stage II
// metric grid. Emitted for any scale of input; no tolerances are attached.
inline std::string render_text_report(const nlohmann::ordered_json& doc) {
    std::string out;
    char line[160];
    auto add = [&](const char* fmt, auto... args) {
        std::snprintf(line, sizeof line, fmt, args...);
        out += line;
        out += "\n";
    };

    auto metric = [&](const nlohmann::ordered_json& j, const char* name) {
        return j.contains(name) ? j.at(name).get<double>() : 0.0;
    };

    add("%s", "departure-delay prediction report");
    add("rows=%lld train=%lld test=%lld stage1_population=%lld",
        static_cast<long long>(doc.at("rows").get<std::int64_t>()),
        static_cast<long long>(doc.at("train_rows").get<std::int64_t>()),
        static_cast<long long>(doc.at("test_rows").get<std::int64_t>()),
        static_cast<long long>(doc.at("stage1_population").get<std::int64_t>()));
    add("%s", "");
    add("%s", "model comparison (held-out test, threshold 0.5)");
    add("%-28s %10s %10s", "model", "accuracy", "roc_auc");
    if (doc.contains("baselines")) {
        const auto& lg = doc.at("baselines").at("logistic_test_at_0.5");
        const auto& bt = doc.at("baselines").at("booster_test_at_0.5");
        add("%-28s %10.3f %10.3f", "logistic regression", metric(lg, "accuracy"),
            metric(lg, "roc_auc"));
        add("%-28s %10.3f %10.3f", "single-stage booster", metric(bt, "accuracy"),
            metric(bt, "roc_auc"));
    }
    const auto& s2_half = doc.at("stage2").at("test_at_0.5");
    const auto& s2_tuned = doc.at("stage2").at("test_at_tuned");
    add("%-28s %10.3f %10.3f", "two-stage (absorb score)", metric(s2_half, "accuracy"),
        metric(s2_half, "roc_auc"));
    add("%s", "");
    add("%s", "stage II metrics by threshold (held-out test)");
    add("%-24s %14s %14s", "metric", "threshold=0.5",
        ("threshold=" + std::to_string(doc.at("thresholds").at("stage2_tuned").get<double>()))
            .substr(0, 15)
            .c_str());
    auto row2 = [&](const char* name, double a, double b) { add("%-24s %14.4f %14.4f", name, a, b); };
    row2("accuracy", metric(s2_half, "accuracy"), metric(s2_tuned, "accuracy"));
    row2("roc_auc", metric(s2_half, "roc_auc"), metric(s2_tuned, "roc_auc"));
    row2("average_precision", metric(s2_half, "average_precision"),
         metric(s2_tuned, "average_precision"));
    auto cls = [&](const nlohmann::ordered_json& j, const char* c, const char* m) {
        return j.at(c).at(m).get<double>();
    };
    row2("precision (class 0)", cls(s2_half, "negative", "precision"),
         cls(s2_tuned, "negative", "precision"));
    row2("precision (class 1)", cls(s2_half, "positive", "precision"),
         cls(s2_tuned, "positive", "precision"));
    row2("recall (class 0)", cls(s2_half, "negative", "recall"),
         cls(s2_tuned, "negative", "recall"));
    row2("recall (class 1)", cls(s2_half, "positive", "recall"),
         cls(s2_tuned, "positive", "recall"));
    row2("f1 (class 0)", cls(s2_half, "negative", "f1"), cls(s2_tuned, "negative", "f1"));
    row2("f1 (class 1)", cls(s2_half, "positive", "f1"), cls(s2_tuned, "positive", "f1"));
    add("%s", "");
    add("stage I (out-of-fold): accuracy %.4f at 0.5, f1 %.4f at tuned threshold %.3f",
        metric(doc.at("stage1").at("oof_at_0.5"), "accuracy"),
        doc.at("stage1").at("oof_at_tuned").at("positive").at("f1").get<double>(),
        doc.at("thresholds").at("stage1_tuned").get<double>());
    return out;
}

}  // namespace skybuffer
