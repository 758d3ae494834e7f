#pragma once

// Versioned model documents. Thresholds and weights are emitted as
// shortest-round-trip decimal, so a load reproduces every binary64 exactly.

#include <fstream>
#include <string>

#include "json.hpp"
#include "skybuffer/booster.hpp"
#include "skybuffer/logistic.hpp"

namespace skybuffer {

using Json = nlohmann::ordered_json;

inline constexpr const char* kModelFormatVersion = "1";

inline Json config_to_json(const TrainConfig& cfg) {
    return Json{{"n_trees", cfg.n_trees},
                {"max_depth", cfg.max_depth},
                {"learning_rate", cfg.learning_rate},
                {"l2_reg", cfg.l2_reg},
                {"min_split_gain", cfg.min_split_gain},
                {"min_child_hessian", cfg.min_child_hessian},
                {"positive_class_weight", cfg.positive_class_weight},
                {"n_bins", cfg.n_bins},
                {"seed", cfg.seed}};
}

inline TrainConfig config_from_json(const Json& j) {
    TrainConfig cfg;
    cfg.n_trees = j.at("n_trees").get<int>();
    cfg.max_depth = j.at("max_depth").get<int>();
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.l2_reg = j.at("l2_reg").get<double>();
    cfg.min_split_gain = j.at("min_split_gain").get<double>();
    cfg.min_child_hessian = j.at("min_child_hessian").get<double>();
    cfg.positive_class_weight = j.at("positive_class_weight").get<double>();
    cfg.n_bins = j.at("n_bins").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

inline std::string serialize_model(const BoosterModel& model) {
    Json trees = Json::array();
    for (const auto& tree : model.trees) {
        Json nodes = Json::array();
        for (const auto& n : tree.nodes) {
            if (n.leaf) {
                nodes.push_back(Json{{"weight", n.weight}});
            } else {
                nodes.push_back(Json{{"feature", n.feature},
                                     {"threshold", n.threshold},
                                     {"left", n.left},
                                     {"right", n.right}});
            }
        }
        trees.push_back(std::move(nodes));
    }
    Json doc{{"format_version", kModelFormatVersion},
             {"kind", "booster"},
             {"base_score", model.base_score},
             {"config", config_to_json(model.config)},
             {"feature_names", model.feature_names},
             {"trees", std::move(trees)}};
    return doc.dump(2) + "\n";
}

inline BoosterModel deserialize_model(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("model document is not valid: ") + e.what());
    }
    if (!doc.contains("format_version") || doc["format_version"] != kModelFormatVersion)
        throw SchemaError("unknown model format version");
    if (!doc.contains("kind") || doc["kind"] != "booster")
        throw SchemaError("document is not a booster model");
    try {
        BoosterModel model;
        model.base_score = doc.at("base_score").get<double>();
        model.config = config_from_json(doc.at("config"));
        model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        for (const auto& jt : doc.at("trees")) {
            Tree tree;
            for (const auto& jn : jt) {
                TreeNode n;
                if (jn.contains("feature")) {
                    n.leaf = false;
                    n.feature = jn.at("feature").get<int>();
                    n.threshold = jn.at("threshold").get<double>();
                    n.left = jn.at("left").get<int>();
                    n.right = jn.at("right").get<int>();
                } else {
                    n.weight = jn.at("weight").get<double>();
                }
                tree.nodes.push_back(n);
            }
            model.trees.push_back(std::move(tree));
        }
        return model;
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("truncated or malformed model document: ") + e.what());
    }
}

inline std::string serialize_linear_model(const LinearModel& model,
                                          const std::vector<std::string>& feature_names) {
    Json doc{{"format_version", kModelFormatVersion},
             {"kind", "logistic"},
             {"intercept", model.intercept},
             {"weights", model.weights},
             {"feature_names", feature_names}};
    return doc.dump(2) + "\n";
}

inline LinearModel deserialize_linear_model(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("model document is not valid: ") + e.what());
    }
    if (!doc.contains("format_version") || doc["format_version"] != kModelFormatVersion)
        throw SchemaError("unknown model format version");
    if (!doc.contains("kind") || doc["kind"] != "logistic")
        throw SchemaError("document is not a logistic model");
    LinearModel model;
    model.intercept = doc.at("intercept").get<double>();
    model.weights = doc.at("weights").get<std::vector<double>>();
    return model;
}

inline void save_text_file(const std::string& text, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path);
    out << text;
}

inline std::string load_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace skybuffer
