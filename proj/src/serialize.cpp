#include "ped/serialize.hpp"

#include <algorithm>
#include <cmath>

#include "ped/error.hpp"

namespace ped::json {

namespace {

[[noreturn]] void bad_field(const std::string &field, const std::string &what) {
    throw Error(ErrorCode::ParseError, "field \"" + field + "\": " + what);
}

const Json &require(const Json &j, const std::string &key, const std::string &path) {
    if (!j.is_object())
        bad_field(path.empty() ? "<root>" : path, "expected an object");
    auto it = j.find(key);
    if (it == j.end())
        bad_field(path.empty() ? key : path + "." + key, "missing");
    return *it;
}

template <typename T> T number(const Json &j, const std::string &field) {
    if constexpr (std::is_floating_point_v<T>) {
        if (!j.is_number())
            bad_field(field, "expected a number");
    } else if constexpr (std::is_unsigned_v<T>) {
        if (!j.is_number_unsigned())
            bad_field(field, "expected a non-negative integer");
    } else {
        if (!j.is_number_integer())
            bad_field(field, "expected an integer");
    }
    return j.get<T>();
}

} // namespace

Json parse(const std::string &text, const std::string &source) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw Error(ErrorCode::ParseError, e.what(), source, e.byte);
    }
}

Json to_json(const energy::DependenceProfile &profile) {
    Json units = Json::array();
    for (std::size_t i = 0; i < profile.size(); ++i)
        units.push_back({{"index", profile.indices[i]},
                         {"dependence", profile.values[i]},
                         {"arg_pair", {profile.arg_pairs[i].first, profile.arg_pairs[i].second}}});
    return {{"units", units},
            {"variant", energy::to_string(profile.variant)},
            {"n_used", profile.n_used},
            {"seed", profile.seed},
            {"unit_count", profile.unit_count},
            {"stage", profile.stage}};
}

energy::DependenceProfile profile_from_json(const Json &j) {
    energy::DependenceProfile p;
    const Json &units = require(j, "units", "");
    if (!units.is_array())
        bad_field("units", "expected an array");
    for (std::size_t i = 0; i < units.size(); ++i) {
        const std::string at = "units[" + std::to_string(i) + "]";
        const Json &u = units[i];
        p.indices.push_back(number<int>(require(u, "index", at), at + ".index"));
        if (p.indices.back() < 0)
            bad_field(at + ".index", "must be >= 0");
        const double v = number<double>(require(u, "dependence", at), at + ".dependence");
        if (!std::isfinite(v))
            bad_field(at + ".dependence", "must be finite");
        p.values.push_back(v);
        if (auto it = u.find("arg_pair"); it != u.end()) {
            if (!it->is_array() || it->size() != 2)
                bad_field(at + ".arg_pair", "expected [i, j]");
            p.arg_pairs.emplace_back(number<int>((*it)[0], at + ".arg_pair[0]"),
                                     number<int>((*it)[1], at + ".arg_pair[1]"));
        } else {
            p.arg_pairs.emplace_back(1, 1);
        }
    }
    if (p.values.empty())
        bad_field("units", "must not be empty");
    if (auto it = j.find("variant"); it != j.end()) {
        if (!it->is_string())
            bad_field("variant", "expected \"v\" or \"u\"");
        try {
            p.variant = energy::parse_variant(it->get<std::string>());
        } catch (const Error &) {
            bad_field("variant", "expected \"v\" or \"u\"");
        }
    }
    if (auto it = j.find("n_used"); it != j.end())
        p.n_used = number<std::size_t>(*it, "n_used");
    if (auto it = j.find("seed"); it != j.end())
        p.seed = number<std::uint64_t>(*it, "seed");
    if (auto it = j.find("stage"); it != j.end())
        p.stage = number<int>(*it, "stage");
    const int implied = *std::max_element(p.indices.begin(), p.indices.end()) + 1;
    p.unit_count = implied;
    if (auto it = j.find("unit_count"); it != j.end()) {
        p.unit_count = number<int>(*it, "unit_count");
        if (p.unit_count < implied)
            bad_field("unit_count", "smaller than the largest unit index + 1");
    }
    std::vector<int> sorted = p.indices;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        bad_field("units", "duplicate unit index");
    return p;
}

Json to_json(const cluster1d::Clustering &c, const std::vector<std::size_t> &heads) {
    return {{"k", c.k}, {"assignment", c.assignment}, {"wcss", c.wcss}, {"heads", heads}};
}

Json to_json(const PruningPolicy &policy) {
    Json alphas = Json::array();
    for (auto a : policy.alphas)
        alphas.push_back(static_cast<int>(a));
    return {{"alphas", alphas}, {"active_set", policy.active_set()}, {"stage", policy.stage}};
}

PruningPolicy policy_from_json(const Json &j) {
    PruningPolicy policy;
    const Json &alphas = require(j, "alphas", "");
    if (!alphas.is_array() || alphas.empty())
        bad_field("alphas", "expected a non-empty array");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        const int a = number<int>(alphas[i], "alphas[" + std::to_string(i) + "]");
        if (a != 0 && a != 1)
            bad_field("alphas[" + std::to_string(i) + "]", "must be 0 or 1");
        policy.alphas.push_back(static_cast<std::uint8_t>(a));
    }
    if (auto it = j.find("stage"); it != j.end())
        policy.stage = number<int>(*it, "stage");
    if (policy.active_count() < 1)
        bad_field("alphas", "at least one unit must stay active");
    if (auto it = j.find("active_set"); it != j.end()) {
        if (!it->is_array())
            bad_field("active_set", "expected an array");
        std::vector<int> listed;
        for (std::size_t i = 0; i < it->size(); ++i)
            listed.push_back(number<int>((*it)[i], "active_set[" + std::to_string(i) + "]"));
        if (listed != policy.active_set())
            bad_field("active_set", "disagrees with alphas");
    }
    return policy;
}

Json to_json(const Selection &selection) {
    Json j = to_json(selection.policy);
    j["strategy"] = to_string(selection.strategy);
    j["k"] = selection.k;
    j["seed"] = selection.seed;
    if (selection.clustering) {
        j["head_mode"] = cluster1d::to_string(selection.head_mode);
        j["clustering"] = to_json(*selection.clustering, selection.heads);
    } else {
        j["clustering"] = nullptr;
    }
    return j;
}

Json to_json(const StageReport &report, bool include_timing) {
    Json j = {{"stage", report.stage},
              {"active_before", report.active_before},
              {"k", report.selection.k},
              {"strategy", to_string(report.selection.strategy)},
              {"profile", to_json(report.profile)},
              {"selection", to_json(report.selection)},
              {"policy", to_json(report.selection.policy)},
              {"train_accuracy", report.metrics.train_accuracy},
              {"test_accuracy", report.metrics.test_accuracy},
              {"param_count", report.param_count},
              {"flop_count", report.flop_count}};
    if (include_timing)
        j["wall_time"] = report.wall_time;
    return j;
}

Json to_json(const toynet::SkipNetConfig &cfg) {
    return {{"units", cfg.units},
            {"input_dim", cfg.input_dim},
            {"width", cfg.width},
            {"growth", cfg.growth},
            {"classes", cfg.classes},
            {"composition", toynet::to_string(cfg.composition)},
            {"activation", cfg.activation == toynet::Activation::Relu ? "relu" : "identity"},
            {"seed", cfg.seed}};
}

Json to_json(const toynet::ToyConfig &cfg) {
    return {{"net", to_json(cfg.net)},
            {"data", {{"kind", toynet::to_string(cfg.data_kind)}, {"samples", cfg.samples}, {"noise", cfg.noise}}},
            {"train",
             {{"epochs", cfg.train.epochs},
              {"lr", cfg.train.lr},
              {"batch_size", cfg.train.batch_size},
              {"seed", cfg.train.seed}}},
            {"retrain_fraction", cfg.retrain_fraction},
            {"train_fraction", cfg.train_fraction},
            {"validation_fraction", cfg.validation_fraction},
            {"label_source", toynet::to_string(cfg.label_source)}};
}

} // namespace ped::json
