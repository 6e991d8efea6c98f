#include "semadv/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace semadv {

using nlohmann::json;

FineTuneMode mode_from_string(const std::string& s) {
    if (s == "latent") return FineTuneMode::latent;
    if (s == "model") return FineTuneMode::model;
    if (s == "both") return FineTuneMode::both;
    throw std::invalid_argument("config: mode must be latent|model|both, got '" + s + "'");
}

BoxSetting box_from_string(const std::string& s) {
    if (s == "white") return BoxSetting::white;
    if (s == "black") return BoxSetting::black;
    throw std::invalid_argument("config: box must be white|black, got '" + s + "'");
}

MaskStrategy strategy_from_string(const std::string& s) {
    if (s == "source") return MaskStrategy::source;
    if (s == "target") return MaskStrategy::target;
    if (s == "sum") return MaskStrategy::sum;
    throw std::invalid_argument("config: strategy must be source|target|sum, got '" + s + "'");
}

MapMethod method_from_string(const std::string& s) {
    if (s == "gradcam") return MapMethod::gradcam;
    if (s == "simplefullgrad") return MapMethod::simplefullgrad;
    throw std::invalid_argument("config: method must be gradcam|simplefullgrad, got '" + s + "'");
}

std::string to_string(FineTuneMode m) {
    switch (m) {
        case FineTuneMode::latent: return "latent";
        case FineTuneMode::model: return "model";
        case FineTuneMode::both: return "both";
    }
    return "?";
}
std::string to_string(BoxSetting b) { return b == BoxSetting::white ? "white" : "black"; }
std::string to_string(MaskStrategy s) {
    switch (s) {
        case MaskStrategy::source: return "source";
        case MaskStrategy::target: return "target";
        case MaskStrategy::sum: return "sum";
    }
    return "?";
}
std::string to_string(MapMethod m) { return m == MapMethod::gradcam ? "gradcam" : "simplefullgrad"; }

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& known, const std::string& scope) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (known.find(it.key()) == known.end())
            throw std::invalid_argument("config: unknown key '" + (scope.empty() ? it.key() : scope + "." + it.key()) + "'");
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument("config: field '" + key + "' has the wrong type");
    }
}

}  // namespace

void CampaignConfig::validate() const {
    if (attack != "st" && attack != "lm") throw std::invalid_argument("config: attack must be 'st' or 'lm'");
    if (count < 1) throw std::invalid_argument("config: count must be >= 1");
    if (jobs < 1) throw std::invalid_argument("config: jobs must be >= 1");
    if (kid_subset_size < 2) throw std::invalid_argument("config: kid_subset_size must be >= 2");
    if (kid_subsets < 1) throw std::invalid_argument("config: kid_subsets must be >= 1");
    if (dataset_dir.empty()) throw std::invalid_argument("config: dataset is required");
    if (denoiser_path.empty()) throw std::invalid_argument("config: denoiser is required");
    if (target_path.empty()) throw std::invalid_argument("config: target is required");
    if (extractor_path.empty()) throw std::invalid_argument("config: extractor is required");
    if (attack == "st") {
        if (st.box == BoxSetting::black && surrogate_path.empty())
            throw std::invalid_argument("config: surrogate is required for black-box attacks");
        st.validate();
    } else {
        lm.validate();
    }
}

std::string CampaignConfig::setting_label() const {
    if (!setting.empty()) return setting;
    if (attack == "st") return "st_" + to_string(st.box) + "_" + to_string(st.mode);
    return "lm_" + to_string(lm.method) + "_" + to_string(lm.strategy);
}

CampaignConfig parse_config_text(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: parse error: ") + e.what());
    }
    if (!root.is_object()) throw std::invalid_argument("config: top level must be an object");

    reject_unknown_keys(root,
                        {"seed", "setting", "dataset", "denoiser", "target", "surrogate", "extractor", "attack",
                         "count", "jobs", "kid_subset_size", "kid_subsets", "st", "lm"},
                        "");

    CampaignConfig cfg;
    cfg.seed_defaulted = !root.contains("seed");
    cfg.seed = get_or<uint64_t>(root, "seed", cfg.seed);
    cfg.setting = get_or<std::string>(root, "setting", "");
    cfg.dataset_dir = get_or<std::string>(root, "dataset", "");
    cfg.denoiser_path = get_or<std::string>(root, "denoiser", "");
    cfg.target_path = get_or<std::string>(root, "target", "");
    cfg.surrogate_path = get_or<std::string>(root, "surrogate", "");
    cfg.extractor_path = get_or<std::string>(root, "extractor", "");
    cfg.attack = get_or<std::string>(root, "attack", cfg.attack);
    cfg.count = get_or<int>(root, "count", cfg.count);
    cfg.jobs = get_or<int>(root, "jobs", cfg.jobs);
    cfg.kid_subset_size = get_or<int>(root, "kid_subset_size", cfg.kid_subset_size);
    cfg.kid_subsets = get_or<int>(root, "kid_subsets", cfg.kid_subsets);

    if (root.contains("st")) {
        const json& st = root.at("st");
        reject_unknown_keys(st,
                            {"lambda", "mode", "box", "steps_df", "steps_ft", "steps_sp", "max_rounds",
                             "extension_blocks", "lr_latent", "lr_model", "invert_latent"},
                            "st");
        cfg.st.lambda_weight = get_or<double>(st, "lambda", cfg.st.lambda_weight);
        if (!(cfg.st.lambda_weight > 0)) throw std::invalid_argument("config: field 'lambda' must be > 0");
        if (st.contains("mode")) cfg.st.mode = mode_from_string(st.at("mode").get<std::string>());
        if (st.contains("box")) cfg.st.box = box_from_string(st.at("box").get<std::string>());
        cfg.st.steps_df = get_or<int>(st, "steps_df", cfg.st.steps_df);
        cfg.st.steps_ft = get_or<int>(st, "steps_ft", cfg.st.steps_ft);
        cfg.st.steps_sp = get_or<int>(st, "steps_sp", cfg.st.steps_sp);
        cfg.st.max_rounds = get_or<int>(st, "max_rounds", cfg.st.max_rounds);
        cfg.st.extension_blocks = get_or<int>(st, "extension_blocks", cfg.st.extension_blocks);
        cfg.st.lr_latent = get_or<double>(st, "lr_latent", cfg.st.lr_latent);
        cfg.st.lr_model = get_or<double>(st, "lr_model", cfg.st.lr_model);
        cfg.st.invert_latent = get_or<bool>(st, "invert_latent", cfg.st.invert_latent);
    }
    if (root.contains("lm")) {
        const json& lm = root.at("lm");
        reject_unknown_keys(lm, {"strategy", "method", "gamma", "delta_init", "steps_df", "steps_sp"}, "lm");
        if (lm.contains("strategy")) cfg.lm.strategy = strategy_from_string(lm.at("strategy").get<std::string>());
        if (lm.contains("method")) cfg.lm.method = method_from_string(lm.at("method").get<std::string>());
        cfg.lm.gamma = get_or<double>(lm, "gamma", cfg.lm.gamma);
        if (!(cfg.lm.gamma > 0)) throw std::invalid_argument("config: field 'gamma' must be > 0");
        cfg.lm.delta_init = get_or<double>(lm, "delta_init", cfg.lm.delta_init);
        cfg.lm.steps_df = get_or<int>(lm, "steps_df", cfg.lm.steps_df);
        cfg.lm.steps_sp = get_or<int>(lm, "steps_sp", cfg.lm.steps_sp);
    }

    cfg.st.seed = cfg.seed;
    cfg.lm.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

CampaignConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str());
}

std::string serialize_config(const CampaignConfig& cfg) {
    json root;
    root["seed"] = cfg.seed;
    if (!cfg.setting.empty()) root["setting"] = cfg.setting;
    root["dataset"] = cfg.dataset_dir;
    root["denoiser"] = cfg.denoiser_path;
    root["target"] = cfg.target_path;
    if (!cfg.surrogate_path.empty()) root["surrogate"] = cfg.surrogate_path;
    root["extractor"] = cfg.extractor_path;
    root["attack"] = cfg.attack;
    root["count"] = cfg.count;
    root["jobs"] = cfg.jobs;
    root["kid_subset_size"] = cfg.kid_subset_size;
    root["kid_subsets"] = cfg.kid_subsets;
    root["st"] = {{"lambda", cfg.st.lambda_weight},
                  {"mode", to_string(cfg.st.mode)},
                  {"box", to_string(cfg.st.box)},
                  {"steps_df", cfg.st.steps_df},
                  {"steps_ft", cfg.st.steps_ft},
                  {"steps_sp", cfg.st.steps_sp},
                  {"max_rounds", cfg.st.max_rounds},
                  {"extension_blocks", cfg.st.extension_blocks},
                  {"lr_latent", cfg.st.lr_latent},
                  {"lr_model", cfg.st.lr_model},
                  {"invert_latent", cfg.st.invert_latent}};
    root["lm"] = {{"strategy", to_string(cfg.lm.strategy)}, {"method", to_string(cfg.lm.method)},
                  {"gamma", cfg.lm.gamma},                  {"delta_init", cfg.lm.delta_init},
                  {"steps_df", cfg.lm.steps_df},            {"steps_sp", cfg.lm.steps_sp}};
    return root.dump(2);
}

}  // namespace semadv
