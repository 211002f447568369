#include "ifcps/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ifcps/errors.hpp"
#include "ifcps/serialize.hpp"

namespace ifcps {

std::string to_string(Protocol p) {
    switch (p) {
        case Protocol::Diagnosis: return "diagnosis";
        case Protocol::Curation: return "curation";
        case Protocol::Safety: return "safety";
        case Protocol::Ablation: return "ablation";
        case Protocol::Score: return "score";
    }
    return "score";
}

Protocol protocol_from_string(const std::string& name) {
    if (name == "diagnosis") return Protocol::Diagnosis;
    if (name == "curation") return Protocol::Curation;
    if (name == "safety") return Protocol::Safety;
    if (name == "ablation") return Protocol::Ablation;
    if (name == "score") return Protocol::Score;
    throw ConfigError("unknown protocol '" + name +
                      "' (expected diagnosis, curation, safety, ablation, or score)");
}

namespace {

const char* const kKnownKeys[] = {
    "env",           "protocol",     "out_dir",       "rates",        "seeds",
    "fault",         "n_demos",      "removal_budget", "test_rollouts", "learning_rate",
    "batch_size",    "max_epochs",   "patience",      "val_fraction", "hidden",
    "gamma",         "beta",         "horizon",       "lissa_rounds", "lissa_damping",
    "lissa_scale",   "lissa_batch",  "lissa_repeats"};

template <class T>
T get_number(const nlohmann::json& j, const std::string& key) {
    if (!j.at(key).is_number()) throw ConfigError("config key '" + key + "' must be a number");
    return j.at(key).get<T>();
}

void require_range(bool ok, const std::string& key, const std::string& bounds) {
    if (!ok) throw ConfigError("config key '" + key + "' out of range (" + bounds + ")");
}

} // namespace

RunConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");

    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find_if(std::begin(kKnownKeys), std::end(kKnownKeys),
                         [&](const char* k) { return key == k; }) == std::end(kKnownKeys)) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }

    RunConfig cfg;
    if (!j.contains("env")) throw ConfigError("config key 'env' is required");
    cfg.env = j.at("env").get<std::string>();
    const auto valid = registered_envs();
    if (std::find(valid.begin(), valid.end(), cfg.env) == valid.end()) {
        std::string names;
        for (const auto& n : valid) {
            if (!names.empty()) names += ", ";
            names += n;
        }
        throw ConfigError("unknown environment '" + cfg.env + "' (valid: " + names + ")");
    }
    if (!j.contains("protocol")) throw ConfigError("config key 'protocol' is required");
    cfg.protocol = protocol_from_string(j.at("protocol").get<std::string>());
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();

    ProtocolConfig& pc = cfg.protocol_cfg;
    if (j.contains("rates")) {
        cfg.rates_given = true;
        pc.rates.clear();
        for (const auto& r : j.at("rates")) {
            const double v = r.get<double>();
            require_range(v > 0.0 && v < 1.0, "rates", "each in (0, 1)");
            pc.rates.push_back(v);
        }
        if (pc.rates.empty()) throw ConfigError("config key 'rates' must be non-empty");
    }
    if (j.contains("seeds")) {
        pc.seeds.clear();
        for (const auto& s : j.at("seeds")) pc.seeds.push_back(s.get<std::uint64_t>());
        if (pc.seeds.empty()) throw ConfigError("config key 'seeds' must be non-empty");
    }
    if (j.contains("fault")) pc.fault = fault_from_string(j.at("fault").get<std::string>());
    if (j.contains("n_demos")) {
        pc.n_demos = get_number<int>(j, "n_demos");
        require_range(pc.n_demos >= 1, "n_demos", ">= 1");
    }
    if (j.contains("removal_budget")) {
        pc.removal_budget = get_number<double>(j, "removal_budget");
        require_range(pc.removal_budget > 0.0 && pc.removal_budget < 1.0, "removal_budget",
                      "in (0, 1)");
    }
    if (j.contains("test_rollouts")) {
        pc.test_rollouts = get_number<int>(j, "test_rollouts");
        require_range(pc.test_rollouts >= 1, "test_rollouts", ">= 1");
    }

    TrainConfig& tc = pc.train;
    if (j.contains("learning_rate")) {
        tc.learning_rate = get_number<double>(j, "learning_rate");
        require_range(tc.learning_rate > 0.0, "learning_rate", "> 0");
    }
    if (j.contains("batch_size")) {
        tc.batch_size = get_number<int>(j, "batch_size");
        require_range(tc.batch_size >= 1, "batch_size", ">= 1");
    }
    if (j.contains("max_epochs")) {
        tc.max_epochs = get_number<int>(j, "max_epochs");
        require_range(tc.max_epochs >= 1, "max_epochs", ">= 1");
    }
    if (j.contains("patience")) {
        tc.patience = get_number<int>(j, "patience");
        require_range(tc.patience >= 0, "patience", ">= 0");
    }
    if (j.contains("val_fraction")) {
        tc.val_fraction = get_number<double>(j, "val_fraction");
        require_range(tc.val_fraction > 0.0 && tc.val_fraction < 1.0, "val_fraction",
                      "in (0, 1)");
    }
    if (j.contains("hidden")) {
        const int h = get_number<int>(j, "hidden");
        require_range(h >= 1, "hidden", ">= 1");
        tc.hidden = static_cast<std::size_t>(h);
    }

    InfluenceConfig& ic = pc.influence;
    if (j.contains("gamma")) {
        ic.gamma = get_number<double>(j, "gamma");
        require_range(ic.gamma > 0.0 && ic.gamma < 1.0, "gamma", "in (0, 1)");
    }
    if (j.contains("beta")) {
        ic.beta = get_number<double>(j, "beta");
        require_range(ic.beta > 0.0, "beta", "> 0");
    }
    if (j.contains("horizon")) {
        ic.horizon = get_number<int>(j, "horizon");
        require_range(ic.horizon >= 1, "horizon", ">= 1");
    }
    if (j.contains("lissa_rounds")) {
        ic.lissa_rounds = get_number<int>(j, "lissa_rounds");
        require_range(ic.lissa_rounds >= 1, "lissa_rounds", ">= 1");
    }
    if (j.contains("lissa_damping")) {
        ic.damping = get_number<double>(j, "lissa_damping");
        require_range(ic.damping >= 0.0, "lissa_damping", ">= 0");
    }
    if (j.contains("lissa_scale")) {
        const double s = get_number<double>(j, "lissa_scale");
        require_range(s > 0.0, "lissa_scale", "> 0");
        ic.scale = s;
    }
    if (j.contains("lissa_batch")) {
        ic.lissa_batch = get_number<int>(j, "lissa_batch");
        require_range(ic.lissa_batch >= 1, "lissa_batch", ">= 1");
    }
    if (j.contains("lissa_repeats")) {
        ic.lissa_repeats = get_number<int>(j, "lissa_repeats");
        require_range(ic.lissa_repeats >= 1, "lissa_repeats", ">= 1");
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string canonical_config_json(const RunConfig& cfg) {
    const ProtocolConfig& pc = cfg.protocol_cfg;
    const TrainConfig& tc = pc.train;
    const InfluenceConfig& ic = pc.influence;
    std::string out = "{";
    out += "\"env\":\"" + cfg.env + "\",";
    out += "\"protocol\":\"" + to_string(cfg.protocol) + "\",";
    out += "\"out_dir\":\"" + cfg.out_dir + "\",";
    out += "\"rates\":[";
    for (std::size_t i = 0; i < pc.rates.size(); ++i) {
        if (i) out += ',';
        out += format_real(pc.rates[i]);
    }
    out += "],\"seeds\":[";
    for (std::size_t i = 0; i < pc.seeds.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(pc.seeds[i]);
    }
    out += "],";
    out += "\"fault\":\"" + to_string(pc.fault) + "\",";
    out += "\"n_demos\":" + std::to_string(pc.n_demos) + ",";
    out += "\"removal_budget\":" + format_real(pc.removal_budget) + ",";
    out += "\"test_rollouts\":" + std::to_string(pc.test_rollouts) + ",";
    out += "\"learning_rate\":" + format_real(tc.learning_rate) + ",";
    out += "\"batch_size\":" + std::to_string(tc.batch_size) + ",";
    out += "\"max_epochs\":" + std::to_string(tc.max_epochs) + ",";
    out += "\"patience\":" + std::to_string(tc.patience) + ",";
    out += "\"val_fraction\":" + format_real(tc.val_fraction) + ",";
    out += "\"hidden\":" + std::to_string(tc.hidden) + ",";
    out += "\"gamma\":" + format_real(ic.gamma) + ",";
    out += "\"beta\":" + format_real(ic.beta) + ",";
    out += "\"horizon\":" + std::to_string(ic.horizon) + ",";
    out += "\"lissa_rounds\":" + std::to_string(ic.lissa_rounds) + ",";
    out += "\"lissa_damping\":" + format_real(ic.damping) + ",";
    out += "\"lissa_scale\":" + (ic.scale ? format_real(*ic.scale) : std::string("null")) + ",";
    out += "\"lissa_batch\":" + std::to_string(ic.lissa_batch) + ",";
    out += "\"lissa_repeats\":" + std::to_string(ic.lissa_repeats) + "}";
    return out;
}

std::uint64_t config_hash(const RunConfig& cfg) {
    return detail::fnv1a(canonical_config_json(cfg));
}

} // namespace ifcps
