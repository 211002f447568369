#include "ifcps/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ifcps/errors.hpp"

namespace ifcps {

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

void append_vec(std::string& out, const FlatVec& v) {
    out += '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_real(v[i]);
    }
    out += ']';
}

void append_vec_list(std::string& out, const std::vector<FlatVec>& vs) {
    out += '[';
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i) out += ',';
        append_vec(out, vs[i]);
    }
    out += ']';
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DatasetError("cannot open for writing: " + path);
    f << content;
    if (!f) throw DatasetError("write failed: " + path);
}

nlohmann::json parse_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DatasetError("cannot open: " + path);
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(path + ": " + e.what());
    }
}

} // namespace

void save_dataset(const std::string& path, const Dataset& data) {
    std::string out = "{\"env\":\"" + data.env + "\",";
    out += "\"n\":" + std::to_string(data.state_dim) + ",";
    out += "\"m\":" + std::to_string(data.action_dim) + ",";
    out += "\"dt\":" + format_real(data.dt) + ",";
    out += "\"demos\":[";
    for (std::size_t i = 0; i < data.demos.size(); ++i) {
        if (i) out += ',';
        out += "{\"states\":";
        append_vec_list(out, data.demos[i].states);
        out += ",\"actions\":";
        append_vec_list(out, data.demos[i].actions);
        out += '}';
    }
    out += ']';
    if (!data.poison_labels.empty()) {
        out += ",\"poison_labels\":[";
        for (std::size_t i = 0; i < data.poison_labels.size(); ++i) {
            if (i) out += ',';
            out += data.poison_labels[i] ? "true" : "false";
        }
        out += ']';
    }
    out += "}\n";
    write_file(path, out);
}

Dataset load_dataset(const std::string& path) {
    const nlohmann::json j = parse_file(path);
    Dataset data;
    try {
        data.env = j.at("env").get<std::string>();
        data.state_dim = j.at("n").get<std::size_t>();
        data.action_dim = j.at("m").get<std::size_t>();
        data.dt = j.at("dt").get<double>();
        for (const auto& d : j.at("demos")) {
            Trajectory tr;
            for (const auto& s : d.at("states")) tr.states.push_back(s.get<FlatVec>());
            for (const auto& a : d.at("actions")) tr.actions.push_back(a.get<FlatVec>());
            data.demos.push_back(std::move(tr));
        }
        if (j.contains("poison_labels")) {
            for (const auto& b : j.at("poison_labels")) {
                data.poison_labels.push_back(b.get<bool>() ? 1 : 0);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(path + ": " + e.what());
    }
    if (data.demos.empty()) throw DatasetError(path + ": empty dataset");
    if (!data.poison_labels.empty() && data.poison_labels.size() != data.demos.size()) {
        throw DatasetError(path + ": poison_labels length mismatch");
    }
    return data;
}

void save_checkpoint(const std::string& path, const MlpParams& params, ActionKind kind) {
    const MlpShape s = params.shape();
    std::string out = "{\"arch\":{";
    out += "\"n\":" + std::to_string(s.in) + ",";
    out += "\"hidden\":" + std::to_string(s.hidden) + ",";
    out += "\"m\":" + std::to_string(s.out) + ",";
    out += std::string("\"action_kind\":\"") +
           (kind == ActionKind::Discrete ? "discrete" : "continuous") + "\"},";
    out += "\"flat_params\":";
    append_vec(out, flatten(params));
    out += "}\n";
    write_file(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
    const nlohmann::json j = parse_file(path);
    try {
        const auto& arch = j.at("arch");
        MlpShape s;
        s.in = arch.at("n").get<std::size_t>();
        s.hidden = arch.at("hidden").get<std::size_t>();
        s.out = arch.at("m").get<std::size_t>();
        const std::string kind = arch.at("action_kind").get<std::string>();
        Checkpoint ck;
        ck.action_kind = kind == "discrete" ? ActionKind::Discrete : ActionKind::Continuous;
        ck.params = unflatten(s, j.at("flat_params").get<FlatVec>());
        return ck;
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(path + ": " + e.what());
    }
}

} // namespace ifcps
