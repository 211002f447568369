#include "ifcps/runner.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ifcps/errors.hpp"
#include "ifcps/protocols.hpp"
#include "ifcps/serialize.hpp"

namespace fs = std::filesystem;

namespace ifcps {

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DatasetError("cannot open for writing: " + path);
    f << content;
    if (!f) throw DatasetError("write failed: " + path);
}

std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string cell_dir_name(double rate, std::uint64_t seed) {
    if (rate <= 0.0) return "cell_clean_seed" + std::to_string(seed);
    return "cell_rate" + short_num(rate) + "_seed" + std::to_string(seed);
}

std::string traj_json(const Trajectory& tr) {
    std::string out = "{\"states\":[";
    for (std::size_t t = 0; t < tr.states.size(); ++t) {
        if (t) out += ',';
        out += '[';
        for (std::size_t i = 0; i < tr.states[t].size(); ++i) {
            if (i) out += ',';
            out += format_real(tr.states[t][i]);
        }
        out += ']';
    }
    out += "],\"actions\":[";
    for (std::size_t t = 0; t < tr.actions.size(); ++t) {
        if (t) out += ',';
        out += '[';
        for (std::size_t i = 0; i < tr.actions[t].size(); ++i) {
            if (i) out += ',';
            out += format_real(tr.actions[t][i]);
        }
        out += ']';
    }
    out += "],\"diverged\":";
    out += tr.diverged ? "true" : "false";
    out += '}';
    return out;
}

std::string stats_json(const SeedStats& st) {
    std::string out = "{\"per_seed\":[";
    for (std::size_t i = 0; i < st.per_seed.size(); ++i) {
        if (i) out += ',';
        out += format_real(st.per_seed[i]);
    }
    out += "],\"mean\":" + format_real(st.mean) + ",\"std\":" + format_real(st.stdev) + "}";
    return out;
}

std::string csv_stats(const SeedStats& st) {
    return format_real(st.mean) + "," + format_real(st.stdev);
}

nlohmann::json parse_json_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DatasetError("missing input: " + path);
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(path + ": " + e.what());
    }
}

} // namespace

void write_influence_csv(const std::string& path, const InfluenceReport& report,
                         const std::vector<std::uint8_t>& labels) {
    std::string out =
        "demo_id,poisoned,score_standard,score_safety,score_trajectory,"
        "score_propagated,score_combined\n";
    for (std::size_t i = 0; i < report.combined.size(); ++i) {
        out += std::to_string(i) + ",";
        out += labels.empty() ? "" : (labels[i] ? "1" : "0");
        out += "," + format_real(report.standard[i]);
        out += "," + format_real(report.safety[i]);
        out += "," + format_real(report.trajectory[i]);
        out += "," + format_real(report.propagated[i]);
        out += "," + format_real(report.combined[i]);
        out += "\n";
    }
    write_file(path, out);
}

void write_influence_sidecar(const std::string& path, const InfluenceReport& report) {
    const InfluenceConfig& c = report.config;
    std::string out = "{\"test_id\":\"" + report.test_id + "\",";
    out += "\"beta\":" + format_real(c.beta) + ",";
    out += "\"gamma\":" + format_real(c.gamma) + ",";
    out += "\"horizon\":" + std::to_string(c.horizon) + ",";
    out += "\"lissa_rounds\":" + std::to_string(c.lissa_rounds) + ",";
    out += "\"lissa_damping\":" + format_real(c.damping) + ",";
    out += "\"lissa_scale\":" + (c.scale ? format_real(*c.scale) : std::string("null")) + ",";
    out += "\"lissa_batch\":" + std::to_string(c.lissa_batch) + ",";
    out += "\"lissa_repeats\":" + std::to_string(c.lissa_repeats) + ",";
    out += "\"normalization\":{";
    auto mm = [](const MinMax& r) {
        return "{\"min\":" + format_real(r.lo) + ",\"max\":" + format_real(r.hi) + "}";
    };
    out += "\"safety\":" + mm(report.norm_safety) + ",";
    out += "\"trajectory\":" + mm(report.norm_trajectory) + ",";
    out += "\"propagated\":" + mm(report.norm_propagated) + "}}\n";
    write_file(path, out);
}

void run(const RunConfig& cfg) {
    const auto env = make_env(cfg.env);
    const ProtocolConfig& pc = cfg.protocol_cfg;
    if (pc.seeds.empty()) throw ConfigError("run: seeds must be non-empty");
    fs::create_directories(cfg.out_dir);
    const auto t0 = std::chrono::steady_clock::now();

    const CellObserver observe = [&](double rate, std::uint64_t seed, const ScoredCell& cell) {
        const fs::path dir = fs::path(cfg.out_dir) / cell_dir_name(rate, seed);
        fs::create_directories(dir);
        save_dataset((dir / "dataset.json").string(), cell.data);
        save_checkpoint((dir / "checkpoint.json").string(), cell.params,
                        env->spec().action_kind);
        write_influence_csv((dir / "influence.csv").string(), cell.report,
                            cell.data.poison_labels);
        write_influence_sidecar((dir / "influence_meta.json").string(), cell.report);
    };

    std::string raw = "{}";
    switch (cfg.protocol) {
        case Protocol::Diagnosis: {
            const DiagnosisResult res = run_diagnosis(*env, pc, observe);
            std::string csv =
                "env,rate,random_mean,random_std,standard_if_mean,standard_if_std,"
                "ifcps_mean,ifcps_std\n";
            for (std::size_t r = 0; r < res.rates.size(); ++r) {
                csv += res.env + "," + format_real(res.rates[r]);
                for (std::size_t m = 0; m < res.methods.size(); ++m) {
                    csv += "," + csv_stats(res.cells[m][r]);
                }
                csv += "\n";
            }
            write_file((fs::path(cfg.out_dir) / "diagnosis.csv").string(), csv);
            raw = "{\"auroc\":{";
            for (std::size_t m = 0; m < res.methods.size(); ++m) {
                if (m) raw += ',';
                raw += "\"" + res.methods[m] + "\":{";
                for (std::size_t r = 0; r < res.rates.size(); ++r) {
                    if (r) raw += ',';
                    raw += "\"" + short_num(res.rates[r]) + "\":" + stats_json(res.cells[m][r]);
                }
                raw += '}';
            }
            raw += "}}";
            break;
        }
        case Protocol::Safety: {
            const SafetyAttrResult res = run_safety_attr(*env, pc, observe);
            std::string csv = "env,method,rho_mean,rho_std\n";
            raw = "{\"rho\":{";
            for (std::size_t m = 0; m < res.methods.size(); ++m) {
                csv += res.env + "," + res.methods[m] + "," + csv_stats(res.rho[m]) + "\n";
                if (m) raw += ',';
                raw += "\"" + res.methods[m] + "\":" + stats_json(res.rho[m]);
            }
            raw += "}}";
            write_file((fs::path(cfg.out_dir) / "safety.csv").string(), csv);
            break;
        }
        case Protocol::Ablation: {
            const AblationResult res = run_ablation(*env, pc, observe);
            std::string csv = "env,variant,auroc_mean,auroc_std\n";
            raw = "{\"auroc\":{";
            for (std::size_t v = 0; v < res.variants.size(); ++v) {
                csv += res.env + "," + res.variants[v] + "," + csv_stats(res.auroc[v]) + "\n";
                if (v) raw += ',';
                raw += "\"" + res.variants[v] + "\":" + stats_json(res.auroc[v]);
            }
            raw += "}}";
            write_file((fs::path(cfg.out_dir) / "ablation.csv").string(), csv);
            break;
        }
        case Protocol::Curation: {
            std::string csv =
                "env,seed,poisoned_total,removed,detected,score_min,score_max,"
                "expert_violation,poisoned_violation,curated_violation,"
                "poisoned_tracking,curated_tracking\n";
            raw = "{\"per_seed\":[";
            bool first = true;
            for (std::uint64_t seed : pc.seeds) {
                const CurationResult res = run_curation(*env, pc, seed, observe);
                const fs::path dir = fs::path(cfg.out_dir) / cell_dir_name(0.20, seed);
                save_checkpoint((dir / "checkpoint_curated.json").string(),
                                res.curated_params, env->spec().action_kind);
                std::string trajs = "{\"env\":\"" + res.env + "\",";
                trajs += "\"expert\":" + traj_json(res.expert_demo) + ",";
                trajs += "\"poisoned\":" + traj_json(res.poisoned_demo) + ",";
                trajs += "\"curated\":" + traj_json(res.curated_demo) + "}\n";
                write_file((dir / "curation_trajectories.json").string(), trajs);

                csv += res.env + "," + std::to_string(seed) + "," +
                       std::to_string(res.poisoned_total) + "," + std::to_string(res.removed) +
                       "," + std::to_string(res.detected) + "," + format_real(res.score_min) +
                       "," + format_real(res.score_max) + "," +
                       format_real(res.expert_violation) + "," +
                       format_real(res.poisoned_violation) + "," +
                       format_real(res.curated_violation) + "," +
                       format_real(res.poisoned_tracking) + "," +
                       format_real(res.curated_tracking) + "\n";
                if (!first) raw += ',';
                first = false;
                raw += "{\"seed\":" + std::to_string(seed) +
                       ",\"detected\":" + std::to_string(res.detected) +
                       ",\"poisoned_total\":" + std::to_string(res.poisoned_total) +
                       ",\"poisoned_violation\":" + format_real(res.poisoned_violation) +
                       ",\"curated_violation\":" + format_real(res.curated_violation) + "}";
            }
            raw += "]}";
            write_file((fs::path(cfg.out_dir) / "curation.csv").string(), csv);
            break;
        }
        case Protocol::Score: {
            const double rate = cfg.rates_given ? pc.rates.front() : 0.0;
            const ScoredCell cell = score_cell(*env, rate, pc.seeds.front(), pc);
            save_dataset((fs::path(cfg.out_dir) / "dataset.json").string(), cell.data);
            save_checkpoint((fs::path(cfg.out_dir) / "checkpoint.json").string(), cell.params,
                            env->spec().action_kind);
            write_influence_csv((fs::path(cfg.out_dir) / "influence.csv").string(), cell.report,
                                cell.data.poison_labels);
            write_influence_sidecar((fs::path(cfg.out_dir) / "influence_meta.json").string(),
                                    cell.report);
            raw = "{\"n_demos\":" + std::to_string(cell.data.size()) + "}";
            break;
        }
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    std::string manifest = "{\"config\":" + canonical_config_json(cfg) + ",";
    manifest += "\"config_hash\":\"" + std::string(hash_hex) + "\",";
    manifest += "\"version\":\"" + std::string(kVersion) + "\",";
    manifest += "\"wall_time_s\":" + format_real(wall) + ",";
    manifest += "\"raw\":" + raw + "}\n";
    write_file((fs::path(cfg.out_dir) / "manifest.json").string(), manifest);
}

namespace {

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DatasetError("missing input: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(std::move(cells));
    }
    return rows;
}

Trajectory traj_from_json(const nlohmann::json& j) {
    Trajectory tr;
    for (const auto& s : j.at("states")) tr.states.push_back(s.get<FlatVec>());
    for (const auto& a : j.at("actions")) tr.actions.push_back(a.get<FlatVec>());
    tr.diverged = j.value("diverged", false);
    return tr;
}

// Columns: t, state components, then every constraint value (boundary at 0).
void write_traj_dat(const std::string& path, const Environment& env, const Trajectory& tr) {
    std::string out = "# t";
    for (std::size_t i = 0; i < env.spec().state_dim; ++i) out += " x" + std::to_string(i);
    for (const auto& label : env.spec().constraint_labels) out += " g_" + label;
    out += "\n";
    for (std::size_t t = 0; t < tr.states.size(); ++t) {
        out += std::to_string(t);
        for (double v : tr.states[t]) out += " " + format_real(v);
        for (double g : env.constraint_values(tr.states[t])) out += " " + format_real(g);
        out += "\n";
    }
    write_file(path, out);
}

void write_scores_dat(const std::string& csv_path, const std::string& out_path) {
    const auto rows = read_csv(csv_path);
    std::string out = "# demo_id score_combined poisoned\n";
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        out += row.at(0) + " " + row.at(6) + " " + (row.at(1).empty() ? "?" : row.at(1)) + "\n";
    }
    write_file(out_path, out);
}

} // namespace

void emit_plot_data(const std::string& run_dir) {
    const fs::path root(run_dir);
    const nlohmann::json manifest = parse_json_file((root / "manifest.json").string());
    const auto& conf = manifest.at("config");
    const std::string protocol = conf.at("protocol").get<std::string>();
    const std::string env_name = conf.at("env").get<std::string>();
    const fs::path plot = root / "plot";
    fs::create_directories(plot);

    if (protocol == "diagnosis") {
        const auto rows = read_csv((root / "diagnosis.csv").string());
        const char* methods[] = {"random", "standard_if", "ifcps"};
        for (int m = 0; m < 3; ++m) {
            std::string out = "# rate auroc_mean auroc_std\n";
            for (std::size_t r = 1; r < rows.size(); ++r) {
                const auto& row = rows[r];
                out += row.at(1) + " " + row.at(2 + 2 * static_cast<std::size_t>(m)) + " " +
                       row.at(3 + 2 * static_cast<std::size_t>(m)) + "\n";
            }
            write_file((plot / ("auroc_" + std::string(methods[m]) + ".dat")).string(), out);
        }
    } else if (protocol == "curation") {
        const auto env = make_env(env_name);
        const auto seed = conf.at("seeds").at(0).get<std::uint64_t>();
        const fs::path dir = root / cell_dir_name(0.20, seed);
        const nlohmann::json trajs =
            parse_json_file((dir / "curation_trajectories.json").string());
        write_traj_dat((plot / "traj_expert.dat").string(), *env,
                       traj_from_json(trajs.at("expert")));
        write_traj_dat((plot / "traj_poisoned.dat").string(), *env,
                       traj_from_json(trajs.at("poisoned")));
        write_traj_dat((plot / "traj_curated.dat").string(), *env,
                       traj_from_json(trajs.at("curated")));
    } else if (protocol == "score") {
        write_scores_dat((root / "influence.csv").string(), (plot / "scores.dat").string());
    } else {
        // safety / ablation: scatter per scored cell
        bool any = false;
        if (fs::exists(root)) {
            for (const auto& entry : fs::directory_iterator(root)) {
                if (!entry.is_directory()) continue;
                const std::string name = entry.path().filename().string();
                if (name.rfind("cell_", 0) != 0) continue;
                const fs::path csv = entry.path() / "influence.csv";
                if (!fs::exists(csv)) continue;
                write_scores_dat(csv.string(), (plot / ("scores_" + name + ".dat")).string());
                any = true;
            }
        }
        if (!any) {
            throw DatasetError("missing inputs: no cell_*/influence.csv under " + run_dir);
        }
    }
}

} // namespace ifcps
