#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ifcps/config.hpp"
#include "ifcps/errors.hpp"
#include "ifcps/runner.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            seeds.push_back(v);
        } catch (const std::exception&) {
            throw ifcps::ConfigError("--seeds: '" + item + "' is not a seed");
        }
    }
    if (seeds.empty()) throw ifcps::ConfigError("--seeds: empty list");
    return seeds;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Behavior-cloned controllers on analytic plants, with per-demonstration "
        "failure attribution"};
    app.set_version_flag("--version", std::string(ifcps::kVersion));

    std::string config_path, seeds_csv, out_override, plot_dir;
    app.add_option("config", config_path, "run configuration file (flat JSON object)");
    app.add_option("--seeds", seeds_csv, "comma-separated seed override, e.g. 0,1,2");
    app.add_option("--out", out_override, "output directory override");
    app.add_option("--emit-plot-data", plot_dir,
                   "write columnar plot files for a completed run directory, then exit");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!plot_dir.empty()) {
            ifcps::emit_plot_data(plot_dir);
            return 0;
        }
        if (config_path.empty()) {
            std::cerr << "error: a config path is required (see --help)" << std::endl;
            return 1;
        }
        ifcps::RunConfig cfg = ifcps::load_config(config_path);
        if (!seeds_csv.empty()) cfg.protocol_cfg.seeds = parse_seed_list(seeds_csv);
        if (!out_override.empty()) cfg.out_dir = out_override;
        ifcps::run(cfg);
        return 0;
    } catch (const ifcps::ConfigError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    }
}
