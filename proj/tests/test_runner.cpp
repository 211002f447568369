#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ifcps/runner.hpp"
#include "ifcps/serialize.hpp"

using namespace ifcps;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s) n += c == '\n' ? 1 : 0;
    return n;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

RunConfig tiny_score_config(const std::string& out) {
    RunConfig cfg = parse_config(R"({
        "env": "pendulum", "protocol": "score", "n_demos": 5, "seeds": [0],
        "max_epochs": 8, "patience": 3, "hidden": 16, "test_rollouts": 2,
        "lissa_batch": 64})");
    cfg.out_dir = out;
    return cfg;
}

} // namespace

TEST_CASE("score run writes a five-row report with combined scores in range") {
    TempDir dir("ifcps_run_score");
    run(tiny_score_config(dir.path.string()));

    const std::string csv = slurp(dir.path / "influence.csv");
    CHECK(count_lines(csv) == 6); // header + five demos
    CHECK(csv.rfind("demo_id,poisoned,score_standard,score_safety,score_trajectory,"
                    "score_propagated,score_combined",
                    0) == 0);
    std::istringstream rows(csv);
    std::string line;
    std::getline(rows, line);
    while (std::getline(rows, line)) {
        const auto last_comma = line.find_last_of(',');
        const double combined = std::stod(line.substr(last_comma + 1));
        CHECK(combined >= 0.0);
        CHECK(combined <= 1.0);
    }

    // Dataset and checkpoint artifacts reload.
    const Dataset data = load_dataset((dir.path / "dataset.json").string());
    CHECK(data.size() == 5);
    const Checkpoint ck = load_checkpoint((dir.path / "checkpoint.json").string());
    CHECK(ck.params.shape().in == 3);

    const std::string manifest = slurp(dir.path / "manifest.json");
    CHECK(manifest.find("config_hash") != std::string::npos);
    CHECK(manifest.find("wall_time_s") != std::string::npos);
}

TEST_CASE("identical configs reproduce byte-identical result files") {
    TempDir a("ifcps_run_a"), b("ifcps_run_b");
    RunConfig ca = tiny_score_config(a.path.string());
    RunConfig cb = tiny_score_config(b.path.string());
    cb.out_dir = b.path.string();
    run(ca);
    run(cb);
    CHECK(slurp(a.path / "influence.csv") == slurp(b.path / "influence.csv"));
    CHECK(slurp(a.path / "dataset.json") == slurp(b.path / "dataset.json"));
    CHECK(slurp(a.path / "checkpoint.json") == slurp(b.path / "checkpoint.json"));
    CHECK(slurp(a.path / "influence_meta.json") == slurp(b.path / "influence_meta.json"));
}

TEST_CASE("plot emission for score runs and the missing-input error") {
    TempDir dir("ifcps_run_plot");
    run(tiny_score_config(dir.path.string()));
    emit_plot_data(dir.path.string());
    const std::string dat = slurp(dir.path / "plot" / "scores.dat");
    CHECK(count_lines(dat) == 6); // comment header + five rows

    TempDir empty("ifcps_run_empty");
    fs::create_directories(empty.path);
    CHECK_THROWS_AS(emit_plot_data(empty.path.string()), DatasetError);
}

TEST_CASE("diagnosis run emits per-method curves and cell artifacts") {
    TempDir dir("ifcps_run_diag");
    RunConfig cfg = parse_config(R"({
        "env": "pendulum", "protocol": "diagnosis", "n_demos": 6, "seeds": [0],
        "rates": [0.2, 0.4], "max_epochs": 6, "patience": 2, "hidden": 16,
        "test_rollouts": 2, "lissa_batch": 32})");
    cfg.out_dir = dir.path.string();
    run(cfg);
    const std::string csv = slurp(dir.path / "diagnosis.csv");
    CHECK(count_lines(csv) == 3); // header + two rates
    CHECK(fs::exists(dir.path / "cell_rate0.2_seed0" / "dataset.json"));
    CHECK(fs::exists(dir.path / "cell_rate0.4_seed0" / "influence.csv"));

    emit_plot_data(dir.path.string());
    for (const char* m : {"random", "standard_if", "ifcps"}) {
        const std::string dat = slurp(dir.path / "plot" / (std::string("auroc_") + m + ".dat"));
        CHECK(count_lines(dat) == 3); // header + one row per rate
    }
}

TEST_CASE("curation run writes trajectories usable by the plot emitter") {
    TempDir dir("ifcps_run_cur");
    RunConfig cfg = parse_config(R"({
        "env": "quadrotor", "protocol": "curation", "n_demos": 8, "seeds": [1],
        "max_epochs": 6, "patience": 2, "hidden": 16, "test_rollouts": 2,
        "lissa_batch": 32})");
    cfg.out_dir = dir.path.string();
    run(cfg);
    CHECK(fs::exists(dir.path / "curation.csv"));
    CHECK(fs::exists(dir.path / "cell_rate0.2_seed1" / "checkpoint_curated.json"));
    emit_plot_data(dir.path.string());
    for (const char* t : {"traj_expert.dat", "traj_poisoned.dat", "traj_curated.dat"}) {
        const std::string dat = slurp(dir.path / "plot" / t);
        CHECK(count_lines(dat) >= 2);
        CHECK(dat.rfind("# t x0", 0) == 0);
    }
}
