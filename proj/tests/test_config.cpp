#include <doctest.h>

#include "ifcps/config.hpp"

using namespace ifcps;

TEST_CASE("minimal config fills documented defaults") {
    const RunConfig cfg = parse_config(R"({"env":"pendulum","protocol":"diagnosis"})");
    CHECK(cfg.env == "pendulum");
    CHECK(cfg.protocol == Protocol::Diagnosis);
    CHECK(!cfg.rates_given);
    const ProtocolConfig& pc = cfg.protocol_cfg;
    CHECK(pc.n_demos == 100);
    CHECK(pc.rates == std::vector<double>{0.05, 0.10, 0.15, 0.20});
    CHECK(pc.seeds == std::vector<std::uint64_t>{0, 1, 2});
    CHECK(pc.fault == FaultModel::ActionNoise);
    CHECK(pc.removal_budget == 0.30);
    CHECK(pc.train.learning_rate == 1e-3);
    CHECK(pc.train.batch_size == 128);
    CHECK(pc.train.patience == 10);
    CHECK(pc.train.val_fraction == 0.1);
    CHECK(pc.train.hidden == 64);
    CHECK(pc.influence.gamma == 0.99);
    CHECK(pc.influence.beta == 10.0);
    CHECK(pc.influence.horizon == 20);
    CHECK(pc.influence.lissa_rounds == 5);
    CHECK(pc.influence.damping == 0.01);
    CHECK(!pc.influence.scale.has_value());
}

TEST_CASE("config rejects unknown keys, bad ranges, and unknown names") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"env":"pendulum","protocol":"score","gamm":0.9})"),
                         doctest::Contains("gamm"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"env":"pendulum","protocol":"score","gamma":1.5})"),
                         doctest::Contains("gamma"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"env":"gym","protocol":"score"})"),
                         doctest::Contains("quadrotor"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"env":"pendulum","protocol":"dance"})"),
                         doctest::Contains("dance"), ConfigError);
    CHECK_THROWS_AS(parse_config("not json at all"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"([1,2,3])"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"protocol":"score"})"), ConfigError); // env required
    CHECK_THROWS_AS(parse_config(R"({"env":"pendulum"})"), ConfigError);
    CHECK_THROWS_AS(
        parse_config(R"({"env":"pendulum","protocol":"score","rates":[0.5,1.2]})"),
        ConfigError);
    CHECK_THROWS_AS(
        parse_config(R"({"env":"pendulum","protocol":"score","fault":"gremlins"})"),
        ConfigError);
    CHECK_THROWS_AS(
        parse_config(R"({"env":"pendulum","protocol":"score","batch_size":0})"), ConfigError);
}

TEST_CASE("config hash tracks every field") {
    const std::string base = R"({"env":"pendulum","protocol":"score"})";
    const std::uint64_t h0 = config_hash(parse_config(base));
    CHECK(config_hash(parse_config(base)) == h0); // stable

    const char* variants[] = {
        R"({"env":"cartpole","protocol":"score"})",
        R"({"env":"pendulum","protocol":"ablation"})",
        R"({"env":"pendulum","protocol":"score","gamma":0.95})",
        R"({"env":"pendulum","protocol":"score","seeds":[7]})",
        R"({"env":"pendulum","protocol":"score","out_dir":"elsewhere"})",
        R"({"env":"pendulum","protocol":"score","lissa_scale":0.25})",
    };
    for (const char* v : variants) {
        CHECK(config_hash(parse_config(v)) != h0);
    }
}

TEST_CASE("explicit settings land in the protocol config") {
    const RunConfig cfg = parse_config(R"({
        "env": "cstr", "protocol": "curation", "out_dir": "/tmp/x",
        "rates": [0.1], "seeds": [3, 4], "fault": "action_flip",
        "n_demos": 12, "removal_budget": 0.5, "test_rollouts": 2,
        "learning_rate": 0.01, "batch_size": 16, "max_epochs": 7,
        "patience": 0, "val_fraction": 0.25, "hidden": 8,
        "gamma": 0.9, "beta": 4.0, "horizon": 6, "lissa_rounds": 2,
        "lissa_damping": 0.1, "lissa_scale": 0.5, "lissa_batch": 32,
        "lissa_repeats": 2})");
    CHECK(cfg.rates_given);
    CHECK(cfg.out_dir == "/tmp/x");
    CHECK(cfg.protocol_cfg.fault == FaultModel::ActionFlip);
    CHECK(cfg.protocol_cfg.seeds == std::vector<std::uint64_t>{3, 4});
    CHECK(cfg.protocol_cfg.train.patience == 0);
    CHECK(cfg.protocol_cfg.influence.scale == 0.5);
    CHECK(cfg.protocol_cfg.influence.lissa_repeats == 2);
}
