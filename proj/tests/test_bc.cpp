#include <doctest.h>

#include <cmath>

#include "ifcps/bc.hpp"
#include "ifcps/rng.hpp"
#include "support/oracles.hpp"

using namespace ifcps;

namespace {

// Synthetic dataset whose actions come from a random teacher network; the
// student has the same architecture, so the data is exactly realizable.
Dataset teacher_dataset(const MlpShape& shape, int demos, int steps, std::uint64_t seed,
                        double label_noise = 0.0) {
    Rng rng(seed);
    const MlpParams teacher = random_init(shape, rng);
    Dataset data;
    data.env = "teacher";
    data.state_dim = shape.in;
    data.action_dim = shape.out;
    data.dt = 1.0;
    for (int d = 0; d < demos; ++d) {
        Trajectory tr;
        for (int t = 0; t <= steps; ++t) {
            FlatVec x(shape.in);
            for (double& v : x) v = rng.uniform(-1.0, 1.0);
            tr.states.push_back(x);
            FlatVec u = mlp_forward(teacher, x);
            for (double& v : u) v += label_noise * rng.normal();
            tr.actions.push_back(std::move(u));
        }
        data.demos.push_back(std::move(tr));
    }
    return data;
}

} // namespace

TEST_CASE("flatten counts pairs and keeps provenance") {
    Dataset data;
    data.state_dim = 2;
    data.action_dim = 1;
    Rng rng(1);
    const int lengths[2] = {3, 4}; // T values; pairs are T+1
    for (int d = 0; d < 2; ++d) {
        Trajectory tr;
        for (int t = 0; t <= lengths[d]; ++t) {
            tr.states.push_back(FlatVec{rng.uniform(), rng.uniform()});
            tr.actions.push_back(FlatVec{rng.uniform()});
        }
        data.demos.push_back(tr);
    }
    const FlatDataset flat = flatten(data);
    CHECK(flat.size() == 9);
    std::size_t j = 0;
    for (int d = 0; d < 2; ++d) {
        for (int t = 0; t <= lengths[d]; ++t, ++j) {
            CHECK(flat.samples[j].demo == d);
            CHECK(flat.samples[j].step == t);
            CHECK(flat.samples[j].x == data.demos[static_cast<std::size_t>(d)]
                                           .states[static_cast<std::size_t>(t)]);
        }
    }

    Dataset one;
    one.demos.push_back(Trajectory{{FlatVec{1.0}}, {FlatVec{2.0}}, false});
    CHECK(flatten(one).size() == 1);
    CHECK_THROWS_AS(flatten(Dataset{}), DatasetError);
}

TEST_CASE("empirical risk: zero at perfect fit, ln 2 for uniform logits, mean-invariant") {
    const MlpShape shape{2, 4, 2};
    Rng rng(2);
    const MlpParams p = random_init(shape, rng);
    Dataset data;
    for (int d = 0; d < 2; ++d) {
        Trajectory tr;
        for (int t = 0; t < 3; ++t) {
            FlatVec x = {rng.uniform(), rng.uniform()};
            tr.states.push_back(x);
            tr.actions.push_back(mlp_forward(p, x));
        }
        data.demos.push_back(tr);
    }
    const FlatDataset flat = flatten(data);
    CHECK(empirical_risk(p, flat, LossKind::Mse) == doctest::Approx(0.0).epsilon(1e-12));

    // Zero parameters emit logits (0, 0): cross-entropy is ln 2 whatever the label.
    const MlpParams zero(shape);
    FlatDataset ce = flat;
    for (auto& s : ce.samples) s.u = FlatVec{1.0};
    CHECK(empirical_risk(zero, ce, LossKind::CrossEntropy) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));

    FlatDataset doubled = flat;
    doubled.samples.insert(doubled.samples.end(), flat.samples.begin(), flat.samples.end());
    Rng pr(3);
    const MlpParams q = random_init(shape, pr);
    CHECK(empirical_risk(q, doubled, LossKind::Mse) ==
          doctest::Approx(empirical_risk(q, flat, LossKind::Mse)).epsilon(1e-12));
}

TEST_CASE("training fits realizable data and is bitwise deterministic") {
    const MlpShape shape{3, 16, 2};
    const Dataset data = teacher_dataset(shape, 12, 20, 77);
    TrainConfig cfg;
    cfg.batch_size = 16;
    cfg.learning_rate = 3e-3;
    cfg.max_epochs = 400;
    cfg.patience = 60;
    cfg.seed = 5;
    cfg.hidden = 16;
    TrainTrace trace;
    const MlpParams a = train(data, cfg, LossKind::Mse, shape, &trace);
    const MlpParams b = train(data, cfg, LossKind::Mse, shape);
    CHECK(flatten(a) == flatten(b)); // identical bytes

    const FlatDataset flat = flatten(data);
    CHECK(empirical_risk(a, flat, LossKind::Mse) < 1e-3);

    // Training made progress within the first epoch.
    REQUIRE(!trace.train_risks.empty());
    CHECK(trace.train_risks.front() < trace.initial_train_risk);

    // Validation split is at demo granularity.
    CHECK(trace.val_demos.size() == 1); // 10% of 12 demos, at least one
}

TEST_CASE("early stopping restores the best validation snapshot") {
    const MlpShape shape{2, 8, 1};
    const Dataset data = teacher_dataset(shape, 10, 12, 88);
    TrainConfig cfg;
    cfg.max_epochs = 60;
    cfg.patience = 3;
    cfg.seed = 9;
    cfg.hidden = 8;
    TrainTrace trace;
    const MlpParams p = train(data, cfg, LossKind::Mse, shape, &trace);

    double best = 1e300;
    for (double v : trace.val_risks) best = std::min(best, v);
    CHECK(trace.best_val == best);

    // Recompute the returned params' validation risk; must equal the best.
    Dataset val;
    val.state_dim = data.state_dim;
    val.action_dim = data.action_dim;
    for (std::size_t d : trace.val_demos) val.demos.push_back(data.demos[d]);
    CHECK(empirical_risk(p, flatten(val), LossKind::Mse) == trace.best_val);
}

TEST_CASE("patience zero stops at the first non-improving epoch") {
    const MlpShape shape{2, 8, 1};
    // Noisy labels make the validation loss stall quickly.
    const Dataset data = teacher_dataset(shape, 10, 12, 99, 0.5);
    TrainConfig cfg;
    cfg.max_epochs = 500;
    cfg.patience = 0;
    cfg.seed = 4;
    cfg.hidden = 8;
    TrainTrace trace;
    train(data, cfg, LossKind::Mse, shape, &trace);
    REQUIRE(trace.val_risks.size() < 500); // stopped early
    // Every epoch but the last improved on the running best.
    double best = 1e300;
    for (std::size_t e = 0; e + 1 < trace.val_risks.size(); ++e) {
        CHECK(trace.val_risks[e] < best);
        best = std::min(best, trace.val_risks[e]);
    }
    CHECK(trace.val_risks.back() >= best);
}

TEST_CASE("rollout basics: zero controller, zero steps, argmax head") {
    const auto quad = make_env("quadrotor");
    const MlpShape shape{6, 8, 3};
    const MlpParams zero(shape);
    const FlatVec rest = {0.5, -0.5, 2.0, 0.0, 0.0, 0.0};
    const Trajectory tr = rollout(*quad, zero, rest, 10);
    CHECK(!tr.diverged);
    REQUIRE(tr.states.size() == 11);
    CHECK(tr.actions.size() == 11);
    for (const FlatVec& x : tr.states) CHECK(x == rest); // u = 0, v = 0

    const Trajectory t0 = rollout(*quad, zero, rest, 0);
    CHECK(t0.states.size() == 1);
    CHECK(t0.actions.size() == 1);

    const auto cart = make_env("cartpole");
    MlpParams disc(MlpShape{4, 4, 2});
    disc.b2 = {0.2, 0.9};
    CHECK(policy_action(*cart, disc, FlatVec(4, 0.0))[0] == 1.0);
    disc.b2 = {0.9, 0.2};
    CHECK(policy_action(*cart, disc, FlatVec(4, 0.0))[0] == 0.0);
}

TEST_CASE("diverging closed loop is truncated and flagged") {
    const auto quad = make_env("quadrotor");
    MlpParams wild(MlpShape{6, 4, 3});
    for (double& w : wild.W1.data()) w = 1e120;
    for (double& w : wild.W2.data()) w = 1e120;
    wild.b1 = FlatVec(4, 1.0);
    const Trajectory tr = rollout(*quad, wild, FlatVec{1.0, 1.0, 2.0, 0.0, 0.0, 0.0}, 50);
    CHECK(tr.diverged);
    CHECK(tr.states.size() < 51);
    CHECK(tr.states.size() == tr.actions.size());
    for (const FlatVec& x : tr.states) CHECK(all_finite(x));
}

TEST_CASE("test trajectories carry expert reference actions") {
    const auto pend = make_env("pendulum");
    Rng rng(6);
    const MlpParams p = random_init(MlpShape{3, 8, 1}, rng);
    const FlatVec x0 = pend->sample_initial_state(rng);
    const Trajectory test = make_test_trajectory(*pend, p, x0, 15);
    REQUIRE(test.states.size() == 16);
    for (std::size_t t = 0; t < test.states.size(); ++t) {
        CHECK(test.actions[t] == pend->expert_action(test.states[t]));
    }
    // The visited states are the controller's own rollout.
    const Trajectory raw = rollout(*pend, p, x0, 15);
    CHECK(test.states == raw.states);
}

TEST_CASE("behavior cloning on the pendulum keeps nominal rollouts safe") {
    const auto env = make_env("pendulum");
    const Dataset data = generate_dataset(*env, 25, 13);
    TrainConfig cfg;
    cfg.seed = 13;
    cfg.max_epochs = 120;
    const MlpParams p = train_for_env(*env, data, cfg);
    Rng rng(14);
    for (int k = 0; k < 3; ++k) {
        const Trajectory tr = rollout(*env, p, env->sample_initial_state(rng),
                                      env->spec().horizon);
        CHECK(!tr.diverged);
        CHECK(env->max_violation(tr) <= 0.0);
    }
}
