#pragma once

#include <cstdint>
#include <vector>

#include "ifcps/env.hpp"
#include "ifcps/mlp.hpp"
#include "ifcps/trajectory.hpp"

namespace ifcps {

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 128;
    int max_epochs = 500;
    int patience = 10;
    double val_fraction = 0.1;
    std::size_t hidden = 64;
    std::uint64_t seed = 0;
};

// Demonstrations flattened to state-action pairs, demo-major and time-minor,
// with provenance kept on each pair.
struct FlatDataset {
    std::vector<Sample> samples;
    std::size_t size() const { return samples.size(); } // M
};

FlatDataset flatten(const Dataset& data);

LossKind loss_kind_for(const EnvSpec& spec);

// Mean per-pair loss over the flattened dataset.
double empirical_risk(const MlpParams& params, const FlatDataset& flat, LossKind kind);

// Optional record of a training run.
struct TrainTrace {
    double initial_train_risk = 0.0;
    std::vector<double> train_risks; // end of each epoch
    std::vector<double> val_risks;
    double best_val = 0.0;
    std::vector<std::size_t> val_demos; // demonstrations held out
};

// Minibatch Adam with early stopping on a held-out validation split taken at
// demonstration granularity (whole demos held out). Returns the parameter
// snapshot with the best recorded validation loss. Deterministic per seed.
MlpParams train(const Dataset& data, const TrainConfig& cfg, LossKind kind, MlpShape shape,
                TrainTrace* trace = nullptr);

// Convenience wrapper deriving shape and loss kind from the environment.
MlpParams train_for_env(const Environment& env, const Dataset& data, const TrainConfig& cfg,
                        TrainTrace* trace = nullptr);

// Closed-loop rollout of the controller; discrete heads take the argmax
// logit. On a non-finite state the trajectory is truncated and flagged.
Trajectory rollout(const Environment& env, const MlpParams& params, const FlatVec& x0,
                   int steps);

// Controller action in stored-action format.
FlatVec policy_action(const Environment& env, const MlpParams& params, const FlatVec& x);

// Rollout whose actions are replaced by a (stateful, reset) expert queried
// along the visited states: the reference labels test-side losses compare to.
Trajectory make_test_trajectory(const Environment& env, const MlpParams& params,
                                const FlatVec& x0, int steps);

} // namespace ifcps
