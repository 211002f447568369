#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ifcps/linalg.hpp"
#include "ifcps/rng.hpp"
#include "ifcps/trajectory.hpp"

namespace ifcps {

enum class ActionKind { Continuous, Discrete };

struct EnvSpec {
    std::string name;
    std::size_t state_dim = 0;  // n
    std::size_t action_dim = 0; // stored action entries (1 for a discrete index)
    ActionKind action_kind = ActionKind::Continuous;
    std::size_t num_actions = 0; // |U| for discrete plants, 0 otherwise
    std::size_t ctrl_dim = 0;    // continuous control channels feeding the plant
    double dt = 0.0;
    int horizon = 0; // nominal episode length in steps
    std::vector<std::string> constraint_labels;
    // Per-control-channel range; poisoning scales off (hi - lo). Empty for
    // discrete plants.
    std::vector<std::pair<double, double>> action_range;

    std::size_t num_constraints() const { return constraint_labels.size(); }
};

// Expert controllers may carry internal state (e.g. an integral term);
// reset() is called once per rollout.
class Expert {
public:
    virtual ~Expert() = default;
    virtual void reset() {}
    virtual FlatVec action(const FlatVec& x) = 0; // stored-action format
};

class Environment {
public:
    virtual ~Environment() = default;

    const EnvSpec& spec() const { return spec_; }

    // One discrete-time update with a stored action (index for discrete
    // plants). Throws ShapeError on dimension mismatch, NumericsError on
    // non-finite input.
    FlatVec step(const FlatVec& x, const FlatVec& u) const;

    // Plant update in the continuous control channels.
    virtual FlatVec step_ctrl(const FlatVec& x, const FlatVec& ctrl) const = 0;

    // Analytic Jacobians of step_ctrl: A = df/dx (n x n), B = df/dctrl (n x m).
    virtual void dynamics_jacobians(const FlatVec& x, const FlatVec& ctrl,
                                    DenseMat& A, DenseMat& B) const = 0;

    // g_k(x) for every constraint; safe iff all <= 0.
    virtual FlatVec constraint_values(const FlatVec& x) const = 0;

    // Gradient rows d g_k / dx, K x n.
    virtual DenseMat constraint_gradients(const FlatVec& x) const = 0;

    // Physical control vector for a discrete action index. Throws for
    // continuous plants.
    virtual FlatVec ctrl_of_action(int action) const;

    virtual std::unique_ptr<Expert> make_expert() const = 0;

    virtual FlatVec sample_initial_state(Rng& rng) const = 0;

    // Single expert query from a fresh (zero-state) expert.
    FlatVec expert_action(const FlatVec& x) const;

    // Gradient-normalized margin to the nearest constraint boundary;
    // negative when x is outside the safe set.
    double signed_distance(const FlatVec& x) const;

    // Max over states and constraints of g_k(x_t); trajectory safe iff <= 0.
    double max_violation(const Trajectory& traj) const;

    // Maps a stored action to the plant's control channels.
    FlatVec ctrl_of(const FlatVec& u) const;

protected:
    EnvSpec spec_;
};

std::vector<std::string> registered_envs();
std::unique_ptr<Environment> make_env(const std::string& name);

// Expert rollout of the env's nominal horizon from x0 (T+1 state/action pairs).
Trajectory expert_rollout(const Environment& env, const FlatVec& x0);

// N expert demonstrations from seeded random initial states; every
// demonstration satisfies max_violation <= 0 (unsafe rollouts are resampled,
// at most 10 attempts each, then DatasetError).
Dataset generate_dataset(const Environment& env, int n_demos, std::uint64_t seed);

// Corrupts ceil(rate * N) uniformly chosen demonstrations' actions in place
// of the recorded ones; states are left untouched. Sets poison_labels.
Dataset poison_dataset(const Environment& env, const Dataset& data, double rate,
                       FaultModel fault, std::uint64_t seed);

} // namespace ifcps
