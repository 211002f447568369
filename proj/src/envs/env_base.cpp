#include "ifcps/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ifcps/errors.hpp"

namespace ifcps {

std::string to_string(FaultModel fault) {
    switch (fault) {
        case FaultModel::ActionNoise: return "action_noise";
        case FaultModel::ActionOffset: return "action_offset";
        case FaultModel::ActionFlip: return "action_flip";
    }
    return "action_noise";
}

FaultModel fault_from_string(const std::string& name) {
    if (name == "action_noise") return FaultModel::ActionNoise;
    if (name == "action_offset") return FaultModel::ActionOffset;
    if (name == "action_flip") return FaultModel::ActionFlip;
    throw ConfigError("unknown fault model '" + name +
                      "' (expected action_noise, action_offset, or action_flip)");
}

FlatVec Environment::ctrl_of_action(int) const {
    throw ShapeError(spec_.name + ": not a discrete-action plant");
}

FlatVec Environment::ctrl_of(const FlatVec& u) const {
    if (u.size() != spec_.action_dim) throw ShapeError(spec_.name + ": action length mismatch");
    if (spec_.action_kind == ActionKind::Discrete) {
        const int idx = static_cast<int>(std::lround(u[0]));
        if (idx < 0 || idx >= static_cast<int>(spec_.num_actions)) {
            throw ShapeError(spec_.name + ": action index out of range");
        }
        return ctrl_of_action(idx);
    }
    return u;
}

FlatVec Environment::step(const FlatVec& x, const FlatVec& u) const {
    if (x.size() != spec_.state_dim) throw ShapeError(spec_.name + ": state length mismatch");
    if (!all_finite(x) || !all_finite(u)) throw NumericsError(spec_.name + ": non-finite input");
    return step_ctrl(x, ctrl_of(u));
}

FlatVec Environment::expert_action(const FlatVec& x) const {
    auto expert = make_expert();
    expert->reset();
    return expert->action(x);
}

double Environment::signed_distance(const FlatVec& x) const {
    const FlatVec g = constraint_values(x);
    const DenseMat G = constraint_gradients(x);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double gn = std::sqrt(kern::dot(G.row(k), G.row(k), G.cols()));
        best = std::min(best, -g[k] / gn);
    }
    return best;
}

double Environment::max_violation(const Trajectory& traj) const {
    if (traj.states.empty()) throw ShapeError("max_violation: empty trajectory");
    double worst = -std::numeric_limits<double>::infinity();
    for (const FlatVec& x : traj.states) {
        const FlatVec g = constraint_values(x);
        for (double v : g) worst = std::max(worst, v);
    }
    return worst;
}

Trajectory expert_rollout(const Environment& env, const FlatVec& x0) {
    auto expert = env.make_expert();
    expert->reset();
    Trajectory tr;
    const int steps = env.spec().horizon;
    tr.states.reserve(static_cast<std::size_t>(steps) + 1);
    tr.actions.reserve(static_cast<std::size_t>(steps) + 1);
    FlatVec x = x0;
    tr.states.push_back(x);
    for (int t = 0; t < steps; ++t) {
        FlatVec u = expert->action(x);
        tr.actions.push_back(u);
        x = env.step(x, u);
        tr.states.push_back(x);
    }
    tr.actions.push_back(expert->action(x));
    return tr;
}

Dataset generate_dataset(const Environment& env, int n_demos, std::uint64_t seed) {
    if (n_demos < 1) throw DatasetError("generate_dataset: need at least one demonstration");
    const RngKey key = RngKey(seed).child("dataset");
    Dataset data;
    data.env = env.spec().name;
    data.state_dim = env.spec().state_dim;
    data.action_dim = env.spec().action_dim;
    data.dt = env.spec().dt;
    data.demos.reserve(static_cast<std::size_t>(n_demos));
    for (int i = 0; i < n_demos; ++i) {
        bool accepted = false;
        for (int attempt = 0; attempt < 10; ++attempt) {
            Rng rng = key.child(static_cast<std::uint64_t>(i))
                          .child(static_cast<std::uint64_t>(attempt))
                          .stream();
            const FlatVec x0 = env.sample_initial_state(rng);
            Trajectory tr = expert_rollout(env, x0);
            if (env.max_violation(tr) <= 0.0) {
                data.demos.push_back(std::move(tr));
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            throw DatasetError(env.spec().name +
                               ": expert failed to produce a safe rollout in 10 attempts");
        }
    }
    return data;
}

Dataset poison_dataset(const Environment& env, const Dataset& data, double rate,
                       FaultModel fault, std::uint64_t seed) {
    if (data.demos.empty()) throw DatasetError("poison_dataset: empty dataset");
    if (!(rate > 0.0 && rate < 1.0)) throw DatasetError("poison_dataset: rate must be in (0, 1)");
    const auto n = data.demos.size();
    const auto count = static_cast<std::size_t>(
        std::ceil(rate * static_cast<double>(n)));
    if (count == 0) throw DatasetError("poison_dataset: nothing to poison at this rate");

    Rng pick = RngKey(seed).child("poison-select").stream();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    pick.shuffle(order);
    order.resize(count);
    std::sort(order.begin(), order.end());

    Dataset out = data;
    out.poison_labels.assign(n, 0);
    const auto& spec = env.spec();
    // The injected fault is coherent: one Gaussian draw per poisoning event,
    // applied to every corrupted action (a common miscalibration across the
    // faulty recordings). Per-step jitter would mostly average away under
    // behavior cloning and leaves nothing attributable to the demonstration.
    // The injected fault is coherent: one Gaussian draw per poisoning event,
    // applied to every corrupted action (a common miscalibration across the
    // faulty recordings). Per-step jitter would mostly average away under
    // behavior cloning and leaves nothing attributable to the demonstration.
    FlatVec bias;
    if (spec.action_kind == ActionKind::Continuous) {
        Rng bias_rng = RngKey(seed).child("poison-bias").stream();
        bias.resize(spec.ctrl_dim);
        for (std::size_t d = 0; d < bias.size(); ++d) {
            const double span = spec.action_range[d].second - spec.action_range[d].first;
            bias[d] = 0.5 * span * bias_rng.normal();
        }
    }
    for (std::size_t idx : order) {
        out.poison_labels[idx] = 1;
        Rng rng = RngKey(seed).child("poison-corrupt").child(idx).stream();
        for (FlatVec& u : out.demos[idx].actions) {
            if (spec.action_kind == ActionKind::Discrete) {
                const auto nu = static_cast<int>(spec.num_actions);
                const int a = static_cast<int>(std::lround(u[0]));
                switch (fault) {
                    case FaultModel::ActionNoise:
                        u[0] = static_cast<double>(rng.uniform_int(spec.num_actions));
                        break;
                    case FaultModel::ActionOffset:
                        u[0] = static_cast<double>((a + (nu + 1) / 2) % nu);
                        break;
                    case FaultModel::ActionFlip:
                        u[0] = static_cast<double>((a + 1) % nu);
                        break;
                }
            } else {
                for (std::size_t d = 0; d < u.size(); ++d) {
                    const double span =
                        spec.action_range[d].second - spec.action_range[d].first;
                    switch (fault) {
                        case FaultModel::ActionNoise: u[d] += bias[d]; break;
                        case FaultModel::ActionOffset: u[d] += 0.5 * span; break;
                        case FaultModel::ActionFlip: u[d] = -u[d]; break;
                    }
                }
            }
        }
    }
    return out;
}

} // namespace ifcps
