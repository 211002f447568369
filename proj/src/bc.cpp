#include "ifcps/bc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ifcps/errors.hpp"
#include "ifcps/rng.hpp"

namespace ifcps {

FlatDataset flatten(const Dataset& data) {
    if (data.demos.empty()) throw DatasetError("flatten: empty dataset");
    FlatDataset flat;
    for (std::size_t i = 0; i < data.demos.size(); ++i) {
        const Trajectory& tr = data.demos[i];
        for (std::size_t t = 0; t < tr.states.size(); ++t) {
            flat.samples.push_back(Sample{tr.states[t], tr.actions[t],
                                          static_cast<int>(i), static_cast<int>(t)});
        }
    }
    return flat;
}

LossKind loss_kind_for(const EnvSpec& spec) {
    return spec.action_kind == ActionKind::Discrete ? LossKind::CrossEntropy : LossKind::Mse;
}

double empirical_risk(const MlpParams& params, const FlatDataset& flat, LossKind kind) {
    double acc = 0.0;
    for (const Sample& s : flat.samples) acc += sample_loss(params, s.x, s.u, kind);
    return acc / static_cast<double>(flat.samples.size());
}

namespace {

double risk_over(const MlpParams& params, const std::vector<Sample>& samples,
                 const std::vector<std::size_t>& idx, LossKind kind) {
    double acc = 0.0;
    for (std::size_t i : idx) acc += sample_loss(params, samples[i].x, samples[i].u, kind);
    return acc / static_cast<double>(idx.size());
}

} // namespace

MlpParams train(const Dataset& data, const TrainConfig& cfg, LossKind kind, MlpShape shape,
                TrainTrace* trace) {
    if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0)) {
        throw ConfigError("train: val_fraction must be in (0, 1)");
    }
    const FlatDataset flat = flatten(data);
    const auto n_demos = data.demos.size();

    // Demo-granularity split: whole demonstrations held out for validation.
    const RngKey key = RngKey(cfg.seed).child("train");
    std::vector<std::size_t> demo_order(n_demos);
    for (std::size_t i = 0; i < n_demos; ++i) demo_order[i] = i;
    Rng split_rng = key.child("split").stream();
    split_rng.shuffle(demo_order);
    std::size_t n_val = 0;
    if (n_demos >= 2) {
        n_val = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::lround(cfg.val_fraction * static_cast<double>(n_demos))),
            1, n_demos - 1);
    }
    std::vector<bool> is_val(n_demos, false);
    for (std::size_t i = 0; i < n_val; ++i) is_val[demo_order[i]] = true;

    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < flat.samples.size(); ++i) {
        const auto demo = static_cast<std::size_t>(flat.samples[i].demo);
        (is_val[demo] ? val_idx : train_idx).push_back(i);
    }
    if (val_idx.empty()) val_idx = train_idx; // single-demo dataset: validate on train

    Rng init_rng = key.child("init").stream();
    MlpParams params = random_init(shape, init_rng);
    FlatVec theta = flatten(params);
    if (trace) {
        trace->val_demos.clear();
        for (std::size_t i = 0; i < n_demos; ++i) {
            if (is_val[i]) trace->val_demos.push_back(i);
        }
        trace->initial_train_risk = risk_over(params, flat.samples, train_idx, kind);
        trace->train_risks.clear();
        trace->val_risks.clear();
    }
    AdamState adam = make_adam(theta.size(), AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});

    double best_val = std::numeric_limits<double>::infinity();
    FlatVec best_theta = theta;
    int bad_epochs = 0;

    FlatVec grad(theta.size(), 0.0);
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Rng shuffle_rng = key.child("shuffle").child(static_cast<std::uint64_t>(epoch)).stream();
        shuffle_rng.shuffle(train_idx);
        const MlpShape s = shape;
        for (std::size_t start = 0; start < train_idx.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(train_idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::fill(grad.begin(), grad.end(), 0.0);
            const double w = 1.0 / static_cast<double>(end - start);
            params = unflatten(s, theta);
            for (std::size_t i = start; i < end; ++i) {
                const Sample& sm = flat.samples[train_idx[i]];
                per_sample_grad_accum(params, sm.x, sm.u, kind, w, grad);
            }
            adam_step(adam, theta, grad);
        }
        params = unflatten(s, theta);
        const double val_loss = risk_over(params, flat.samples, val_idx, kind);
        if (trace) {
            trace->train_risks.push_back(risk_over(params, flat.samples, train_idx, kind));
            trace->val_risks.push_back(val_loss);
        }
        if (!std::isfinite(val_loss)) throw NumericsError("train: loss diverged");
        if (val_loss < best_val) {
            best_val = val_loss;
            best_theta = theta;
            bad_epochs = 0;
        } else {
            ++bad_epochs;
            if (bad_epochs > cfg.patience) break;
        }
    }
    if (trace) trace->best_val = best_val;
    return unflatten(shape, best_theta);
}

MlpParams train_for_env(const Environment& env, const Dataset& data, const TrainConfig& cfg,
                        TrainTrace* trace) {
    const EnvSpec& spec = env.spec();
    MlpShape shape;
    shape.in = spec.state_dim;
    shape.hidden = cfg.hidden;
    shape.out = spec.action_kind == ActionKind::Discrete ? spec.num_actions : spec.action_dim;
    return train(data, cfg, loss_kind_for(spec), shape, trace);
}

FlatVec policy_action(const Environment& env, const MlpParams& params, const FlatVec& x) {
    const FlatVec y = mlp_forward(params, x);
    if (env.spec().action_kind == ActionKind::Discrete) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < y.size(); ++i) {
            if (y[i] > y[best]) best = i;
        }
        return {static_cast<double>(best)};
    }
    return y;
}

Trajectory rollout(const Environment& env, const MlpParams& params, const FlatVec& x0,
                   int steps) {
    Trajectory tr;
    FlatVec x = x0;
    tr.states.push_back(x);
    for (int t = 0; t < steps; ++t) {
        const FlatVec u = policy_action(env, params, x);
        tr.actions.push_back(u);
        x = env.step_ctrl(x, env.ctrl_of(u));
        bool out_of_envelope = !all_finite(x);
        for (double v : x) out_of_envelope = out_of_envelope || std::abs(v) > 1e6;
        if (out_of_envelope) {
            // Truncate before the runaway state; states/actions stay aligned
            // because u was taken at the last kept state. States beyond the
            // envelope carry no usable gradient information.
            tr.diverged = true;
            return tr;
        }
        tr.states.push_back(x);
    }
    tr.actions.push_back(policy_action(env, params, x));
    return tr;
}

Trajectory make_test_trajectory(const Environment& env, const MlpParams& params,
                                const FlatVec& x0, int steps) {
    Trajectory tr = rollout(env, params, x0, steps);
    auto expert = env.make_expert();
    expert->reset();
    for (std::size_t t = 0; t < tr.states.size(); ++t) {
        tr.actions[t] = expert->action(tr.states[t]);
    }
    return tr;
}

} // namespace ifcps
