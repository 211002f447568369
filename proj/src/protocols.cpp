#include "ifcps/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ifcps/errors.hpp"

namespace ifcps {

Trajectory select_failure_trajectory(const Environment& env, const MlpParams& params,
                                     int test_rollouts, std::uint64_t seed) {
    if (test_rollouts < 1) throw ConfigError("select_failure_trajectory: need >= 1 rollout");
    const RngKey key = RngKey(seed).child("test-init");
    Trajectory best;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < test_rollouts; ++k) {
        Rng rng = key.child(static_cast<std::uint64_t>(k)).stream();
        const FlatVec x0 = env.sample_initial_state(rng);
        Trajectory tr = rollout(env, params, x0, env.spec().horizon);
        const double v = tr.diverged ? std::numeric_limits<double>::infinity()
                                     : env.max_violation(tr);
        if (v > best_v) {
            best_v = v;
            best = std::move(tr);
        }
    }
    auto expert = env.make_expert();
    expert->reset();
    for (std::size_t t = 0; t < best.states.size(); ++t) {
        best.actions[t] = expert->action(best.states[t]);
    }
    return best;
}

ScoredCell score_cell(const Environment& env, double rate, std::uint64_t seed,
                      const ProtocolConfig& cfg) {
    const RngKey key(seed);
    ScoredCell cell;
    Dataset clean = generate_dataset(env, cfg.n_demos, key.child("data").value());
    cell.data = rate > 0.0
                    ? poison_dataset(env, clean, rate, cfg.fault, key.child("poison").value())
                    : std::move(clean);

    TrainConfig tc = cfg.train;
    tc.seed = key.child("train").value();
    cell.params = train_for_env(env, cell.data, tc);

    cell.test = select_failure_trajectory(env, cell.params, cfg.test_rollouts,
                                          key.child("test").value());

    const InfluenceEngine engine(env, cell.params, cell.data, cfg.influence,
                                 key.child("influence").value());
    cell.report = engine.score(cell.test, env.spec().name + "/seed" + std::to_string(seed));

    Rng rnd = key.child("random-baseline").stream();
    cell.random_scores.resize(cell.data.size());
    for (double& s : cell.random_scores) s = rnd.uniform();
    return cell;
}

DiagnosisResult run_diagnosis(const Environment& env, const ProtocolConfig& cfg,
                              const CellObserver& observe) {
    DiagnosisResult res;
    res.env = env.spec().name;
    res.rates = cfg.rates;
    res.methods = {"random", "standard_if", "ifcps"};
    res.cells.assign(res.methods.size(), {});
    for (double rate : cfg.rates) {
        std::vector<double> a_random, a_standard, a_ifcps;
        for (std::uint64_t seed : cfg.seeds) {
            const ScoredCell cell = score_cell(env, rate, seed, cfg);
            if (observe) observe(rate, seed, cell);
            const auto& labels = cell.data.poison_labels;
            a_random.push_back(auroc(cell.random_scores, labels));
            a_standard.push_back(auroc(cell.report.standard, labels));
            a_ifcps.push_back(auroc(cell.report.combined, labels));
        }
        res.cells[0].push_back(make_stats(std::move(a_random)));
        res.cells[1].push_back(make_stats(std::move(a_standard)));
        res.cells[2].push_back(make_stats(std::move(a_ifcps)));
    }
    return res;
}

namespace {

// Mean squared state deviation between two rollouts from a common start.
double tracking_error(const Trajectory& a, const Trajectory& b) {
    const std::size_t n = std::min(a.states.size(), b.states.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t i = 0; i < a.states[t].size(); ++i) {
            const double d = a.states[t][i] - b.states[t][i];
            acc += d * d;
        }
    }
    return acc / static_cast<double>(n);
}

} // namespace

CurationResult run_curation(const Environment& env, const ProtocolConfig& cfg,
                            std::uint64_t seed, const CellObserver& observe) {
    constexpr double kPoisonRate = 0.20;
    const RngKey key(seed);
    CurationResult res;
    res.env = env.spec().name;

    const ScoredCell cell = score_cell(env, kPoisonRate, seed, cfg);
    if (observe) observe(kPoisonRate, seed, cell);
    const std::size_t n = cell.data.size();
    for (auto l : cell.data.poison_labels) res.poisoned_total += l ? 1 : 0;

    const std::vector<int> ranked = rank_descending(cell.report.combined);
    const auto budget = static_cast<std::size_t>(
        std::ceil(cfg.removal_budget * static_cast<double>(n)));
    res.removed = static_cast<int>(budget);
    std::vector<bool> removed(n, false);
    for (std::size_t i = 0; i < budget && i < ranked.size(); ++i) {
        removed[static_cast<std::size_t>(ranked[i])] = true;
        if (cell.data.poison_labels[static_cast<std::size_t>(ranked[i])]) ++res.detected;
    }
    const auto [lo, hi] = std::minmax_element(cell.report.combined.begin(),
                                              cell.report.combined.end());
    res.score_min = *lo;
    res.score_max = *hi;

    Dataset curated;
    curated.env = cell.data.env;
    curated.state_dim = cell.data.state_dim;
    curated.action_dim = cell.data.action_dim;
    curated.dt = cell.data.dt;
    for (std::size_t i = 0; i < n; ++i) {
        if (!removed[i]) {
            curated.demos.push_back(cell.data.demos[i]);
            curated.poison_labels.push_back(cell.data.poison_labels[i]);
        }
    }
    TrainConfig tc = cfg.train;
    tc.seed = key.child("retrain").value();
    res.curated_params = train_for_env(env, curated, tc);
    const MlpParams& curated_params = res.curated_params;

    double v_pois = -std::numeric_limits<double>::infinity();
    double v_cur = -std::numeric_limits<double>::infinity();
    double v_exp = -std::numeric_limits<double>::infinity();
    double track_pois = 0.0, track_cur = 0.0;
    constexpr int kEvalRollouts = 5;
    for (int e = 0; e < kEvalRollouts; ++e) {
        Rng rng = key.child("eval").child(static_cast<std::uint64_t>(e)).stream();
        const FlatVec x0 = env.sample_initial_state(rng);
        Trajectory tr_e = expert_rollout(env, x0);
        Trajectory tr_p = rollout(env, cell.params, x0, env.spec().horizon);
        Trajectory tr_c = rollout(env, curated_params, x0, env.spec().horizon);
        v_exp = std::max(v_exp, env.max_violation(tr_e));
        v_pois = std::max(v_pois, tr_p.diverged ? std::numeric_limits<double>::infinity()
                                                : env.max_violation(tr_p));
        v_cur = std::max(v_cur, tr_c.diverged ? std::numeric_limits<double>::infinity()
                                              : env.max_violation(tr_c));
        track_pois += tracking_error(tr_p, tr_e) / kEvalRollouts;
        track_cur += tracking_error(tr_c, tr_e) / kEvalRollouts;
        if (e == 0) {
            res.expert_demo = std::move(tr_e);
            res.poisoned_demo = std::move(tr_p);
            res.curated_demo = std::move(tr_c);
        }
    }
    res.expert_violation = v_exp;
    res.poisoned_violation = v_pois;
    res.curated_violation = v_cur;
    res.poisoned_tracking = track_pois;
    res.curated_tracking = track_cur;
    return res;
}

SafetyAttrResult run_safety_attr(const Environment& env, const ProtocolConfig& cfg,
                                 const CellObserver& observe) {
    SafetyAttrResult res;
    res.env = env.spec().name;
    res.methods = {"random", "standard_if", "safety_if", "ifcps"};
    std::vector<std::vector<double>> rho(res.methods.size());
    for (std::uint64_t seed : cfg.seeds) {
        const ScoredCell cell = score_cell(env, 0.0, seed, cfg); // clean training
        if (observe) observe(0.0, seed, cell);
        std::vector<double> proximity(cell.data.size());
        for (std::size_t i = 0; i < cell.data.size(); ++i) {
            double dmin = std::numeric_limits<double>::infinity();
            for (const FlatVec& x : cell.data.demos[i].states) {
                dmin = std::min(dmin, env.signed_distance(x));
            }
            proximity[i] = -dmin; // closer to the boundary = larger
        }
        auto magnitude = [](const std::vector<double>& v) {
            std::vector<double> out(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::abs(v[i]);
            return out;
        };
        rho[0].push_back(spearman(cell.random_scores, proximity));
        rho[1].push_back(spearman(magnitude(cell.report.standard), proximity));
        rho[2].push_back(spearman(magnitude(cell.report.safety), proximity));
        // The ensemble of attribution magnitudes, min-max normalized per
        // variant like the diagnosis ensemble.
        rho[3].push_back(spearman(combined_scores(magnitude(cell.report.safety),
                                                  magnitude(cell.report.trajectory),
                                                  magnitude(cell.report.propagated)),
                                  proximity));
    }
    for (auto& r : rho) res.rho.push_back(make_stats(std::move(r)));
    return res;
}

AblationResult run_ablation(const Environment& env, const ProtocolConfig& cfg,
                            const CellObserver& observe) {
    constexpr double kRate = 0.10;
    AblationResult res;
    res.env = env.spec().name;
    res.variants = {"ifcps_full", "safety_only", "trajectory_only", "propagated_only",
                    "standard_if"};
    std::vector<std::vector<double>> scores(res.variants.size());
    for (std::uint64_t seed : cfg.seeds) {
        const ScoredCell cell = score_cell(env, kRate, seed, cfg);
        if (observe) observe(kRate, seed, cell);
        const auto& labels = cell.data.poison_labels;
        scores[0].push_back(auroc(cell.report.combined, labels));
        scores[1].push_back(auroc(cell.report.safety, labels));
        scores[2].push_back(auroc(cell.report.trajectory, labels));
        scores[3].push_back(auroc(cell.report.propagated, labels));
        scores[4].push_back(auroc(cell.report.standard, labels));
    }
    for (auto& s : scores) res.auroc.push_back(make_stats(std::move(s)));
    return res;
}

RidgeProblem make_ridge_fixture(int points, int dim, std::uint64_t seed) {
    RidgeProblem prob;
    Rng rng = RngKey(seed).child("ridge").stream();
    prob.X = DenseMat(static_cast<std::size_t>(points), static_cast<std::size_t>(dim));
    for (double& v : prob.X.data()) v = rng.normal();
    FlatVec w_true(static_cast<std::size_t>(dim));
    for (double& v : w_true) v = rng.normal();
    prob.y.resize(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        prob.y[static_cast<std::size_t>(i)] =
            kern::dot(prob.X.row(static_cast<std::size_t>(i)), w_true.data(),
                      static_cast<std::size_t>(dim)) +
            0.3 * rng.normal();
    }
    prob.x_test.resize(static_cast<std::size_t>(dim));
    for (double& v : prob.x_test) v = rng.normal();
    prob.y_test = dot(prob.x_test, w_true);
    return prob;
}

FlatVec ridge_fit(const RidgeProblem& prob, int exclude_index) {
    const std::size_t d = prob.X.cols();
    const std::size_t m = prob.X.rows();
    DenseMat H(d, d);
    FlatVec rhs(d, 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (static_cast<int>(i) == exclude_index) continue;
        ++count;
        const double* xi = prob.X.row(i);
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = 0; b < d; ++b) H(a, b) += xi[a] * xi[b];
            rhs[a] += xi[a] * prob.y[i];
        }
    }
    if (count == 0) throw DatasetError("ridge_fit: no points left");
    const double inv = 1.0 / static_cast<double>(count);
    for (auto& v : H.data()) v *= inv;
    for (auto& v : rhs) v *= inv;
    for (std::size_t a = 0; a < d; ++a) H(a, a) += prob.reg;
    return solve_linear(H, rhs);
}

double ridge_test_loss(const RidgeProblem& prob, const FlatVec& w) {
    const double r = dot(prob.x_test, w) - prob.y_test;
    return r * r;
}

std::vector<double> loo_oracle(const RidgeProblem& prob) {
    const FlatVec w_full = ridge_fit(prob);
    const double base = ridge_test_loss(prob, w_full);
    std::vector<double> deltas(prob.X.rows());
    for (std::size_t i = 0; i < prob.X.rows(); ++i) {
        const FlatVec w = ridge_fit(prob, static_cast<int>(i));
        deltas[i] = ridge_test_loss(prob, w) - base;
    }
    return deltas;
}

std::vector<double> ridge_if_scores(const RidgeProblem& prob) {
    const std::size_t d = prob.X.cols();
    const std::size_t m = prob.X.rows();
    const FlatVec w = ridge_fit(prob);
    // Hessian of mean squared residual + ridge term.
    DenseMat H(d, d);
    for (std::size_t i = 0; i < m; ++i) {
        const double* xi = prob.X.row(i);
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = 0; b < d; ++b) {
                H(a, b) += 2.0 * xi[a] * xi[b] / static_cast<double>(m);
            }
        }
    }
    for (std::size_t a = 0; a < d; ++a) H(a, a) += 2.0 * prob.reg;

    const double r_test = dot(prob.x_test, w) - prob.y_test;
    FlatVec q(d);
    for (std::size_t a = 0; a < d; ++a) q[a] = 2.0 * r_test * prob.x_test[a];
    const FlatVec s = solve_linear(H, q);

    std::vector<double> scores(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double* xi = prob.X.row(i);
        const double r_i = kern::dot(xi, w.data(), d) - prob.y[i];
        double g_dot_s = 0.0;
        for (std::size_t a = 0; a < d; ++a) g_dot_s += 2.0 * r_i * xi[a] * s[a];
        scores[i] = -g_dot_s;
    }
    return scores;
}

} // namespace ifcps
