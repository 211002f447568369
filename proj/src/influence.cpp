#include "ifcps/influence.hpp"

#include <algorithm>
#include <cmath>

#include "ifcps/errors.hpp"

namespace ifcps {

void InfluenceConfig::validate() const {
    if (!(beta > 0.0)) throw ConfigError("influence: beta must be > 0");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("influence: gamma must be in (0, 1)");
    if (horizon < 1) throw ConfigError("influence: horizon must be >= 1");
    if (lissa_rounds < 1) throw ConfigError("influence: lissa_rounds must be >= 1");
    if (damping < 0.0) throw ConfigError("influence: damping must be >= 0");
    if (scale && !(*scale > 0.0)) throw ConfigError("influence: scale must be > 0");
    if (lissa_batch < 1) throw ConfigError("influence: lissa_batch must be >= 1");
    if (lissa_repeats < 1) throw ConfigError("influence: lissa_repeats must be >= 1");
}

double sigmoid(double s) { return s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s)); }

double softplus(double beta, double s) {
    const double z = beta * s;
    if (z > 0.0) return s + std::log1p(std::exp(-z)) / beta;
    return std::log1p(std::exp(z)) / beta;
}

FlatVec demo_grad(const MlpParams& params, const Trajectory& demo, LossKind kind) {
    if (demo.states.empty()) throw ShapeError("demo_grad: empty trajectory");
    FlatVec grad(params.shape().param_count(), 0.0);
    const double w = 1.0 / static_cast<double>(demo.states.size());
    for (std::size_t t = 0; t < demo.states.size(); ++t) {
        per_sample_grad_accum(params, demo.states[t], demo.actions[t], kind, w, grad);
    }
    return grad;
}

FlatVec lissa_ihvp(const FlatVec& v, const HvpFn& damped_hvp, double scale, int rounds,
                   int repeats, std::uint64_t seed) {
    FlatVec mean(v.size(), 0.0);
    for (int rep = 0; rep < repeats; ++rep) {
        Rng rng = RngKey(seed).child("lissa").child(static_cast<std::uint64_t>(rep)).stream();
        FlatVec h(v.size(), 0.0);
        for (int r = 0; r < rounds; ++r) {
            FlatVec hv = damped_hvp(h, rng);
            if (hv.size() != v.size()) throw ShapeError("lissa_ihvp: hvp length mismatch");
            for (std::size_t i = 0; i < h.size(); ++i) {
                h[i] += scale * (v[i] - hv[i]);
            }
            if (!all_finite(h)) {
                throw NumericsError("lissa_ihvp: iterate diverged (scale too large)");
            }
        }
        axpy(1.0 / static_cast<double>(repeats), h, mean);
    }
    return mean;
}

namespace {

std::vector<std::size_t> sample_indices(Rng& rng, std::size_t total, std::size_t count) {
    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; ++i) {
        idx[i] = static_cast<std::size_t>(rng.uniform_int(total));
    }
    return idx;
}

} // namespace

double damped_lambda_max(const MlpParams& params, const FlatDataset& flat, LossKind kind,
                         const InfluenceConfig& cfg, std::uint64_t seed) {
    const std::size_t total = flat.size();
    const std::size_t count = std::min<std::size_t>(total, static_cast<std::size_t>(cfg.power_sample));
    Rng rng = RngKey(seed).child("power-sample").stream();
    std::vector<std::size_t> sub;
    if (count == total) {
        sub.resize(total);
        for (std::size_t i = 0; i < total; ++i) sub[i] = i;
    } else {
        sub = sample_indices(rng, total, count);
    }

    Rng vec_rng = RngKey(seed).child("power-start").stream();
    FlatVec v(params.shape().param_count());
    for (double& x : v) x = vec_rng.normal();
    double vn = norm2(v);
    for (double& x : v) x /= vn;

    double lambda = 0.0;
    for (int it = 0; it < cfg.power_iters; ++it) {
        FlatVec hv = loss_hvp(params, flat.samples, sub, kind, v);
        axpy(cfg.damping, v, hv);
        const double hn = norm2(hv);
        if (hn == 0.0) return cfg.damping;
        lambda = hn;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = hv[i] / hn;
    }
    return lambda;
}

LissaSolver::LissaSolver(const MlpParams& params, const FlatDataset& flat, LossKind kind,
                         InfluenceConfig cfg, std::uint64_t seed)
    : params_(params), flat_(flat), kind_(kind), cfg_(cfg), seed_(seed) {
    cfg_.validate();
    lambda_max_ = damped_lambda_max(params_, flat_, kind_, cfg_, seed_);
    scale_ = cfg_.scale ? *cfg_.scale : 0.9 / lambda_max_;
}

FlatVec LissaSolver::solve(const FlatVec& v) const {
    const std::size_t total = flat_.size();
    const bool full = static_cast<std::size_t>(cfg_.lissa_batch) >= total;
    std::vector<std::size_t> all;
    if (full) {
        all.resize(total);
        for (std::size_t i = 0; i < total; ++i) all[i] = i;
    }
    HvpFn hvp = [&](const FlatVec& h, Rng& rng) {
        const std::vector<std::size_t> idx =
            full ? all : sample_indices(rng, total, static_cast<std::size_t>(cfg_.lissa_batch));
        FlatVec out = loss_hvp(params_, flat_.samples, idx, kind_, h);
        axpy(cfg_.damping, h, out);
        return out;
    };
    return lissa_ihvp(v, hvp, scale_, cfg_.lissa_rounds, cfg_.lissa_repeats, seed_);
}

FlatVec standard_test_grad(const MlpParams& params, const Trajectory& test, LossKind kind) {
    return demo_grad(params, test, kind); // uniform 1/(T+1) weights
}

FlatVec trajectory_test_grad(const MlpParams& params, const Trajectory& test, double gamma,
                             LossKind kind) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("trajectory_test_grad: gamma out of range");
    FlatVec grad(params.shape().param_count(), 0.0);
    double w = 1.0;
    for (std::size_t t = 0; t < test.states.size(); ++t, w *= gamma) {
        per_sample_grad_accum(params, test.states[t], test.actions[t], kind, w, grad);
    }
    return grad;
}

FlatVec smoothed_ctrl(const Environment& env, const MlpParams& params, const FlatVec& x) {
    const FlatVec y = mlp_forward(params, x);
    if (env.spec().action_kind == ActionKind::Continuous) return y;
    // Softmax-expected physical control.
    double m = y[0];
    for (double v : y) m = std::max(m, v);
    FlatVec p(y.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        p[i] = std::exp(y[i] - m);
        denom += p[i];
    }
    FlatVec ctrl(env.spec().ctrl_dim, 0.0);
    for (std::size_t a = 0; a < p.size(); ++a) {
        const FlatVec ua = env.ctrl_of_action(static_cast<int>(a));
        kern::axpy(p[a] / denom, ua.data(), ctrl.data(), ctrl.size());
    }
    return ctrl;
}

DenseMat ctrl_state_jacobian(const Environment& env, const MlpParams& params, const FlatVec& x) {
    const DenseMat Jy = output_input_jacobian(params, x); // out x n
    if (env.spec().action_kind == ActionKind::Continuous) return Jy;
    const FlatVec y = mlp_forward(params, x);
    double m = y[0];
    for (double v : y) m = std::max(m, v);
    FlatVec p(y.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        p[i] = std::exp(y[i] - m);
        denom += p[i];
    }
    for (double& v : p) v /= denom;

    const std::size_t n = Jy.cols();
    const std::size_t na = y.size();
    // Rows of (diag(p) - p p^T) Jy.
    FlatVec mean_row(n, 0.0);
    for (std::size_t a = 0; a < na; ++a) kern::axpy(p[a], Jy.row(a), mean_row.data(), n);
    DenseMat J(env.spec().ctrl_dim, n);
    for (std::size_t a = 0; a < na; ++a) {
        const FlatVec ua = env.ctrl_of_action(static_cast<int>(a));
        for (std::size_t j = 0; j < n; ++j) {
            const double sj = p[a] * (Jy(a, j) - mean_row[j]);
            for (std::size_t c = 0; c < ua.size(); ++c) J(c, j) += ua[c] * sj;
        }
    }
    return J;
}

FlatVec safety_test_grad(const MlpParams& params, const Environment& env,
                         const Trajectory& test, double beta) {
    if (!(beta > 0.0)) throw ConfigError("safety_test_grad: beta must be > 0");
    const std::size_t n = env.spec().state_dim;
    FlatVec grad(params.shape().param_count(), 0.0);
    DenseMat A, B;
    for (std::size_t t = 1; t < test.states.size(); ++t) {
        const FlatVec& xp = test.states[t - 1];
        const FlatVec uc = smoothed_ctrl(env, params, xp);
        const FlatVec xhat = env.step_ctrl(xp, uc);
        const FlatVec g = env.constraint_values(xhat);
        const DenseMat G = env.constraint_gradients(xhat);
        env.dynamics_jacobians(xp, uc, A, B);

        FlatVec svec(n, 0.0);
        for (std::size_t k = 0; k < g.size(); ++k) {
            kern::axpy(sigmoid(beta * g[k]), G.row(k), svec.data(), n);
        }
        const FlatVec wctrl = matvec_t(B, svec);

        FlatVec dy;
        if (env.spec().action_kind == ActionKind::Continuous) {
            dy = wctrl;
        } else {
            const FlatVec y = mlp_forward(params, xp);
            double m = y[0];
            for (double v : y) m = std::max(m, v);
            FlatVec p(y.size());
            double denom = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                p[i] = std::exp(y[i] - m);
                denom += p[i];
            }
            for (double& v : p) v /= denom;
            FlatVec c(y.size());
            double pc = 0.0;
            for (std::size_t a = 0; a < y.size(); ++a) {
                const FlatVec ua = env.ctrl_of_action(static_cast<int>(a));
                c[a] = kern::dot(wctrl.data(), ua.data(), ua.size());
                pc += p[a] * c[a];
            }
            dy.resize(y.size());
            for (std::size_t a = 0; a < y.size(); ++a) dy[a] = p[a] * (c[a] - pc);
        }
        backward_from_output(params, xp, dy, 1.0, grad);
    }
    return grad;
}

TimestepWeights propagation_weights(const Environment& env, const MlpParams& params,
                                    const Trajectory& test, double gamma, int horizon) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("propagation_weights: gamma out of range");
    if (horizon < 1) throw ConfigError("propagation_weights: horizon must be >= 1");
    const int T = test.length();
    const std::size_t n = env.spec().state_dim;
    TimestepWeights out;
    out.w.assign(static_cast<std::size_t>(T) + 1, 0.0);
    out.w[0] = 1.0; // identity transition over zero steps

    DenseMat Phi = DenseMat::identity(n);
    DenseMat A, B;
    double running_norm = 1.0;
    for (int t = 1; t <= T; ++t) {
        if (t <= horizon) {
            const FlatVec& xk = test.states[static_cast<std::size_t>(t) - 1];
            const FlatVec uc = smoothed_ctrl(env, params, xk);
            env.dynamics_jacobians(xk, uc, A, B);
            const DenseMat K = ctrl_state_jacobian(env, params, xk);
            DenseMat J = matmul(B, K);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) J(i, j) += A(i, j);
            }
            Phi = matmul(J, Phi);
            // Powers of near-identity closed loops have clustered singular
            // values; the default iteration budget under-converges there.
            running_norm = spectral_norm(Phi, 2000, 1e-13);
        }
        out.w[static_cast<std::size_t>(t)] =
            std::pow(gamma, static_cast<double>(t)) * running_norm;
    }
    return out;
}

FlatVec propagated_test_grad(const MlpParams& params, const Environment& env,
                             const Trajectory& test, double gamma, int horizon, LossKind kind) {
    const TimestepWeights wts = propagation_weights(env, params, test, gamma, horizon);
    FlatVec grad(params.shape().param_count(), 0.0);
    for (std::size_t t = 0; t < test.states.size(); ++t) {
        per_sample_grad_accum(params, test.states[t], test.actions[t], kind, wts.w[t], grad);
    }
    return grad;
}

std::vector<double> variant_influence(const FlatVec& solved_test_side,
                                      const std::vector<FlatVec>& demo_grads) {
    std::vector<double> scores(demo_grads.size());
    for (std::size_t i = 0; i < demo_grads.size(); ++i) {
        if (demo_grads[i].size() != solved_test_side.size()) {
            throw ShapeError("variant_influence: length mismatch");
        }
        scores[i] = -dot(solved_test_side, demo_grads[i]);
    }
    return scores;
}

std::vector<double> minmax_normalize(const std::vector<double>& scores, MinMax* range) {
    if (scores.empty()) throw ShapeError("minmax_normalize: empty scores");
    const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
    const double lo = *lo_it, hi = *hi_it;
    if (range) *range = {lo, hi};
    std::vector<double> out(scores.size());
    if (hi == lo) {
        std::fill(out.begin(), out.end(), 0.5);
        return out;
    }
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - lo) / (hi - lo);
    return out;
}

std::vector<double> combined_scores(const std::vector<double>& safety,
                                    const std::vector<double>& trajectory,
                                    const std::vector<double>& propagated) {
    if (safety.size() != trajectory.size() || safety.size() != propagated.size()) {
        throw ShapeError("combined_scores: length mismatch");
    }
    if (safety.empty()) throw ShapeError("combined_scores: empty scores");
    const std::vector<double> ns = minmax_normalize(safety);
    const std::vector<double> nt = minmax_normalize(trajectory);
    const std::vector<double> np = minmax_normalize(propagated);
    std::vector<double> out(safety.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (ns[i] + nt[i] + np[i]) / 3.0;
    return out;
}

double effective_horizon(double gamma, long T) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("effective_horizon: gamma out of range");
    if (T < 0) throw ConfigError("effective_horizon: T must be >= 0");
    const double tp1 = static_cast<double>(T) + 1.0;
    const double gpow = std::exp(tp1 * std::log(gamma)); // gamma^(T+1), stable for large T
    return gamma / (1.0 - gamma) - tp1 * gpow / (1.0 - gpow);
}

double lissa_error_bound(double q_norm, double demo_grad_norm, double damping,
                         double lambda_max_damped, int rounds) {
    if (!(damping > 0.0 && damping <= lambda_max_damped)) {
        throw NumericsError("lissa_error_bound: damping must satisfy 0 < damping <= lambda_max");
    }
    if (rounds < 1) throw ConfigError("lissa_error_bound: rounds must be >= 1");
    const double contraction = 1.0 - damping / lambda_max_damped;
    return q_norm * (demo_grad_norm / damping) *
           std::pow(contraction, static_cast<double>(rounds));
}

double propagated_bound(double C, double c, double gamma, double max_abs_it) {
    if (!(C >= 1.0)) throw NumericsError("propagated_bound: C must be >= 1");
    if (!(c >= 0.0 && c < 1.0)) {
        throw NumericsError("propagated_bound: undefined for c >= 1 (closed loop not Schur stable)");
    }
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("propagated_bound: gamma out of range");
    return C / (1.0 - gamma * c) * max_abs_it;
}

std::pair<double, double> fit_power_envelope(const DenseMat& Acl, int t_max) {
    if (Acl.rows() != Acl.cols()) throw ShapeError("fit_power_envelope: square matrix required");
    const double rho = spectral_radius(Acl);
    if (rho >= 1.0) throw NumericsError("fit_power_envelope: spectral radius >= 1");
    double c = std::min(rho * 1.02 + 1e-9, 0.5 * (rho + 1.0));
    DenseMat power = DenseMat::identity(Acl.rows());
    double C = 1.0;
    double ct = 1.0;
    for (int t = 1; t <= t_max; ++t) {
        power = matmul(Acl, power);
        ct *= c;
        C = std::max(C, spectral_norm(power, 2000, 1e-13) / ct);
    }
    return {C, c};
}

InfluenceEngine::InfluenceEngine(const Environment& env, const MlpParams& params,
                                 const Dataset& data, InfluenceConfig cfg, std::uint64_t seed)
    : env_(env),
      params_(params),
      cfg_(cfg),
      kind_(loss_kind_for(env.spec())),
      flat_(flatten(data)),
      demo_grads_(),
      solver_(params_, flat_, kind_, cfg_, seed) {
    demo_grads_.reserve(data.demos.size());
    for (const Trajectory& demo : data.demos) {
        demo_grads_.push_back(demo_grad(params_, demo, kind_));
    }
}

InfluenceReport InfluenceEngine::score(const Trajectory& test, const std::string& test_id) const {
    InfluenceReport rep;
    rep.config = cfg_;
    rep.test_id = test_id;

    const FlatVec q_std = standard_test_grad(params_, test, kind_);
    const FlatVec q_saf = safety_test_grad(params_, env_, test, cfg_.beta);
    const FlatVec q_trj = trajectory_test_grad(params_, test, cfg_.gamma, kind_);
    const FlatVec q_prp =
        propagated_test_grad(params_, env_, test, cfg_.gamma, cfg_.horizon, kind_);

    rep.standard = variant_influence(solver_.solve(q_std), demo_grads_);
    rep.safety = variant_influence(solver_.solve(q_saf), demo_grads_);
    rep.trajectory = variant_influence(solver_.solve(q_trj), demo_grads_);
    rep.propagated = variant_influence(solver_.solve(q_prp), demo_grads_);

    const std::vector<double> ns = minmax_normalize(rep.safety, &rep.norm_safety);
    const std::vector<double> nt = minmax_normalize(rep.trajectory, &rep.norm_trajectory);
    const std::vector<double> np = minmax_normalize(rep.propagated, &rep.norm_propagated);
    rep.combined.resize(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i) {
        rep.combined[i] = (ns[i] + nt[i] + np[i]) / 3.0;
    }
    return rep;
}

} // namespace ifcps
