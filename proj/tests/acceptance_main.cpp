// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ifcps/bc.hpp"
#include "ifcps/config.hpp"
#include "ifcps/influence.hpp"
#include "ifcps/lqr.hpp"
#include "ifcps/metrics.hpp"
#include "ifcps/protocols.hpp"
#include "ifcps/runner.hpp"
#include "support/oracles.hpp"

using namespace ifcps;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", id, name,
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

MlpParams random_params(MlpShape shape, Rng& rng, double scale = 0.7) {
    MlpParams p(shape);
    for (double& w : p.W1.data()) w = scale * rng.normal();
    for (double& w : p.b1) w = scale * rng.normal();
    for (double& w : p.W2.data()) w = scale * rng.normal();
    for (double& w : p.b2) w = scale * rng.normal();
    return p;
}

double kink_margin(const MlpParams& p, const FlatVec& x) {
    double margin = 1e9;
    for (std::size_t j = 0; j < p.b1.size(); ++j) {
        double a = p.b1[j];
        for (std::size_t i = 0; i < p.W1.cols(); ++i) a += p.W1(j, i) * x[i];
        margin = std::min(margin, std::abs(a));
    }
    return margin;
}

// ---------------------------------------------------------------------------
// 1. Analytic gradients and Hessian-vector products vs finite differences.
void criterion_1() {
    const auto t0 = Clock::now();
    const MlpShape shape{3, 8, 2};
    Rng rng(1001);
    double worst_grad = 0.0, worst_hvp = 0.0;
    int done = 0;
    while (done < 100) {
        const MlpParams p = random_params(shape, rng);
        FlatVec x(3);
        for (double& v : x) v = rng.normal();
        if (kink_margin(p, x) < 1e-3) continue;
        const LossKind kind = done % 2 ? LossKind::CrossEntropy : LossKind::Mse;
        FlatVec u;
        if (kind == LossKind::Mse) {
            u.resize(2);
            for (double& v : u) v = rng.normal();
        } else {
            u = {static_cast<double>(done % 2)};
        }
        const FlatVec got = per_sample_grad(p, x, u, kind);
        const FlatVec want = test::fd_gradient(
            [&](const FlatVec& th) { return sample_loss(unflatten(shape, th), x, u, kind); },
            flatten(p), 1e-6);
        worst_grad = std::max(worst_grad, test::max_rel_err(got, want));
        ++done;
    }
    done = 0;
    while (done < 100) {
        const MlpParams p = random_params(shape, rng);
        std::vector<Sample> batch;
        bool near_kink = false;
        for (int i = 0; i < 3; ++i) {
            FlatVec x(3), u(2);
            for (double& v : x) v = rng.normal();
            for (double& v : u) v = rng.normal();
            if (kink_margin(p, x) < 1e-3) near_kink = true;
            batch.push_back(Sample{std::move(x), std::move(u), i, 0});
        }
        if (near_kink) continue;
        FlatVec v(shape.param_count());
        for (double& w : v) w = rng.normal();
        const FlatVec got = loss_hvp(p, batch, LossKind::Mse, v);
        const double eps = 1e-5;
        auto grad_at = [&](const FlatVec& th) {
            const MlpParams q = unflatten(shape, th);
            FlatVec g(shape.param_count(), 0.0);
            for (const Sample& s : batch) {
                per_sample_grad_accum(q, s.x, s.u, LossKind::Mse, 1.0 / batch.size(), g);
            }
            return g;
        };
        FlatVec up = flatten(p), dn = up;
        axpy(eps, v, up);
        axpy(-eps, v, dn);
        const FlatVec gu = grad_at(up), gd = grad_at(dn);
        FlatVec want(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) want[i] = (gu[i] - gd[i]) / (2.0 * eps);
        worst_hvp = std::max(worst_hvp, test::max_rel_err(got, want));
        ++done;
    }
    const double secs = seconds_since(t0);
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "grad rel err %.2e < 1e-5, hvp rel err %.2e < 1e-4, %.1f s < 10 s",
                  worst_grad, worst_hvp, secs);
    report(1, "gradients and hvp match finite-difference oracles",
           worst_grad < 1e-5 && worst_hvp < 1e-4 && secs < 10.0, detail);
}

// ---------------------------------------------------------------------------
// 2. LiSSA against an explicitly formed damped Hessian, plus the error bound.
void criterion_2() {
    const MlpShape shape{2, 4, 2}; // 22 parameters
    Rng rng(1002);
    const MlpParams teacher = random_params(shape, rng, 0.8);
    Dataset data;
    data.state_dim = 2;
    data.action_dim = 2;
    for (int d = 0; d < 6; ++d) {
        Trajectory tr;
        for (int t = 0; t <= 9; ++t) {
            FlatVec x = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
            tr.states.push_back(x);
            tr.actions.push_back(mlp_forward(teacher, x));
        }
        data.demos.push_back(tr);
    }
    TrainConfig tc;
    tc.batch_size = 16;
    tc.learning_rate = 3e-3;
    tc.max_epochs = 800;
    tc.patience = 80;
    tc.seed = 2;
    tc.hidden = 4;
    const MlpParams p = train(data, tc, LossKind::Mse, shape);
    const FlatDataset flat = flatten(data);
    const std::size_t np = shape.param_count();
    const double damping = 0.05;

    std::vector<std::size_t> all(flat.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    DenseMat H(np, np);
    for (std::size_t j = 0; j < np; ++j) {
        FlatVec e(np, 0.0);
        e[j] = 1.0;
        const FlatVec col = loss_hvp(p, flat.samples, all, LossKind::Mse, e);
        for (std::size_t i = 0; i < np; ++i) H(i, j) = col[i];
    }
    for (std::size_t i = 0; i < np; ++i) H(i, i) += damping;

    InfluenceConfig cfg;
    cfg.damping = damping;
    cfg.lissa_batch = static_cast<int>(flat.size());
    cfg.power_iters = 500;
    cfg.power_sample = static_cast<int>(flat.size());
    const double lambda_max = damped_lambda_max(p, flat, LossKind::Mse, cfg, 7);
    cfg.scale = 1.0 / lambda_max;

    Rng vr(1003);
    FlatVec q(np);
    for (double& x : q) x = vr.normal();
    const FlatVec direct = test::gauss_jordan_solve(H, q);

    cfg.lissa_rounds = 500;
    LissaSolver solver500(p, flat, LossKind::Mse, cfg, 7);
    const FlatVec approx = solver500.solve(q);
    const double cosine = dot(approx, direct) / (norm2(approx) * norm2(direct));

    // Error bound for a representative demonstration gradient.
    const FlatVec g = demo_grad(p, data.demos[0], LossKind::Mse);
    const double exact_score = -dot(direct, g);
    bool bound_ok = true;
    std::string bound_note;
    for (int rounds : {1, 5, 25, 125}) {
        InfluenceConfig rc = cfg;
        rc.lissa_rounds = rounds;
        LissaSolver solver(p, flat, LossKind::Mse, rc, 7);
        const double approx_score = -dot(solver.solve(q), g);
        const double observed = std::abs(exact_score - approx_score);
        const double bound = lissa_error_bound(norm2(q), norm2(g), damping, lambda_max, rounds);
        if (observed > bound) {
            bound_ok = false;
            bound_note += " R=" + std::to_string(rounds) + " violates";
        }
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail), "cosine %.5f > 0.99, bound holds for R in {1,5,25,125}%s",
                  cosine, bound_note.c_str());
    report(2, "lissa matches the dense damped solve and respects its error bound",
           cosine > 0.99 && bound_ok, detail);
}

// ---------------------------------------------------------------------------
// 3. Convex leave-one-out oracle vs influence ranking.
void criterion_3() {
    const auto t0 = Clock::now();
    const RidgeProblem prob = make_ridge_fixture(20, 3, 4);
    const std::vector<double> deltas = loo_oracle(prob);
    const std::vector<double> scores = ridge_if_scores(prob);
    std::vector<double> predicted(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        predicted[i] = -scores[i] / static_cast<double>(scores.size());
    }
    const double rho = spearman(predicted, deltas);
    const double secs = seconds_since(t0);
    char detail[120];
    std::snprintf(detail, sizeof(detail), "spearman %.4f > 0.9, %.2f s < 30 s", rho, secs);
    report(3, "influence scores rank exact leave-one-out retraining deltas",
           rho > 0.9 && secs < 30.0, detail);
}

// ---------------------------------------------------------------------------
// 4. Template identities on identity-curvature fixtures.
void criterion_4() {
    // Dyadic fixture: the aggregated-gradient score equals the per-timestep
    // sum bit for bit.
    const std::vector<FlatVec> q_t = {
        {1.0, -0.5, 0.25}, {0.5, 0.75, -1.0}, {-0.25, 1.5, 0.5}, {2.0, -0.125, 0.375}};
    const FlatVec g = {0.5, 0.25, -0.75};
    const double gamma = 0.5;
    double per_step = 0.0;
    FlatVec aggregate(3, 0.0);
    double w = 1.0;
    for (const FlatVec& q : q_t) {
        per_step += w * -dot(q, g);
        axpy(w, q, aggregate);
        w *= gamma;
    }
    const bool exact = per_step == -dot(aggregate, g);

    // Standard template vs direct per-timestep mean on a real network.
    const MlpShape shape{3, 6, 2};
    Rng rng(1004);
    const MlpParams p = random_params(shape, rng);
    Trajectory test;
    for (int t = 0; t <= 7; ++t) {
        FlatVec x(3), u(2);
        for (double& v : x) v = rng.normal();
        for (double& v : u) v = rng.normal();
        test.states.push_back(std::move(x));
        test.actions.push_back(std::move(u));
    }
    std::vector<FlatVec> demo_grads;
    for (int i = 0; i < 5; ++i) {
        FlatVec d(shape.param_count());
        for (double& v : d) v = rng.normal();
        demo_grads.push_back(std::move(d));
    }
    const FlatVec q_std = standard_test_grad(p, test, LossKind::Mse);
    const std::vector<double> via_template = variant_influence(q_std, demo_grads);
    double worst = 0.0;
    for (std::size_t i = 0; i < demo_grads.size(); ++i) {
        double direct = 0.0;
        for (std::size_t t = 0; t < test.states.size(); ++t) {
            const FlatVec qt =
                per_sample_grad(p, test.states[t], test.actions[t], LossKind::Mse);
            direct += -dot(qt, demo_grads[i]) / static_cast<double>(test.states.size());
        }
        worst = std::max(worst, std::abs(direct - via_template[i]));
    }
    char detail[120];
    std::snprintf(detail, sizeof(detail), "per-timestep sum exact; standard diff %.2e < 1e-10",
                  worst);
    report(4, "unified template reproduces the direct per-timestep forms",
           exact && worst < 1e-10, detail);
}

// ---------------------------------------------------------------------------
// Shared fixture: a controller that states the LQR law as an always-active
// network, so the closed loop is exactly linear.
MlpParams lqr_clone(const Environment& env) {
    DenseMat A, B;
    env.dynamics_jacobians(FlatVec(env.spec().state_dim, 0.0),
                           FlatVec(env.spec().ctrl_dim, 0.0), A, B);
    DenseMat Q = DenseMat::identity(6), R = DenseMat::identity(3);
    for (int i = 0; i < 3; ++i) {
        Q(i, i) = 4.0;
        R(i, i) = 0.5;
    }
    const DenseMat K = dlqr_gain(A, B, Q, R);
    const std::size_t n = env.spec().state_dim;
    MlpParams p(MlpShape{n, n, env.spec().ctrl_dim});
    const double eps = 0.01;
    for (std::size_t i = 0; i < n; ++i) p.W1(i, i) = eps;
    p.b1 = FlatVec(n, 1000.0); // always-active units: the network is linear here
    for (std::size_t i = 0; i < env.spec().ctrl_dim; ++i) {
        for (std::size_t j = 0; j < n; ++j) p.W2(i, j) = -K(i, j) / eps;
        double offset = 0.0;
        for (std::size_t j = 0; j < n; ++j) offset += p.W2(i, j) * 1000.0;
        p.b2[i] = -offset; // cancel the bias so u = -K x
    }
    // Hover reference at z = 2: shift the bias so u = -K (x - ref).
    FlatVec ref(n, 0.0);
    ref[2] = 2.0;
    for (std::size_t i = 0; i < env.spec().ctrl_dim; ++i) {
        for (std::size_t j = 0; j < n; ++j) p.b2[i] += K(i, j) * ref[j];
    }
    return p;
}

void criterion_5() {
    const auto env = make_env("quadrotor");
    const MlpParams clone = lqr_clone(*env);

    // Closed-loop matrix.
    DenseMat A, B;
    env->dynamics_jacobians(FlatVec(6, 0.0), FlatVec(3, 0.0), A, B);
    const DenseMat K = ctrl_state_jacobian(*env, clone, FlatVec{0.0, 0.0, 2.0, 0.0, 0.0, 0.0});
    DenseMat Acl = matmul(B, K);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j) Acl(i, j) += A(i, j);
    }

    Rng rv(1005);
    Trajectory tr = rollout(*env, clone, env->sample_initial_state(rv), 40);
    const double gamma = 0.99;
    const TimestepWeights w = propagation_weights(*env, clone, tr, gamma, 20);
    double worst = 0.0;
    for (int t = 0; t <= 20; ++t) {
        const double want =
            std::pow(gamma, t) * test::jacobi_svd_max(test::mat_pow(Acl, static_cast<unsigned>(t)));
        worst = std::max(worst, test::rel_err(w.w[static_cast<std::size_t>(t)], want));
    }

    // Schur-stability bound over 3 seeds with real test-side solves.
    bool bound_ok = true;
    double tightest = 1e300;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Dataset data = generate_dataset(*env, 15, seed);
        const FlatDataset flat = flatten(data);
        InfluenceConfig cfg;
        cfg.horizon = env->spec().horizon; // linear plant: no linearization error
        LissaSolver solver(clone, flat, LossKind::Mse, cfg, seed);

        Rng rr = RngKey(seed).child("bound-test").stream();
        Trajectory test =
            make_test_trajectory(*env, clone, env->sample_initial_state(rr), 30);
        const TimestepWeights wts =
            propagation_weights(*env, clone, test, cfg.gamma, cfg.horizon);
        const auto [C, c] = fit_power_envelope(Acl, test.length());

        std::vector<FlatVec> solved_steps;
        for (std::size_t t = 0; t < test.states.size(); ++t) {
            solved_steps.push_back(solver.solve(
                per_sample_grad(clone, test.states[t], test.actions[t], LossKind::Mse)));
        }
        FlatVec q_prop(clone.shape().param_count(), 0.0);
        for (std::size_t t = 0; t < test.states.size(); ++t) {
            per_sample_grad_accum(clone, test.states[t], test.actions[t], LossKind::Mse,
                                  wts.w[t], q_prop);
        }
        const FlatVec s_prop = solver.solve(q_prop);
        for (const Trajectory& demo : data.demos) {
            const FlatVec g = demo_grad(clone, demo, LossKind::Mse);
            double max_it = 0.0;
            for (const FlatVec& s : solved_steps) max_it = std::max(max_it, std::abs(-dot(s, g)));
            const double i_prop = -dot(s_prop, g);
            const double bound = propagated_bound(C, c, cfg.gamma, max_it);
            tightest = std::min(tightest, bound - std::abs(i_prop));
            if (std::abs(i_prop) > bound) bound_ok = false;
        }
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "weights vs matrix powers %.2e < 1e-10; bound slack >= %.2e on 3 seeds", worst,
                  tightest);
    report(5, "propagation weights are exact on linear plants and the stability bound holds",
           worst < 1e-10 && bound_ok, detail);
}

// ---------------------------------------------------------------------------
void criterion_6() {
    bool ok = true;
    double worst = 0.0;
    for (double gamma : {0.3, 0.5, 0.9, 0.99, 0.999}) {
        for (long T : {0L, 1L, 2L, 5L, 20L, 100L, 200L, 500L}) {
            double wsum = 0.0, tsum = 0.0, w = 1.0;
            for (long t = 0; t <= T; ++t) {
                wsum += w;
                tsum += static_cast<double>(t) * w;
                w *= gamma;
            }
            worst = std::max(worst, std::abs(effective_horizon(gamma, T) - tsum / wsum));
        }
    }
    ok = worst < 1e-9 && std::abs(effective_horizon(0.5, 1) - 1.0 / 3.0) < 1e-12;
    const double headline = effective_horizon(0.99, 200);
    char detail[200];
    std::snprintf(detail, sizeof(detail),
                  "grid diff %.2e < 1e-9; note: (0.99, 200) evaluates to %.2f, the quoted 85.7 "
                  "is a documented discrepancy, not a target",
                  worst, headline);
    report(6, "effective horizon equals the direct weighted-mean oracle", ok, detail);
}

// ---------------------------------------------------------------------------
void criterion_7() {
    const auto t0 = Clock::now();
    const auto env = make_env("pendulum");
    ProtocolConfig cfg;
    cfg.rates = {0.10};
    const DiagnosisResult res = run_diagnosis(*env, cfg);
    const double std_if = res.cells[1][0].mean;
    const double ifcps = res.cells[2][0].mean;
    const double secs = seconds_since(t0);
    const bool ok = ifcps >= 0.80 && ifcps > std_if && secs < 600.0;
    char detail[220];
    std::snprintf(detail, sizeof(detail),
                  "ifcps %.3f >= 0.80: %s; strictly > standard %.3f: %s; %.0f s < 600 s: %s",
                  ifcps, ifcps >= 0.80 ? "yes" : "NO", std_if, ifcps > std_if ? "yes" : "NO",
                  secs, secs < 600.0 ? "yes" : "NO");
    report(7, "diagnosis on pendulum at 10% poisoning", ok, detail);
}

// ---------------------------------------------------------------------------
void criterion_8() {
    const auto env = make_env("pendulum");
    ProtocolConfig cfg;
    const SafetyAttrResult res = run_safety_attr(*env, cfg);
    const double std_if = res.rho[1].mean;
    const double ifcps = res.rho[3].mean;
    char detail[120];
    std::snprintf(detail, sizeof(detail), "ifcps rho %.3f > standard rho %.3f and > 0.2", ifcps,
                  std_if);
    report(8, "safety attribution on pendulum", ifcps > std_if && ifcps > 0.2, detail);
}

// ---------------------------------------------------------------------------
void criterion_9() {
    const auto env = make_env("quadrotor");
    ProtocolConfig cfg;
    const CurationResult res = run_curation(*env, cfg, 0);
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "detected %d/%d >= 16/20; curated max violation %.3f <= poisoned %.3f",
                  res.detected, res.poisoned_total, res.curated_violation,
                  res.poisoned_violation);
    report(9, "curation on quadrotor at 20% poisoning",
           res.poisoned_total == 20 && res.detected >= 16 &&
               res.curated_violation <= res.poisoned_violation,
           detail);
}

// ---------------------------------------------------------------------------
void criterion_10() {
    bool ok = sigmoid(0.0) == 0.5;
    for (double beta : {1.0, 10.0, 100.0}) {
        const double bound = std::log(2.0) / beta;
        for (double s = -5.0; s <= 5.0; s += 0.005) {
            if (std::abs(softplus(beta, s) - std::max(s, 0.0)) > bound) ok = false;
        }
    }
    report(10, "softplus stays within ln2/beta of the hinge; sigmoid(0) is exactly 1/2", ok,
           "grid s in [-5, 5], beta in {1, 10, 100}");
}

// ---------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void criterion_11() {
    const fs::path base = fs::temp_directory_path() / "ifcps_acceptance_det";
    fs::remove_all(base);
    RunConfig cfg = parse_config(R"({
        "env": "pendulum", "protocol": "diagnosis", "n_demos": 12, "seeds": [0],
        "rates": [0.25], "max_epochs": 15, "patience": 5, "hidden": 16,
        "test_rollouts": 2, "lissa_batch": 64})");
    cfg.out_dir = (base / "a").string();
    run(cfg);
    cfg.out_dir = (base / "b").string();
    run(cfg);
    const bool same_diag = slurp(base / "a" / "diagnosis.csv") == slurp(base / "b" / "diagnosis.csv");
    const bool same_cell = slurp(base / "a" / "cell_rate0.25_seed0" / "influence.csv") ==
                           slurp(base / "b" / "cell_rate0.25_seed0" / "influence.csv");
    const bool same_data = slurp(base / "a" / "cell_rate0.25_seed0" / "dataset.json") ==
                           slurp(base / "b" / "cell_rate0.25_seed0" / "dataset.json");
    fs::remove_all(base);
    report(11, "identical configs produce byte-identical result files",
           same_diag && same_cell && same_data, "diagnosis.csv, influence.csv, dataset.json");
}

} // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    if (g_failures == 0) {
        std::printf("acceptance: all 11 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) failed\n", g_failures);
    return 1;
}
