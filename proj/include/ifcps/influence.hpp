#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ifcps/bc.hpp"
#include "ifcps/env.hpp"
#include "ifcps/mlp.hpp"

namespace ifcps {

struct InfluenceConfig {
    double beta = 10.0;   // soft-indicator sharpness for the safety objective
    double gamma = 0.99;  // temporal discount
    int horizon = 20;     // cap on the Jacobian-product length
    int lissa_rounds = 5; // recursion depth R
    double damping = 0.01;
    // Recursion scale; when unset, 0.9 / (estimated largest damped eigenvalue).
    std::optional<double> scale;
    int lissa_batch = 128;
    int lissa_repeats = 1; // optional repeat-and-average
    int power_iters = 50;  // eigenvalue estimation
    int power_sample = 4096;

    void validate() const; // throws ConfigError on out-of-range values
};

double sigmoid(double s);
// (1/beta) * log(1 + exp(beta * s)), overflow-safe.
double softplus(double beta, double s);

// Gradient of a demonstration's mean per-step loss (normalized by T+1 so
// demos of different lengths rank comparably).
FlatVec demo_grad(const MlpParams& params, const Trajectory& demo, LossKind kind);

// Damped Hessian-vector product on a caller-sampled minibatch.
using HvpFn = std::function<FlatVec(const FlatVec& v, Rng& rng)>;

// Truncated Neumann-series estimate of H~^{-1} v: R rounds of
// h <- scale*v + h - scale*H~h with minibatch H~ estimates. Throws
// NumericsError when an iterate goes non-finite (scale too large).
FlatVec lissa_ihvp(const FlatVec& v, const HvpFn& damped_hvp, double scale, int rounds,
                   int repeats, std::uint64_t seed);

// Largest eigenvalue of (H + damping I) by power iteration on a seeded
// subsample of at most power_sample pairs.
double damped_lambda_max(const MlpParams& params, const FlatDataset& flat, LossKind kind,
                         const InfluenceConfig& cfg, std::uint64_t seed);

// Dataset-backed LiSSA with a shared largest-eigenvalue estimate; one
// instance serves every test-side solve against the same trained parameters.
class LissaSolver {
public:
    LissaSolver(const MlpParams& params, const FlatDataset& flat, LossKind kind,
                InfluenceConfig cfg, std::uint64_t seed);

    FlatVec solve(const FlatVec& v) const;

    double lambda_max() const { return lambda_max_; }
    double scale() const { return scale_; }

private:
    const MlpParams& params_;
    const FlatDataset& flat_;
    LossKind kind_;
    InfluenceConfig cfg_;
    std::uint64_t seed_;
    double lambda_max_ = 0.0;
    double scale_ = 0.0;
};

// Test-side gradients. The test trajectory must carry reference actions
// (expert labels along the visited states) for the loss-based variants.
FlatVec standard_test_grad(const MlpParams& params, const Trajectory& test, LossKind kind);
FlatVec trajectory_test_grad(const MlpParams& params, const Trajectory& test, double gamma,
                             LossKind kind);

// Gradient of the smoothed constraint objective through one dynamics step:
// sum over t>=1, k of softplus_beta(g_k(f(x_{t-1}, pi(x_{t-1})))), where pi is
// the smoothed physical control. The t=0 term has no predecessor and is
// omitted.
FlatVec safety_test_grad(const MlpParams& params, const Environment& env,
                         const Trajectory& test, double beta);

struct TimestepWeights {
    std::vector<double> w; // one weight per timestep, all >= 0
};

// w_t = gamma^t * ||Phi(min(t, horizon), 0)||_2 with Phi the running product
// of closed-loop Jacobians along the test trajectory; the norm freezes at the
// horizon to control linearization error.
TimestepWeights propagation_weights(const Environment& env, const MlpParams& params,
                                    const Trajectory& test, double gamma, int horizon);

FlatVec propagated_test_grad(const MlpParams& params, const Environment& env,
                             const Trajectory& test, double gamma, int horizon, LossKind kind);

// score_i = -s^T g_i for the solved test side s; positive means upweighting
// demo i increases the test objective (harmful).
std::vector<double> variant_influence(const FlatVec& solved_test_side,
                                      const std::vector<FlatVec>& demo_grads);

struct MinMax {
    double lo = 0.0;
    double hi = 0.0;
};

// Min-max to [0, 1]; a constant list maps to all 0.5.
std::vector<double> minmax_normalize(const std::vector<double>& scores, MinMax* range = nullptr);

// Equal-weight ensemble of the three normalized CPS variants.
std::vector<double> combined_scores(const std::vector<double>& safety,
                                    const std::vector<double>& trajectory,
                                    const std::vector<double>& propagated);

// Mean timestep of the normalized discount weights over t = 0..T.
double effective_horizon(double gamma, long T);

// ||q|| * (||g_i|| / damping) * (1 - damping / lambda_max)^rounds.
double lissa_error_bound(double q_norm, double demo_grad_norm, double damping,
                         double lambda_max_damped, int rounds);

// C / (1 - gamma*c) * max_t |I_t| for a Schur-stable closed loop.
double propagated_bound(double C, double c, double gamma, double max_abs_it);

// Fits (C, c) with ||A^t|| <= C c^t over t = 0..t_max; throws NumericsError
// when the spectral radius estimate is >= 1.
std::pair<double, double> fit_power_envelope(const DenseMat& Acl, int t_max);

// Smoothed physical control: network output for continuous plants, the
// softmax-expected control vector for discrete plants.
FlatVec smoothed_ctrl(const Environment& env, const MlpParams& params, const FlatVec& x);
// Its Jacobian with respect to the state, ctrl_dim x n.
DenseMat ctrl_state_jacobian(const Environment& env, const MlpParams& params, const FlatVec& x);

struct InfluenceReport {
    std::vector<double> standard;
    std::vector<double> safety;
    std::vector<double> trajectory;
    std::vector<double> propagated;
    std::vector<double> combined;
    MinMax norm_safety, norm_trajectory, norm_propagated;
    InfluenceConfig config;
    std::string test_id;
};

// One shared eigenvalue estimate, one LiSSA solve per variant, N dot
// products per variant against cached demo gradients.
class InfluenceEngine {
public:
    InfluenceEngine(const Environment& env, const MlpParams& params, const Dataset& data,
                    InfluenceConfig cfg, std::uint64_t seed);

    InfluenceReport score(const Trajectory& test, const std::string& test_id = "") const;

    const std::vector<FlatVec>& demo_grads() const { return demo_grads_; }
    const LissaSolver& solver() const { return solver_; }

private:
    const Environment& env_;
    const MlpParams& params_;
    InfluenceConfig cfg_;
    LossKind kind_;
    FlatDataset flat_;
    std::vector<FlatVec> demo_grads_;
    LissaSolver solver_;
};

} // namespace ifcps
