#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ifcps/bc.hpp"
#include "ifcps/env.hpp"
#include "ifcps/influence.hpp"
#include "ifcps/metrics.hpp"

namespace ifcps {

struct ProtocolConfig {
    int n_demos = 100;
    FaultModel fault = FaultModel::ActionNoise;
    int test_rollouts = 5; // candidate failure rollouts per cell
    double removal_budget = 0.30;
    std::vector<double> rates = {0.05, 0.10, 0.15, 0.20};
    std::vector<std::uint64_t> seeds = {0, 1, 2};
    TrainConfig train;
    InfluenceConfig influence;
};

// The rollout with the largest max violation among test_rollouts seeded
// starts (diverged rollouts rank worst of all), relabeled with expert
// reference actions along the visited states.
Trajectory select_failure_trajectory(const Environment& env, const MlpParams& params,
                                     int test_rollouts, std::uint64_t seed);

// One (rate, seed) pipeline: generate -> poison -> train -> pick failure
// trajectory -> score all variants. rate <= 0 skips poisoning.
struct ScoredCell {
    Dataset data;       // the (possibly poisoned) training set
    MlpParams params;   // trained controller
    Trajectory test;    // expert-relabeled failure trajectory
    InfluenceReport report;
    std::vector<double> random_scores;
};

ScoredCell score_cell(const Environment& env, double rate, std::uint64_t seed,
                      const ProtocolConfig& cfg);

// Invoked once per scored (rate, seed) cell; used to persist artifacts.
using CellObserver = std::function<void(double rate, std::uint64_t seed, const ScoredCell&)>;

struct DiagnosisResult {
    std::string env;
    std::vector<double> rates;
    std::vector<std::string> methods;          // random, standard_if, ifcps
    std::vector<std::vector<SeedStats>> cells; // [method][rate]
};

DiagnosisResult run_diagnosis(const Environment& env, const ProtocolConfig& cfg,
                              const CellObserver& observe = {});

struct CurationResult {
    std::string env;
    int poisoned_total = 0;
    int removed = 0;
    int detected = 0; // poisoned demos inside the removed set
    double score_min = 0.0, score_max = 0.0;
    double poisoned_violation = 0.0, curated_violation = 0.0, expert_violation = 0.0;
    double poisoned_tracking = 0.0, curated_tracking = 0.0;
    MlpParams curated_params;
    Trajectory expert_demo, poisoned_demo, curated_demo; // shared start, for plot data
};

// Poison at 20%, score, remove the top removal_budget fraction by combined
// score, retrain, compare closed-loop quality over 5 evaluation rollouts.
CurationResult run_curation(const Environment& env, const ProtocolConfig& cfg,
                            std::uint64_t seed, const CellObserver& observe = {});

struct SafetyAttrResult {
    std::string env;
    std::vector<std::string> methods; // random, standard_if, safety_if, ifcps
    std::vector<SeedStats> rho;
};

// Clean training; Spearman rank correlation between attribution magnitude
// and each demo's boundary proximity (negated minimum signed distance).
SafetyAttrResult run_safety_attr(const Environment& env, const ProtocolConfig& cfg,
                                 const CellObserver& observe = {});

struct AblationResult {
    std::string env;
    std::vector<std::string> variants; // ifcps_full, safety_only, trajectory_only,
                                       // propagated_only, standard_if
    std::vector<SeedStats> auroc;
};

// Diagnosis at 10% poisoning with each variant's scores alone plus the
// ensemble.
AblationResult run_ablation(const Environment& env, const ProtocolConfig& cfg,
                            const CellObserver& observe = {});

// Convex fixture for validating influence scores against exact
// leave-one-out retraining.
struct RidgeProblem {
    DenseMat X; // M x d design
    FlatVec y;  // M targets
    double reg = 0.1;
    FlatVec x_test;
    double y_test = 0.0;
};

RidgeProblem make_ridge_fixture(int points, int dim, std::uint64_t seed);

// Minimizer of mean squared residual (excluding one optional point) plus
// reg*||w||^2, in closed form.
FlatVec ridge_fit(const RidgeProblem& prob, int exclude_index = -1);

double ridge_test_loss(const RidgeProblem& prob, const FlatVec& w);

// Exact change in the test objective after retraining without each point.
std::vector<double> loo_oracle(const RidgeProblem& prob);

// Influence scores on the same convex problem (positive = harmful).
std::vector<double> ridge_if_scores(const RidgeProblem& prob);

} // namespace ifcps
