#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ifcps/linalg.hpp"
#include "ifcps/rng.hpp"

namespace ifcps {

enum class LossKind { Mse, CrossEntropy };

struct MlpShape {
    std::size_t in = 0;
    std::size_t hidden = 64;
    std::size_t out = 0;

    std::size_t param_count() const { return hidden * in + hidden + out * hidden + out; }
    bool operator==(const MlpShape&) const = default;
};

// Two-layer ReLU network y = W2 * relu(W1 x + b1) + b2. Canonical flattening
// order: W1 row-major, b1, W2 row-major, b2.
struct MlpParams {
    DenseMat W1; // hidden x in
    FlatVec b1;  // hidden
    DenseMat W2; // out x hidden
    FlatVec b2;  // out

    MlpParams() = default;
    explicit MlpParams(MlpShape s)
        : W1(s.hidden, s.in), b1(s.hidden, 0.0), W2(s.out, s.hidden), b2(s.out, 0.0) {}

    MlpShape shape() const { return {W1.cols(), W1.rows(), W2.rows()}; }
};

FlatVec flatten(const MlpParams& p);
MlpParams unflatten(MlpShape shape, const FlatVec& flat);

// Scaled-uniform init, fan-in based, deterministic under the given stream.
MlpParams random_init(MlpShape shape, Rng& rng);

FlatVec mlp_forward(const MlpParams& p, const FlatVec& x);

// Loss of a single (x, u) pair. MSE is (1/out)*||y - u||^2; cross-entropy
// treats u[0] as the target class index over the output logits.
double sample_loss(const MlpParams& p, const FlatVec& x, const FlatVec& u, LossKind kind);

// grad += w * d(sample_loss)/d(params), canonical flattening order.
void per_sample_grad_accum(const MlpParams& p, const FlatVec& x, const FlatVec& u,
                           LossKind kind, double w, FlatVec& grad);

FlatVec per_sample_grad(const MlpParams& p, const FlatVec& x, const FlatVec& u, LossKind kind);

// grad += w * (dy/dtheta)^T dy for an arbitrary output cotangent dy.
void backward_from_output(const MlpParams& p, const FlatVec& x, const FlatVec& dy,
                          double w, FlatVec& grad);

// Jacobian of the network output with respect to x, out x in.
DenseMat output_input_jacobian(const MlpParams& p, const FlatVec& x);

struct Sample {
    FlatVec x;
    FlatVec u;
    int demo = -1; // provenance: demonstration index
    int step = -1; // provenance: timestep within the demonstration
};

// H v for H the Hessian of the mean loss over the batch, via Pearlmutter's
// forward-over-reverse pass. ReLU curvature is zero; the subgradient at 0 is
// taken as 0, so this is the exact Hessian of the piecewise-linear network
// away from kinks.
FlatVec loss_hvp(const MlpParams& p, std::span<const Sample> batch, LossKind kind,
                 const FlatVec& v);
FlatVec loss_hvp(const MlpParams& p, const std::vector<Sample>& samples,
                 const std::vector<std::size_t>& indices, LossKind kind, const FlatVec& v);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    FlatVec m;
    FlatVec v;
    long step = 0;
    AdamConfig cfg;
};

AdamState make_adam(std::size_t n, AdamConfig cfg = {});

// One bias-corrected Adam update, in place; advances state by one step.
void adam_step(AdamState& state, FlatVec& params, const FlatVec& grad);

} // namespace ifcps
