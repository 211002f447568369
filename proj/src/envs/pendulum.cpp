#include <algorithm>
#include <cmath>

#include "factory.hpp"
#include "ifcps/lqr.hpp"

namespace ifcps {

namespace {

// Inverted pendulum near the upright target (angle 0 = upright, gravity
// destabilizing). State is the circle encoding (cos a, sin a, rate).
class PendulumEnv final : public Environment {
public:
    static constexpr double kGravity = 9.81;
    static constexpr double kLength = 1.0;
    static constexpr double kMass = 1.0;
    static constexpr double kMaxTorque = 8.0;
    static constexpr double kMaxRate = 0.8;
    static constexpr double kBrakeRate = 0.72; // expert's own rate ceiling

    PendulumEnv() {
        spec_.name = "pendulum";
        spec_.state_dim = 3;
        spec_.action_dim = 1;
        spec_.action_kind = ActionKind::Continuous;
        spec_.ctrl_dim = 1;
        spec_.dt = 0.05;
        spec_.horizon = 80;
        spec_.constraint_labels = {"rate_upper", "rate_lower"};
        spec_.action_range = {{-kMaxTorque, kMaxTorque}};
    }

    FlatVec step_ctrl(const FlatVec& x, const FlatVec& u) const override {
        const double c = x[0], s = x[1], w = x[2];
        const double angle = std::atan2(s, c);
        const double acc = kGravity / kLength * s +
                           u.at(0) / (kMass * kLength * kLength);
        const double angle_next = angle + spec_.dt * w;
        return {std::cos(angle_next), std::sin(angle_next), w + spec_.dt * acc};
    }

    void dynamics_jacobians(const FlatVec& x, const FlatVec&, DenseMat& A,
                            DenseMat& B) const override {
        const double c = x[0], s = x[1], w = x[2];
        const double r2 = c * c + s * s;
        const double da_dc = -s / r2;
        const double da_ds = c / r2;
        const double angle_next = std::atan2(s, c) + spec_.dt * w;
        const double cn = std::cos(angle_next), sn = std::sin(angle_next);

        A = DenseMat(3, 3);
        A(0, 0) = -sn * da_dc;
        A(0, 1) = -sn * da_ds;
        A(0, 2) = -sn * spec_.dt;
        A(1, 0) = cn * da_dc;
        A(1, 1) = cn * da_ds;
        A(1, 2) = cn * spec_.dt;
        A(2, 1) = spec_.dt * kGravity / kLength;
        A(2, 2) = 1.0;

        B = DenseMat(3, 1);
        B(2, 0) = spec_.dt / (kMass * kLength * kLength);
    }

    FlatVec constraint_values(const FlatVec& x) const override {
        return {x[2] - kMaxRate, -x[2] - kMaxRate};
    }

    DenseMat constraint_gradients(const FlatVec&) const override {
        DenseMat G(2, 3);
        G(0, 2) = 1.0;
        G(1, 2) = -1.0;
        return G;
    }

    std::unique_ptr<Expert> make_expert() const override;

    FlatVec sample_initial_state(Rng& rng) const override {
        const double angle = rng.uniform(-0.7, 0.7);
        const double rate = rng.uniform(-0.3, 0.3);
        return {std::cos(angle), std::sin(angle), rate};
    }

    DenseMat lqr_gain() const {
        DenseMat A(2, 2), B(2, 1), Q(2, 2), R(1, 1);
        A(0, 0) = 1.0;
        A(0, 1) = spec_.dt;
        A(1, 0) = spec_.dt * kGravity / kLength;
        A(1, 1) = 1.0;
        B(1, 0) = spec_.dt / (kMass * kLength * kLength);
        Q(0, 0) = 20.0;
        Q(1, 1) = 2.0;
        R(0, 0) = 1.0;
        return dlqr_gain(A, B, Q, R);
    }
};

// Energy shaping away from the top, local LQR catch near it.
class PendulumExpert final : public Expert {
public:
    PendulumExpert(const PendulumEnv& env) : gain_(env.lqr_gain()), dt_(env.spec().dt) {}

    FlatVec action(const FlatVec& x) override {
        const double c = x[0], s = x[1], w = x[2];
        const double angle = std::atan2(s, c);
        const double ml2 = PendulumEnv::kMass * PendulumEnv::kLength * PendulumEnv::kLength;
        double u;
        if (std::abs(angle) <= 1.0) {
            u = -(gain_(0, 0) * angle + gain_(0, 1) * w);
        } else {
            const double mgl = PendulumEnv::kMass * PendulumEnv::kGravity * PendulumEnv::kLength;
            const double energy = 0.5 * ml2 * w * w + mgl * std::cos(angle);
            const double gap = mgl - energy;
            u = 1.5 * gap * w;
            if (std::abs(w) < 1e-3 && gap > 0.0) u = (angle >= 0.0 ? 1.0 : -1.0) * PendulumEnv::kMaxTorque;
        }
        // One-step rate corridor: keep the next-step rate inside the brake
        // ceiling, then respect the torque limit.
        const double accel_free = PendulumEnv::kGravity / PendulumEnv::kLength * s;
        const double hi = ml2 * ((PendulumEnv::kBrakeRate - w) / dt_ - accel_free);
        const double lo = ml2 * ((-PendulumEnv::kBrakeRate - w) / dt_ - accel_free);
        u = std::clamp(u, lo, hi);
        u = std::clamp(u, -PendulumEnv::kMaxTorque, PendulumEnv::kMaxTorque);
        return {u};
    }

private:
    DenseMat gain_;
    double dt_;
};

std::unique_ptr<Expert> PendulumEnv::make_expert() const {
    return std::make_unique<PendulumExpert>(*this);
}

} // namespace

std::unique_ptr<Environment> make_pendulum() { return std::make_unique<PendulumEnv>(); }

} // namespace ifcps
