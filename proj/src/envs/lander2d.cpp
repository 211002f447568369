#include <algorithm>
#include <cmath>

#include "factory.hpp"

namespace ifcps {

namespace {

// Planar rigid-body hover task: gravity, a body-axis main thruster and a
// torque pair, four discrete actions. State (px, py, vx, vy, angle, rate).
class Lander2DEnv final : public Environment {
public:
    static constexpr double kMass = 1.0;
    static constexpr double kInertia = 1.0;
    static constexpr double kGravity = 1.5;
    static constexpr double kMainThrust = 3.0;
    static constexpr double kTorque = 1.0;
    static constexpr double kAngleBound = 0.45;
    static constexpr double kMinAltitude = 0.5;
    static constexpr double kRefAltitude = 5.0;

    Lander2DEnv() {
        spec_.name = "lander2d";
        spec_.state_dim = 6;
        spec_.action_dim = 1;
        spec_.action_kind = ActionKind::Discrete;
        spec_.num_actions = 4; // nop, torque+, main, torque-
        spec_.ctrl_dim = 2;    // (thrust, torque)
        spec_.dt = 0.05;
        spec_.horizon = 120;
        spec_.constraint_labels = {"altitude", "angle_upper", "angle_lower"};
    }

    FlatVec ctrl_of_action(int action) const override {
        switch (action) {
            case 1: return {0.0, kTorque};
            case 2: return {kMainThrust, 0.0};
            case 3: return {0.0, -kTorque};
            default: return {0.0, 0.0};
        }
    }

    FlatVec step_ctrl(const FlatVec& x, const FlatVec& u) const override {
        const double thrust = u.at(0), torque = u.at(1);
        const double th = x[4];
        const double ax = -thrust * std::sin(th) / kMass;
        const double ay = thrust * std::cos(th) / kMass - kGravity;
        return {x[0] + spec_.dt * x[2], x[1] + spec_.dt * x[3],
                x[2] + spec_.dt * ax,  x[3] + spec_.dt * ay,
                x[4] + spec_.dt * x[5], x[5] + spec_.dt * torque / kInertia};
    }

    void dynamics_jacobians(const FlatVec& x, const FlatVec& u, DenseMat& A,
                            DenseMat& B) const override {
        const double thrust = u.at(0);
        const double th = x[4];
        const double s = std::sin(th), c = std::cos(th);
        A = DenseMat::identity(6);
        A(0, 2) = spec_.dt;
        A(1, 3) = spec_.dt;
        A(2, 4) = spec_.dt * (-thrust * c / kMass);
        A(3, 4) = spec_.dt * (-thrust * s / kMass);
        A(4, 5) = spec_.dt;
        B = DenseMat(6, 2);
        B(2, 0) = spec_.dt * (-s / kMass);
        B(3, 0) = spec_.dt * (c / kMass);
        B(5, 1) = spec_.dt / kInertia;
    }

    FlatVec constraint_values(const FlatVec& x) const override {
        return {kMinAltitude - x[1], x[4] - kAngleBound, -x[4] - kAngleBound};
    }

    DenseMat constraint_gradients(const FlatVec&) const override {
        DenseMat G(3, 6);
        G(0, 1) = -1.0;
        G(1, 4) = 1.0;
        G(2, 4) = -1.0;
        return G;
    }

    std::unique_ptr<Expert> make_expert() const override;

    FlatVec sample_initial_state(Rng& rng) const override {
        return {rng.uniform(-1.0, 1.0),  rng.uniform(4.5, 5.5),
                rng.uniform(-0.2, 0.2),  rng.uniform(-0.2, 0.2),
                rng.uniform(-0.08, 0.08), rng.uniform(-0.05, 0.05)};
    }
};

// Attitude-first priority rule: side thrusters when the torque demand is
// outside the deadband, main engine duty-cycled on the vertical demand.
class Lander2DExpert final : public Expert {
public:
    FlatVec action(const FlatVec& x) override {
        const double px = x[0], py = x[1], vx = x[2], vy = x[3], th = x[4], w = x[5];
        const double th_des =
            std::clamp((0.3 * px + 0.7 * vx) / Lander2DEnv::kGravity, -0.15, 0.15);
        const double torque_des = 6.0 * (th_des - th) - 8.0 * w;
        const double ay_des =
            Lander2DEnv::kGravity + 0.8 * (Lander2DEnv::kRefAltitude - py) - 1.8 * vy;
        if (std::abs(torque_des) > 0.25) return {torque_des > 0.0 ? 1.0 : 3.0};
        if (ay_des > 0.5 * Lander2DEnv::kMainThrust) return {2.0};
        return {0.0};
    }
};

std::unique_ptr<Expert> Lander2DEnv::make_expert() const {
    return std::make_unique<Lander2DExpert>();
}

} // namespace

std::unique_ptr<Environment> make_lander2d() { return std::make_unique<Lander2DEnv>(); }

} // namespace ifcps
