#include <algorithm>

#include "factory.hpp"
#include "ifcps/lqr.hpp"

namespace ifcps {

namespace {

// Point-mass quadrotor: 3-D double integrator, acceleration command,
// position box constraints, hover reference. State (p, v) in R^6.
class QuadrotorEnv final : public Environment {
public:
    static constexpr double kMaxAccel = 5.0;
    static constexpr double kLateralBound = 3.0;
    static constexpr double kCeiling = 4.0;
    static constexpr double kFloor = 0.2;
    static constexpr double kHoverZ = 2.0;

    QuadrotorEnv() {
        spec_.name = "quadrotor";
        spec_.state_dim = 6;
        spec_.action_dim = 3;
        spec_.action_kind = ActionKind::Continuous;
        spec_.ctrl_dim = 3;
        spec_.dt = 0.05;
        spec_.horizon = 100;
        spec_.constraint_labels = {"x_upper", "x_lower", "y_upper",
                                   "y_lower", "z_upper", "z_lower"};
        spec_.action_range = {{-kMaxAccel, kMaxAccel},
                              {-kMaxAccel, kMaxAccel},
                              {-kMaxAccel, kMaxAccel}};
    }

    FlatVec step_ctrl(const FlatVec& x, const FlatVec& u) const override {
        FlatVec next(6);
        for (int i = 0; i < 3; ++i) {
            next[i] = x[i] + spec_.dt * x[i + 3];
            next[i + 3] = x[i + 3] + spec_.dt * u.at(i);
        }
        return next;
    }

    void dynamics_jacobians(const FlatVec&, const FlatVec&, DenseMat& A,
                            DenseMat& B) const override {
        A = DenseMat::identity(6);
        B = DenseMat(6, 3);
        for (int i = 0; i < 3; ++i) {
            A(i, i + 3) = spec_.dt;
            B(i + 3, i) = spec_.dt;
        }
    }

    FlatVec constraint_values(const FlatVec& x) const override {
        return {x[0] - kLateralBound, -x[0] - kLateralBound,
                x[1] - kLateralBound, -x[1] - kLateralBound,
                x[2] - kCeiling,      kFloor - x[2]};
    }

    DenseMat constraint_gradients(const FlatVec&) const override {
        DenseMat G(6, 6);
        G(0, 0) = 1.0;
        G(1, 0) = -1.0;
        G(2, 1) = 1.0;
        G(3, 1) = -1.0;
        G(4, 2) = 1.0;
        G(5, 2) = -1.0;
        return G;
    }

    std::unique_ptr<Expert> make_expert() const override;

    FlatVec sample_initial_state(Rng& rng) const override {
        return {rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2),
                kHoverZ + rng.uniform(-1.0, 1.0), rng.uniform(-0.3, 0.3),
                rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
    }

    DenseMat lqr_gain() const {
        DenseMat A, B;
        dynamics_jacobians({}, {}, A, B);
        DenseMat Q(6, 6), R(3, 3);
        for (int i = 0; i < 3; ++i) {
            Q(i, i) = 4.0;
            Q(i + 3, i + 3) = 1.0;
            R(i, i) = 0.5;
        }
        return dlqr_gain(A, B, Q, R);
    }
};

class QuadrotorExpert final : public Expert {
public:
    explicit QuadrotorExpert(const QuadrotorEnv& env) : gain_(env.lqr_gain()) {}

    FlatVec action(const FlatVec& x) override {
        FlatVec err = {x[0], x[1], x[2] - QuadrotorEnv::kHoverZ, x[3], x[4], x[5]};
        FlatVec u(3, 0.0);
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 6; ++j) u[i] -= gain_(i, j) * err[j];
            u[i] = std::clamp(u[i], -QuadrotorEnv::kMaxAccel, QuadrotorEnv::kMaxAccel);
        }
        return u;
    }

private:
    DenseMat gain_;
};

std::unique_ptr<Expert> QuadrotorEnv::make_expert() const {
    return std::make_unique<QuadrotorExpert>(*this);
}

} // namespace

std::unique_ptr<Environment> make_quadrotor() { return std::make_unique<QuadrotorEnv>(); }

} // namespace ifcps
