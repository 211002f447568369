#include <algorithm>

#include "factory.hpp"
#include "ifcps/lqr.hpp"

namespace ifcps {

namespace {

// Four-zone RC thermal network on a ring, uniform ambient leak, one shared
// supply-power input split equally across zones. Linear plant.
class HvacEnv final : public Environment {
public:
    static constexpr double kAmbient = 10.0;
    static constexpr double kLeak = 0.04;
    static constexpr double kSupplyGain = 0.05;
    static constexpr double kSetpoint = 23.0;
    static constexpr double kLow = 20.0;
    static constexpr double kHigh = 26.0;
    static constexpr double kMaxPower = 24.0;

    HvacEnv() {
        spec_.name = "hvac";
        spec_.state_dim = 4;
        spec_.action_dim = 1;
        spec_.action_kind = ActionKind::Continuous;
        spec_.ctrl_dim = 1;
        spec_.dt = 0.5;
        spec_.horizon = 96;
        spec_.constraint_labels = {"z1_upper", "z1_lower", "z2_upper", "z2_lower",
                                   "z3_upper", "z3_lower", "z4_upper", "z4_lower"};
        spec_.action_range = {{0.0, kMaxPower}};

        // Ring couplings between adjacent zones.
        const double pair[4] = {0.08, 0.06, 0.07, 0.05}; // (0,1) (1,2) (2,3) (3,0)
        coupling_ = DenseMat(4, 4);
        for (int i = 0; i < 4; ++i) {
            const int j = (i + 1) % 4;
            coupling_(i, j) += pair[i];
            coupling_(j, i) += pair[i];
        }
        for (int i = 0; i < 4; ++i) {
            double row = 0.0;
            for (int j = 0; j < 4; ++j) row += coupling_(i, j);
            coupling_(i, i) = -(row + kLeak);
        }
    }

    FlatVec step_ctrl(const FlatVec& x, const FlatVec& u) const override {
        FlatVec rate = matvec(coupling_, x);
        FlatVec next(4);
        for (int i = 0; i < 4; ++i) {
            next[i] = x[i] + spec_.dt * (rate[i] + kLeak * kAmbient + kSupplyGain * u.at(0));
        }
        return next;
    }

    void dynamics_jacobians(const FlatVec&, const FlatVec&, DenseMat& A,
                            DenseMat& B) const override {
        A = DenseMat::identity(4);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) A(i, j) += spec_.dt * coupling_(i, j);
        }
        B = DenseMat(4, 1);
        for (int i = 0; i < 4; ++i) B(i, 0) = spec_.dt * kSupplyGain;
    }

    FlatVec constraint_values(const FlatVec& x) const override {
        FlatVec g(8);
        for (int i = 0; i < 4; ++i) {
            g[2 * i] = x[i] - kHigh;
            g[2 * i + 1] = kLow - x[i];
        }
        return g;
    }

    DenseMat constraint_gradients(const FlatVec&) const override {
        DenseMat G(8, 4);
        for (int i = 0; i < 4; ++i) {
            G(2 * i, i) = 1.0;
            G(2 * i + 1, i) = -1.0;
        }
        return G;
    }

    std::unique_ptr<Expert> make_expert() const override;

    FlatVec sample_initial_state(Rng& rng) const override {
        FlatVec x(4);
        for (double& t : x) t = rng.uniform(21.5, 24.5);
        return x;
    }

    DenseMat lqr_gain() const {
        DenseMat A, B;
        dynamics_jacobians({}, {}, A, B);
        DenseMat Q = DenseMat::identity(4), R(1, 1);
        R(0, 0) = 0.2;
        return dlqr_gain(A, B, Q, R);
    }

    // Supply power holding the uniform setpoint against the ambient leak.
    static double feedforward() { return kLeak * (kSetpoint - kAmbient) / kSupplyGain; }

private:
    DenseMat coupling_;
};

class HvacExpert final : public Expert {
public:
    explicit HvacExpert(const HvacEnv& env) : gain_(env.lqr_gain()) {}

    FlatVec action(const FlatVec& x) override {
        double u = HvacEnv::feedforward();
        for (std::size_t i = 0; i < 4; ++i) u -= gain_(0, i) * (x[i] - HvacEnv::kSetpoint);
        return {std::clamp(u, 0.0, HvacEnv::kMaxPower)};
    }

private:
    DenseMat gain_;
};

std::unique_ptr<Expert> HvacEnv::make_expert() const {
    return std::make_unique<HvacExpert>(*this);
}

} // namespace

std::unique_ptr<Environment> make_hvac() { return std::make_unique<HvacEnv>(); }

} // namespace ifcps
