#include <algorithm>
#include <cmath>

#include "factory.hpp"

namespace ifcps {

namespace {

// Exothermic continuous stirred-tank reactor with a first-order coolant
// jacket. State (C_A, T_r, T_c); the action commands the coolant temperature.
// RK4 integration: the reaction heat term is stiff near the operating point.
class CstrEnv final : public Environment {
public:
    static constexpr double kFlow = 1.0;        // q/V, 1/min
    static constexpr double kFeedConc = 1.0;    // mol/L
    static constexpr double kFeedTemp = 350.0;  // K
    static constexpr double kArrhenius = 7.2e10;
    static constexpr double kActivation = 8750.0; // E/R, K
    static constexpr double kHeatRise = 50000.0 / 239.0;     // (-dH)/(rho cp)
    static constexpr double kJacketCoupling = 500.0 / 239.0; // UA/(V rho cp)
    static constexpr double kJacketLag = 0.15;  // min
    static constexpr double kSetpoint = 350.0;
    static constexpr double kNominalCoolant = 300.0;
    static constexpr double kTempCeiling = 400.0;
    static constexpr double kTempFloor = 300.0;
    static constexpr double kConcCeiling = 0.9;
    static constexpr double kCoolantLow = 250.0;
    static constexpr double kCoolantHigh = 350.0;

    CstrEnv() {
        spec_.name = "cstr";
        spec_.state_dim = 3;
        spec_.action_dim = 1;
        spec_.action_kind = ActionKind::Continuous;
        spec_.ctrl_dim = 1;
        spec_.dt = 0.05;
        spec_.horizon = 120;
        spec_.constraint_labels = {"reactor_temp_upper", "conc_upper", "reactor_temp_lower"};
        spec_.action_range = {{kCoolantLow, kCoolantHigh}};
    }

    static FlatVec ode(const FlatVec& x, double u) {
        const double ca = x[0], tr = x[1], tc = x[2];
        const double k = kArrhenius * std::exp(-kActivation / tr);
        return {kFlow * (kFeedConc - ca) - k * ca,
                kFlow * (kFeedTemp - tr) + kHeatRise * k * ca + kJacketCoupling * (tc - tr),
                (u - tc) / kJacketLag};
    }

    static void ode_jacobians(const FlatVec& x, DenseMat& Jx, FlatVec& Ju) {
        const double ca = x[0], tr = x[1];
        const double k = kArrhenius * std::exp(-kActivation / tr);
        const double kprime = k * kActivation / (tr * tr);
        Jx = DenseMat(3, 3);
        Jx(0, 0) = -kFlow - k;
        Jx(0, 1) = -kprime * ca;
        Jx(1, 0) = kHeatRise * k;
        Jx(1, 1) = -kFlow + kHeatRise * kprime * ca - kJacketCoupling;
        Jx(1, 2) = kJacketCoupling;
        Jx(2, 2) = -1.0 / kJacketLag;
        Ju = {0.0, 0.0, 1.0 / kJacketLag};
    }

    FlatVec step_ctrl(const FlatVec& x, const FlatVec& u) const override {
        const double uc = u.at(0);
        const double h = spec_.dt;
        const FlatVec k1 = ode(x, uc);
        const FlatVec k2 = ode(shift(x, k1, h / 2.0), uc);
        const FlatVec k3 = ode(shift(x, k2, h / 2.0), uc);
        const FlatVec k4 = ode(shift(x, k3, h), uc);
        FlatVec next(3);
        for (int i = 0; i < 3; ++i) {
            next[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        return next;
    }

    void dynamics_jacobians(const FlatVec& x, const FlatVec& u, DenseMat& A,
                            DenseMat& B) const override {
        const double uc = u.at(0);
        const double h = spec_.dt;

        const FlatVec k1 = ode(x, uc);
        const FlatVec x2 = shift(x, k1, h / 2.0);
        const FlatVec k2 = ode(x2, uc);
        const FlatVec x3 = shift(x, k2, h / 2.0);
        const FlatVec k3 = ode(x3, uc);
        const FlatVec x4 = shift(x, k3, h);

        DenseMat J1, J2, J3, J4;
        FlatVec g1, g2, g3, g4;
        ode_jacobians(x, J1, g1);
        ode_jacobians(x2, J2, g2);
        ode_jacobians(x3, J3, g3);
        ode_jacobians(x4, J4, g4);

        // Stage sensitivities: Di = d k_i / dx, Ei = d k_i / du.
        const DenseMat I = DenseMat::identity(3);
        DenseMat D1 = J1;
        DenseMat D2 = matmul(J2, add_scaled(I, D1, h / 2.0));
        DenseMat D3 = matmul(J3, add_scaled(I, D2, h / 2.0));
        DenseMat D4 = matmul(J4, add_scaled(I, D3, h));

        FlatVec E1 = g1;
        FlatVec E2 = stage_u(J2, E1, g2, h / 2.0);
        FlatVec E3 = stage_u(J3, E2, g3, h / 2.0);
        FlatVec E4 = stage_u(J4, E3, g4, h);

        A = I;
        B = DenseMat(3, 1);
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                A(r, c) += h / 6.0 * (D1(r, c) + 2.0 * D2(r, c) + 2.0 * D3(r, c) + D4(r, c));
            }
            B(r, 0) = h / 6.0 * (E1[r] + 2.0 * E2[r] + 2.0 * E3[r] + E4[r]);
        }
    }

    FlatVec constraint_values(const FlatVec& x) const override {
        return {x[1] - kTempCeiling, x[0] - kConcCeiling, kTempFloor - x[1]};
    }

    DenseMat constraint_gradients(const FlatVec&) const override {
        DenseMat G(3, 3);
        G(0, 1) = 1.0;
        G(1, 0) = 1.0;
        G(2, 1) = -1.0;
        return G;
    }

    std::unique_ptr<Expert> make_expert() const override;

    FlatVec sample_initial_state(Rng& rng) const override {
        return {rng.uniform(0.45, 0.55), rng.uniform(346.0, 354.0), rng.uniform(296.0, 304.0)};
    }

private:
    static FlatVec shift(const FlatVec& x, const FlatVec& k, double h) {
        return {x[0] + h * k[0], x[1] + h * k[1], x[2] + h * k[2]};
    }

    static DenseMat add_scaled(const DenseMat& I, const DenseMat& D, double h) {
        DenseMat out = I;
        for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += h * D.data()[i];
        return out;
    }

    static FlatVec stage_u(const DenseMat& J, const FlatVec& Eprev, const FlatVec& g, double h) {
        FlatVec e(3);
        for (int r = 0; r < 3; ++r) {
            e[r] = g[r];
            for (int c = 0; c < 3; ++c) e[r] += J(r, c) * h * Eprev[c];
        }
        return e;
    }
};

// PI regulation of reactor temperature through the commanded coolant value.
class CstrExpert final : public Expert {
public:
    explicit CstrExpert(double dt) : dt_(dt) {}

    void reset() override { integral_ = 0.0; }

    FlatVec action(const FlatVec& x) override {
        const double err = CstrEnv::kSetpoint - x[1];
        const double u = CstrEnv::kNominalCoolant + 10.0 * err + 1.0 * integral_;
        integral_ = std::clamp(integral_ + dt_ * err, -30.0, 30.0);
        return {std::clamp(u, CstrEnv::kCoolantLow, CstrEnv::kCoolantHigh)};
    }

private:
    double dt_;
    double integral_ = 0.0;
};

std::unique_ptr<Expert> CstrEnv::make_expert() const {
    return std::make_unique<CstrExpert>(spec_.dt);
}

} // namespace

std::unique_ptr<Environment> make_cstr() { return std::make_unique<CstrEnv>(); }

} // namespace ifcps
