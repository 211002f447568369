#include <algorithm>
#include <cmath>

#include "factory.hpp"
#include "ifcps/lqr.hpp"

namespace ifcps {

namespace {

// Cart-pole with the standard pole-on-cart ODE, explicit Euler, bang-bang
// force from a two-way discrete action. State (x, v, angle, rate).
class CartPoleEnv final : public Environment {
public:
    static constexpr double kGravity = 9.81;
    static constexpr double kMassCart = 1.0;
    static constexpr double kMassPole = 0.1;
    static constexpr double kHalfPole = 0.5;
    static constexpr double kForce = 10.0;
    static constexpr double kAngleBound = 0.21;
    static constexpr double kPosBound = 2.4;

    CartPoleEnv() {
        spec_.name = "cartpole";
        spec_.state_dim = 4;
        spec_.action_dim = 1;
        spec_.action_kind = ActionKind::Discrete;
        spec_.num_actions = 2;
        spec_.ctrl_dim = 1;
        spec_.dt = 0.02;
        spec_.horizon = 150;
        spec_.constraint_labels = {"angle_upper", "angle_lower", "pos_upper", "pos_lower"};
    }

    FlatVec ctrl_of_action(int action) const override {
        return {action == 1 ? kForce : -kForce};
    }

    FlatVec step_ctrl(const FlatVec& x, const FlatVec& u) const override {
        const double force = u.at(0);
        const double v = x[1], th = x[2], w = x[3];
        const double s = std::sin(th), c = std::cos(th);
        const double mtot = kMassCart + kMassPole;
        const double tmp = (force + kMassPole * kHalfPole * w * w * s) / mtot;
        const double denom = kHalfPole * (4.0 / 3.0 - kMassPole * c * c / mtot);
        const double th_acc = (kGravity * s - c * tmp) / denom;
        const double x_acc = tmp - kMassPole * kHalfPole * th_acc * c / mtot;
        return {x[0] + spec_.dt * v, v + spec_.dt * x_acc, th + spec_.dt * w,
                w + spec_.dt * th_acc};
    }

    void dynamics_jacobians(const FlatVec& x, const FlatVec& u, DenseMat& A,
                            DenseMat& B) const override {
        const double force = u.at(0);
        const double th = x[2], w = x[3];
        const double s = std::sin(th), c = std::cos(th);
        const double mtot = kMassCart + kMassPole;
        const double mpl = kMassPole * kHalfPole;

        const double tmp = (force + mpl * w * w * s) / mtot;
        const double dtmp_dth = mpl * w * w * c / mtot;
        const double dtmp_dw = 2.0 * mpl * w * s / mtot;
        const double dtmp_dF = 1.0 / mtot;

        const double denom = kHalfPole * (4.0 / 3.0 - kMassPole * c * c / mtot);
        const double ddenom_dth = kHalfPole * 2.0 * kMassPole * c * s / mtot;

        const double num = kGravity * s - c * tmp;
        const double dnum_dth = kGravity * c + s * tmp - c * dtmp_dth;
        const double dnum_dw = -c * dtmp_dw;
        const double dnum_dF = -c * dtmp_dF;

        const double th_acc = num / denom;
        const double dthacc_dth = (dnum_dth * denom - num * ddenom_dth) / (denom * denom);
        const double dthacc_dw = dnum_dw / denom;
        const double dthacc_dF = dnum_dF / denom;

        const double dxacc_dth = dtmp_dth - (mpl / mtot) * (dthacc_dth * c - th_acc * s);
        const double dxacc_dw = dtmp_dw - (mpl / mtot) * dthacc_dw * c;
        const double dxacc_dF = dtmp_dF - (mpl / mtot) * dthacc_dF * c;

        A = DenseMat::identity(4);
        A(0, 1) = spec_.dt;
        A(1, 2) = spec_.dt * dxacc_dth;
        A(1, 3) = spec_.dt * dxacc_dw;
        A(2, 3) = spec_.dt;
        A(3, 2) = spec_.dt * dthacc_dth;
        A(3, 3) = 1.0 + spec_.dt * dthacc_dw;

        B = DenseMat(4, 1);
        B(1, 0) = spec_.dt * dxacc_dF;
        B(3, 0) = spec_.dt * dthacc_dF;
    }

    FlatVec constraint_values(const FlatVec& x) const override {
        return {x[2] - kAngleBound, -x[2] - kAngleBound, x[0] - kPosBound, -x[0] - kPosBound};
    }

    DenseMat constraint_gradients(const FlatVec&) const override {
        DenseMat G(4, 4);
        G(0, 2) = 1.0;
        G(1, 2) = -1.0;
        G(2, 0) = 1.0;
        G(3, 0) = -1.0;
        return G;
    }

    std::unique_ptr<Expert> make_expert() const override;

    FlatVec sample_initial_state(Rng& rng) const override {
        FlatVec x(4);
        for (double& v : x) v = rng.uniform(-0.08, 0.08);
        return x;
    }

    DenseMat lqr_gain() const {
        const double mtot = kMassCart + kMassPole;
        const double denom0 = kHalfPole * (4.0 / 3.0 - kMassPole / mtot);
        const double a_th = kGravity / denom0;
        const double b_th = -1.0 / (mtot * denom0);
        const double a_x = -(kMassPole * kHalfPole / mtot) * a_th;
        const double b_x = 1.0 / mtot - (kMassPole * kHalfPole / mtot) * b_th;

        DenseMat A = DenseMat::identity(4);
        A(0, 1) = spec_.dt;
        A(1, 2) = spec_.dt * a_x;
        A(2, 3) = spec_.dt;
        A(3, 2) = spec_.dt * a_th;
        DenseMat B(4, 1);
        B(1, 0) = spec_.dt * b_x;
        B(3, 0) = spec_.dt * b_th;
        DenseMat Q(4, 4), R(1, 1);
        Q(0, 0) = 1.0;
        Q(1, 1) = 1.0;
        Q(2, 2) = 15.0;
        Q(3, 3) = 1.5;
        R(0, 0) = 0.05;
        return dlqr_gain(A, B, Q, R);
    }
};

// Linear state feedback mapped onto the two-way force.
class CartPoleExpert final : public Expert {
public:
    explicit CartPoleExpert(const CartPoleEnv& env) : gain_(env.lqr_gain()) {}

    FlatVec action(const FlatVec& x) override {
        double f = 0.0;
        for (std::size_t i = 0; i < 4; ++i) f -= gain_(0, i) * x[i];
        return {f >= 0.0 ? 1.0 : 0.0};
    }

private:
    DenseMat gain_;
};

std::unique_ptr<Expert> CartPoleEnv::make_expert() const {
    return std::make_unique<CartPoleExpert>(*this);
}

} // namespace

std::unique_ptr<Environment> make_cartpole() { return std::make_unique<CartPoleEnv>(); }

} // namespace ifcps
