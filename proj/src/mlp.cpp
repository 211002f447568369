#include "ifcps/mlp.hpp"

#include <algorithm>
#include <cmath>

namespace ifcps {

namespace {

struct FlatLayout {
    std::size_t w1, b1, w2, b2; // segment offsets
    std::size_t in, hidden, out;
};

FlatLayout layout(MlpShape s) {
    FlatLayout l{};
    l.in = s.in;
    l.hidden = s.hidden;
    l.out = s.out;
    l.w1 = 0;
    l.b1 = l.w1 + s.hidden * s.in;
    l.w2 = l.b1 + s.hidden;
    l.b2 = l.w2 + s.out * s.hidden;
    return l;
}

void forward_cache(const MlpParams& p, const FlatVec& x, FlatVec& a, FlatVec& h, FlatVec& y) {
    const std::size_t hidden = p.b1.size();
    const std::size_t out = p.b2.size();
    a = p.b1;
    for (std::size_t j = 0; j < hidden; ++j) {
        a[j] += kern::dot(p.W1.row(j), x.data(), x.size());
    }
    h.resize(hidden);
    kern::relu(a.data(), h.data(), hidden);
    y = p.b2;
    for (std::size_t i = 0; i < out; ++i) {
        y[i] += kern::dot(p.W2.row(i), h.data(), hidden);
    }
}

void check_input(const MlpParams& p, const FlatVec& x) {
    if (x.size() != p.W1.cols()) throw ShapeError("mlp: input length mismatch");
}

FlatVec softmax(const FlatVec& z) {
    double m = z[0];
    for (double v : z) m = std::max(m, v);
    FlatVec p(z.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - m);
        denom += p[i];
    }
    for (double& v : p) v /= denom;
    return p;
}

// d(loss)/d(output) for one pair.
FlatVec loss_cotangent(const FlatVec& y, const FlatVec& u, LossKind kind) {
    const std::size_t out = y.size();
    FlatVec dy(out);
    if (kind == LossKind::Mse) {
        if (u.size() != out) throw ShapeError("mlp: target length mismatch");
        for (std::size_t i = 0; i < out; ++i) dy[i] = 2.0 / static_cast<double>(out) * (y[i] - u[i]);
    } else {
        const auto idx = static_cast<std::size_t>(u.at(0));
        if (idx >= out) throw ShapeError("mlp: class index out of range");
        dy = softmax(y);
        dy[idx] -= 1.0;
    }
    return dy;
}

} // namespace

FlatVec flatten(const MlpParams& p) {
    const auto l = layout(p.shape());
    FlatVec flat(p.shape().param_count());
    std::copy(p.W1.data().begin(), p.W1.data().end(), flat.begin() + static_cast<long>(l.w1));
    std::copy(p.b1.begin(), p.b1.end(), flat.begin() + static_cast<long>(l.b1));
    std::copy(p.W2.data().begin(), p.W2.data().end(), flat.begin() + static_cast<long>(l.w2));
    std::copy(p.b2.begin(), p.b2.end(), flat.begin() + static_cast<long>(l.b2));
    return flat;
}

MlpParams unflatten(MlpShape shape, const FlatVec& flat) {
    if (flat.size() != shape.param_count()) throw ShapeError("unflatten: length mismatch");
    const auto l = layout(shape);
    MlpParams p(shape);
    std::copy(flat.begin() + static_cast<long>(l.w1), flat.begin() + static_cast<long>(l.b1),
              p.W1.data().begin());
    std::copy(flat.begin() + static_cast<long>(l.b1), flat.begin() + static_cast<long>(l.w2),
              p.b1.begin());
    std::copy(flat.begin() + static_cast<long>(l.w2), flat.begin() + static_cast<long>(l.b2),
              p.W2.data().begin());
    std::copy(flat.begin() + static_cast<long>(l.b2), flat.end(), p.b2.begin());
    return p;
}

MlpParams random_init(MlpShape shape, Rng& rng) {
    MlpParams p(shape);
    const double a1 = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(1, shape.in)));
    const double a2 = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(1, shape.hidden)));
    for (double& w : p.W1.data()) w = rng.uniform(-a1, a1);
    for (double& w : p.W2.data()) w = rng.uniform(-a2, a2);
    return p;
}

FlatVec mlp_forward(const MlpParams& p, const FlatVec& x) {
    check_input(p, x);
    FlatVec a, h, y;
    forward_cache(p, x, a, h, y);
    return y;
}

double sample_loss(const MlpParams& p, const FlatVec& x, const FlatVec& u, LossKind kind) {
    check_input(p, x);
    FlatVec a, h, y;
    forward_cache(p, x, a, h, y);
    if (kind == LossKind::Mse) {
        if (u.size() != y.size()) throw ShapeError("mlp: target length mismatch");
        double acc = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            double r = y[i] - u[i];
            acc += r * r;
        }
        return acc / static_cast<double>(y.size());
    }
    const auto idx = static_cast<std::size_t>(u.at(0));
    if (idx >= y.size()) throw ShapeError("mlp: class index out of range");
    double m = y[0];
    for (double v : y) m = std::max(m, v);
    double lse = 0.0;
    for (double v : y) lse += std::exp(v - m);
    return -y[idx] + m + std::log(lse);
}

void backward_from_output(const MlpParams& p, const FlatVec& x, const FlatVec& dy,
                          double w, FlatVec& grad) {
    check_input(p, x);
    const auto s = p.shape();
    if (dy.size() != s.out) throw ShapeError("mlp: cotangent length mismatch");
    if (grad.size() != s.param_count()) throw ShapeError("mlp: gradient length mismatch");
    const auto l = layout(s);

    FlatVec a, h, y;
    forward_cache(p, x, a, h, y);

    double* gW2 = grad.data() + l.w2;
    double* gb2 = grad.data() + l.b2;
    FlatVec dh(s.hidden, 0.0);
    for (std::size_t i = 0; i < s.out; ++i) {
        kern::axpy(w * dy[i], h.data(), gW2 + i * s.hidden, s.hidden);
        gb2[i] += w * dy[i];
        kern::axpy(dy[i], p.W2.row(i), dh.data(), s.hidden);
    }
    FlatVec da(s.hidden);
    kern::relu_backward(a.data(), dh.data(), da.data(), s.hidden);

    double* gW1 = grad.data() + l.w1;
    double* gb1 = grad.data() + l.b1;
    for (std::size_t j = 0; j < s.hidden; ++j) {
        kern::axpy(w * da[j], x.data(), gW1 + j * s.in, s.in);
        gb1[j] += w * da[j];
    }
}

void per_sample_grad_accum(const MlpParams& p, const FlatVec& x, const FlatVec& u,
                           LossKind kind, double w, FlatVec& grad) {
    check_input(p, x);
    FlatVec a, h, y;
    forward_cache(p, x, a, h, y);
    backward_from_output(p, x, loss_cotangent(y, u, kind), w, grad);
}

FlatVec per_sample_grad(const MlpParams& p, const FlatVec& x, const FlatVec& u, LossKind kind) {
    FlatVec grad(p.shape().param_count(), 0.0);
    per_sample_grad_accum(p, x, u, kind, 1.0, grad);
    return grad;
}

DenseMat output_input_jacobian(const MlpParams& p, const FlatVec& x) {
    check_input(p, x);
    const auto s = p.shape();
    FlatVec a, h, y;
    forward_cache(p, x, a, h, y);
    DenseMat J(s.out, s.in);
    for (std::size_t i = 0; i < s.out; ++i) {
        for (std::size_t j = 0; j < s.hidden; ++j) {
            if (a[j] > 0.0) kern::axpy(p.W2(i, j), p.W1.row(j), J.row(i), s.in);
        }
    }
    return J;
}

namespace {

// One sample's contribution to H v, weight w.
void hvp_accum(const MlpParams& p, const FlatLayout& l, const FlatVec& x, const FlatVec& u,
               LossKind kind, const FlatVec& v, double w, FlatVec& out) {
    FlatVec a, h, y;
    forward_cache(p, x, a, h, y);

    const double* V1 = v.data() + l.w1;
    const double* c1 = v.data() + l.b1;
    const double* V2 = v.data() + l.w2;
    const double* c2 = v.data() + l.b2;

    // Tangent forward pass.
    FlatVec ra(l.hidden);
    for (std::size_t j = 0; j < l.hidden; ++j) {
        ra[j] = c1[j] + kern::dot(V1 + j * l.in, x.data(), l.in);
    }
    FlatVec rh(l.hidden);
    kern::relu_backward(a.data(), ra.data(), rh.data(), l.hidden);
    FlatVec ry(l.out);
    for (std::size_t i = 0; i < l.out; ++i) {
        ry[i] = c2[i] + kern::dot(V2 + i * l.hidden, h.data(), l.hidden) +
                kern::dot(p.W2.row(i), rh.data(), l.hidden);
    }

    FlatVec dy = loss_cotangent(y, u, kind);
    FlatVec rdy(l.out);
    if (kind == LossKind::Mse) {
        for (std::size_t i = 0; i < l.out; ++i) rdy[i] = 2.0 / static_cast<double>(l.out) * ry[i];
    } else {
        FlatVec prob = softmax(y);
        double pr = kern::dot(prob.data(), ry.data(), l.out);
        for (std::size_t i = 0; i < l.out; ++i) rdy[i] = prob[i] * (ry[i] - pr);
    }

    // Tangent backward pass.
    double* oW2 = out.data() + l.w2;
    double* ob2 = out.data() + l.b2;
    FlatVec rdh(l.hidden, 0.0);
    for (std::size_t i = 0; i < l.out; ++i) {
        kern::axpy(w * rdy[i], h.data(), oW2 + i * l.hidden, l.hidden);
        kern::axpy(w * dy[i], rh.data(), oW2 + i * l.hidden, l.hidden);
        ob2[i] += w * rdy[i];
        kern::axpy(dy[i], V2 + i * l.hidden, rdh.data(), l.hidden);
        kern::axpy(rdy[i], p.W2.row(i), rdh.data(), l.hidden);
    }
    FlatVec rda(l.hidden);
    kern::relu_backward(a.data(), rdh.data(), rda.data(), l.hidden);

    double* oW1 = out.data() + l.w1;
    double* ob1 = out.data() + l.b1;
    for (std::size_t j = 0; j < l.hidden; ++j) {
        kern::axpy(w * rda[j], x.data(), oW1 + j * l.in, l.in);
        ob1[j] += w * rda[j];
    }
}

} // namespace

FlatVec loss_hvp(const MlpParams& p, std::span<const Sample> batch, LossKind kind,
                 const FlatVec& v) {
    if (batch.empty()) throw ShapeError("loss_hvp: empty batch");
    const auto s = p.shape();
    if (v.size() != s.param_count()) throw ShapeError("loss_hvp: vector length mismatch");
    const auto l = layout(s);
    FlatVec out(v.size(), 0.0);
    const double w = 1.0 / static_cast<double>(batch.size());
    for (const Sample& sm : batch) {
        check_input(p, sm.x);
        hvp_accum(p, l, sm.x, sm.u, kind, v, w, out);
    }
    return out;
}

FlatVec loss_hvp(const MlpParams& p, const std::vector<Sample>& samples,
                 const std::vector<std::size_t>& indices, LossKind kind, const FlatVec& v) {
    if (indices.empty()) throw ShapeError("loss_hvp: empty batch");
    const auto s = p.shape();
    if (v.size() != s.param_count()) throw ShapeError("loss_hvp: vector length mismatch");
    const auto l = layout(s);
    FlatVec out(v.size(), 0.0);
    const double w = 1.0 / static_cast<double>(indices.size());
    for (std::size_t idx : indices) {
        const Sample& sm = samples.at(idx);
        check_input(p, sm.x);
        hvp_accum(p, l, sm.x, sm.u, kind, v, w, out);
    }
    return out;
}

AdamState make_adam(std::size_t n, AdamConfig cfg) {
    AdamState st;
    st.m.assign(n, 0.0);
    st.v.assign(n, 0.0);
    st.cfg = cfg;
    return st;
}

void adam_step(AdamState& state, FlatVec& params, const FlatVec& grad) {
    if (params.size() != state.m.size() || grad.size() != state.m.size()) {
        throw ShapeError("adam_step: length mismatch");
    }
    state.step += 1;
    const auto& c = state.cfg;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * grad[i];
        state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
}

} // namespace ifcps
