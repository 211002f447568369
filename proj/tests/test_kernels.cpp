#include <doctest.h>

#include <cmath>
#include <cstring>

#include "ifcps/kernels.hpp"
#include "ifcps/linalg.hpp"
#include "ifcps/rng.hpp"

using namespace ifcps;

namespace {

FlatVec random_vec(Rng& rng, std::size_t n, double lo = -2.0, double hi = 2.0) {
    FlatVec v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

const std::size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 65, 127, 1000};

} // namespace

TEST_CASE("scalar kernels match hand-written loops") {
    Rng rng(11);
    for (std::size_t n : kSizes) {
        FlatVec x = random_vec(rng, n), y = random_vec(rng, n);
        const auto& k = kern::scalar_backend();

        double want_dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) want_dot += x[i] * y[i];
        CHECK(k.dot(x.data(), y.data(), n) == doctest::Approx(want_dot).epsilon(1e-14));

        FlatVec y2 = y;
        k.axpy(0.7, x.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(y2[i] == y[i] + 0.7 * x[i]);

        FlatVec h(n, 0.0), g(n, 0.0);
        k.relu(x.data(), h.data(), n);
        k.relu_backward(x.data(), y.data(), g.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(h[i] == (x[i] > 0.0 ? x[i] : 0.0));
            CHECK(g[i] == (x[i] > 0.0 ? y[i] : 0.0));
        }
    }
}

TEST_CASE("avx2 backend is equivalent to the scalar reference") {
    if (!kern::avx2_available()) return;
    const auto& sc = kern::scalar_backend();
    const auto& vx = kern::avx2_backend();
    Rng rng(12);
    for (std::size_t n : kSizes) {
        FlatVec x = random_vec(rng, n), y = random_vec(rng, n);

        const double ds = sc.dot(x.data(), y.data(), n);
        const double dv = vx.dot(x.data(), y.data(), n);
        CHECK(std::abs(ds - dv) <= 1e-12 * std::max(1.0, std::abs(ds)));

        FlatVec ys = y, yv = y;
        sc.axpy(-1.3, x.data(), ys.data(), n);
        vx.axpy(-1.3, x.data(), yv.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(ys[i] - yv[i]) <= 1e-14 * std::max(1.0, std::abs(ys[i])));
        }

        FlatVec xs = x, xv = x;
        sc.scale(0.37, xs.data(), n);
        vx.scale(0.37, xv.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(xs[i] == xv[i]);

        FlatVec hs(n, 0.0), hv(n, 0.0), gs(n, 0.0), gv(n, 0.0);
        sc.relu(x.data(), hs.data(), n);
        vx.relu(x.data(), hv.data(), n);
        sc.relu_backward(x.data(), y.data(), gs.data(), n);
        vx.relu_backward(x.data(), y.data(), gv.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(hs[i] == hv[i]); // exact: no reassociation in these ops
            CHECK(gs[i] == gv[i]);
        }
    }
}

TEST_CASE("relu kernels treat zero input as inactive") {
    const double a[3] = {-0.0, 0.0, 1.0};
    const double g[3] = {5.0, 5.0, 5.0};
    double h[3], out[3];
    for (const auto* backend : {&kern::scalar_backend(),
                                kern::avx2_available() ? &kern::avx2_backend() : nullptr}) {
        if (!backend) continue;
        backend->relu(a, h, 3);
        backend->relu_backward(a, g, out, 3);
        CHECK(h[0] == 0.0);
        CHECK(h[1] == 0.0);
        CHECK(h[2] == 1.0);
        CHECK(out[0] == 0.0); // subgradient at 0 is 0
        CHECK(out[1] == 0.0);
        CHECK(out[2] == 5.0);
    }
}

TEST_CASE("active backend is a known backend") {
    const char* name = kern::active().name;
    CHECK((std::strcmp(name, "scalar") == 0 || std::strcmp(name, "avx2") == 0));
}
