#pragma once

#include <cstddef>

// Vector kernels behind the MLP forward/backward passes, Hessian-vector
// products, and the influence-score dot products. The scalar backend is the
// reference semantics; an AVX2/FMA backend is selected at runtime when the
// CPU supports it. Set IFCPS_KERNELS=scalar or IFCPS_KERNELS=avx2 to force a
// backend. Backends agree to floating-point reassociation error only; within
// one process the dispatch is resolved once, so repeated runs are bit-stable.

namespace ifcps::kern {

struct Backend {
    const char* name;
    // sum_i x[i] * y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y += a * x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // x *= a
    void (*scale)(double a, double* x, std::size_t n);
    // h[i] = max(a[i], 0)
    void (*relu)(const double* a, double* h, std::size_t n);
    // out[i] = g[i] * (a[i] > 0 ? 1 : 0); subgradient at 0 is 0
    void (*relu_backward)(const double* a, const double* g, double* out, std::size_t n);
};

const Backend& scalar_backend();
bool avx2_available();
const Backend& avx2_backend(); // only meaningful when avx2_available()

// Backend chosen at first use (env override, else cpuid probe).
const Backend& active();

inline double dot(const double* x, const double* y, std::size_t n) {
    return active().dot(x, y, n);
}
inline void axpy(double a, const double* x, double* y, std::size_t n) {
    active().axpy(a, x, y, n);
}
inline void scale(double a, double* x, std::size_t n) {
    active().scale(a, x, n);
}
inline void relu(const double* a, double* h, std::size_t n) {
    active().relu(a, h, n);
}
inline void relu_backward(const double* a, const double* g, double* out, std::size_t n) {
    active().relu_backward(a, g, out, n);
}

} // namespace ifcps::kern
