#include "ifcps/kernels.hpp"

namespace ifcps::kern {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void relu_scalar(const double* a, double* h, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) h[i] = a[i] > 0.0 ? a[i] : 0.0;
}

void relu_backward_scalar(const double* a, const double* g, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] > 0.0 ? g[i] : 0.0;
}

} // namespace

const Backend& scalar_backend() {
    static const Backend backend{
        "scalar", dot_scalar, axpy_scalar, scale_scalar, relu_scalar, relu_backward_scalar};
    return backend;
}

} // namespace ifcps::kern
