#pragma once

#include <cstddef>
#include <vector>

#include "ifcps/errors.hpp"
#include "ifcps/kernels.hpp"

namespace ifcps {

// Flat parameter/gradient vector. 64-bit reals throughout: influence scores
// are small differences of large dot products.
using FlatVec = std::vector<double>;

bool all_finite(const FlatVec& v);

inline double dot(const FlatVec& x, const FlatVec& y) {
    if (x.size() != y.size()) throw ShapeError("dot: length mismatch");
    return kern::dot(x.data(), y.data(), x.size());
}

double norm2(const FlatVec& x);

// y += a * x
inline void axpy(double a, const FlatVec& x, FlatVec& y) {
    if (x.size() != y.size()) throw ShapeError("axpy: length mismatch");
    kern::axpy(a, x.data(), y.data(), x.size());
}

inline void scale(double a, FlatVec& x) { kern::scale(a, x.data(), x.size()); }

// Row-major dense matrix.
class DenseMat {
public:
    DenseMat() = default;
    DenseMat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static DenseMat identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    FlatVec& data() { return data_; }
    const FlatVec& data() const { return data_; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    FlatVec data_;
};

// y = A x
FlatVec matvec(const DenseMat& A, const FlatVec& x);
// y = A^T x
FlatVec matvec_t(const DenseMat& A, const FlatVec& x);
DenseMat matmul(const DenseMat& A, const DenseMat& B);
DenseMat transpose(const DenseMat& A);

// Largest singular value by power iteration on M^T M, deterministic all-ones
// start vector. A zero matrix returns 0.
double spectral_norm(const DenseMat& M, int iters = 100, double tol = 1e-10);

// Spectral radius estimate for a square matrix (power iteration with
// normalization; adequate for the small closed-loop matrices used here).
double spectral_radius(const DenseMat& A, int iters = 500);

// Solves A x = b via partial-pivot LU. Throws NumericsError on a singular A.
FlatVec solve_linear(DenseMat A, FlatVec b);

} // namespace ifcps
