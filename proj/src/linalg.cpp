#include "ifcps/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace ifcps {

bool all_finite(const FlatVec& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

double norm2(const FlatVec& x) {
    return std::sqrt(kern::dot(x.data(), x.data(), x.size()));
}

DenseMat DenseMat::identity(std::size_t n) {
    DenseMat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

FlatVec matvec(const DenseMat& A, const FlatVec& x) {
    if (x.size() != A.cols()) throw ShapeError("matvec: dimension mismatch");
    FlatVec y(A.rows());
    for (std::size_t r = 0; r < A.rows(); ++r) {
        y[r] = kern::dot(A.row(r), x.data(), A.cols());
    }
    return y;
}

FlatVec matvec_t(const DenseMat& A, const FlatVec& x) {
    if (x.size() != A.rows()) throw ShapeError("matvec_t: dimension mismatch");
    FlatVec y(A.cols(), 0.0);
    for (std::size_t r = 0; r < A.rows(); ++r) {
        kern::axpy(x[r], A.row(r), y.data(), A.cols());
    }
    return y;
}

DenseMat matmul(const DenseMat& A, const DenseMat& B) {
    if (A.cols() != B.rows()) throw ShapeError("matmul: dimension mismatch");
    DenseMat C(A.rows(), B.cols());
    for (std::size_t i = 0; i < A.rows(); ++i) {
        for (std::size_t k = 0; k < A.cols(); ++k) {
            kern::axpy(A(i, k), B.row(k), C.row(i), B.cols());
        }
    }
    return C;
}

DenseMat transpose(const DenseMat& A) {
    DenseMat T(A.cols(), A.rows());
    for (std::size_t r = 0; r < A.rows(); ++r) {
        for (std::size_t c = 0; c < A.cols(); ++c) T(c, r) = A(r, c);
    }
    return T;
}

double spectral_norm(const DenseMat& M, int iters, double tol) {
    if (M.empty()) throw ShapeError("spectral_norm: empty matrix");
    const std::size_t n = M.cols();

    // Gram matrix, Frobenius-normalized and repeatedly squared: equivalent to
    // a 2^k-step power iteration, which separates clustered singular values
    // (powers of near-identity closed-loop matrices) that a stepwise
    // iteration cannot resolve in any practical iteration budget.
    DenseMat S(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < M.rows(); ++r) acc += M(r, i) * M(r, j);
            S(i, j) = acc;
        }
    }
    double fro = norm2(S.data());
    if (fro == 0.0) return 0.0;
    scale(1.0 / fro, S.data());
    for (int k = 0; k < 60; ++k) {
        S = matmul(S, S);
        fro = norm2(S.data());
        if (fro == 0.0) break;
        scale(1.0 / fro, S.data());
    }

    FlatVec v = matvec(S, FlatVec(n, 1.0));
    double vn = norm2(v);
    if (vn == 0.0) {
        v.assign(n, 1.0); // all-ones happens to be orthogonal to the top space
        vn = std::sqrt(static_cast<double>(n));
    }
    for (std::size_t i = 0; i < n; ++i) v[i] /= vn;

    double sigma = 0.0;
    for (int it = 0; it < iters; ++it) {
        FlatVec w = matvec(M, v);
        if (norm2(w) == 0.0) return 0.0;
        FlatVec z = matvec_t(M, w);
        double zn = norm2(z);
        if (zn == 0.0) return 0.0;
        for (std::size_t i = 0; i < n; ++i) v[i] = z[i] / zn;
        double estimate = norm2(matvec(M, v));
        if (std::abs(estimate - sigma) <= tol * std::max(1.0, estimate)) return estimate;
        sigma = estimate;
    }
    return sigma;
}

double spectral_radius(const DenseMat& A, int iters) {
    if (A.rows() != A.cols()) throw ShapeError("spectral_radius: square matrix required");
    const std::size_t n = A.rows();
    FlatVec v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.013 * static_cast<double>(i);
    double vn = norm2(v);
    for (std::size_t i = 0; i < n; ++i) v[i] /= vn;
    double rho = 0.0;
    for (int it = 0; it < iters; ++it) {
        FlatVec w = matvec(A, v);
        double wn = norm2(w);
        if (wn == 0.0) return 0.0;
        rho = wn;
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wn;
    }
    return rho;
}

FlatVec solve_linear(DenseMat A, FlatVec b) {
    if (A.rows() != A.cols() || b.size() != A.rows()) {
        throw ShapeError("solve_linear: dimension mismatch");
    }
    const std::size_t n = A.rows();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::abs(A(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            double cand = std::abs(A(r, col));
            if (cand > best) {
                best = cand;
                piv = r;
            }
        }
        if (best == 0.0) throw NumericsError("solve_linear: singular matrix");
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(A(piv, c), A(col, c));
            std::swap(b[piv], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = A(r, col) / A(col, col);
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) A(r, c) -= f * A(col, c);
            b[r] -= f * b[col];
        }
    }
    FlatVec x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= A(i, c) * x[c];
        x[i] = acc / A(i, i);
    }
    return x;
}

} // namespace ifcps
