#include "ifcps/lqr.hpp"

#include <cmath>

namespace ifcps {

namespace {

// X = M^{-1} N column by column.
DenseMat solve_multi(const DenseMat& M, const DenseMat& N) {
    DenseMat X(N.rows(), N.cols());
    for (std::size_t c = 0; c < N.cols(); ++c) {
        FlatVec rhs(N.rows());
        for (std::size_t r = 0; r < N.rows(); ++r) rhs[r] = N(r, c);
        FlatVec col = solve_linear(M, rhs);
        for (std::size_t r = 0; r < N.rows(); ++r) X(r, c) = col[r];
    }
    return X;
}

double max_abs_diff(const DenseMat& A, const DenseMat& B) {
    double d = 0.0;
    for (std::size_t i = 0; i < A.data().size(); ++i) {
        d = std::max(d, std::abs(A.data()[i] - B.data()[i]));
    }
    return d;
}

} // namespace

DenseMat dlqr_gain(const DenseMat& A, const DenseMat& B, const DenseMat& Q,
                   const DenseMat& R, int iters, double tol) {
    const std::size_t n = A.rows();
    if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
        R.rows() != B.cols() || R.cols() != B.cols()) {
        throw ShapeError("dlqr_gain: dimension mismatch");
    }
    DenseMat P = Q;
    const DenseMat At = transpose(A);
    const DenseMat Bt = transpose(B);
    DenseMat K;
    for (int it = 0; it < iters; ++it) {
        DenseMat BtP = matmul(Bt, P);         // m x n
        DenseMat S = matmul(BtP, B);          // m x m
        for (std::size_t i = 0; i < S.rows(); ++i) {
            for (std::size_t j = 0; j < S.cols(); ++j) S(i, j) += R(i, j);
        }
        K = solve_multi(S, matmul(BtP, A));   // m x n
        DenseMat AtP = matmul(At, P);
        DenseMat Pn = matmul(AtP, A);         // A^T P A
        DenseMat KtS = matmul(transpose(matmul(BtP, A)), K); // (B^T P A)^T K
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) Pn(i, j) += Q(i, j) - KtS(i, j);
        }
        if (max_abs_diff(Pn, P) < tol) {
            P = Pn;
            break;
        }
        P = Pn;
    }
    return K;
}

} // namespace ifcps
