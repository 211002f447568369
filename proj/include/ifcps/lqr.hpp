#pragma once

#include "ifcps/linalg.hpp"

namespace ifcps {

// Steady-state discrete-time LQR gain K (u = -K x) by Riccati iteration.
DenseMat dlqr_gain(const DenseMat& A, const DenseMat& B, const DenseMat& Q,
                   const DenseMat& R, int iters = 1000, double tol = 1e-12);

} // namespace ifcps
