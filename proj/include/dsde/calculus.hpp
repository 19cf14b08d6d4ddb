#pragma once

#include <functional>

#include <Eigen/Dense>

#include "dsde/noise.hpp"
#include "dsde/process_path.hpp"
#include "dsde/time_grid.hpp"

namespace dsde {

/// Forward Ito integral sum_i <u(t_i), dW_i>: integrand read at the left
/// endpoint. u must have one row per forward-noise column.
double forward_ito(const ProcessPath& u, const NoiseBundle& bundle);

/// Backward Ito integral sum_i <v(t_{i+1}), dB_i>: integrand read at the
/// right endpoint. v must have one row per backward-noise column.
double backward_ito(const ProcessPath& v, const NoiseBundle& bundle);

/// Compensated jump integral sum_i sum_j k(t_i, z_j) (counts_ij - rate_j dt).
/// k holds one column per mark.
double jump_integral(const ProcessPath& k, const NoiseBundle& bundle);

/// Semimartingale increments: d alpha = beta dt + gamma dB + delta dW + kJump dN~,
/// with forward convention for beta, delta, kJump (left endpoint) and backward
/// convention for gamma (right endpoint). Component dimension is rows().
struct SemimartingaleDecomposition {
    Eigen::VectorXd alpha0; // value at t = 0
    ProcessPath beta;       // dim x 1
    ProcessPath gammaB;     // dim x l
    ProcessPath deltaW;     // dim x d
    ProcessPath jumpK;      // dim x J
};

/// Accumulates the decomposition against one noise path; node 0 is alpha0.
ProcessPath accumulate(const SemimartingaleDecomposition& dec, const NoiseBundle& bundle);

/// Residual of the discrete squared-norm expansion of |alpha_T|^2: the exact
/// per-interval identity is
///   |a_{i+1}|^2 - |a_i|^2 = 2<a_i, fwd_i> + 2<a_{i+1}, bwd_i> + |fwd_i|^2 - |bwd_i|^2,
/// where fwd_i collects the dt/dW/jump increments and bwd_i the dB increment.
/// The backward quadratic-variation sum enters with a minus sign. Returns
/// |alpha_T|^2 minus the telescoped right-hand side; zero up to rounding.
double energy_identity_residual(const SemimartingaleDecomposition& dec, const NoiseBundle& bundle);

/// Scalar-per-component smooth field u(t, x) in R^m with optional analytic
/// derivatives. Missing derivatives fall back to central finite differences
/// with step 1e-5 * max(1, |x_i|) unless allowFiniteDifference is cleared.
struct SmoothField {
    std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> timeDeriv;
    std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)> gradient; // m x n
    std::function<std::vector<Eigen::MatrixXd>(double, const Eigen::VectorXd&)> hessian; // m of n x n
    bool allowFiniteDifference = true;
};

/// Integro-differential generator applied to u at (t, x):
///   (Lu)_k = du_k/dt + sum_i drift_i du_k/dx_i
///          + 1/2 sum_ij (diffusion diffusion^T)_ij d2u_k/dx_i dx_j
///          + sum_j rate_j (u_k(t, x + jump(t,x,j)) - u_k(t,x) - jump(t,x,j) . grad u_k).
Eigen::VectorXd apply_generator(
    const SmoothField& u, double t, const Eigen::VectorXd& x, const Eigen::VectorXd& drift,
    const Eigen::MatrixXd& diffusion,
    const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&, int)>& jump,
    const MarkSpace& marks);

} // namespace dsde
