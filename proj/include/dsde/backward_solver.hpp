#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "dsde/noise.hpp"
#include "dsde/process_path.hpp"
#include "dsde/regression.hpp"
#include "dsde/time_grid.hpp"

namespace dsde {

/// Generic discrete backward equation in engine orientation
///
///   P_{i+1} = P_i + driverF_i dt + driverG_i dB_i + Q_i dW_i + sum_j K_i(j) dNtilde_{i,j}
///
/// solved for (P, Q, K) given the terminal slice. driverF is evaluated at the
/// left endpoint with the projected P and the freshly estimated (Q, K);
/// driverG at the right endpoint with the node i+1 values. When
/// estimateJumpCoefficient is false the jump integrand is the known
/// jumpSource, subtracted pathwise, and K is reported as zero.
struct BackwardProblem {
    int dim = 1; // m, rows of P

    // (interval, path, P at node i, Q_i, K_i) -> dim vector
    std::function<Eigen::VectorXd(int, int, const Eigen::VectorXd&, const Eigen::MatrixXd&,
                                  const Eigen::MatrixXd&)>
        driverF;
    // (interval, path, P at node i+1, Q_{i+1}, K_{i+1}) -> dim x l matrix
    std::function<Eigen::MatrixXd(int, int, const Eigen::VectorXd&, const Eigen::MatrixXd&,
                                  const Eigen::MatrixXd&)>
        driverG;
    // (interval, path, mark) -> dim vector; null means zero source
    std::function<Eigen::VectorXd(int, int, int)> jumpSource;
    // (node, path) -> regression features; may be null in identity mode
    std::function<Eigen::VectorXd(int, int)> features;

    bool estimateJumpCoefficient = true;

    Eigen::MatrixXd terminal; // dim x paths
};

struct StepDiagnostics {
    double conditionNumber = 0.0;
    double r2 = 0.0;
    int basisSize = 0;
};

struct BackwardSolution {
    PathEnsemble P; // node-indexed, dim x 1
    PathEnsemble Q; // interval-indexed, dim x d, row N zero
    PathEnsemble K; // interval-indexed, dim x J, row N zero
    std::vector<StepDiagnostics> steps;
    bool identityMode = false;
};

struct BackwardConfig {
    RegressionConfig regression;
    double blowupThreshold = 1e8;
};

/// One backward sweep over the ensemble. Cross-path regression estimates the
/// conditional projections; a forward-driver column whose increments carry no
/// cross-path variation in an interval gets a zero coefficient there (the
/// zero-sensitivity member of the unidentifiable family), and when every
/// forward column is degenerate and the jump integrand is a known source the
/// projection is the identity and the sweep is an exact pathwise recursion.
BackwardSolution solve_backward(const BackwardProblem& problem, const NoiseEnsemble& noise,
                                const BackwardConfig& config);

} // namespace dsde
