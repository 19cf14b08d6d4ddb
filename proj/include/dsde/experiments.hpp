#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dsde/coefficients.hpp"
#include "dsde/forward_backward.hpp"

namespace dsde {

/// Baseline system together with a one-parameter deformation of it;
/// alphas lists the perturbation sizes to visit, largest first.
struct ParameterFamily {
    CoefficientSystem baseline;
    std::function<CoefficientSystem(double)> perturbed;
    std::vector<double> alphas;
};

struct ContinuityRow {
    double alpha = 0.0;
    double distance = 0.0;
    bool success = false;
    std::string error;
};

struct ContinuityStudy {
    std::vector<ContinuityRow> rows;
    QuintupleSolution baselineSolution;
    ConvergenceTrace baselineTrace;
};

/// Solves the baseline and each perturbed system on one shared noise
/// ensemble and reports the solution distance to the baseline. A failed
/// perturbed solve is recorded in its row and the study continues.
ContinuityStudy continuity_study(const ParameterFamily& family, const TimeGrid& grid,
                                 const EnsembleConfig& ensemble, const HomotopyConfig& homotopy,
                                 const BackwardConfig& backward);

/// Two-point boundary problem v' = A v + c on [0, horizon] with one linear
/// condition at each end, solved through the matrix exponential.
struct LinearBvp {
    Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    Eigen::RowVector2d initialRow = Eigen::RowVector2d::Zero();
    double initialValue = 0.0;
    Eigen::RowVector2d terminalRow = Eigen::RowVector2d::Zero();
    double terminalValue = 0.0;
};

/// Columns hold v(times[k]); throws when the boundary rows fail to pin a
/// unique trajectory.
Eigen::Matrix2Xd solve_linear_bvp(const LinearBvp& bvp, double horizon,
                                  const std::vector<double>& times);

/// Scalar concave-convex quadratic generator: the value is convex in the
/// forward slots with curvature b and concave in the backward slots with
/// curvature a. Boundary offsets shift the couplings away from the trivial
/// trajectory. a must stay below 1 so the diffusion coupling keeps a
/// contraction margin.
struct QuadraticHamiltonian {
    double a = 0.5;
    double b = 0.5;
    int d = 1;
    int l = 1;
    MarkSpace marks;
    double psiOffset = 0.0;
    double phiOffset = 0.0;
};

/// The scalar generator value; second derivatives along the five state
/// slots are (b, -a, b, -a, -a), with mark intensities weighting the last.
double hamiltonian_value(const QuadraticHamiltonian& params, const Quintuple& U);

/// Coefficient functions as the generator's slot gradients: forward
/// coefficients from the backward slots, backward coefficients from the
/// forward slots with flipped sign.
CoefficientSystem build_hamiltonian_system(const QuadraticHamiltonian& params);

struct HamiltonianReport {
    QuintupleSolution solution;
    ConvergenceTrace trace;
    double initialResidual = 0.0;  // mean |X_0 - Psi(P_0)|
    double terminalResidual = 0.0; // mean |P_N - Phi(X_N)|
    std::vector<double> times;
    std::vector<double> meanX, meanP;
    std::vector<double> stderrX, stderrP;
    std::vector<double> bvpX, bvpP;
    double maxDeviationX = 0.0;
    double maxDeviationP = 0.0;
};

/// Solves the quadratic-generator system and compares the ensemble mean
/// trajectory against the deterministic two-point problem its expectations
/// satisfy: X' = -a P, P' = -b X with X(0) + P(0) = psiOffset and
/// P(T) - X(T) = phiOffset.
HamiltonianReport hamiltonian_demo(const QuadraticHamiltonian& params, const TimeGrid& grid,
                                   const EnsembleConfig& ensemble, const HomotopyConfig& homotopy,
                                   const BackwardConfig& backward);

} // namespace dsde
