#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "dsde/backward_solver.hpp"
#include "dsde/coefficients.hpp"
#include "dsde/noise.hpp"
#include "dsde/process_path.hpp"
#include "dsde/time_grid.hpp"

namespace dsde {

/// Continuation branch: mGTn starts from a decoupled forward equation and
/// carries the structural terms in the backward equation; mLTn is the mirror.
enum class Branch { mGTn, mLTn };

/// mGTn if m > n, mLTn if m < n; for m == n the constants decide, preferring
/// mGTn when both sides qualify.
Branch select_branch(const CoefficientSystem& sys);

/// Ensemble solution of the coupled system. X and P are node-indexed; Y, Q,
/// and K are interval-indexed with a zero row at the last node.
struct QuintupleSolution {
    PathEnsemble X; // n x 1
    PathEnsemble P; // m x 1
    PathEnsemble Y; // n x l
    PathEnsemble Q; // m x d
    PathEnsemble K; // m x J
    TimeGrid grid;
    MarkSpace marks;

    int pathCount() const { return X.pathCount(); }
    Quintuple at(int path, int node) const;
    static QuintupleSolution zero(const CoefficientSystem& sys, const TimeGrid& grid,
                                  int paths);
};

/// Empirical squared continuation metric:
/// mean over paths of sum_i (|Xd|^2+|Pd|^2+|Yd|^2+|Qd|^2+sum_j rate_j |Kd_j|^2) dt
/// at node i, plus E|Xd_N|^2 + E|Pd_0|^2.
double solution_distance(const QuintupleSolution& a, const QuintupleSolution& b);

/// External perturbation data. Ensembles are interval-indexed integrands; an
/// empty (default) member means zero. psi and phi are per-path boundary
/// shifts with one column per path.
struct SourceTerms {
    PathEnsemble f0; // n x 1
    PathEnsemble g0; // n x d
    PathEnsemble h0; // n x J
    PathEnsemble F0; // m x 1
    PathEnsemble G0; // m x l
    Eigen::MatrixXd psi; // n x paths
    Eigen::MatrixXd phi; // m x paths

    static SourceTerms none() { return SourceTerms{}; }
};

/// Forward equation with known per-path coefficients
///   dX = drift dt + diffusion dW - Y dB + sum_j jump_j dNtilde_j,  X_0 given,
/// where (X, Y) are the unknowns. Callables take (interval, path) in the
/// original time orientation; features takes (node, path) and may be null
/// when the reversed solve is an exact pathwise recursion.
struct XEquationSpec {
    int dim = 1; // n
    std::function<Eigen::VectorXd(int, int)> drift;
    std::function<Eigen::MatrixXd(int, int)> diffusion;
    std::function<Eigen::VectorXd(int, int, int)> jump;
    std::function<Eigen::VectorXd(int, int)> features;
    Eigen::MatrixXd initial; // n x paths
};

/// A reversed-orientation backward problem paired with the reversed noise
/// that drives it; solving it and un-reversing yields (X, Y).
struct ReversedProblem {
    BackwardProblem problem;
    NoiseEnsemble noise;
};

/// Maps the forward equation to reversed time s = T - t, where the roles of
/// the two Brownian drivers swap and the initial condition becomes terminal
/// data. Reversed interval k corresponds to original interval N-1-k.
ReversedProblem reverse_time_problem(const XEquationSpec& spec, const NoiseEnsemble& noise);

struct XSolution {
    PathEnsemble X; // node-indexed, n x 1
    PathEnsemble Y; // interval-indexed, n x l
    bool identityMode = false;
};

/// Solves the forward equation through the backward engine via time reversal.
XSolution solve_x_equation(const XEquationSpec& spec, const NoiseEnsemble& noise,
                           const BackwardConfig& config);

struct HomotopyConfig {
    double deltaInit = 0.5;
    double contractionThreshold = 0.9; // reject a step whose measured ratio reaches this
    int maxInner = 50;
    double innerTol = 1e-6;
    double minDelta = 1e-3;
};

struct HomotopyStep {
    double alphaReached = 0.0; // alpha after the step (unchanged on a rejected attempt)
    double delta = 0.0;
    int innerIterations = 0;
    std::vector<double> distances;
    std::vector<double> ratios;
    bool accepted = false;
};

struct ConvergenceTrace {
    std::vector<HomotopyStep> steps;
    double finalAlpha = 0.0;
    bool success = false;
};

/// Exact solve of the alpha = 0 system, where one equation decouples: mGTn
/// solves X from the bare sources then P against it; mLTn mirrors the order.
QuintupleSolution solve_alpha_zero(Branch branch, const CoefficientSystem& sys,
                                   const SourceTerms& sources, const NoiseEnsemble& noise,
                                   const BackwardConfig& config);

/// One application of the continuation map: solves the alpha0-weighted system
/// with delta-scaled perturbation sources computed from Ubar, by Picard
/// iteration with the own-coefficient terms lagged one pass. Throws
/// MapDivergenceError when the inner iteration fails to settle.
QuintupleSolution continuation_map(Branch branch, const CoefficientSystem& sys, double alpha0,
                                   double delta, const QuintupleSolution& Ubar,
                                   const SourceTerms& sources, const NoiseEnsemble& noise,
                                   const HomotopyConfig& homotopy,
                                   const BackwardConfig& config);

struct FbdsdepResult {
    QuintupleSolution solution;
    ConvergenceTrace trace;
};

/// Homotopy from the decoupled system at alpha = 0 to the target system at
/// alpha = 1. Each step iterates the continuation map to its fixed point;
/// a measured non-contraction halves delta and retries, down to minDelta.
/// The ensemble must hold the backward driver fixed across paths. When
/// progress is non-null it mirrors the trace even if the solve throws.
FbdsdepResult solve_fbdsdep(const CoefficientSystem& sys, const NoiseEnsemble& noise,
                            const HomotopyConfig& homotopy, const BackwardConfig& config,
                            ConvergenceTrace* progress = nullptr);

struct EnsembleConfig {
    int paths = 2000;
    std::uint64_t seed = 1;
};

/// Convenience overload that samples a frozen-backward-driver ensemble.
FbdsdepResult solve_fbdsdep(const CoefficientSystem& sys, const TimeGrid& grid,
                            const EnsembleConfig& ensemble, const HomotopyConfig& homotopy,
                            const BackwardConfig& config,
                            ConvergenceTrace* progress = nullptr);

} // namespace dsde
