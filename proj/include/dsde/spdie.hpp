#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dsde/backward_solver.hpp"
#include "dsde/coefficients.hpp"
#include "dsde/noise.hpp"
#include "dsde/time_grid.hpp"

namespace dsde {

/// Outcome of probing a system for the Markovian restriction: g may depend
/// only on (t, X, P), h only on (t, X, mark), and f, F, G must ignore Y
/// (the forward equation carries no backward-driver term).
struct MarkovianReport {
    bool markovian = true;
    std::string failure;
    double worstDeviation = 0.0;
};

MarkovianReport verify_markovian(const CoefficientSystem& sys, std::uint64_t seed = 99,
                                 int samples = 20);

struct FieldConfig {
    int paths = 50000;
    int bReplicates = 1;
    std::uint64_t seed = 7;
    int maxPicard = 25;
    double picardTol = 1e-8;
};

/// Point estimate of the field at one (t, x); one entry per replicate of the
/// frozen backward driver. Without a backward driver the replicates are
/// independent Monte Carlo repetitions of the same deterministic value.
struct UEstimate {
    std::vector<Eigen::VectorXd> values;
    std::vector<Eigen::VectorXd> standardErrors;
    int picardIterations = 0;

    Eigen::VectorXd value() const;         // replicate mean
    Eigen::VectorXd standardError() const; // first replicate
};

/// Field value u(tStart, x) as the initial backward component of the coupled
/// system started at x, estimated on `remainder`, a grid of [tStart, T].
/// Coefficient clocks run in absolute time.
UEstimate evaluate_u(const CoefficientSystem& sys, double tStart, const Eigen::VectorXd& x,
                     const TimeGrid& remainder, const FieldConfig& fieldCfg,
                     const BackwardConfig& backwardCfg);

struct FieldEstimate {
    std::vector<double> t;
    std::vector<Eigen::VectorXd> x;
    std::vector<UEstimate> estimates;
    int ensembleSize = 0;
    int bReplicates = 0;
};

/// evaluate_u over a list of points with a common terminal horizon.
FieldEstimate evaluate_field(const CoefficientSystem& sys, double horizon,
                             const std::vector<std::pair<double, Eigen::VectorXd>>& points,
                             int stepsPerUnitTime, const FieldConfig& fieldCfg,
                             const BackwardConfig& backwardCfg);

struct PideConfig {
    double xMin = -4.0;
    double xMax = 4.0;
    int spatialNodes = 401;
    double cflSafety = 0.8;
    double padOverride = -1.0;  // negative selects automatic padding
    double timeStepOverride = -1.0; // negative selects the stability-bound step
};

/// Scalar finite-difference solution slices of the deterministic
/// integro-differential terminal-value problem on a padded uniform grid.
struct PideField {
    Eigen::VectorXd x;              // padded grid coordinates
    std::vector<double> times;      // snapped query times, ascending
    std::vector<Eigen::VectorXd> u; // one slice per query time
    double dtUsed = 0.0;
    int stepsUsed = 0;
    double padUsed = 0.0;

    double valueAt(int slice, double xq) const; // linear interpolation
};

/// Explicit backward stepping with central second differences, upwind
/// advection (the compensator drift folded in), and the nonlocal term as an
/// exact mark sum with linear interpolation at the shifted points.
PideField solve_pide_fd(const CoefficientSystem& sys, double horizon,
                        const std::vector<double>& queryTimes, const PideConfig& cfg);

struct ComparisonRow {
    double t = 0.0;
    double x = 0.0;
    double mc = 0.0;
    double mcStandardError = 0.0;
    double fd = 0.0;
    double fdErrorEstimate = 0.0;
    double difference = 0.0;
    double tolerance = 0.0;
    bool withinTolerance = false;
};

/// Both evaluators at each point; the tolerance combines Monte Carlo and
/// grid-refinement error estimates.
std::vector<ComparisonRow> compare_feynman_kac(
    const CoefficientSystem& sys, double horizon,
    const std::vector<std::pair<double, double>>& points, int mcStepsPerUnitTime,
    const FieldConfig& fieldCfg, const BackwardConfig& backwardCfg, const PideConfig& pideCfg);

} // namespace dsde
