#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dsde/time_grid.hpp"

namespace dsde {

/// Point value of the solution quintuple: X in R^n, P in R^m, Y in R^{n x l},
/// Q in R^{m x d}, K in R^{m x J} (one column per mark).
struct Quintuple {
    Eigen::VectorXd X;
    Eigen::VectorXd P;
    Eigen::MatrixXd Y;
    Eigen::MatrixXd Q;
    Eigen::MatrixXd K;

    static Quintuple zero(int n, int m, int d, int l, int J);
};

/// Fully coupled coefficient set with the structural constants the solvers
/// rely on. H couples the X-block and P-block pairings; (mu1, mu2) weight the
/// monotonicity decay, (beta1, beta2) the boundary maps, (lipC, lipGamma) the
/// Lipschitz bounds with lipGamma < 1 on the delicate slots.
struct CoefficientSystem {
    int n = 1, m = 1, d = 1, l = 1;
    MarkSpace marks;

    std::function<Eigen::VectorXd(double, const Quintuple&)> f;          // n
    std::function<Eigen::MatrixXd(double, const Quintuple&)> g;          // n x d
    std::function<Eigen::VectorXd(double, const Quintuple&, int)> h;     // n, per mark
    std::function<Eigen::VectorXd(double, const Quintuple&)> F;          // m
    std::function<Eigen::MatrixXd(double, const Quintuple&)> G;          // m x l
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> Psi;          // n, of P
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> Phi;          // m, of X

    Eigen::MatrixXd H; // m x n, full rank

    double mu1 = 0.0, mu2 = 0.0;
    double beta1 = 0.0, beta2 = 0.0;
    double lipC = 1.0, lipGamma = 0.5;

    std::string name;

    int markCount() const { return marks.size(); }
    void validate() const; // throws InvalidSystemError
};

/// <A(t,U) - A(t,Ubar), U - Ubar> with A = (H^T F, H f, H^T G, H g, H h) and
/// the mark block weighted by the intensities.
double pairing(const CoefficientSystem& sys, double t, const Quintuple& U, const Quintuple& Ubar);

struct SamplerConfig {
    std::vector<double> radii{0.1, 1.0, 10.0};
    std::uint64_t seed = 1234;
    double horizon = 1.0; // t is sampled uniformly over [0, horizon]
};

struct SamplePoint {
    double t = 0.0;
    Quintuple U, Ubar;
};

struct MarginReport {
    long samplesTested = 0;
    double minMargin = 0.0;
    SamplePoint worstCase;
    long violationCount = 0;
};

/// Margin of the monotone decay inequality at random difference samples;
/// primed flips the required sign of the pairing (the mirrored assumption for
/// reversed-role systems). Negative margins count as violations.
MarginReport check_monotonicity(const CoefficientSystem& sys, const SamplerConfig& sampler,
                                int nSamples, bool primed);

struct BoundaryReport {
    MarginReport psi;
    MarginReport phi;
};

/// Margins of the boundary-map inequalities for Psi (initial side) and Phi
/// (terminal side); primed flips both required signs.
BoundaryReport check_boundary_monotonicity(const CoefficientSystem& sys,
                                           const SamplerConfig& sampler, int nSamples,
                                           bool primed);

struct LipschitzReport {
    MarginReport f, F, g, G, h, psi, phi;
    double minMargin() const;
    long violationCount() const;
};

/// Margins of the quadratic Lipschitz bounds with constant lipC, where g and
/// G carry the lipGamma-weighted slots (g on the Y difference, G on the Q and
/// K differences).
LipschitzReport check_lipschitz(const CoefficientSystem& sys, const SamplerConfig& sampler,
                                int nSamples);

} // namespace dsde
