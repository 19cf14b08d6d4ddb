#include "dsde/experiments.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

#include "dsde/errors.hpp"
#include "dsde/noise.hpp"

namespace dsde {

ContinuityStudy continuity_study(const ParameterFamily& family, const TimeGrid& grid,
                                 const EnsembleConfig& ensemble, const HomotopyConfig& homotopy,
                                 const BackwardConfig& backward) {
    family.baseline.validate();
    if (!family.perturbed) throw std::invalid_argument("continuity study needs a family map");
    // One shared ensemble: every member sees the same draws, so the reported
    // distances measure the coefficient perturbation, not resampling noise.
    NoiseEnsemble noise =
        sample_ensemble(grid, family.baseline.d, family.baseline.l, family.baseline.marks,
                        ensemble.seed, ensemble.paths, FreezeMode::FreezeB);

    ContinuityStudy study;
    FbdsdepResult base = solve_fbdsdep(family.baseline, noise, homotopy, backward);
    study.baselineSolution = base.solution;
    study.baselineTrace = base.trace;

    for (double alpha : family.alphas) {
        ContinuityRow row;
        row.alpha = alpha;
        try {
            CoefficientSystem member = family.perturbed(alpha);
            if (member.n != family.baseline.n || member.m != family.baseline.m ||
                member.d != family.baseline.d || member.l != family.baseline.l ||
                member.markCount() != family.baseline.markCount())
                throw InvalidSystemError("family members must share all driver dimensions");
            FbdsdepResult r = solve_fbdsdep(member, noise, homotopy, backward);
            row.distance = solution_distance(r.solution, base.solution);
            row.success = true;
        } catch (const std::exception& e) {
            row.success = false;
            row.error = e.what();
            row.distance = std::numeric_limits<double>::quiet_NaN();
        }
        study.rows.push_back(row);
    }
    return study;
}

Eigen::Matrix2Xd solve_linear_bvp(const LinearBvp& bvp, double horizon,
                                  const std::vector<double>& times) {
    if (horizon <= 0.0) throw std::invalid_argument("horizon must be positive");
    Eigen::Vector2d vstar = Eigen::Vector2d::Zero();
    if (bvp.c.norm() > 0.0) {
        Eigen::FullPivLU<Eigen::Matrix2d> lu(bvp.A);
        if (!lu.isInvertible())
            throw std::invalid_argument("forcing with singular dynamics is not supported");
        vstar = -lu.solve(bvp.c);
    }
    Eigen::Matrix2d E = (bvp.A * horizon).exp();

    Eigen::Matrix2d rows;
    rows.row(0) = bvp.initialRow;
    rows.row(1) = bvp.terminalRow * E;
    Eigen::Vector2d rhs;
    rhs(0) = bvp.initialValue - bvp.initialRow * vstar;
    rhs(1) = bvp.terminalValue - bvp.terminalRow * vstar;
    Eigen::FullPivLU<Eigen::Matrix2d> lu(rows);
    if (!lu.isInvertible())
        throw std::invalid_argument("boundary rows do not pin a unique trajectory");
    Eigen::Vector2d shifted = lu.solve(rhs); // v0 - vstar

    Eigen::Matrix2Xd out(2, static_cast<int>(times.size()));
    for (std::size_t k = 0; k < times.size(); ++k)
        out.col(static_cast<int>(k)) = (bvp.A * times[k]).exp() * shifted + vstar;
    return out;
}

namespace {

void validate_hamiltonian(const QuadraticHamiltonian& params) {
    if (params.a < 0.0 || params.a >= 1.0)
        throw InvalidSystemError("backward curvature a must lie in [0, 1)");
    if (params.b < 0.0) throw InvalidSystemError("forward curvature b must be nonnegative");
    if (params.a + params.b <= 0.0)
        throw InvalidSystemError("the generator needs curvature in at least one direction");
    if (params.d < 0 || params.l < 0) throw InvalidSystemError("driver dimensions are negative");
}

} // namespace

double hamiltonian_value(const QuadraticHamiltonian& params, const Quintuple& U) {
    validate_hamiltonian(params);
    double value = 0.5 * params.b * U.X.squaredNorm() - 0.5 * params.a * U.P.squaredNorm() +
                   0.5 * params.b * U.Y.squaredNorm() - 0.5 * params.a * U.Q.squaredNorm();
    for (int j = 0; j < params.marks.size(); ++j)
        value -= 0.5 * params.a * params.marks.rate(j) * U.K.col(j).squaredNorm();
    return value;
}

CoefficientSystem build_hamiltonian_system(const QuadraticHamiltonian& params) {
    validate_hamiltonian(params);
    const double a = params.a;
    const double b = params.b;
    CoefficientSystem sys;
    sys.name = "quadratic-hamiltonian";
    sys.n = 1;
    sys.m = 1;
    sys.d = params.d;
    sys.l = params.l;
    sys.marks = params.marks;
    // Forward coefficients are the generator gradients along the backward
    // slots; backward coefficients flip sign along the forward slots.
    sys.f = [a](double, const Quintuple& U) -> Eigen::VectorXd { return -a * U.P; };
    sys.g = [a](double, const Quintuple& U) -> Eigen::MatrixXd { return -a * U.Q; };
    sys.h = [a](double, const Quintuple& U, int j) -> Eigen::VectorXd { return -a * U.K.col(j); };
    sys.F = [b](double, const Quintuple& U) -> Eigen::VectorXd { return -b * U.X; };
    sys.G = [b](double, const Quintuple& U) -> Eigen::MatrixXd { return -b * U.Y; };
    const double psi0 = params.psiOffset;
    const double phi0 = params.phiOffset;
    sys.Psi = [psi0](const Eigen::VectorXd& P) -> Eigen::VectorXd {
        return -P + Eigen::VectorXd::Constant(P.size(), psi0);
    };
    sys.Phi = [phi0](const Eigen::VectorXd& X) -> Eigen::VectorXd {
        return X + Eigen::VectorXd::Constant(X.size(), phi0);
    };
    sys.H = Eigen::MatrixXd::Identity(1, 1);
    // Strict decay margins keep the margin checks away from signed zeros.
    sys.mu1 = 0.9 * b;
    sys.mu2 = 0.9 * a;
    sys.beta1 = 0.9;
    sys.beta2 = 0.9;
    sys.lipC = std::max({1.0, a, b});
    sys.lipGamma = a;
    sys.validate();
    return sys;
}

namespace {

HamiltonianReport report_from_solution(const QuadraticHamiltonian& params, const TimeGrid& grid,
                                        FbdsdepResult&& result) {
    HamiltonianReport report;
    report.solution = std::move(result.solution);
    report.trace = std::move(result.trace);

    const int M = report.solution.pathCount();
    const int N = grid.steps();
    const QuintupleSolution& sol = report.solution;
    for (int p = 0; p < M; ++p) {
        double psi0 = -sol.P.at(p, 0, 0) + params.psiOffset;
        double phi0 = sol.X.at(p, N, 0) + params.phiOffset;
        report.initialResidual += std::abs(sol.X.at(p, 0, 0) - psi0);
        report.terminalResidual += std::abs(sol.P.at(p, N, 0) - phi0);
    }
    report.initialResidual /= M;
    report.terminalResidual /= M;

    LinearBvp bvp;
    bvp.A << 0.0, -params.a, -params.b, 0.0;
    bvp.initialRow << 1.0, 1.0;
    bvp.initialValue = params.psiOffset;
    bvp.terminalRow << -1.0, 1.0;
    bvp.terminalValue = params.phiOffset;
    std::vector<double> times(static_cast<std::size_t>(N) + 1);
    for (int i = 0; i <= N; ++i) times[static_cast<std::size_t>(i)] = grid.node(i);
    Eigen::Matrix2Xd ref = solve_linear_bvp(bvp, grid.horizon(), times);

    report.times = times;
    for (int i = 0; i <= N; ++i) {
        double mx = 0.0, mp = 0.0;
        for (int p = 0; p < M; ++p) {
            mx += sol.X.at(p, i, 0);
            mp += sol.P.at(p, i, 0);
        }
        mx /= M;
        mp /= M;
        double vx = 0.0, vp = 0.0;
        for (int p = 0; p < M; ++p) {
            vx += (sol.X.at(p, i, 0) - mx) * (sol.X.at(p, i, 0) - mx);
            vp += (sol.P.at(p, i, 0) - mp) * (sol.P.at(p, i, 0) - mp);
        }
        double sx = M > 1 ? std::sqrt(vx / (M - 1) / M) : 0.0;
        double sp = M > 1 ? std::sqrt(vp / (M - 1) / M) : 0.0;
        report.meanX.push_back(mx);
        report.meanP.push_back(mp);
        report.stderrX.push_back(sx);
        report.stderrP.push_back(sp);
        report.bvpX.push_back(ref(0, i));
        report.bvpP.push_back(ref(1, i));
        report.maxDeviationX = std::max(report.maxDeviationX, std::abs(mx - ref(0, i)));
        report.maxDeviationP = std::max(report.maxDeviationP, std::abs(mp - ref(1, i)));
    }
    return report;
}

} // namespace

HamiltonianReport hamiltonian_demo(const QuadraticHamiltonian& params, const TimeGrid& grid,
                                   const EnsembleConfig& ensemble, const HomotopyConfig& homotopy,
                                   const BackwardConfig& backward) {
    CoefficientSystem sys = build_hamiltonian_system(params);
    NoiseEnsemble noise = sample_ensemble(grid, sys.d, sys.l, sys.marks, ensemble.seed,
                                          ensemble.paths, FreezeMode::FreezeB);
    FbdsdepResult result = solve_fbdsdep(sys, noise, homotopy, backward);
    return report_from_solution(params, grid, std::move(result));
}

} // namespace dsde
