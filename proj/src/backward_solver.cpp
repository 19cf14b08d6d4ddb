#include "dsde/backward_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dsde/errors.hpp"
#include "dsde/parallel.hpp"

namespace dsde {

namespace {

// True when the column of increments is identical across paths, which makes
// the corresponding coefficient unidentifiable by cross-path regression.
bool column_degenerate(const NoiseEnsemble& noise, int interval, int col, bool jump) {
    double lo = 0.0, hi = 0.0;
    for (int p = 0; p < noise.pathCount(); ++p) {
        const Eigen::MatrixXd& block = jump ? noise.paths[p].counts : noise.paths[p].dW;
        double v = block(interval, col);
        if (p == 0) {
            lo = hi = v;
        } else {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    return hi == lo;
}

void check_finite(const Eigen::VectorXd& v, int step, double threshold) {
    if (!v.allFinite() || v.norm() > threshold)
        throw NumericalBlowupError("backward sweep produced a non-finite or oversized value",
                                   step);
}

} // namespace

BackwardSolution solve_backward(const BackwardProblem& problem, const NoiseEnsemble& noise,
                                const BackwardConfig& config) {
    const int m = problem.dim;
    const int N = noise.grid.steps();
    const int d = noise.d;
    const int l = noise.l;
    const int J = noise.marks.size();
    const int M = noise.pathCount();
    const double dt = noise.grid.dt();

    if (m < 1) throw ShapeMismatchError("backward problem dimension must be positive");
    if (!problem.driverF) throw InvalidSystemError("backward problem requires driverF");
    if (problem.terminal.rows() != m || problem.terminal.cols() != M)
        throw ShapeMismatchError("terminal slice must be dim x paths");
    if (problem.estimateJumpCoefficient && problem.jumpSource)
        throw InvalidSystemError("a free jump coefficient excludes a known jump source");
    if (M < 2) throw InsufficientPathsError("backward sweep needs at least two paths");

    // Degeneracy map of the forward driver and the jump counts.
    std::vector<std::vector<bool>> wVaries(N, std::vector<bool>(d, false));
    std::vector<std::vector<bool>> nVaries(N, std::vector<bool>(J, false));
    bool anyWVaries = false;
    for (int i = 0; i < N; ++i) {
        for (int a = 0; a < d; ++a) {
            wVaries[i][a] = !column_degenerate(noise, i, a, false);
            anyWVaries = anyWVaries || wVaries[i][a];
        }
        for (int j = 0; j < J; ++j) nVaries[i][j] = !column_degenerate(noise, i, j, true);
    }
    const bool identityMode = !anyWVaries && !problem.estimateJumpCoefficient;
    if (!identityMode && !problem.features)
        throw InvalidSystemError("regression mode requires a feature map");

    BackwardSolution sol;
    sol.identityMode = identityMode;
    sol.P = PathEnsemble(M, N + 1, m, 1);
    sol.Q = PathEnsemble(M, N + 1, m, d);
    sol.K = PathEnsemble(M, N + 1, m, J);
    sol.P.setZero();
    sol.Q.setZero();
    sol.K.setZero();
    sol.steps.resize(N);

    for (int p = 0; p < M; ++p) sol.P.mat(p, N) = problem.terminal.col(p);

    for (int i = N - 1; i >= 0; --i) {
        std::vector<int> activeW, activeJ;
        for (int a = 0; a < d; ++a)
            if (wVaries[i][a]) activeW.push_back(a);
        if (problem.estimateJumpCoefficient)
            for (int j = 0; j < J; ++j)
                if (nVaries[i][j]) activeJ.push_back(j);

        // Right-endpoint subtraction: the dB term is a known per-path value
        // once the node i+1 slice is solved, and so is a known jump source.
        Eigen::MatrixXd adjusted(m, M);
        parallel_for(static_cast<std::size_t>(M), [&](std::size_t pi) {
            const int p = static_cast<int>(pi);
            const NoiseBundle& w = noise.paths[p];
            Eigen::VectorXd v = sol.P.mat(p, i + 1);
            if (l > 0 && problem.driverG) {
                Eigen::MatrixXd Gr = problem.driverG(i, p, sol.P.mat(p, i + 1),
                                                     sol.Q.mat(p, i + 1), sol.K.mat(p, i + 1));
                if (Gr.rows() != m || Gr.cols() != l)
                    throw ShapeMismatchError("driverG must return dim x l");
                v -= Gr * w.dB.row(i).transpose();
            }
            if (!problem.estimateJumpCoefficient && problem.jumpSource) {
                for (int j = 0; j < J; ++j)
                    v -= problem.jumpSource(i, p, j) * compensated_increment(w, i, j);
            }
            adjusted.col(p) = v;
        });

        Eigen::MatrixXd projected; // paths x m
        if (identityMode) {
            projected = adjusted.transpose();
            sol.steps[i].r2 = 1.0;
            sol.steps[i].conditionNumber = 1.0;
            sol.steps[i].basisSize = 0;
        } else {
            const int blocks = 1 + static_cast<int>(activeW.size() + activeJ.size());
            Eigen::MatrixXd target(M, static_cast<Eigen::Index>(m) * blocks);
            parallel_for(static_cast<std::size_t>(M), [&](std::size_t pi) {
                const int p = static_cast<int>(pi);
                const NoiseBundle& w = noise.paths[p];
                target.row(p).head(m) = adjusted.col(p).transpose();
                Eigen::Index off = m;
                for (int a : activeW) {
                    target.row(p).segment(off, m) = adjusted.col(p).transpose() * w.dW(i, a);
                    off += m;
                }
                for (int j : activeJ) {
                    target.row(p).segment(off, m) =
                        adjusted.col(p).transpose() * compensated_increment(w, i, j);
                    off += m;
                }
            });

            Eigen::VectorXd probe = problem.features(i, 0);
            Eigen::MatrixXd feats(M, probe.size());
            feats.row(0) = probe.transpose();
            parallel_for(static_cast<std::size_t>(M), [&](std::size_t pi) {
                const int p = static_cast<int>(pi);
                if (p == 0) return;
                Eigen::VectorXd fp = problem.features(i, p);
                if (fp.size() != feats.cols())
                    throw ShapeMismatchError("feature map returned inconsistent sizes");
                feats.row(p) = fp.transpose();
            });

            RegressionFit fit = regress_conditional(target, feats, config.regression);
            sol.steps[i].r2 = fit.r2;
            sol.steps[i].conditionNumber = fit.conditionNumber;
            sol.steps[i].basisSize = fit.basisSize;

            projected = fit.fitted.leftCols(m);
            parallel_for(static_cast<std::size_t>(M), [&](std::size_t pi) {
                const int p = static_cast<int>(pi);
                Eigen::Index off = m;
                auto Qi = sol.Q.mat(p, i);
                for (int a : activeW) {
                    Qi.col(a) = fit.fitted.row(p).segment(off, m).transpose() / dt;
                    off += m;
                }
                auto Ki = sol.K.mat(p, i);
                for (int j : activeJ) {
                    Ki.col(j) = fit.fitted.row(p).segment(off, m).transpose() /
                                (noise.marks.rate(j) * dt);
                    off += m;
                }
            });
        }

        parallel_for(static_cast<std::size_t>(M), [&](std::size_t pi) {
            const int p = static_cast<int>(pi);
            Eigen::VectorXd ptilde = projected.row(p).transpose();
            Eigen::VectorXd drift =
                problem.driverF(i, p, ptilde, sol.Q.mat(p, i), sol.K.mat(p, i));
            if (drift.size() != m) throw ShapeMismatchError("driverF must return a dim vector");
            sol.P.mat(p, i) = ptilde - drift * dt;
            check_finite(sol.P.mat(p, i), i, config.blowupThreshold);
        });
    }

    return sol;
}

} // namespace dsde
