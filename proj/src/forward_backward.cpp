#include "dsde/forward_backward.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "dsde/errors.hpp"
#include "dsde/parallel.hpp"

namespace dsde {

namespace {

// Empty source members mean zero; shapes are validated once per solve.
Eigen::VectorXd source_vec(const PathEnsemble& s, int path, int interval, int rows) {
    if (s.pathCount() == 0) return Eigen::VectorXd::Zero(rows);
    return s.mat(path, interval);
}

Eigen::MatrixXd source_mat(const PathEnsemble& s, int path, int interval, int rows, int cols) {
    if (s.pathCount() == 0) return Eigen::MatrixXd::Zero(rows, cols);
    return s.mat(path, interval);
}

Eigen::VectorXd source_boundary(const Eigen::MatrixXd& s, int path, int rows) {
    if (s.cols() == 0) return Eigen::VectorXd::Zero(rows);
    return s.col(path);
}

void validate_sources(const CoefficientSystem& sys, const SourceTerms& src, int paths,
                      int steps) {
    auto check = [&](const PathEnsemble& e, int rows, int cols, const char* what) {
        if (e.pathCount() == 0) return;
        if (e.pathCount() != paths || e.nodes() < steps || e.rows() != rows ||
            e.cols() != cols)
            throw ShapeMismatchError(std::string("source term ") + what +
                                     " has an incompatible shape");
    };
    check(src.f0, sys.n, 1, "f0");
    check(src.g0, sys.n, sys.d, "g0");
    check(src.h0, sys.n, sys.markCount(), "h0");
    check(src.F0, sys.m, 1, "F0");
    check(src.G0, sys.m, sys.l, "G0");
    if (src.psi.size() != 0 && (src.psi.rows() != sys.n || src.psi.cols() != paths))
        throw ShapeMismatchError("source term psi must be n x paths");
    if (src.phi.size() != 0 && (src.phi.rows() != sys.m || src.phi.cols() != paths))
        throw ShapeMismatchError("source term phi must be m x paths");
}

void require_compatible(const CoefficientSystem& sys, const NoiseEnsemble& noise) {
    if (noise.d != sys.d || noise.l != sys.l || noise.marks.size() != sys.markCount())
        throw ShapeMismatchError("noise ensemble dimensions disagree with the system");
    for (int j = 0; j < sys.markCount(); ++j)
        if (noise.marks.rate(j) != sys.marks.rate(j))
            throw ShapeMismatchError("mark intensities disagree between system and noise");
    if (noise.pathCount() < 2)
        throw InsufficientPathsError("coupled solves need at least two paths");
}

void require_frozen_backward(const NoiseEnsemble& noise) {
    if (noise.l > 0 && noise.freeze != FreezeMode::FreezeB)
        throw InvalidSystemError(
            "coupled solves condition on one shared backward-driver realization; "
            "sample the ensemble with the backward driver frozen");
}

// One Picard pass of the alpha0-system with delta-scaled Ubar sources. For
// mGTn the forward equation is solved first against the lagged iterate; for
// mLTn the backward equation leads and the forward one consumes its output.
QuintupleSolution continuation_pass(Branch branch, const CoefficientSystem& sys, double a0,
                                    double delta, const QuintupleSolution& Ubar,
                                    const QuintupleSolution& Vprev, const SourceTerms& src,
                                    const NoiseEnsemble& noise, const BackwardConfig& cfg) {
    const int n = sys.n, m = sys.m, d = sys.d, l = sys.l, J = sys.markCount();
    const int M = noise.pathCount();
    const int N = noise.grid.steps();
    const TimeGrid& grid = noise.grid;
    const double oneMinusA = 1.0 - a0;

    QuintupleSolution out;
    out.grid = grid;
    out.marks = sys.marks;

    if (branch == Branch::mGTn) {
        XEquationSpec spec;
        spec.dim = n;
        spec.drift = [&](int i, int p) {
            const double t = grid.node(i);
            Eigen::VectorXd v = source_vec(src.f0, p, i, n);
            if (a0 != 0.0) v += a0 * sys.f(t, Vprev.at(p, i));
            if (delta != 0.0) v += delta * sys.f(t, Ubar.at(p, i));
            return v;
        };
        if (d > 0)
            spec.diffusion = [&](int i, int p) {
                const double t = grid.node(i);
                Eigen::MatrixXd v = source_mat(src.g0, p, i, n, d);
                if (a0 != 0.0) v += a0 * sys.g(t, Vprev.at(p, i));
                if (delta != 0.0) v += delta * sys.g(t, Ubar.at(p, i));
                return v;
            };
        if (J > 0)
            spec.jump = [&](int i, int p, int j) {
                const double t = grid.node(i);
                Eigen::VectorXd v(n);
                if (src.h0.pathCount() != 0) v = src.h0.mat(p, i).col(j);
                else v.setZero();
                if (a0 != 0.0) v += a0 * sys.h(t, Vprev.at(p, i), j);
                if (delta != 0.0) v += delta * sys.h(t, Ubar.at(p, i), j);
                return v;
            };
        spec.initial.resize(n, M);
        for (int p = 0; p < M; ++p) {
            Eigen::VectorXd x0 = source_boundary(src.psi, p, n);
            if (a0 != 0.0) x0 += a0 * sys.Psi(Vprev.P.mat(p, 0));
            if (delta != 0.0) x0 += delta * sys.Psi(Ubar.P.mat(p, 0));
            spec.initial.col(p) = x0;
        }
        XSolution xs = solve_x_equation(spec, noise, cfg);

        BackwardProblem bp;
        bp.dim = m;
        bp.estimateJumpCoefficient = true;
        bp.terminal.resize(m, M);
        for (int p = 0; p < M; ++p) {
            Eigen::VectorXd xT = xs.X.mat(p, N);
            Eigen::VectorXd v = source_boundary(src.phi, p, m);
            v += a0 * sys.Phi(xT) + oneMinusA * (sys.H * xT);
            if (delta != 0.0) {
                Eigen::VectorXd xbT = Ubar.X.mat(p, N);
                v += delta * (sys.Phi(xbT) - sys.H * xbT);
            }
            bp.terminal.col(p) = v;
        }
        bp.driverF = [&](int i, int p, const Eigen::VectorXd& Pt, const Eigen::MatrixXd& Qh,
                         const Eigen::MatrixXd& Kh) {
            const double t = grid.node(i);
            Quintuple u{xs.X.mat(p, i), Pt, xs.Y.mat(p, i), Qh, Kh};
            Eigen::VectorXd v = source_vec(src.F0, p, i, m);
            v += a0 * sys.F(t, u) - oneMinusA * sys.mu1 * (sys.H * u.X);
            if (delta != 0.0)
                v += delta *
                     (sys.F(t, Ubar.at(p, i)) + sys.mu1 * (sys.H * Ubar.X.mat(p, i)));
            return v;
        };
        if (l > 0)
            bp.driverG = [&](int i, int p, const Eigen::VectorXd& Pr, const Eigen::MatrixXd& Qr,
                             const Eigen::MatrixXd& Kr) {
                const double t = grid.node(i + 1);
                Quintuple u{xs.X.mat(p, i + 1), Pr, xs.Y.mat(p, i + 1), Qr, Kr};
                Eigen::MatrixXd v = source_mat(src.G0, p, i, m, l);
                v += a0 * sys.G(t, u) - oneMinusA * sys.mu1 * (sys.H * u.Y);
                if (delta != 0.0)
                    v += delta * (sys.G(t, Ubar.at(p, i + 1)) +
                                  sys.mu1 * (sys.H * Ubar.Y.mat(p, i + 1)));
                return v;
            };
        bp.features = [&](int node, int p) { return Eigen::VectorXd(xs.X.mat(p, node)); };
        BackwardSolution bs = solve_backward(bp, noise, cfg);

        out.X = std::move(xs.X);
        out.Y = std::move(xs.Y);
        out.P = std::move(bs.P);
        out.Q = std::move(bs.Q);
        out.K = std::move(bs.K);
        return out;
    }

    // mLTn: backward equation first, forward equation against its output.
    const Eigen::MatrixXd Ht = sys.H.transpose();

    BackwardProblem bp;
    bp.dim = m;
    bp.estimateJumpCoefficient = true;
    bp.terminal.resize(m, M);
    for (int p = 0; p < M; ++p) {
        Eigen::VectorXd v = source_boundary(src.phi, p, m);
        if (a0 != 0.0) v += a0 * sys.Phi(Vprev.X.mat(p, N));
        if (delta != 0.0) v += delta * sys.Phi(Ubar.X.mat(p, N));
        bp.terminal.col(p) = v;
    }
    bp.driverF = [&](int i, int p, const Eigen::VectorXd& Pt, const Eigen::MatrixXd& Qh,
                     const Eigen::MatrixXd& Kh) {
        const double t = grid.node(i);
        Eigen::VectorXd v = source_vec(src.F0, p, i, m);
        if (a0 != 0.0) {
            Quintuple u{Vprev.X.mat(p, i), Pt, Vprev.Y.mat(p, i), Qh, Kh};
            v += a0 * sys.F(t, u);
        }
        if (delta != 0.0) v += delta * sys.F(t, Ubar.at(p, i));
        return v;
    };
    if (l > 0)
        bp.driverG = [&](int i, int p, const Eigen::VectorXd& Pr, const Eigen::MatrixXd& Qr,
                         const Eigen::MatrixXd& Kr) {
            const double t = grid.node(i + 1);
            Eigen::MatrixXd v = source_mat(src.G0, p, i, m, l);
            if (a0 != 0.0) {
                Quintuple u{Vprev.X.mat(p, i + 1), Pr, Vprev.Y.mat(p, i + 1), Qr, Kr};
                v += a0 * sys.G(t, u);
            }
            if (delta != 0.0) v += delta * sys.G(t, Ubar.at(p, i + 1));
            return v;
        };
    bp.features = [&](int node, int p) { return Eigen::VectorXd(Vprev.X.mat(p, node)); };
    BackwardSolution bs = solve_backward(bp, noise, cfg);

    XEquationSpec spec;
    spec.dim = n;
    spec.drift = [&](int i, int p) {
        const double t = grid.node(i);
        Eigen::VectorXd v = source_vec(src.f0, p, i, n);
        if (a0 != 0.0) {
            Quintuple u{Vprev.X.mat(p, i), bs.P.mat(p, i), Vprev.Y.mat(p, i), bs.Q.mat(p, i),
                        bs.K.mat(p, i)};
            v += a0 * sys.f(t, u);
        }
        v -= oneMinusA * sys.mu2 * (Ht * bs.P.mat(p, i));
        if (delta != 0.0)
            v += delta * (sys.f(t, Ubar.at(p, i)) + sys.mu2 * (Ht * Ubar.P.mat(p, i)));
        return v;
    };
    if (d > 0)
        spec.diffusion = [&](int i, int p) {
            const double t = grid.node(i);
            Eigen::MatrixXd v = source_mat(src.g0, p, i, n, d);
            if (a0 != 0.0) {
                Quintuple u{Vprev.X.mat(p, i), bs.P.mat(p, i), Vprev.Y.mat(p, i),
                            bs.Q.mat(p, i), bs.K.mat(p, i)};
                v += a0 * sys.g(t, u);
            }
            v -= oneMinusA * sys.mu2 * (Ht * bs.Q.mat(p, i));
            if (delta != 0.0)
                v += delta * (sys.g(t, Ubar.at(p, i)) + sys.mu2 * (Ht * Ubar.Q.mat(p, i)));
            return v;
        };
    if (J > 0)
        spec.jump = [&](int i, int p, int j) {
            const double t = grid.node(i);
            Eigen::VectorXd v(n);
            if (src.h0.pathCount() != 0) v = src.h0.mat(p, i).col(j);
            else v.setZero();
            if (a0 != 0.0) {
                Quintuple u{Vprev.X.mat(p, i), bs.P.mat(p, i), Vprev.Y.mat(p, i),
                            bs.Q.mat(p, i), bs.K.mat(p, i)};
                v += a0 * sys.h(t, u, j);
            }
            v -= oneMinusA * sys.mu2 * (Ht * bs.K.mat(p, i).col(j));
            if (delta != 0.0)
                v += delta * (sys.h(t, Ubar.at(p, i), j) +
                              sys.mu2 * (Ht * Ubar.K.mat(p, i).col(j)));
            return v;
        };
    spec.initial.resize(n, M);
    for (int p = 0; p < M; ++p) {
        Eigen::VectorXd x0 = source_boundary(src.psi, p, n);
        Eigen::VectorXd p0 = bs.P.mat(p, 0);
        if (a0 != 0.0) x0 += a0 * sys.Psi(p0);
        x0 += oneMinusA * (Ht * p0);
        if (delta != 0.0) {
            Eigen::VectorXd pb0 = Ubar.P.mat(p, 0);
            x0 += delta * (sys.Psi(pb0) - Ht * pb0);
        }
        spec.initial.col(p) = x0;
    }
    XSolution xs = solve_x_equation(spec, noise, cfg);

    out.X = std::move(xs.X);
    out.Y = std::move(xs.Y);
    out.P = std::move(bs.P);
    out.Q = std::move(bs.Q);
    out.K = std::move(bs.K);
    return out;
}

} // namespace

Branch select_branch(const CoefficientSystem& sys) {
    if (sys.m > sys.n) return Branch::mGTn;
    if (sys.m < sys.n) return Branch::mLTn;
    if (sys.mu1 > 0 && sys.beta1 > 0) return Branch::mGTn;
    if (sys.mu2 > 0 && sys.beta2 > 0) return Branch::mLTn;
    throw InvalidSystemError("square case needs mu1, beta1 > 0 or mu2, beta2 > 0");
}

Quintuple QuintupleSolution::at(int path, int node) const {
    Quintuple u;
    u.X = X.mat(path, node);
    u.P = P.mat(path, node);
    u.Y = Y.mat(path, node);
    u.Q = Q.mat(path, node);
    u.K = K.mat(path, node);
    return u;
}

QuintupleSolution QuintupleSolution::zero(const CoefficientSystem& sys, const TimeGrid& grid,
                                          int paths) {
    QuintupleSolution u;
    const int nodes = grid.nodes();
    u.X = PathEnsemble(paths, nodes, sys.n, 1);
    u.P = PathEnsemble(paths, nodes, sys.m, 1);
    u.Y = PathEnsemble(paths, nodes, sys.n, sys.l);
    u.Q = PathEnsemble(paths, nodes, sys.m, sys.d);
    u.K = PathEnsemble(paths, nodes, sys.m, sys.markCount());
    u.X.setZero();
    u.P.setZero();
    u.Y.setZero();
    u.Q.setZero();
    u.K.setZero();
    u.grid = grid;
    u.marks = sys.marks;
    return u;
}

double solution_distance(const QuintupleSolution& a, const QuintupleSolution& b) {
    const int M = a.pathCount();
    const int N = a.grid.steps();
    auto sameShape = [](const PathEnsemble& x, const PathEnsemble& y) {
        return x.pathCount() == y.pathCount() && x.nodes() == y.nodes() &&
               x.rows() == y.rows() && x.cols() == y.cols();
    };
    if (!sameShape(a.X, b.X) || !sameShape(a.P, b.P) || !sameShape(a.Y, b.Y) ||
        !sameShape(a.Q, b.Q) || !sameShape(a.K, b.K) || a.grid.steps() != b.grid.steps() ||
        a.grid.horizon() != b.grid.horizon() || a.marks.size() != b.marks.size())
        throw ShapeMismatchError("solution distance needs identically shaped solutions");

    const double dt = a.grid.dt();
    const int J = a.marks.size();
    std::vector<double> partial(M, 0.0);
    parallel_for(static_cast<std::size_t>(M), [&](std::size_t pi) {
        const int p = static_cast<int>(pi);
        double acc = 0.0;
        for (int i = 0; i < N; ++i) {
            double term = (a.X.mat(p, i) - b.X.mat(p, i)).squaredNorm() +
                          (a.P.mat(p, i) - b.P.mat(p, i)).squaredNorm() +
                          (a.Y.mat(p, i) - b.Y.mat(p, i)).squaredNorm() +
                          (a.Q.mat(p, i) - b.Q.mat(p, i)).squaredNorm();
            for (int j = 0; j < J; ++j)
                term += a.marks.rate(j) *
                        (a.K.mat(p, i).col(j) - b.K.mat(p, i).col(j)).squaredNorm();
            acc += term * dt;
        }
        acc += (a.X.mat(p, N) - b.X.mat(p, N)).squaredNorm();
        acc += (a.P.mat(p, 0) - b.P.mat(p, 0)).squaredNorm();
        partial[p] = acc;
    });
    // Serial reduction keeps the result independent of the worker count.
    double total = std::accumulate(partial.begin(), partial.end(), 0.0);
    return total / static_cast<double>(M);
}

ReversedProblem reverse_time_problem(const XEquationSpec& spec, const NoiseEnsemble& noise) {
    if (!spec.drift) throw InvalidSystemError("forward equation requires a drift");
    const int M = noise.pathCount();
    if (spec.initial.rows() != spec.dim || spec.initial.cols() != M)
        throw ShapeMismatchError("initial slice must be dim x paths");

    const int N = noise.grid.steps();
    ReversedProblem rev;
    rev.noise = reverse_noise(noise);

    BackwardProblem& bp = rev.problem;
    bp.dim = spec.dim;
    bp.estimateJumpCoefficient = false;
    bp.terminal = spec.initial;
    bp.driverF = [spec, N](int k, int p, const Eigen::VectorXd&, const Eigen::MatrixXd&,
                           const Eigen::MatrixXd&) {
        return Eigen::VectorXd(-spec.drift(N - 1 - k, p));
    };
    if (spec.diffusion)
        bp.driverG = [spec, N](int k, int p, const Eigen::VectorXd&, const Eigen::MatrixXd&,
                               const Eigen::MatrixXd&) {
            return Eigen::MatrixXd(-spec.diffusion(N - 1 - k, p));
        };
    if (spec.jump)
        bp.jumpSource = [spec, N](int k, int p, int j) {
            return Eigen::VectorXd(-spec.jump(N - 1 - k, p, j));
        };
    if (spec.features)
        bp.features = [spec, N](int k, int p) { return spec.features(N - k, p); };
    return rev;
}

XSolution solve_x_equation(const XEquationSpec& spec, const NoiseEnsemble& noise,
                           const BackwardConfig& config) {
    const int M = noise.pathCount();
    const int N = noise.grid.steps();
    const int n = spec.dim;

    ReversedProblem rev = reverse_time_problem(spec, noise);
    BackwardSolution bs = solve_backward(rev.problem, rev.noise, config);

    XSolution xs;
    xs.identityMode = bs.identityMode;
    xs.X = PathEnsemble(M, N + 1, n, 1);
    xs.Y = PathEnsemble(M, N + 1, n, noise.l);
    xs.Y.setZero();
    parallel_for(static_cast<std::size_t>(M), [&](std::size_t pi) {
        const int p = static_cast<int>(pi);
        for (int j = 0; j <= N; ++j) xs.X.mat(p, j) = bs.P.mat(p, N - j);
        for (int i = 0; i < N; ++i) xs.Y.mat(p, i) = bs.Q.mat(p, N - 1 - i);
    });
    return xs;
}

QuintupleSolution solve_alpha_zero(Branch branch, const CoefficientSystem& sys,
                                   const SourceTerms& sources, const NoiseEnsemble& noise,
                                   const BackwardConfig& config) {
    sys.validate();
    require_compatible(sys, noise);
    require_frozen_backward(noise);
    validate_sources(sys, sources, noise.pathCount(), noise.grid.steps());
    QuintupleSolution z = QuintupleSolution::zero(sys, noise.grid, noise.pathCount());
    return continuation_pass(branch, sys, 0.0, 0.0, z, z, sources, noise, config);
}

QuintupleSolution continuation_map(Branch branch, const CoefficientSystem& sys, double alpha0,
                                   double delta, const QuintupleSolution& Ubar,
                                   const SourceTerms& sources, const NoiseEnsemble& noise,
                                   const HomotopyConfig& homotopy,
                                   const BackwardConfig& config) {
    sys.validate();
    require_compatible(sys, noise);
    require_frozen_backward(noise);
    validate_sources(sys, sources, noise.pathCount(), noise.grid.steps());
    if (alpha0 < 0.0 || delta < 0.0 || alpha0 + delta > 1.0 + 1e-12)
        throw InvalidSystemError("continuation parameters must satisfy 0 <= alpha0 + delta <= 1");

    // The map solves the alpha0-system exactly (to a safety fraction of the
    // caller's tolerance) so its output depends on Ubar only through the
    // delta-scaled sources.
    const double settleTol = 0.1 * homotopy.innerTol;
    QuintupleSolution V = Ubar;
    double last = std::numeric_limits<double>::infinity();
    for (int pass = 0; pass < homotopy.maxInner; ++pass) {
        QuintupleSolution Vn =
            continuation_pass(branch, sys, alpha0, delta, Ubar, V, sources, noise, config);
        last = solution_distance(Vn, V);
        V = std::move(Vn);
        if (last < settleTol) return V;
    }
    throw MapDivergenceError("inner fixed-point iteration did not settle", last);
}

FbdsdepResult solve_fbdsdep(const CoefficientSystem& sys, const NoiseEnsemble& noise,
                            const HomotopyConfig& homotopy, const BackwardConfig& config,
                            ConvergenceTrace* progress) {
    sys.validate();
    require_compatible(sys, noise);
    require_frozen_backward(noise);
    if (homotopy.deltaInit <= 0.0 || homotopy.deltaInit > 1.0 ||
        homotopy.minDelta <= 0.0 || homotopy.minDelta > homotopy.deltaInit)
        throw InvalidSystemError("homotopy requires 0 < minDelta <= deltaInit <= 1");
    if (homotopy.contractionThreshold <= 0.0 || homotopy.contractionThreshold >= 1.0)
        throw InvalidSystemError("contraction threshold must lie in (0, 1)");

    ConvergenceTrace local;
    ConvergenceTrace& trace = progress ? *progress : local;
    trace = ConvergenceTrace{};

    const Branch branch = select_branch(sys);
    const SourceTerms none = SourceTerms::none();

    QuintupleSolution U = solve_alpha_zero(branch, sys, none, noise, config);
    double alpha = 0.0;
    double delta = homotopy.deltaInit;

    while (alpha < 1.0 - 1e-12) {
        delta = std::min(delta, 1.0 - alpha);
        HomotopyStep step;
        step.delta = delta;

        QuintupleSolution Ucur = U;
        bool converged = false;
        double prevDist = -1.0;
        for (int it = 1; it <= homotopy.maxInner; ++it) {
            QuintupleSolution Unext = continuation_map(branch, sys, alpha, delta, Ucur, none,
                                                       noise, homotopy, config);
            const double dist = solution_distance(Unext, Ucur);
            step.distances.push_back(dist);
            step.innerIterations = it;
            if (prevDist > 0.0) {
                const double ratio = dist / prevDist;
                step.ratios.push_back(ratio);
                if (ratio >= homotopy.contractionThreshold) break;
            }
            Ucur = std::move(Unext);
            if (dist < homotopy.innerTol) {
                converged = true;
                break;
            }
            prevDist = dist;
        }

        if (converged) {
            alpha += delta;
            U = std::move(Ucur);
            step.accepted = true;
            step.alphaReached = alpha;
            trace.steps.push_back(std::move(step));
            trace.finalAlpha = alpha;
        } else {
            step.accepted = false;
            step.alphaReached = alpha;
            trace.steps.push_back(std::move(step));
            delta *= 0.5;
            if (delta < homotopy.minDelta) {
                trace.success = false;
                trace.finalAlpha = alpha;
                throw ContinuationError("continuation step underflowed before reaching the "
                                        "target system",
                                        alpha);
            }
        }
    }

    trace.success = true;
    trace.finalAlpha = 1.0;

    FbdsdepResult result;
    result.solution = std::move(U);
    result.trace = trace;
    return result;
}

FbdsdepResult solve_fbdsdep(const CoefficientSystem& sys, const TimeGrid& grid,
                            const EnsembleConfig& ensemble, const HomotopyConfig& homotopy,
                            const BackwardConfig& config, ConvergenceTrace* progress) {
    NoiseEnsemble noise = sample_ensemble(grid, sys.d, sys.l, sys.marks, ensemble.seed,
                                          ensemble.paths, FreezeMode::FreezeB);
    return solve_fbdsdep(sys, noise, homotopy, config, progress);
}

} // namespace dsde
