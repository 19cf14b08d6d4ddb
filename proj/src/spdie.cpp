#include "dsde/spdie.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "dsde/errors.hpp"
#include "dsde/parallel.hpp"
#include "dsde/process_path.hpp"

namespace dsde {

namespace {

Quintuple make_state(const Eigen::VectorXd& X, const Eigen::VectorXd& P,
                     const Eigen::MatrixXd& Y, const Eigen::MatrixXd& Q,
                     const Eigen::MatrixXd& K) {
    Quintuple u;
    u.X = X;
    u.P = P;
    u.Y = Y;
    u.Q = Q;
    u.K = K;
    return u;
}

double rel_dev(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    double scale = 1.0 + std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

double rel_dev(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double scale = 1.0 + std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

} // namespace

MarkovianReport verify_markovian(const CoefficientSystem& sys, std::uint64_t seed, int samples) {
    sys.validate();
    const int J = sys.markCount();
    std::mt19937_64 rng(derive_seed(seed, 0x6b, 0));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> clock(0.0, 1.0);
    auto vec = [&](int rows) {
        Eigen::VectorXd v(rows);
        for (int i = 0; i < rows; ++i) v(i) = gauss(rng);
        return v;
    };
    auto mat = [&](int rows, int cols) {
        Eigen::MatrixXd m(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) m(i, j) = gauss(rng);
        return m;
    };

    MarkovianReport report;
    const double tol = 1e-12;
    auto flag = [&](double dev, const std::string& what) {
        report.worstDeviation = std::max(report.worstDeviation, dev);
        if (dev > tol && report.markovian) {
            report.markovian = false;
            report.failure = what;
        }
    };

    for (int s = 0; s < samples; ++s) {
        double t = clock(rng);
        Eigen::VectorXd X = vec(sys.n);
        Eigen::VectorXd P = vec(sys.m);
        Eigen::MatrixXd Y = mat(sys.n, sys.l);
        Eigen::MatrixXd Q = mat(sys.m, sys.d);
        Eigen::MatrixXd K = mat(sys.m, J);
        Quintuple base = make_state(X, P, Y, Q, K);

        // f, F, G must ignore the backward-driver coefficient slot.
        Quintuple vy = make_state(X, P, mat(sys.n, sys.l), Q, K);
        flag(rel_dev(sys.f(t, base), sys.f(t, vy)), "f depends on the Y slot");
        flag(rel_dev(sys.F(t, base), sys.F(t, vy)), "F depends on the Y slot");
        flag(rel_dev(sys.G(t, base), sys.G(t, vy)), "G depends on the Y slot");

        // g may read only (t, X, P).
        Quintuple vg = make_state(X, P, mat(sys.n, sys.l), mat(sys.m, sys.d), mat(sys.m, J));
        flag(rel_dev(sys.g(t, base), sys.g(t, vg)), "g depends on (Y, Q, K)");

        // h may read only (t, X, mark).
        Quintuple vh =
            make_state(X, vec(sys.m), mat(sys.n, sys.l), mat(sys.m, sys.d), mat(sys.m, J));
        for (int j = 0; j < J; ++j)
            flag(rel_dev(sys.h(t, base, j), sys.h(t, vh, j)), "h depends on (P, Y, Q, K)");
    }
    return report;
}

Eigen::VectorXd UEstimate::value() const {
    if (values.empty()) throw std::invalid_argument("empty field estimate");
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(values.front().size());
    for (const auto& v : values) acc += v;
    return acc / static_cast<double>(values.size());
}

Eigen::VectorXd UEstimate::standardError() const {
    if (standardErrors.empty()) throw std::invalid_argument("empty field estimate");
    return standardErrors.front();
}

namespace {

struct PicardState {
    PathEnsemble X; // node indexed
    PathEnsemble P; // node indexed
    PathEnsemble Q; // interval indexed
    PathEnsemble K; // interval indexed
};

double picard_distance(const PicardState& a, const PicardState& b, const TimeGrid& grid,
                       const MarkSpace& marks) {
    const int M = a.X.pathCount();
    const int N = grid.steps();
    const double dt = grid.dt();
    std::vector<double> partial(static_cast<std::size_t>(M), 0.0);
    parallel_for(static_cast<std::size_t>(M), [&](std::size_t p) {
        int pi = static_cast<int>(p);
        double acc = 0.0;
        for (int i = 0; i < N; ++i) {
            double step = (a.X.mat(pi, i) - b.X.mat(pi, i)).squaredNorm() +
                          (a.P.mat(pi, i) - b.P.mat(pi, i)).squaredNorm() +
                          (a.Q.mat(pi, i) - b.Q.mat(pi, i)).squaredNorm();
            for (int j = 0; j < marks.size(); ++j)
                step += marks.rate(j) *
                        (a.K.mat(pi, i).col(j) - b.K.mat(pi, i).col(j)).squaredNorm();
            acc += step * dt;
        }
        acc += (a.X.mat(pi, N) - b.X.mat(pi, N)).squaredNorm();
        acc += (a.P.mat(pi, 0) - b.P.mat(pi, 0)).squaredNorm();
        partial[p] = acc;
    });
    double total = 0.0;
    for (double v : partial) total += v;
    return total / static_cast<double>(M);
}

// Shared W and mark streams with a replicate-specific frozen B path isolates
// the field randomness; without a backward driver each replicate is an
// independent repetition instead.
NoiseEnsemble replicate_ensemble(const CoefficientSystem& sys, const TimeGrid& grid,
                                 const FieldConfig& cfg, int replicate) {
    if (sys.l == 0)
        return sample_ensemble(grid, sys.d, sys.l, sys.marks,
                               derive_seed(cfg.seed, 0x72, static_cast<std::uint64_t>(replicate)),
                               cfg.paths, FreezeMode::FreezeB);
    NoiseEnsemble ens = sample_ensemble(grid, sys.d, sys.l, sys.marks, cfg.seed, cfg.paths,
                                        FreezeMode::FreezeB);
    std::mt19937_64 rng(derive_seed(cfg.seed, 0x52, static_cast<std::uint64_t>(replicate)));
    std::normal_distribution<double> gauss(0.0, std::sqrt(grid.dt()));
    Eigen::MatrixXd shared(grid.steps(), sys.l);
    for (int i = 0; i < grid.steps(); ++i)
        for (int c = 0; c < sys.l; ++c) shared(i, c) = gauss(rng);
    for (auto& path : ens.paths) path.dB = shared;
    return ens;
}

} // namespace

UEstimate evaluate_u(const CoefficientSystem& sys, double tStart, const Eigen::VectorXd& x,
                     const TimeGrid& remainder, const FieldConfig& fieldCfg,
                     const BackwardConfig& backwardCfg) {
    MarkovianReport probe = verify_markovian(sys);
    if (!probe.markovian) throw InvalidSystemError("field evaluation needs " + probe.failure +
                                                   " removed: coefficients are not Markovian");
    if (x.size() != sys.n) throw ShapeMismatchError("field evaluation point has wrong dimension");
    if (fieldCfg.paths < 2) throw InsufficientPathsError("field evaluation needs at least 2 paths");
    if (fieldCfg.bReplicates < 1)
        throw std::invalid_argument("bReplicates must be at least 1");

    const int N = remainder.steps();
    const int M = fieldCfg.paths;
    const int J = sys.markCount();
    const double dt = remainder.dt();

    UEstimate out;
    for (int r = 0; r < fieldCfg.bReplicates; ++r) {
        NoiseEnsemble noise = replicate_ensemble(sys, remainder, fieldCfg, r);

        PicardState prev;
        prev.X = PathEnsemble(M, N + 1, sys.n);
        prev.P = PathEnsemble(M, N + 1, sys.m);
        prev.Q = PathEnsemble(M, N + 1, sys.m, sys.d);
        prev.K = PathEnsemble(M, N + 1, sys.m, J);
        prev.X.setZero();
        prev.P.setZero();
        prev.Q.setZero();
        prev.K.setZero();

        PicardState cur = prev;
        BackwardSolution bs;
        int iterations = 0;
        bool settled = false;
        double lastDistance = 0.0;
        for (int it = 1; it <= fieldCfg.maxPicard; ++it) {
            iterations = it;
            // Forward pass from the fixed start point with the lagged
            // backward components in the coefficient arguments.
            parallel_for(static_cast<std::size_t>(M), [&](std::size_t p) {
                int pi = static_cast<int>(p);
                const NoiseBundle& nb = noise.paths[p];
                cur.X.mat(pi, 0) = x;
                for (int i = 0; i < N; ++i) {
                    Quintuple u = make_state(cur.X.mat(pi, i), prev.P.mat(pi, i),
                                             Eigen::MatrixXd::Zero(sys.n, sys.l),
                                             prev.Q.mat(pi, i), prev.K.mat(pi, i));
                    double t = tStart + remainder.node(i);
                    Eigen::VectorXd next = cur.X.mat(pi, i);
                    next += sys.f(t, u) * dt;
                    if (sys.d > 0) next += sys.g(t, u) * nb.dW.row(i).transpose();
                    for (int j = 0; j < J; ++j)
                        next += sys.h(t, u, j) * compensated_increment(nb, i, j);
                    cur.X.mat(pi, i + 1) = next;
                }
            });

            BackwardProblem bp;
            bp.dim = sys.m;
            bp.terminal.resize(sys.m, M);
            for (int p = 0; p < M; ++p) bp.terminal.col(p) = sys.Phi(cur.X.mat(p, N));
            bp.driverF = [&](int i, int p, const Eigen::VectorXd& P, const Eigen::MatrixXd& Q,
                             const Eigen::MatrixXd& K) {
                Quintuple u = make_state(cur.X.mat(p, i), P,
                                         Eigen::MatrixXd::Zero(sys.n, sys.l), Q, K);
                return sys.F(tStart + remainder.node(i), u);
            };
            bp.driverG = [&](int i, int p, const Eigen::VectorXd& P, const Eigen::MatrixXd& Q,
                             const Eigen::MatrixXd& K) {
                Quintuple u = make_state(cur.X.mat(p, i + 1), P,
                                         Eigen::MatrixXd::Zero(sys.n, sys.l), Q, K);
                return sys.G(tStart + remainder.node(i + 1), u);
            };
            bp.features = [&](int node, int p) -> Eigen::VectorXd {
                return cur.X.mat(p, node);
            };
            bs = solve_backward(bp, noise, backwardCfg);

            cur.P = bs.P;
            cur.Q = bs.Q;
            cur.K = bs.K;

            lastDistance = picard_distance(cur, prev, remainder, sys.marks);
            prev = cur;
            if (lastDistance < fieldCfg.picardTol) {
                settled = true;
                break;
            }
        }
        if (!settled)
            throw MapDivergenceError("field evaluation did not settle", lastDistance);

        // All paths share the start point, so the first projection is the
        // ensemble mean; report it with the spread of the pathwise
        // terminal-minus-drift aggregate as its sampling error.
        Eigen::VectorXd value = Eigen::VectorXd::Zero(sys.m);
        for (int p = 0; p < M; ++p) value += cur.P.mat(p, 0);
        value /= static_cast<double>(M);

        Eigen::MatrixXd zeta(sys.m, M);
        parallel_for(static_cast<std::size_t>(M), [&](std::size_t p) {
            int pi = static_cast<int>(p);
            const NoiseBundle& nb = noise.paths[p];
            Eigen::VectorXd acc = sys.Phi(cur.X.mat(pi, N));
            for (int i = 0; i < N; ++i) {
                Quintuple u = make_state(cur.X.mat(pi, i), cur.P.mat(pi, i),
                                         Eigen::MatrixXd::Zero(sys.n, sys.l),
                                         cur.Q.mat(pi, i), cur.K.mat(pi, i));
                acc -= sys.F(tStart + remainder.node(i), u) * dt;
                if (sys.l > 0) {
                    Quintuple ur = make_state(cur.X.mat(pi, i + 1), cur.P.mat(pi, i + 1),
                                              Eigen::MatrixXd::Zero(sys.n, sys.l),
                                              cur.Q.mat(pi, i + 1), cur.K.mat(pi, i + 1));
                    acc -= sys.G(tStart + remainder.node(i + 1), ur) * nb.dB.row(i).transpose();
                }
            }
            zeta.col(pi) = acc;
        });
        Eigen::VectorXd mean = zeta.rowwise().mean();
        Eigen::VectorXd se(sys.m);
        for (int c = 0; c < sys.m; ++c) {
            double ss = (zeta.row(c).array() - mean(c)).square().sum() /
                        static_cast<double>(M - 1);
            se(c) = std::sqrt(ss / static_cast<double>(M));
        }

        out.values.push_back(value);
        out.standardErrors.push_back(se);
        out.picardIterations = std::max(out.picardIterations, iterations);
    }
    return out;
}

FieldEstimate evaluate_field(const CoefficientSystem& sys, double horizon,
                             const std::vector<std::pair<double, Eigen::VectorXd>>& points,
                             int stepsPerUnitTime, const FieldConfig& fieldCfg,
                             const BackwardConfig& backwardCfg) {
    if (stepsPerUnitTime < 1) throw std::invalid_argument("stepsPerUnitTime must be positive");
    FieldEstimate field;
    field.ensembleSize = fieldCfg.paths;
    field.bReplicates = fieldCfg.bReplicates;
    for (const auto& [t, x] : points) {
        double remaining = horizon - t;
        if (remaining <= 0.0)
            throw std::invalid_argument("field points must lie strictly before the horizon");
        int steps = std::max(1, static_cast<int>(std::lround(remaining * stepsPerUnitTime)));
        TimeGrid remainder(remaining, steps);
        field.t.push_back(t);
        field.x.push_back(x);
        field.estimates.push_back(evaluate_u(sys, t, x, remainder, fieldCfg, backwardCfg));
    }
    return field;
}

namespace {

double interp_clamped(const Eigen::VectorXd& u, double x0, double dx, double xq) {
    const int n = static_cast<int>(u.size());
    double s = (xq - x0) / dx;
    if (s <= 0.0) return u(0);
    if (s >= n - 1) return u(n - 1);
    int idx = static_cast<int>(std::floor(s));
    double w = s - idx;
    return (1.0 - w) * u(idx) + w * u(idx + 1);
}

struct PideWorkspace {
    Eigen::VectorXd x;
    double x0 = 0.0;
    double dx = 0.0;
    int padNodes = 0;
};

} // namespace

double PideField::valueAt(int slice, double xq) const {
    if (slice < 0 || slice >= static_cast<int>(u.size()))
        throw std::invalid_argument("slice index out of range");
    const double x0 = x(0);
    const double dx = x(1) - x(0);
    const double xl = x(x.size() - 1);
    if (xq < x0 - 1e-9 || xq > xl + 1e-9)
        throw DomainTooSmallError("query point lies outside the padded grid");
    return interp_clamped(u[slice], x0, dx, xq);
}

PideField solve_pide_fd(const CoefficientSystem& sys, double horizon,
                        const std::vector<double>& queryTimes, const PideConfig& cfg) {
    MarkovianReport probe = verify_markovian(sys);
    if (!probe.markovian)
        throw InvalidSystemError("finite differences need " + probe.failure +
                                 " removed: coefficients are not Markovian");
    if (sys.n != 1 || sys.m != 1)
        throw InvalidSystemError("finite differences cover scalar systems only");
    if (sys.l != 0)
        throw InvalidSystemError(
            "finite differences cover deterministic systems (no backward driver)");
    if (horizon <= 0.0) throw std::invalid_argument("horizon must be positive");
    if (cfg.spatialNodes < 3) throw std::invalid_argument("spatialNodes must be at least 3");
    if (!(cfg.xMin < cfg.xMax)) throw std::invalid_argument("empty spatial domain");
    if (!(cfg.cflSafety > 0.0 && cfg.cflSafety <= 1.0))
        throw std::invalid_argument("cflSafety must lie in (0, 1]");
    if (queryTimes.empty()) throw std::invalid_argument("no query times given");
    for (double t : queryTimes)
        if (t < -1e-9 || t > horizon + 1e-9)
            throw std::invalid_argument("query time outside [0, horizon]");

    const int J = sys.markCount();
    const double dx = (cfg.xMax - cfg.xMin) / (cfg.spatialNodes - 1);

    // Coefficient magnitude estimates over the inner domain drive the padding
    // and the stability bound; the per-step check below backstops them.
    double fMax = 0.0, gMax = 0.0, shiftMax = 0.0;
    {
        auto probeQuint = [&](double xv, double pv) {
            return make_state(Eigen::VectorXd::Constant(1, xv), Eigen::VectorXd::Constant(1, pv),
                              Eigen::MatrixXd::Zero(1, 0), Eigen::MatrixXd::Zero(1, sys.d),
                              Eigen::MatrixXd::Zero(1, J));
        };
        for (int s = 0; s <= 32; ++s) {
            double xv = cfg.xMin + (cfg.xMax - cfg.xMin) * s / 32.0;
            double phi = sys.Phi(Eigen::VectorXd::Constant(1, xv))(0);
            for (double pv : {0.0, phi}) {
                for (double t : {0.0, horizon / 2.0, horizon}) {
                    Quintuple q = probeQuint(xv, pv);
                    fMax = std::max(fMax, std::abs(sys.f(t, q)(0)));
                    if (sys.d > 0) gMax = std::max(gMax, sys.g(t, q).row(0).norm());
                    for (int j = 0; j < J; ++j)
                        shiftMax = std::max(shiftMax, std::abs(sys.h(t, q, j)(0)));
                }
            }
        }
    }
    const double mass = sys.marks.totalMass();
    double pad = cfg.padOverride;
    if (pad < 0.0) {
        double lt = mass * horizon;
        double jumpReach = shiftMax * (lt + 4.0 * std::sqrt(lt + 1.0) + 4.0);
        double diffReach = 5.0 * gMax * std::sqrt(horizon);
        double driftReach = (fMax + mass * shiftMax) * horizon;
        pad = jumpReach + diffReach + driftReach;
    }
    if (J > 0 && pad < shiftMax)
        throw DomainTooSmallError("padding smaller than a single jump shift");

    PideWorkspace ws;
    ws.padNodes = static_cast<int>(std::ceil(pad / dx - 1e-12));
    const int total = cfg.spatialNodes + 2 * ws.padNodes;
    ws.dx = dx;
    ws.x0 = cfg.xMin - ws.padNodes * dx;
    ws.x.resize(total);
    for (int j = 0; j < total; ++j) ws.x(j) = ws.x0 + j * dx;

    auto nodeState = [&](double t, const Eigen::VectorXd& u, int j, double& advOut,
                         double& diffOut, double& jumpOut, double& massCoef) {
        // Quasilinear evaluation order: g from (t, x, u) first, then the
        // derivative and nonlocal slots, then f and F against those.
        double uxc;
        if (j == 0)
            uxc = (u(1) - u(0)) / dx;
        else if (j == total - 1)
            uxc = (u(total - 1) - u(total - 2)) / dx;
        else
            uxc = (u(j + 1) - u(j - 1)) / (2.0 * dx);
        Quintuple base = make_state(Eigen::VectorXd::Constant(1, ws.x(j)),
                                    Eigen::VectorXd::Constant(1, u(j)),
                                    Eigen::MatrixXd::Zero(1, 0), Eigen::MatrixXd::Zero(1, sys.d),
                                    Eigen::MatrixXd::Zero(1, J));
        Eigen::MatrixXd grow(1, sys.d);
        if (sys.d > 0) grow = sys.g(t, base);
        Eigen::MatrixXd qslot = uxc * grow;
        Eigen::MatrixXd kslot(1, J);
        double jumpSum = 0.0;
        double adv = 0.0;
        for (int j2 = 0; j2 < J; ++j2) {
            double shift = sys.h(t, base, j2)(0);
            double shifted = interp_clamped(u, ws.x0, dx, ws.x(j) + shift);
            kslot(0, j2) = shifted - u(j);
            jumpSum += sys.marks.rate(j2) * (shifted - u(j));
            adv -= sys.marks.rate(j2) * shift;
        }
        Quintuple full = make_state(base.X, base.P, Eigen::MatrixXd::Zero(1, 0), qslot, kslot);
        adv += sys.f(t, full)(0);
        double gg = sys.d > 0 ? grow.row(0).squaredNorm() : 0.0;
        advOut = adv;
        diffOut = gg;
        jumpOut = jumpSum - sys.F(t, full)(0);
        massCoef = gg / (dx * dx) + std::abs(adv) / dx + mass + sys.lipC;
    };

    // Terminal slice and the stability-bound estimate it implies.
    Eigen::VectorXd u(total);
    for (int j = 0; j < total; ++j) u(j) = sys.Phi(Eigen::VectorXd::Constant(1, ws.x(j)))(0);
    double denomMax = 0.0;
    for (int j = 0; j < total; ++j) {
        double a, g2, src, den;
        nodeState(horizon, u, j, a, g2, src, den);
        denomMax = std::max(denomMax, den);
    }
    double dt0 = cfg.timeStepOverride > 0.0 ? cfg.timeStepOverride
                                            : 0.9 * cfg.cflSafety / denomMax;
    int steps = std::max(1, static_cast<int>(std::ceil(horizon / dt0 - 1e-12)));
    // Align the step count so the query times land on nodes when possible.
    for (int s = steps; s < steps + 4096; ++s) {
        bool ok = true;
        for (double t : queryTimes) {
            double frac = t * s / horizon;
            if (std::abs(frac - std::lround(frac)) > 1e-9 * std::max(1.0, frac)) {
                ok = false;
                break;
            }
        }
        if (ok) {
            steps = s;
            break;
        }
    }
    const double dt = horizon / steps;

    std::vector<double> sorted(queryTimes);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<int> snap(sorted.size());
    for (std::size_t k = 0; k < sorted.size(); ++k)
        snap[k] = std::min(steps, std::max(0, static_cast<int>(std::lround(sorted[k] / dt))));

    PideField field;
    field.x = ws.x;
    field.dtUsed = dt;
    field.stepsUsed = steps;
    field.padUsed = pad;
    field.times.resize(sorted.size());
    field.u.resize(sorted.size());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        field.times[k] = snap[k] * dt;
        if (snap[k] == steps) field.u[k] = u;
    }

    Eigen::VectorXd next(total);
    std::vector<double> denom(static_cast<std::size_t>(total), 0.0);
    for (int i = steps - 1; i >= 0; --i) {
        const double t = (i + 1) * dt;
        auto update = [&](std::size_t jj) {
            int j = static_cast<int>(jj);
            double adv, g2, src, den;
            nodeState(t, u, j, adv, g2, src, den);
            denom[jj] = den;
            double uxx = 0.0;
            if (j > 0 && j < total - 1) uxx = (u(j + 1) - 2.0 * u(j) + u(j - 1)) / (dx * dx);
            double upw;
            if (j == 0)
                upw = (u(1) - u(0)) / dx;
            else if (j == total - 1)
                upw = (u(total - 1) - u(total - 2)) / dx;
            else
                upw = adv > 0.0 ? (u(j + 1) - u(j)) / dx : (u(j) - u(j - 1)) / dx;
            next(j) = u(j) + dt * (0.5 * g2 * uxx + adv * upw + src);
        };
        if (total > 512)
            parallel_for(static_cast<std::size_t>(total), update);
        else
            for (int j = 0; j < total; ++j) update(static_cast<std::size_t>(j));
        double dm = *std::max_element(denom.begin(), denom.end());
        double required = cfg.cflSafety / dm;
        if (dt > required * (1.0 + 1e-9))
            throw CflViolationError("explicit step exceeds the stability bound", required);
        u = next;
        for (std::size_t k = 0; k < sorted.size(); ++k)
            if (snap[k] == i) field.u[k] = u;
    }
    return field;
}

std::vector<ComparisonRow> compare_feynman_kac(
    const CoefficientSystem& sys, double horizon,
    const std::vector<std::pair<double, double>>& points, int mcStepsPerUnitTime,
    const FieldConfig& fieldCfg, const BackwardConfig& backwardCfg, const PideConfig& pideCfg) {
    if (sys.n != 1 || sys.m != 1)
        throw InvalidSystemError("field comparison covers scalar systems only");
    std::vector<double> times;
    times.reserve(points.size());
    for (const auto& [t, x] : points) times.push_back(t);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    PideConfig fine = pideCfg;
    fine.spatialNodes = 2 * pideCfg.spatialNodes - 1;
    PideField coarse = solve_pide_fd(sys, horizon, times, pideCfg);
    PideField refined = solve_pide_fd(sys, horizon, times, fine);

    std::vector<ComparisonRow> rows;
    rows.reserve(points.size());
    for (const auto& [t, xv] : points) {
        auto it = std::lower_bound(times.begin(), times.end(), t);
        int slice = static_cast<int>(it - times.begin());
        ComparisonRow row;
        row.t = t;
        row.x = xv;
        UEstimate est = evaluate_u(sys, t, Eigen::VectorXd::Constant(1, xv),
                                  TimeGrid(horizon - t,
                                           std::max(1, static_cast<int>(std::lround(
                                                           (horizon - t) * mcStepsPerUnitTime)))),
                                  fieldCfg, backwardCfg);
        row.mc = est.value()(0);
        row.mcStandardError = est.standardError()(0);
        row.fd = refined.valueAt(slice, xv);
        row.fdErrorEstimate = std::abs(coarse.valueAt(slice, xv) - row.fd);
        row.difference = std::abs(row.mc - row.fd);
        row.tolerance = 3.0 * row.mcStandardError + row.fdErrorEstimate + 1e-12;
        row.withinTolerance = row.difference < row.tolerance;
        rows.push_back(row);
    }
    return rows;
}

} // namespace dsde
