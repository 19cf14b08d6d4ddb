#include "dsde/calculus.hpp"

#include <cmath>

#include "dsde/errors.hpp"

namespace dsde {

namespace {

void check_nodes(int pathNodes, int steps, const char* who) {
    if (pathNodes != steps + 1)
        throw ShapeMismatchError(std::string(who) + ": integrand must have steps+1 nodes");
}

} // namespace

double forward_ito(const ProcessPath& u, const NoiseBundle& bundle) {
    check_nodes(u.nodes(), bundle.steps(), "forward_ito");
    if (u.rows() != bundle.dimW() || u.cols() != 1)
        throw ShapeMismatchError("forward_ito: integrand shape must be d x 1");
    double acc = 0.0;
    for (int i = 0; i < bundle.steps(); ++i)
        for (int a = 0; a < u.rows(); ++a) acc += u.at(i, a) * bundle.dW(i, a);
    return acc;
}

double backward_ito(const ProcessPath& v, const NoiseBundle& bundle) {
    check_nodes(v.nodes(), bundle.steps(), "backward_ito");
    if (v.rows() != bundle.dimB() || v.cols() != 1)
        throw ShapeMismatchError("backward_ito: integrand shape must be l x 1");
    double acc = 0.0;
    for (int i = 0; i < bundle.steps(); ++i)
        for (int a = 0; a < v.rows(); ++a) acc += v.at(i + 1, a) * bundle.dB(i, a);
    return acc;
}

double jump_integral(const ProcessPath& k, const NoiseBundle& bundle) {
    check_nodes(k.nodes(), bundle.steps(), "jump_integral");
    if (k.rows() != 1 || k.cols() != bundle.markCount())
        throw ShapeMismatchError("jump_integral: integrand shape must be 1 x markCount");
    double acc = 0.0;
    for (int i = 0; i < bundle.steps(); ++i)
        for (int j = 0; j < bundle.markCount(); ++j)
            acc += k.at(i, 0, j) * compensated_increment(bundle, i, j);
    return acc;
}

namespace {

void check_decomposition(const SemimartingaleDecomposition& dec, const NoiseBundle& bundle) {
    const int dim = static_cast<int>(dec.alpha0.size());
    const int nodes = bundle.steps() + 1;
    auto bad = [&](const ProcessPath& p, int cols, const char* name) {
        if (p.nodes() != nodes || p.rows() != dim || p.cols() != cols)
            throw ShapeMismatchError(std::string("energy identity: bad shape for ") + name);
    };
    bad(dec.beta, 1, "beta");
    bad(dec.gammaB, bundle.dimB(), "gammaB");
    bad(dec.deltaW, bundle.dimW(), "deltaW");
    bad(dec.jumpK, bundle.markCount(), "jumpK");
}

// Forward part of the interval-i increment: beta dt + deltaW dW + jumpK dN~.
Eigen::VectorXd forward_increment(const SemimartingaleDecomposition& dec,
                                  const NoiseBundle& bundle, int i) {
    Eigen::VectorXd inc = dec.beta.mat(i) * bundle.dt;
    if (bundle.dimW() > 0) inc += dec.deltaW.mat(i) * bundle.dW.row(i).transpose();
    for (int j = 0; j < bundle.markCount(); ++j)
        inc += dec.jumpK.mat(i).col(j) * compensated_increment(bundle, i, j);
    return inc;
}

// Backward part of the interval-i increment: gammaB(t_{i+1}) dB_i.
Eigen::VectorXd backward_increment(const SemimartingaleDecomposition& dec,
                                   const NoiseBundle& bundle, int i) {
    const int dim = static_cast<int>(dec.alpha0.size());
    Eigen::VectorXd inc = Eigen::VectorXd::Zero(dim);
    if (bundle.dimB() > 0) inc = dec.gammaB.mat(i + 1) * bundle.dB.row(i).transpose();
    return inc;
}

} // namespace

ProcessPath accumulate(const SemimartingaleDecomposition& dec, const NoiseBundle& bundle) {
    check_decomposition(dec, bundle);
    const int dim = static_cast<int>(dec.alpha0.size());
    ProcessPath alpha(bundle.steps() + 1, dim, 1);
    alpha.mat(0) = dec.alpha0;
    for (int i = 0; i < bundle.steps(); ++i) {
        alpha.mat(i + 1) =
            alpha.mat(i).col(0) + forward_increment(dec, bundle, i) + backward_increment(dec, bundle, i);
    }
    return alpha;
}

double energy_identity_residual(const SemimartingaleDecomposition& dec, const NoiseBundle& bundle) {
    check_decomposition(dec, bundle);
    const ProcessPath alpha = accumulate(dec, bundle);
    const int N = bundle.steps();

    double rhs = dec.alpha0.squaredNorm();
    for (int i = 0; i < N; ++i) {
        const Eigen::VectorXd fwd = forward_increment(dec, bundle, i);
        const Eigen::VectorXd bwd = backward_increment(dec, bundle, i);
        const Eigen::VectorXd ai = alpha.mat(i).col(0);
        const Eigen::VectorXd an = alpha.mat(i + 1).col(0);
        rhs += 2.0 * ai.dot(fwd) + 2.0 * an.dot(bwd) + fwd.squaredNorm() - bwd.squaredNorm();
    }
    const double lhs = alpha.mat(N).col(0).squaredNorm();
    return lhs - rhs;
}

namespace {

constexpr double kFdScale = 1e-5;

double fd_step(double v) { return kFdScale * std::max(1.0, std::abs(v)); }

Eigen::VectorXd eval_value(const SmoothField& u, double t, const Eigen::VectorXd& x) {
    if (!u.value) throw UnsupportedFunctionError("apply_generator: field has no value callable");
    return u.value(t, x);
}

Eigen::VectorXd field_time_deriv(const SmoothField& u, double t, const Eigen::VectorXd& x) {
    if (u.timeDeriv) return u.timeDeriv(t, x);
    if (!u.allowFiniteDifference)
        throw UnsupportedFunctionError("apply_generator: time derivative unavailable");
    const double h = fd_step(t);
    return (eval_value(u, t + h, x) - eval_value(u, t - h, x)) / (2.0 * h);
}

Eigen::MatrixXd field_gradient(const SmoothField& u, double t, const Eigen::VectorXd& x) {
    if (u.gradient) return u.gradient(t, x);
    if (!u.allowFiniteDifference)
        throw UnsupportedFunctionError("apply_generator: gradient unavailable");
    const int n = static_cast<int>(x.size());
    const int m = static_cast<int>(eval_value(u, t, x).size());
    Eigen::MatrixXd grad(m, n);
    for (int i = 0; i < n; ++i) {
        const double h = fd_step(x[i]);
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        grad.col(i) = (eval_value(u, t, xp) - eval_value(u, t, xm)) / (2.0 * h);
    }
    return grad;
}

std::vector<Eigen::MatrixXd> field_hessian(const SmoothField& u, double t,
                                           const Eigen::VectorXd& x) {
    if (u.hessian) return u.hessian(t, x);
    if (!u.allowFiniteDifference)
        throw UnsupportedFunctionError("apply_generator: hessian unavailable");
    const int n = static_cast<int>(x.size());
    const Eigen::VectorXd base = eval_value(u, t, x);
    const int m = static_cast<int>(base.size());
    std::vector<Eigen::MatrixXd> hess(m, Eigen::MatrixXd::Zero(n, n));
    for (int i = 0; i < n; ++i) {
        const double hi = fd_step(x[i]);
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += hi;
        xm[i] -= hi;
        const Eigen::VectorXd up = eval_value(u, t, xp);
        const Eigen::VectorXd um = eval_value(u, t, xm);
        for (int k = 0; k < m; ++k) hess[k](i, i) = (up[k] - 2.0 * base[k] + um[k]) / (hi * hi);
        for (int j = i + 1; j < n; ++j) {
            const double hj = fd_step(x[j]);
            Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
            xpp[i] += hi; xpp[j] += hj;
            xpm[i] += hi; xpm[j] -= hj;
            xmp[i] -= hi; xmp[j] += hj;
            xmm[i] -= hi; xmm[j] -= hj;
            const Eigen::VectorXd cross = (eval_value(u, t, xpp) - eval_value(u, t, xpm) -
                                           eval_value(u, t, xmp) + eval_value(u, t, xmm)) /
                                          (4.0 * hi * hj);
            for (int k = 0; k < m; ++k) {
                hess[k](i, j) = cross[k];
                hess[k](j, i) = cross[k];
            }
        }
    }
    return hess;
}

} // namespace

Eigen::VectorXd apply_generator(
    const SmoothField& u, double t, const Eigen::VectorXd& x, const Eigen::VectorXd& drift,
    const Eigen::MatrixXd& diffusion,
    const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&, int)>& jump,
    const MarkSpace& marks) {
    const int n = static_cast<int>(x.size());
    if (drift.size() != n) throw ShapeMismatchError("apply_generator: drift dimension");
    if (diffusion.rows() != n) throw ShapeMismatchError("apply_generator: diffusion rows");
    if (marks.size() > 0 && !jump)
        throw UnsupportedFunctionError("apply_generator: marks present but no jump map");

    const Eigen::VectorXd base = eval_value(u, t, x);
    const int m = static_cast<int>(base.size());
    const Eigen::MatrixXd grad = field_gradient(u, t, x);
    if (grad.rows() != m || grad.cols() != n)
        throw ShapeMismatchError("apply_generator: gradient shape");

    Eigen::VectorXd out = field_time_deriv(u, t, x) + grad * drift;

    const Eigen::MatrixXd cov = diffusion * diffusion.transpose();
    const std::vector<Eigen::MatrixXd> hess = field_hessian(u, t, x);
    for (int k = 0; k < m; ++k) out[k] += 0.5 * (cov.array() * hess[k].array()).sum();

    for (int j = 0; j < marks.size(); ++j) {
        const Eigen::VectorXd shift = jump(t, x, j);
        if (shift.size() != n) throw ShapeMismatchError("apply_generator: jump map dimension");
        const Eigen::VectorXd shifted = eval_value(u, t, x + shift);
        out += marks.rate(j) * (shifted - base - grad * shift);
    }
    return out;
}

} // namespace dsde
