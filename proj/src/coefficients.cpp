#include "dsde/coefficients.hpp"

#include <cmath>
#include <random>

#include "dsde/errors.hpp"
#include "dsde/noise.hpp"

namespace dsde {

Quintuple Quintuple::zero(int n, int m, int d, int l, int J) {
    Quintuple u;
    u.X = Eigen::VectorXd::Zero(n);
    u.P = Eigen::VectorXd::Zero(m);
    u.Y = Eigen::MatrixXd::Zero(n, l);
    u.Q = Eigen::MatrixXd::Zero(m, d);
    u.K = Eigen::MatrixXd::Zero(m, J);
    return u;
}

void CoefficientSystem::validate() const {
    if (n < 1 || m < 1 || d < 0 || l < 0)
        throw InvalidSystemError("dimensions must satisfy n,m >= 1 and d,l >= 0");
    if (!f || !F) throw InvalidSystemError("drift coefficients f and F are required");
    if (d > 0 && !g) throw InvalidSystemError("g is required when d > 0");
    if (l > 0 && !G) throw InvalidSystemError("G is required when l > 0");
    if (marks.size() > 0 && !h)
        throw InvalidSystemError("h is required when the mark space is nonempty");
    if (!Psi || !Phi) throw InvalidSystemError("boundary maps Psi and Phi are required");
    if (H.rows() != m || H.cols() != n)
        throw InvalidSystemError("H must be m x n");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(H);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-12 * sv(0))
        throw InvalidSystemError("H must have full rank");
    if (mu1 < 0 || mu2 < 0 || beta1 < 0 || beta2 < 0)
        throw InvalidSystemError("monotonicity constants must be nonnegative");
    if (mu1 + mu2 <= 0)
        throw InvalidSystemError("at least one of mu1, mu2 must be positive");
    if (beta1 + beta2 <= 0)
        throw InvalidSystemError("at least one of beta1, beta2 must be positive");
    if (lipC <= 0) throw InvalidSystemError("lipC must be positive");
    if (lipGamma < 0 || lipGamma >= 1)
        throw InvalidSystemError("lipGamma must lie in [0, 1)");

    // Probe each callable once so shape errors surface at registration, not
    // deep inside a solver loop.
    Quintuple z = Quintuple::zero(n, m, d, l, markCount());
    if (f(0.0, z).size() != n) throw InvalidSystemError("f must return an n-vector");
    if (F(0.0, z).size() != m) throw InvalidSystemError("F must return an m-vector");
    if (d > 0) {
        Eigen::MatrixXd gv = g(0.0, z);
        if (gv.rows() != n || gv.cols() != d) throw InvalidSystemError("g must return n x d");
    }
    if (l > 0) {
        Eigen::MatrixXd Gv = G(0.0, z);
        if (Gv.rows() != m || Gv.cols() != l) throw InvalidSystemError("G must return m x l");
    }
    for (int j = 0; j < markCount(); ++j)
        if (h(0.0, z, j).size() != n)
            throw InvalidSystemError("h must return an n-vector per mark");
    if (Psi(z.P).size() != n) throw InvalidSystemError("Psi must map R^m to R^n");
    if (Phi(z.X).size() != m) throw InvalidSystemError("Phi must map R^n to R^m");
}

double pairing(const CoefficientSystem& sys, double t, const Quintuple& U,
               const Quintuple& Ubar) {
    const int J = sys.markCount();
    Eigen::VectorXd fd = sys.f(t, U) - sys.f(t, Ubar);
    Eigen::VectorXd Fd = sys.F(t, U) - sys.F(t, Ubar);
    Eigen::VectorXd Xd = U.X - Ubar.X;
    Eigen::VectorXd Pd = U.P - Ubar.P;

    double acc = Xd.dot(sys.H.transpose() * Fd) + Pd.dot(sys.H * fd);
    if (sys.l > 0) {
        Eigen::MatrixXd Gd = sys.G(t, U) - sys.G(t, Ubar);
        Eigen::MatrixXd Yd = U.Y - Ubar.Y;
        acc += (sys.H.transpose() * Gd).cwiseProduct(Yd).sum();
    }
    if (sys.d > 0) {
        Eigen::MatrixXd gd = sys.g(t, U) - sys.g(t, Ubar);
        Eigen::MatrixXd Qd = U.Q - Ubar.Q;
        acc += (sys.H * gd).cwiseProduct(Qd).sum();
    }
    for (int j = 0; j < J; ++j) {
        Eigen::VectorXd hd = sys.h(t, U, j) - sys.h(t, Ubar, j);
        Eigen::VectorXd Kd = U.K.col(j) - Ubar.K.col(j);
        acc += sys.marks.rate(j) * Kd.dot(sys.H * hd);
    }
    return acc;
}

namespace {

Quintuple sample_quintuple(std::mt19937_64& rng, double radius, int n, int m, int d, int l,
                           int J) {
    std::normal_distribution<double> gauss(0.0, radius);
    auto fill = [&](Eigen::Ref<Eigen::MatrixXd> mat) {
        for (Eigen::Index c = 0; c < mat.cols(); ++c)
            for (Eigen::Index r = 0; r < mat.rows(); ++r) mat(r, c) = gauss(rng);
    };
    Quintuple u = Quintuple::zero(n, m, d, l, J);
    fill(u.X);
    fill(u.P);
    if (l > 0) fill(u.Y);
    if (d > 0) fill(u.Q);
    if (J > 0) fill(u.K);
    return u;
}

struct MarginAccumulator {
    MarginReport report;
    bool first = true;

    void add(double margin, double t, const Quintuple& U, const Quintuple& Ubar) {
        ++report.samplesTested;
        if (margin < 0) ++report.violationCount;
        if (first || margin < report.minMargin) {
            report.minMargin = margin;
            report.worstCase = SamplePoint{t, U, Ubar};
            first = false;
        }
    }
};

double weighted_decay(const CoefficientSystem& sys, const Quintuple& U, const Quintuple& Ubar) {
    Eigen::VectorXd Xd = U.X - Ubar.X;
    Eigen::VectorXd Pd = U.P - Ubar.P;
    double acc = sys.mu1 * (sys.H * Xd).squaredNorm() + sys.mu2 * (sys.H.transpose() * Pd).squaredNorm();
    if (sys.l > 0) acc += sys.mu1 * (sys.H * (U.Y - Ubar.Y)).squaredNorm();
    if (sys.d > 0) acc += sys.mu2 * (sys.H.transpose() * (U.Q - Ubar.Q)).squaredNorm();
    for (int j = 0; j < sys.markCount(); ++j)
        acc += sys.mu2 * sys.marks.rate(j) *
               (sys.H.transpose() * (U.K.col(j) - Ubar.K.col(j))).squaredNorm();
    return acc;
}

} // namespace

MarginReport check_monotonicity(const CoefficientSystem& sys, const SamplerConfig& sampler,
                                int nSamples, bool primed) {
    sys.validate();
    const int J = sys.markCount();
    MarginAccumulator acc;
    std::uniform_real_distribution<double> tdist(0.0, sampler.horizon);
    for (double radius : sampler.radii) {
        std::mt19937_64 rng(derive_seed(sampler.seed, 0x6d,
                                        static_cast<std::uint64_t>(radius * 1024)));
        for (int s = 0; s < nSamples; ++s) {
            double t = tdist(rng);
            Quintuple U = sample_quintuple(rng, radius, sys.n, sys.m, sys.d, sys.l, J);
            Quintuple Ubar = sample_quintuple(rng, radius, sys.n, sys.m, sys.d, sys.l, J);
            double pair = pairing(sys, t, U, Ubar);
            if (primed) pair = -pair;
            double margin = -pair - weighted_decay(sys, U, Ubar);
            acc.add(margin, t, U, Ubar);
        }
    }
    return acc.report;
}

BoundaryReport check_boundary_monotonicity(const CoefficientSystem& sys,
                                           const SamplerConfig& sampler, int nSamples,
                                           bool primed) {
    sys.validate();
    const int J = sys.markCount();
    MarginAccumulator psiAcc, phiAcc;
    for (double radius : sampler.radii) {
        std::mt19937_64 rng(derive_seed(sampler.seed, 0x62,
                                        static_cast<std::uint64_t>(radius * 1024)));
        for (int s = 0; s < nSamples; ++s) {
            Quintuple U = sample_quintuple(rng, radius, sys.n, sys.m, sys.d, sys.l, J);
            Quintuple Ubar = sample_quintuple(rng, radius, sys.n, sys.m, sys.d, sys.l, J);

            Eigen::VectorXd Xd = U.X - Ubar.X;
            Eigen::VectorXd Pd = U.P - Ubar.P;
            Eigen::VectorXd phiD = sys.Phi(U.X) - sys.Phi(Ubar.X);
            Eigen::VectorXd psiD = sys.Psi(U.P) - sys.Psi(Ubar.P);

            double phiPair = phiD.dot(sys.H * Xd);
            double psiPair = psiD.dot(sys.H.transpose() * Pd);
            if (primed) {
                phiPair = -phiPair;
                psiPair = -psiPair;
            }
            double phiMargin = phiPair - sys.beta1 * (sys.H * Xd).squaredNorm();
            double psiMargin = -psiPair - sys.beta2 * (sys.H.transpose() * Pd).squaredNorm();
            phiAcc.add(phiMargin, 0.0, U, Ubar);
            psiAcc.add(psiMargin, 0.0, U, Ubar);
        }
    }
    return BoundaryReport{psiAcc.report, phiAcc.report};
}

double LipschitzReport::minMargin() const {
    double v = f.minMargin;
    for (const MarginReport* r : {&F, &g, &G, &h, &psi, &phi}) v = std::min(v, r->minMargin);
    return v;
}

long LipschitzReport::violationCount() const {
    return f.violationCount + F.violationCount + g.violationCount + G.violationCount +
           h.violationCount + psi.violationCount + phi.violationCount;
}

LipschitzReport check_lipschitz(const CoefficientSystem& sys, const SamplerConfig& sampler,
                                int nSamples) {
    sys.validate();
    const int J = sys.markCount();
    MarginAccumulator fAcc, FAcc, gAcc, GAcc, hAcc, psiAcc, phiAcc;
    std::uniform_real_distribution<double> tdist(0.0, sampler.horizon);
    const double C = sys.lipC;
    const double gamma = sys.lipGamma;

    for (double radius : sampler.radii) {
        std::mt19937_64 rng(derive_seed(sampler.seed, 0x6c,
                                        static_cast<std::uint64_t>(radius * 1024)));
        for (int s = 0; s < nSamples; ++s) {
            double t = tdist(rng);
            Quintuple U = sample_quintuple(rng, radius, sys.n, sys.m, sys.d, sys.l, J);
            Quintuple Ubar = sample_quintuple(rng, radius, sys.n, sys.m, sys.d, sys.l, J);

            double dX = (U.X - Ubar.X).squaredNorm();
            double dP = (U.P - Ubar.P).squaredNorm();
            double dY = sys.l > 0 ? (U.Y - Ubar.Y).squaredNorm() : 0.0;
            double dQ = sys.d > 0 ? (U.Q - Ubar.Q).squaredNorm() : 0.0;
            double dK = 0.0;
            for (int j = 0; j < J; ++j)
                dK += sys.marks.rate(j) * (U.K.col(j) - Ubar.K.col(j)).squaredNorm();
            double dAll = dX + dP + dY + dQ + dK;

            double fBound = C * dAll;
            fAcc.add(fBound - (sys.f(t, U) - sys.f(t, Ubar)).squaredNorm(), t, U, Ubar);
            FAcc.add(fBound - (sys.F(t, U) - sys.F(t, Ubar)).squaredNorm(), t, U, Ubar);

            if (sys.d > 0) {
                double gBound = C * (dX + dP + dQ + dK) + gamma * dY;
                gAcc.add(gBound - (sys.g(t, U) - sys.g(t, Ubar)).squaredNorm(), t, U, Ubar);
            }
            if (sys.l > 0) {
                double GBound = C * (dX + dP + dY) + gamma * (dQ + dK);
                GAcc.add(GBound - (sys.G(t, U) - sys.G(t, Ubar)).squaredNorm(), t, U, Ubar);
            }
            if (J > 0) {
                double hTotal = 0.0;
                for (int j = 0; j < J; ++j)
                    hTotal += sys.marks.rate(j) *
                              (sys.h(t, U, j) - sys.h(t, Ubar, j)).squaredNorm();
                hAcc.add(fBound - hTotal, t, U, Ubar);
            }

            // Boundary maps carry plain (non-squared) Lipschitz bounds.
            psiAcc.add(C * std::sqrt(dP) - (sys.Psi(U.P) - sys.Psi(Ubar.P)).norm(), t, U, Ubar);
            phiAcc.add(C * std::sqrt(dX) - (sys.Phi(U.X) - sys.Phi(Ubar.X)).norm(), t, U, Ubar);
        }
    }
    LipschitzReport rep;
    rep.f = fAcc.report;
    rep.F = FAcc.report;
    rep.g = gAcc.report;
    rep.G = GAcc.report;
    rep.h = hAcc.report;
    rep.psi = psiAcc.report;
    rep.phi = phiAcc.report;
    return rep;
}

} // namespace dsde
