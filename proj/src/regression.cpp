#include "dsde/regression.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dsde/errors.hpp"

namespace dsde {

namespace {

void enumerate_exponents(int featureDim, const std::vector<bool>& active,
                         Eigen::VectorXi& current, int fromFeature, int remaining,
                         std::vector<Eigen::VectorXi>& out) {
    out.push_back(current);
    if (remaining == 0) return;
    for (int f = fromFeature; f < featureDim; ++f) {
        if (!active[f]) continue;
        current[f] += 1;
        enumerate_exponents(featureDim, active, current, f, remaining - 1, out);
        current[f] -= 1;
    }
}

} // namespace

PolynomialBasis::PolynomialBasis(const Eigen::MatrixXd& features, int degree)
    : featureDim_(static_cast<int>(features.cols())) {
    if (degree < 0) throw std::invalid_argument("PolynomialBasis: negative degree");
    if (features.rows() < 1) throw std::invalid_argument("PolynomialBasis: empty sample");
    if (!features.allFinite()) throw std::invalid_argument("PolynomialBasis: non-finite feature");

    scale_ = Eigen::VectorXd::Ones(featureDim_);
    std::vector<bool> active(featureDim_, false);
    for (int f = 0; f < featureDim_; ++f) {
        const double rms = std::sqrt(features.col(f).squaredNorm() /
                                     static_cast<double>(features.rows()));
        const double spread = (features.col(f).array() - features(0, f)).abs().maxCoeff();
        // A column with no cross-sample variation carries no regression
        // information; keep it out of the monomials (the intercept covers it).
        if (spread > 0.0 && rms > 0.0) {
            active[f] = true;
            scale_[f] = rms;
        }
    }

    // Exponent tuples in graded order starting from the intercept. Recursion
    // emits a prefix tree; sort-free and deterministic.
    Eigen::VectorXi current = Eigen::VectorXi::Zero(featureDim_);
    enumerate_exponents(featureDim_, active, current, 0, degree, exponents_);
}

Eigen::MatrixXd PolynomialBasis::design(const Eigen::MatrixXd& features) const {
    if (features.cols() != featureDim_)
        throw ShapeMismatchError("PolynomialBasis: feature dimension changed");
    const int M = static_cast<int>(features.rows());
    Eigen::MatrixXd X(M, size());
    for (int b = 0; b < size(); ++b) {
        Eigen::VectorXd col = Eigen::VectorXd::Ones(M);
        const Eigen::VectorXi& e = exponents_[b];
        for (int f = 0; f < featureDim_; ++f) {
            for (int p = 0; p < e[f]; ++p)
                col = col.cwiseProduct(features.col(f) / scale_[f]);
        }
        X.col(b) = col;
    }
    return X;
}

Eigen::VectorXd PolynomialBasis::rawScale() const {
    Eigen::VectorXd factors(size());
    for (int b = 0; b < size(); ++b) {
        double denom = 1.0;
        for (int f = 0; f < featureDim_; ++f)
            for (int p = 0; p < exponents_[b][f]; ++p) denom *= scale_[f];
        factors[b] = 1.0 / denom;
    }
    return factors;
}

RegressionFit regress_conditional(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& features,
                                  const RegressionConfig& cfg) {
    const int M = static_cast<int>(targets.rows());
    if (features.rows() != M)
        throw ShapeMismatchError("regress_conditional: rows of targets and features differ");
    if (!targets.allFinite())
        throw std::invalid_argument("regress_conditional: non-finite target");

    PolynomialBasis basis(features, cfg.basisDegree);
    const int B = basis.size();
    if (M < cfg.minPathsPerCoefficient * B)
        throw InsufficientPathsError("regress_conditional: ensemble smaller than " +
                                     std::to_string(cfg.minPathsPerCoefficient) + "x basis size");

    const Eigen::MatrixXd X = basis.design(features);
    Eigen::MatrixXd gram = X.transpose() * X;
    // Intercept stays unpenalized so constants reproduce exactly.
    for (int b = 1; b < B; ++b) gram(b, b) += cfg.ridge;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const double lmax = eig.eigenvalues().maxCoeff();
    const double lmin = eig.eigenvalues().minCoeff();

    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const Eigen::MatrixXd theta = ldlt.solve(X.transpose() * targets);

    RegressionFit fit;
    fit.basisSize = B;
    fit.fitted = X * theta;
    fit.coefficients = basis.rawScale().asDiagonal() * theta;
    fit.conditionNumber = (lmin > 0.0) ? std::sqrt(lmax / lmin)
                                       : std::numeric_limits<double>::infinity();

    const Eigen::MatrixXd resid = targets - fit.fitted;
    const double ssr = resid.squaredNorm();
    const Eigen::RowVectorXd mean = targets.colwise().mean();
    const double sst = (targets.rowwise() - mean).squaredNorm();
    fit.r2 = (sst > 0.0) ? 1.0 - ssr / sst : 1.0;
    fit.residualStd = std::sqrt(ssr / static_cast<double>(M * std::max<int>(1, targets.cols())));
    return fit;
}

} // namespace dsde
