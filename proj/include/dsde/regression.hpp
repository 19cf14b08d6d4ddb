#pragma once

#include <vector>

#include <Eigen/Dense>

namespace dsde {

struct RegressionConfig {
    int basisDegree = 2;
    double ridge = 1e-8;
    int minPathsPerCoefficient = 4;
};

/// Total-degree monomial basis over feature columns. Columns are scale
/// normalized (divided by their sample RMS) before monomials are formed, which
/// keeps the normal equations conditioned and makes fits invariant under
/// feature rescaling; coefficients are reported for the raw monomials.
/// Zero-variation features are excluded from monomial generation.
class PolynomialBasis {
public:
    PolynomialBasis(const Eigen::MatrixXd& features, int degree);

    int size() const { return static_cast<int>(exponents_.size()); }
    const std::vector<Eigen::VectorXi>& exponents() const { return exponents_; }

    /// Design matrix in the normalized basis, one row per sample.
    Eigen::MatrixXd design(const Eigen::MatrixXd& features) const;

    /// Per-monomial factor converting normalized coefficients to raw ones.
    Eigen::VectorXd rawScale() const;

private:
    int featureDim_;
    std::vector<Eigen::VectorXi> exponents_; // one exponent vector per basis term
    Eigen::VectorXd scale_;                  // per-feature normalizer
};

struct RegressionFit {
    Eigen::MatrixXd coefficients; // basis x targets, raw-monomial parameterization
    Eigen::MatrixXd fitted;       // samples x targets
    double r2 = 0.0;              // pooled across targets
    double conditionNumber = 1.0; // of the normalized normal matrix
    double residualStd = 0.0;     // pooled residual standard deviation
    int basisSize = 0;
};

/// Least-squares projection of each target column onto the polynomial basis
/// of the features; the fit minimizes |targets - design theta|^2 plus a ridge
/// penalty on the non-intercept coefficients.
RegressionFit regress_conditional(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& features,
                                  const RegressionConfig& cfg);

} // namespace dsde
