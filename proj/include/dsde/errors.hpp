#pragma once

#include <stdexcept>
#include <string>

namespace dsde {

/// Thrown when array shapes, grid sizes, or dimension fields disagree.
class ShapeMismatchError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when the regression ensemble is too small for the requested basis.
class InsufficientPathsError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a solver produces a non-finite value; carries the step index.
class NumericalBlowupError : public std::runtime_error {
public:
    NumericalBlowupError(const std::string& what, int step)
        : std::runtime_error(what), step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

/// Thrown when the fixed-point map fails to contract; carries the last distance.
class MapDivergenceError : public std::runtime_error {
public:
    MapDivergenceError(const std::string& what, double lastDistance)
        : std::runtime_error(what), lastDistance_(lastDistance) {}
    double lastDistance() const { return lastDistance_; }

private:
    double lastDistance_;
};

/// Thrown when the continuation cannot reach alpha = 1 above the minimum step.
class ContinuationError : public std::runtime_error {
public:
    ContinuationError(const std::string& what, double alphaReached)
        : std::runtime_error(what), alphaReached_(alphaReached) {}
    double alphaReached() const { return alphaReached_; }

private:
    double alphaReached_;
};

/// Thrown when an explicit finite-difference step violates its stability bound.
class CflViolationError : public std::runtime_error {
public:
    CflViolationError(const std::string& what, double requiredDt)
        : std::runtime_error(what), requiredDt_(requiredDt) {}
    double requiredDt() const { return requiredDt_; }

private:
    double requiredDt_;
};

/// Thrown when a nonlocal shift leaves the padded spatial domain.
class DomainTooSmallError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when a coefficient system violates a structural requirement.
class InvalidSystemError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a field lacks the derivative access a computation needs.
class UnsupportedFunctionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace dsde
