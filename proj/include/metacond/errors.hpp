#pragma once

#include <stdexcept>
#include <string>

namespace metacond {

/// Base class for all library errors so callers can catch everything at once.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A matrix that must be symmetric positive definite is not (pivot <= 1e-300
/// during the Cholesky factorization). Carries the offending pivot index.
class NotPositiveDefinite : public Error {
public:
    NotPositiveDefinite(int index, double pivot)
        : Error("matrix is not positive definite: pivot " + std::to_string(index) +
                " = " + std::to_string(pivot)),
          index_(index), pivot_(pivot) {}
    int index() const noexcept { return index_; }
    double pivot() const noexcept { return pivot_; }

private:
    int index_;
    double pivot_;
};

/// Conditioning a mixture on a point where every component's marginal
/// density underflows: the conditional weights are 0/0.
class DegenerateConditioning : public Error {
public:
    using Error::Error;
};

/// A fitted component's covariance collapsed (Cholesky failed even after the
/// ridge was applied).
class SingularComponent : public Error {
public:
    using Error::Error;
};

/// A mixture component lost all responsibility mass during EM.
class EmptyComponent : public Error {
public:
    using Error::Error;
};

/// Invalid numeric input, e.g. a pseudo-observation outside (0,1) or a
/// probability outside the open unit interval.
class DomainError : public Error {
public:
    using Error::Error;
};

/// An iterative fit produced a NaN/inf objective. Carries the iteration at
/// which the objective went bad.
class NonFiniteObjective : public Error {
public:
    NonFiniteObjective(int iteration, const std::string& what_arg)
        : Error(what_arg + " (iteration " + std::to_string(iteration) + ")"),
          iteration_(iteration) {}
    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

/// Dimension / shape mismatch between arguments (index out of range,
/// overlapping target and given blocks, wrong vector length, ...).
class UnsupportedShape : public Error {
public:
    using Error::Error;
};

/// Rejection sampling accepted too few draws to be usable.
class InsufficientAcceptance : public Error {
public:
    using Error::Error;
};

/// A serialized artifact has an unknown or incompatible format version.
class UnsupportedFormat : public Error {
public:
    using Error::Error;
};

}  // namespace metacond
