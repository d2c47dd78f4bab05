#pragma once

#include <stdexcept>
#include <string>

namespace rispar {

/// Input violates a shape or domain precondition.
class RejectedInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// System dimensions do not admit a unique decomposition.
class FeasibilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnsupportedSize : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A least-squares system lost full column rank.
class SingularityError : public std::runtime_error {
public:
    SingularityError(const std::string& what, double smallest_singular_value)
        : std::runtime_error(what), smallest_sv_(smallest_singular_value) {}

    double smallest_singular_value() const noexcept { return smallest_sv_; }

private:
    double smallest_sv_;
};

/// An iterative routine produced a non-finite or non-positive precision.
class NumericalFailure : public std::runtime_error {
public:
    NumericalFailure(const std::string& what, int iteration)
        : std::runtime_error(what), iteration_(iteration) {}

    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

class AmbiguityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PrecoderInfeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rispar
