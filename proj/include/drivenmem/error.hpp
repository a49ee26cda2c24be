#pragma once

#include <stdexcept>
#include <string>

namespace drivenmem {

/// Bad input: violated precondition, malformed config, out-of-range parameter.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of a formula (e.g. a singular point).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A numerical procedure failed to converge or produced an unusable result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Evaluation landed on a pole of a resolvent or transmission function.
class PoleError : public NumericalError {
public:
    PoleError(const std::string& what, double pole)
        : NumericalError(what), pole_(pole) {}

    [[nodiscard]] double pole() const noexcept { return pole_; }

private:
    double pole_;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ValidationError(msg);
}

inline void require_finite(double x, const char* name) {
    if (!(x == x) || x - x != 0.0) {
        throw ValidationError(std::string(name) + " must be finite");
    }
}

}  // namespace detail
}  // namespace drivenmem
