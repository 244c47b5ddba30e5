#pragma once

#include <stdexcept>
#include <string>

namespace brl {

/// Error categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
    Assertion = 1,
    Usage = 2,
    Numerical = 3,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string tag, const std::string& what)
        : std::runtime_error(what), kind_(kind), tag_(std::move(tag)) {}

    ErrorKind kind() const noexcept { return kind_; }
    /// Short machine-readable name, e.g. "domain_error".
    const std::string& tag() const noexcept { return tag_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
    std::string tag_;
};

struct UsageError : Error {
    explicit UsageError(const std::string& w) : Error(ErrorKind::Usage, "usage_error", w) {}
};

struct ParseError : Error {
    ParseError(const std::string& w, std::size_t position)
        : Error(ErrorKind::Usage, "parse_error", w + " (at position " + std::to_string(position) + ")"),
          position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Point outside a chart range or off the target manifold.
struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error(ErrorKind::Usage, "domain_error", w) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& w, std::string tag = "numerical_error")
        : Error(ErrorKind::Numerical, std::move(tag), w) {}
};

struct DegeneratePlaneError : NumericalError {
    explicit DegeneratePlaneError(const std::string& w) : NumericalError(w, "degenerate_plane") {}
};

struct StabilityError : NumericalError {
    explicit StabilityError(const std::string& w) : NumericalError(w, "stability_error") {}
};

struct ConcentrationError : NumericalError {
    explicit ConcentrationError(const std::string& w) : NumericalError(w, "energy_concentration") {}
};

struct HypothesisViolation : Error {
    explicit HypothesisViolation(const std::string& w)
        : Error(ErrorKind::Usage, "hypothesis_violation", w) {}
};

struct ConsistencyFailure : Error {
    explicit ConsistencyFailure(const std::string& w)
        : Error(ErrorKind::Assertion, "consistency_failure", w) {}
};

} // namespace brl
