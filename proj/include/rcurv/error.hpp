#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rcurv {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Syntax or name-resolution failure; `position` is a 0-based column.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " at position " + std::to_string(position)), position_(position)
    {
    }
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Evaluation outside an expression's domain (pole, log of non-positive, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Metric not positive definite, non-positive weight, bad grid.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// A field violates the periodic / compact-support boundary rules.
class AdmissibilityError : public Error {
public:
    using Error::Error;
};

/// Invalid scenario file or option; carries the offending key.
class ScenarioError : public Error {
public:
    using Error::Error;
};

} // namespace rcurv
