#pragma once

#include <stdexcept>
#include <string>

namespace aegis {

/// Base class for every error the engine raises. Callers that only need a
/// message can catch this; the subclasses exist so tests and the CLI can
/// distinguish failure classes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Values present but unusable (non-positive price, missing quarters, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of the operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Inconsistent configuration parameters (e.g. lookback <= skip).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A constraint set admits no point.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// Panel has no rows or no columns after a transform.
class EmptyPanelError : public Error {
public:
    using Error::Error;
};

/// Not enough sectors / candidates to run a selection step.
class SelectionError : public Error {
public:
    using Error::Error;
};

/// Index-eligibility rule violated by an input record.
class EligibilityError : public Error {
public:
    using Error::Error;
};

}  // namespace aegis
