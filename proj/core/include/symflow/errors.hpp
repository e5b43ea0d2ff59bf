#pragma once

#include <stdexcept>
#include <string>

namespace symflow {

/// Argument outside the domain of a map (point not in a flow box, chart, ...).
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// A construction step failed (uncovered sample, empty graph, ...).
struct ConstructionError : std::runtime_error {
    explicit ConstructionError(const std::string& what) : std::runtime_error(what) {}
};

/// A diagnostic bound was violated (reduction blocks, tail estimates, ...).
struct DiagnosticError : std::runtime_error {
    explicit DiagnosticError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid input to an operation (grid spacing, reducible graph, ...).
struct InputError : std::runtime_error {
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative solver did not converge (Newton, fixed point, integration).
struct SolveError : std::runtime_error {
    explicit SolveError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace symflow
