#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace regvar {

/// Malformed arguments: dimension mismatches, bad indices, non-positive radii.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not produce data for a well-formed request.
/// `kind` is a stable short tag ("isolated-point", "undersampled", ...) used
/// by the CLI to report diagnostics.
class DiagnosticError : public std::runtime_error {
 public:
  DiagnosticError(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Rejection sampling did not reach the requested number of graph points.
class SparseGraphError : public DiagnosticError {
 public:
  SparseGraphError(std::size_t achieved, std::size_t requested)
      : DiagnosticError("sparse-graph", "accepted " + std::to_string(achieved) + " of " +
                                            std::to_string(requested) + " requested samples"),
        achieved_(achieved) {}
  std::size_t achieved() const noexcept { return achieved_; }

 private:
  std::size_t achieved_;
};

/// Evaluation outside the domain of a change of variables.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace regvar
