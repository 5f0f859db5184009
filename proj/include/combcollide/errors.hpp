#pragma once

#include <stdexcept>
#include <string>

namespace comb {

// Inadmissible vertex, violated precondition, or a region with no boundary.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// The target set of a collision counter has no vertices.
class EmptyTargetRegion : public std::domain_error {
 public:
  explicit EmptyTargetRegion(const std::string& what) : std::domain_error(what) {}
};

// An exact computation would exceed the configured state-space or work budget.
class ResourceLimit : public std::runtime_error {
 public:
  explicit ResourceLimit(const std::string& what) : std::runtime_error(what) {}
};

// Bad command-line flag or configuration entry.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace comb
