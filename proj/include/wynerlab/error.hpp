#pragma once

#include <stdexcept>
#include <string>

namespace wynerlab {

/// Malformed input: bad shapes, out-of-range parameters, unnormalized pmfs.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A well-formed request evaluated outside the domain where the quantity is
/// defined (e.g. a likelihood ratio off the support).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An exact computation or a rejection sampler ran past its budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace detail
}  // namespace wynerlab
