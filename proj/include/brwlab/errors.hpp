#pragma once

#include <stdexcept>
#include <string>

namespace brw {

// Malformed model, law or parameter.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A vector value or argument outside the admissible domain (e.g. z(x) > 1).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Site budget or numeric range exhausted.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace brw
