#pragma once

#include <stdexcept>
#include <string>

namespace qosgp {

// Caller supplied something outside an operation's contract.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// Factorization failure, non-finite objective, or negative variance beyond round-off.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// A hard limit (step cap, file system) was hit.
class ResourceError : public std::runtime_error {
 public:
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

void require(bool condition, const std::string& message);

}  // namespace qosgp
