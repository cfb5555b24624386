#ifndef BHQR_ERROR_HPP_
#define BHQR_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace bhqr {

// Raised for invalid data or a model that cannot be fitted. The CLI maps it
// to exit code 1.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Raised for invalid configuration (bad flags, malformed config values).
// The CLI maps it to exit code 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace bhqr

#endif  // BHQR_ERROR_HPP_
