#ifndef FDAPOI_ERRORS_HPP
#define FDAPOI_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fdapoi {

/// Base class for all library errors.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid parameter or specification (bad Hurst index, empty grid, ...).
class spec_error : public error {
 public:
  explicit spec_error(const std::string& msg) : error(msg) {}
};

/// Malformed or inconsistent data: parse failures, grid mismatches,
/// off-grid locations, missing responses.
class data_error : public error {
 public:
  explicit data_error(const std::string& msg) : error(msg) {}
};

/// Numerical failure: factorization breakdown, singular design,
/// degenerate statistics, enumeration budget exceeded.
class numeric_error : public error {
 public:
  explicit numeric_error(const std::string& msg) : error(msg) {}
};

}  // namespace fdapoi

#endif  // FDAPOI_ERRORS_HPP
