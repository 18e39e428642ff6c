#pragma once

#include <stdexcept>
#include <string>

namespace sgsim {

/// Base class for all artifact errors so callers can catch one type.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Two fields (or a field and an operator) live on incompatible grids.
class grid_mismatch_error : public error {
 public:
  explicit grid_mismatch_error(const std::string& msg) : error(msg) {}
};

/// A numeric result left the representable range (overflow/NaN).
class nonfinite_error : public error {
 public:
  explicit nonfinite_error(const std::string& msg) : error(msg) {}
};

/// Malformed input: bad expression text, bad manifest, bad file.
class parse_error : public error {
 public:
  explicit parse_error(const std::string& msg) : error(msg) {}
};

/// A structural hypothesis failed (parabolicity, symmetry, rank, ranges).
class hypothesis_error : public error {
 public:
  explicit hypothesis_error(const std::string& msg) : error(msg) {}
};

/// An argument left the locality ball of a locally-defined nonlinearity.
class locality_error : public error {
 public:
  explicit locality_error(const std::string& msg) : error(msg) {}
};

/// An iteration failed to converge within its budget.
class convergence_error : public error {
 public:
  explicit convergence_error(const std::string& msg) : error(msg) {}
};

/// File system / serialization failures.
class io_error : public error {
 public:
  explicit io_error(const std::string& msg) : error(msg) {}
};

}  // namespace sgsim
