#pragma once

#include <stdexcept>
#include <string>

namespace qsoc {

// Error taxonomy, mirrored by the CLI exit codes: validation 2, numerical 3, io 4.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qsoc
