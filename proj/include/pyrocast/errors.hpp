#pragma once

#include <stdexcept>
#include <string>

namespace pyrocast {

// Error families map 1:1 onto CLI exit codes (config 2, data 3, numeric 4).
// Messages start with a short category word ("format error: ...") so callers
// and tests can match on the specific failure without extra exception types.

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pyrocast
