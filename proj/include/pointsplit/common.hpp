#pragma once

#include <stdexcept>
#include <string>

namespace pointsplit {

// Error taxonomy shared by the library and the CLI. The CLI maps io_error to
// exit code 1, argument_error/config_error (and std::invalid_argument) to 2,
// and any other exception to 3.

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class parse_error : public io_error {
 public:
  using io_error::io_error;
};

class argument_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace pointsplit
