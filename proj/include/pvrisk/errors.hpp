#pragma once

#include <stdexcept>
#include <string>

namespace pvrisk {

/// Malformed or missing input: unreadable files, bad config, empty data.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a finite answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pvrisk
