#pragma once

#include <stdexcept>
#include <string>

namespace glab {

// Status codes shared between the C++ core and the C API surface.
enum class Status : int {
  ok = 0,
  invalid_argument = 1,
  io = 2,
  shape_mismatch = 3,
  bad_state = 4,
  numeric = 5,
  internal = 6,
};

const char* status_name(Status s);

class Error : public std::runtime_error {
 public:
  Error(Status s, const std::string& msg) : std::runtime_error(msg), status_(s) {}
  Status status() const { return status_; }

 private:
  Status status_;
};

[[noreturn]] inline void fail(Status s, const std::string& msg) { throw Error(s, msg); }

}  // namespace glab
