#include "core/common.hpp"

namespace glab {

const char* status_name(Status s) {
  switch (s) {
    case Status::ok: return "ok";
    case Status::invalid_argument: return "invalid_argument";
    case Status::io: return "io";
    case Status::shape_mismatch: return "shape_mismatch";
    case Status::bad_state: return "bad_state";
    case Status::numeric: return "numeric";
    case Status::internal: return "internal";
  }
  return "unknown";
}

}  // namespace glab
