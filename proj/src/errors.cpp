#include "ace/errors.hpp"

namespace ace {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::not_found: return "not-found";
    case ErrorKind::model_format: return "model-format";
    case ErrorKind::model_integrity: return "model-integrity";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::dependency: return "dependency";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace ace
