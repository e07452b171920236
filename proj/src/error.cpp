#include "horoflow/error.hpp"

namespace horoflow {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Configuration: return "configuration error";
    case ErrorKind::Geometry: return "geometry error";
    case ErrorKind::Wall: return "wall error";
    case ErrorKind::Quadrature: return "quadrature error";
    case ErrorKind::Numerical: return "numerical error";
    case ErrorKind::Degeneracy: return "degeneracy error";
    case ErrorKind::Input: return "input error";
  }
  return "error";
}

}  // namespace horoflow
