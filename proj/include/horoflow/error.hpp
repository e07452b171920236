#pragma once

#include <stdexcept>
#include <string>

namespace horoflow {

enum class ErrorKind {
  Configuration,
  Geometry,
  Wall,
  Quadrature,
  Numerical,
  Degeneracy,
  Input,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define HOROFLOW_ERROR_TYPE(Name, Kind)                              \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : Error(Kind, what) {}    \
  };

HOROFLOW_ERROR_TYPE(ConfigError, ErrorKind::Configuration)
HOROFLOW_ERROR_TYPE(GeometryError, ErrorKind::Geometry)
HOROFLOW_ERROR_TYPE(WallError, ErrorKind::Wall)
HOROFLOW_ERROR_TYPE(QuadratureError, ErrorKind::Quadrature)
HOROFLOW_ERROR_TYPE(NumericalError, ErrorKind::Numerical)
HOROFLOW_ERROR_TYPE(InputError, ErrorKind::Input)

#undef HOROFLOW_ERROR_TYPE

/// Raised when the reduced operator loses ellipticity at a grid node:
/// a nonpositive root pairing or a nonpositive Hessian determinant.
class DegeneracyError : public Error {
 public:
  DegeneracyError(const std::string& what, long node, int root)
      : Error(ErrorKind::Degeneracy, what), node_(node), root_(root) {}
  long node() const noexcept { return node_; }
  /// Index into the merged root-term list, or -1 for the Hessian.
  int root() const noexcept { return root_; }

 private:
  long node_;
  int root_;
};

}  // namespace horoflow
