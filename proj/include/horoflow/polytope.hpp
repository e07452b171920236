#pragma once

#include <string>
#include <vector>

#include "horoflow/rootsys.hpp"
#include "horoflow/types.hpp"

namespace horoflow {

/// Halfspace <normal, y> <= offset in a*.
struct Facet {
  Vec normal;
  double offset = 0;
};

struct Vertex {
  Vec point;
  std::vector<int> active;  ///< indices of facets through the vertex
};

/// All vertices of {y : <n_i, y> <= b_i}, deduplicated. Unbounded directions
/// are not detected here.
std::vector<Vertex> enumerate_vertices(const std::vector<Vec>& normals,
                                       const std::vector<double>& offsets, int dim,
                                       double tol = 1e-9);

/// Weyl-invariant polytope P in a*, given by facets.
struct MomentPolytope {
  RootSystem rs;
  std::vector<Facet> facets;
  std::vector<Vertex> vertices;

  int dim() const { return rs.rank; }
  bool contains(const Vec& y, double tol = 1e-12) const;
  /// Largest |vertex|, used as a length scale.
  double diameter_scale() const;
};

/// Validates boundedness, full dimension and Weyl invariance, and enumerates
/// the vertices. GeometryError on failure.
MomentPolytope make_polytope(const RootSystem& rs, std::vector<Facet> facets);

const std::vector<Vertex>& vertices(const MomentPolytope& P);
bool is_fine(const MomentPolytope& P);

/// Facets of a named preset polytope: interval, square, cp2, cp2_blowup,
/// a1_symmetric.
std::vector<Facet> polytope_preset_facets(const std::string& name);
std::vector<std::string> polytope_preset_names();

/// psi_0(x) = log sum_{lambda in S} exp <lambda, x>.
class ReferencePotential {
 public:
  ReferencePotential() = default;
  explicit ReferencePotential(std::vector<Vec> support);

  const std::vector<Vec>& support() const { return support_; }
  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  /// Value, gradient and Hessian in one pass.
  void evaluate(const Vec& x, double& value, Vec& grad, Mat& hess) const;

 private:
  std::vector<Vec> support_;
};

/// Support set: twice the points of (1/density) Z^r lying in P, together with
/// the vertices of 2P, closed under the Weyl group. With density 1 on a lattice
/// polytope this is the Fubini-Study type potential of the polarization.
/// density = 0 keeps only the vertices.
ReferencePotential reference_potential(const MomentPolytope& P, int density);

}  // namespace horoflow
