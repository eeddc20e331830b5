#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "equivac/types.hpp"

namespace equivac {

/// Reflection across the hyperplane orthogonal to a unit normal:
/// x -> x - 2<x, n> n.
struct Reflection {
  Vec normal;

  Mat matrix() const;
};

Vec reflect(const Vec& x, const Reflection& r);

/// Finite group generated by reflections, stored as dense orthogonal
/// matrices. `elements[0]` is always the identity.
struct ReflectionGroup {
  int dim = 0;
  std::vector<Mat> elements;
  std::vector<Reflection> generators;
  // Indices into `elements` of the reflections, parallel to `fund_normals`.
  std::vector<int> reflection_indices;
  // One unit normal per reflection, oriented so the interior seed is on the
  // positive side. F is the intersection of the open half-spaces.
  std::vector<Vec> fund_normals;
  Vec seed;

  int order() const { return static_cast<int>(elements.size()); }
  int reflection_count() const { return static_cast<int>(reflection_indices.size()); }
  // Index of g^{-1}; for orthogonal g this is the element equal to g^T.
  int inverse_index(int g) const;
  int product_index(int a, int b) const;

  bool in_fundamental_closure(const Vec& x, double tol = 1e-9) const;
  bool in_fundamental_interior(const Vec& x, double tol = 1e-9) const;
};

struct GroupOptions {
  std::optional<Vec> seed;
  std::size_t cap = 1024;
  double dedup_tol = 1e-9;
};

ReflectionGroup generate_group(int dim, const std::vector<Reflection>& generators,
                               const GroupOptions& options = {});

/// Orbit/stabilizer data of the distinguished minimum and the region D,
/// the interior of the union of stabilizer translates of the closed
/// fundamental region.
struct OrbitInfo {
  Vec base_point;
  std::vector<int> stabilizer;
  std::vector<Vec> orbit;
  int count = 0;
  std::vector<Vec> region_D_normals;
  // Copy of the group's fundamental normals so geometry queries only need
  // this struct.
  std::vector<Vec> fund_normals;
};

OrbitInfo orbit_and_stabilizer(const ReflectionGroup& group, const Vec& a1);

struct RegionGeometry {
  bool in_F = false;
  bool in_D = false;
  double dist_D = 0.0;
};

RegionGeometry region_geometry(const Vec& x, const OrbitInfo& info);
// With only the group available, D is taken to be F.
RegionGeometry region_geometry(const Vec& x, const ReflectionGroup& group);

/// Dihedral group of order 2m in the plane: mirrors along the x-axis and at
/// angle pi/m.
ReflectionGroup dihedral_group(int m);

}  // namespace equivac
