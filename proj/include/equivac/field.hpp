#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "equivac/coxeter.hpp"
#include "equivac/potential.hpp"
#include "equivac/types.hpp"

namespace equivac {

enum class Lattice { Cartesian, Hexagonal };

const char* to_string(Lattice l);

/// Masked lattice {B i : i in Z^n} intersected with the closed ball B_R.
/// Cartesian: B = h I with the 2n+1-point stencil. Hexagonal (n = 2 only):
/// unit-spacing triangular lattice with one axis along e_1 and the 7-point
/// stencil, so dihedral groups of order 6 and 12 act by node permutations.
struct BallGrid {
  int dim = 0;
  double R = 0.0;
  double h = 0.0;
  Lattice lattice = Lattice::Cartesian;
  Mat basis;
  Mat basis_inv;
  // Stencil directions in index space, in +/- pairs: offsets[2k+1] = -offsets[2k].
  std::vector<std::vector<int>> offsets;
  int stencil = 0;              // offsets.size()
  double stencil_weight = 0.0;  // Laplacian weight per neighbour difference
  int half_width = 0;           // lattice indices run over [-half_width, half_width]^n
  std::size_t node_count = 0;
  // Node coordinates, column i is node i.
  Mat coords;
  // Lattice index of each node, dim entries per node.
  std::vector<int> index;
  // `stencil` entries per node, -1 if the neighbour is outside the ball.
  std::vector<std::int32_t> neighbors;
  std::vector<std::uint8_t> is_boundary;
  // Dense box lookup, (2*half_width+1)^dim entries; -1 outside the ball.
  std::vector<std::int32_t> box;

  double cell_volume() const;
  Vec point(std::size_t i) const { return coords.col(static_cast<Eigen::Index>(i)); }
  std::int32_t neighbor(std::size_t i, int dir) const {
    return neighbors[i * static_cast<std::size_t>(stencil) + static_cast<std::size_t>(dir)];
  }
  // Node at a lattice index, or -1.
  std::int32_t find(std::span<const int> idx) const;
  // Node at a point within 1e-9 h of a lattice site, or -1.
  std::int32_t find_point(const Vec& x) const;
  std::vector<std::size_t> nodes_in_ball(const Vec& center, double radius) const;
};

constexpr std::size_t kDefaultMaxNodes = 4'000'000;

std::shared_ptr<const BallGrid> build_grid(int n, double R, double h,
                                           Lattice lattice = Lattice::Cartesian,
                                           std::size_t max_nodes = kDefaultMaxNodes);

/// True if every group element maps the lattice onto itself.
bool lattice_preserved(Lattice lattice, const ReflectionGroup& group);
/// Cartesian if the group preserves it, else hexagonal if that works, else
/// Cartesian (symmetrization then interpolates).
Lattice preferred_lattice(const ReflectionGroup& group);

/// perm[g][i] = node index of elements[g] applied to node i, or empty if
/// some image is not a node.
std::vector<std::vector<std::int32_t>> node_permutation(const BallGrid& grid,
                                                        const ReflectionGroup& group);

/// u: B_R -> R^n, column i holds u at node i.
struct VectorField {
  std::shared_ptr<const BallGrid> grid;
  Mat values;

  VectorField() = default;
  VectorField(std::shared_ptr<const BallGrid> g, int components);
  Eigen::Index size() const { return values.cols(); }
  double sup_norm() const;  // max_x |u(x)|
};

struct ScalarField {
  std::shared_ptr<const BallGrid> grid;
  Vec values;

  ScalarField() = default;
  explicit ScalarField(std::shared_ptr<const BallGrid> g);
};

/// Graph Laplacian: missing neighbours reuse the centre value, so no flux
/// crosses the staircase boundary.
VectorField laplacian(const VectorField& u);
ScalarField laplacian(const ScalarField& u);

/// Sum over lattice edges of w |u(y) - u(x)|^2 / 2 plus nodal W, each
/// weighted by the cell volume, with w the stencil weight. The graph
/// Laplacian is exactly minus its gradient divided by the cell volume.
double energy(const VectorField& u, const PotentialSpec& spec);
double gradient_energy(const VectorField& u);

/// Grid inner product sum_x <u(x), v(x)> times the cell volume.
double grid_inner(const VectorField& u, const VectorField& v);
/// Sum over edges of w <Du, Dv> times the cell volume.
double grid_dirichlet(const VectorField& u, const VectorField& v);
double grid_dirichlet(const ScalarField& u, const ScalarField& v);

/// Multilinear (Cartesian) or barycentric (hexagonal) interpolation. When a
/// cell corner lies outside the ball, an affine least-squares fit over the
/// nodes within 2.5h is used instead.
Vec interpolate(const VectorField& u, const Vec& x);

/// (1/|G|) sum_g g^{-1} u(g x); exact node permutation when the lattice is
/// preserved, interpolated otherwise.
VectorField symmetrize(const VectorField& u, const ReflectionGroup& group);

/// max over nodes and g of |u(g x) - g u(x)|, u(g x) interpolated.
double equivariance_residual(const VectorField& u, const ReflectionGroup& group);

/// Equivariant extension of x -> min(dist_D(x), 1) a1 from D-bar.
VectorField seed_affine(std::shared_ptr<const BallGrid> grid, const ReflectionGroup& group,
                        const OrbitInfo& orbit);

VectorField project_to_ball(const VectorField& u, double M);
Vec project_to_ball(const Vec& v, double M);

/// min over nodes x in F-bar of min_gamma <u(x), eta_gamma>.
double positivity_min(const VectorField& u, const ReflectionGroup& group);

/// Same minimum restricted to nodes with min_gamma <x, eta_gamma> > margin
/// and |x| <= R - margin.
double strong_positivity_margin(const VectorField& u, const ReflectionGroup& group,
                                double margin);

/// Q(u(x)) nodewise.
ScalarField monitor_field(const VectorField& u, const QSpec& q);

/// Header x1..xn,u1..un, one node per row, 17 significant digits.
void write_field_csv(const VectorField& u, const std::string& path);
std::string field_csv(const VectorField& u);
/// Reads a field onto an existing grid; every grid node must be present.
VectorField read_field_csv(const std::string& path, std::shared_ptr<const BallGrid> grid);
/// Reads a field and rebuilds its grid. The lattice is recognised from the
/// coordinates, h is the smallest nonzero node radius, and R is `R_hint`
/// if positive, else the largest node radius.
VectorField read_field_csv(const std::string& path, double R_hint = 0.0);

}  // namespace equivac
