#include "equivac/coxeter.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <string>

#include "equivac/error.hpp"

namespace equivac {

namespace {

constexpr double kUnitTol = 1e-12;
constexpr double kMirrorTol = 1e-6;

bool same_matrix(const Mat& a, const Mat& b, double tol) {
  return (a - b).cwiseAbs().maxCoeff() <= tol;
}

int find_element(const std::vector<Mat>& elements, const Mat& m, double tol) {
  for (std::size_t i = 0; i < elements.size(); ++i) {
    if (same_matrix(elements[i], m, tol)) return static_cast<int>(i);
  }
  return -1;
}

// A reflection is a symmetric involution with trace n - 2.
bool is_reflection(const Mat& g) {
  const int n = static_cast<int>(g.rows());
  if (!same_matrix(g, g.transpose(), 1e-9)) return false;
  if (std::abs(g.trace() - (n - 2)) > 1e-9) return false;
  return same_matrix(g * g, Mat::Identity(n, n), 1e-9);
}

Vec reflection_normal(const Mat& g) {
  // (I - g) / 2 = n n^T; take its largest column.
  const Mat p = 0.5 * (Mat::Identity(g.rows(), g.cols()) - g);
  Eigen::Index best = 0;
  p.colwise().norm().maxCoeff(&best);
  Vec n = p.col(best);
  return n / n.norm();
}

Vec default_seed(int dim, const std::vector<Reflection>& generators,
                 const std::vector<Vec>& normals) {
  Vec seed = Vec::Zero(dim);
  if (!generators.empty()) {
    Mat rows(static_cast<Eigen::Index>(generators.size()), dim);
    for (std::size_t i = 0; i < generators.size(); ++i) {
      rows.row(static_cast<Eigen::Index>(i)) = generators[i].normal.transpose();
    }
    seed = rows.completeOrthogonalDecomposition().solve(
        Vec::Ones(static_cast<Eigen::Index>(generators.size())));
  }
  if (seed.norm() < 1e-12) {
    seed = Vec::Zero(dim);
    seed(0) = 1.0;
  }
  seed.normalize();
  // Nudge off any mirror with a fixed, non-symmetric direction.
  Vec nudge(dim);
  for (int k = 0; k < dim; ++k) nudge(k) = 1.0 / (k + std::numbers::pi);
  nudge.normalize();
  for (int attempt = 0; attempt < 16; ++attempt) {
    bool on_mirror = false;
    for (const Vec& n : normals) {
      if (std::abs(seed.dot(n)) < kMirrorTol) {
        on_mirror = true;
        break;
      }
    }
    if (!on_mirror) return seed;
    seed = (seed + 1e-3 * (attempt + 1) * nudge).normalized();
  }
  throw Error(ErrorCode::InvalidArgument, "could not find an interior seed off every mirror");
}

}  // namespace

Mat Reflection::matrix() const {
  const auto n = normal.size();
  return Mat::Identity(n, n) - 2.0 * normal * normal.transpose();
}

Vec reflect(const Vec& x, const Reflection& r) {
  return x - 2.0 * x.dot(r.normal) * r.normal;
}

int ReflectionGroup::inverse_index(int g) const {
  const int idx = find_element(elements, elements[static_cast<std::size_t>(g)].transpose(), 1e-8);
  if (idx < 0) throw Error(ErrorCode::InvalidArgument, "group is not closed under inverse");
  return idx;
}

int ReflectionGroup::product_index(int a, int b) const {
  const Mat p = elements[static_cast<std::size_t>(a)] * elements[static_cast<std::size_t>(b)];
  const int idx = find_element(elements, p, 1e-8);
  if (idx < 0) throw Error(ErrorCode::InvalidArgument, "group is not closed under products");
  return idx;
}

bool ReflectionGroup::in_fundamental_closure(const Vec& x, double tol) const {
  return std::all_of(fund_normals.begin(), fund_normals.end(),
                     [&](const Vec& n) { return x.dot(n) >= -tol; });
}

bool ReflectionGroup::in_fundamental_interior(const Vec& x, double tol) const {
  return std::all_of(fund_normals.begin(), fund_normals.end(),
                     [&](const Vec& n) { return x.dot(n) > tol; });
}

ReflectionGroup generate_group(int dim, const std::vector<Reflection>& generators,
                               const GroupOptions& options) {
  if (dim < 1) throw Error(ErrorCode::InvalidArgument, "group dimension must be positive");
  for (const auto& r : generators) {
    if (r.normal.size() != dim) {
      throw Error(ErrorCode::InvalidArgument, "generator normal has wrong dimension");
    }
    if (std::abs(r.normal.norm() - 1.0) > kUnitTol * 1e3) {
      throw Error(ErrorCode::InvalidArgument, "generator normal is not a unit vector");
    }
  }

  ReflectionGroup group;
  group.dim = dim;
  group.generators = generators;
  group.elements.push_back(Mat::Identity(dim, dim));

  std::vector<Mat> gens;
  gens.reserve(generators.size());
  for (const auto& r : generators) gens.push_back(r.matrix());

  // Breadth-first closure; left-multiplying by generators reaches every
  // word in the generators.
  std::deque<std::size_t> frontier{0};
  while (!frontier.empty()) {
    const std::size_t cur = frontier.front();
    frontier.pop_front();
    for (const Mat& s : gens) {
      Mat p = s * group.elements[cur];
      if (find_element(group.elements, p, options.dedup_tol) >= 0) continue;
      if (group.elements.size() >= options.cap) {
        throw Error(ErrorCode::ClosureOverflow,
                    "group closure exceeded " + std::to_string(options.cap) + " elements");
      }
      group.elements.push_back(std::move(p));
      frontier.push_back(group.elements.size() - 1);
    }
  }

  std::vector<Vec> raw_normals;
  for (std::size_t i = 0; i < group.elements.size(); ++i) {
    if (is_reflection(group.elements[i])) {
      group.reflection_indices.push_back(static_cast<int>(i));
      raw_normals.push_back(reflection_normal(group.elements[i]));
    }
  }

  if (options.seed) {
    if (options.seed->size() != dim) {
      throw Error(ErrorCode::InvalidArgument, "seed has wrong dimension");
    }
    group.seed = options.seed->normalized();
    for (const Vec& n : raw_normals) {
      if (std::abs(group.seed.dot(n)) < kMirrorTol) {
        throw Error(ErrorCode::InvalidArgument, "seed lies on a mirror");
      }
    }
  } else {
    group.seed = default_seed(dim, generators, raw_normals);
  }

  for (Vec& n : raw_normals) {
    if (group.seed.dot(n) < 0.0) n = -n;
    group.fund_normals.push_back(n);
  }
  return group;
}

OrbitInfo orbit_and_stabilizer(const ReflectionGroup& group, const Vec& a1) {
  if (a1.size() != group.dim) throw Error(ErrorCode::InvalidArgument, "a1 has wrong dimension");
  if (a1.norm() == 0.0) throw Error(ErrorCode::InvalidArgument, "a1 must be nonzero");
  if (!group.in_fundamental_closure(a1)) {
    throw Error(ErrorCode::NotInClosure, "a1 is not in the closed fundamental region");
  }

  OrbitInfo info;
  info.base_point = a1;
  info.fund_normals = group.fund_normals;
  for (int g = 0; g < group.order(); ++g) {
    const Vec ga = group.elements[static_cast<std::size_t>(g)] * a1;
    if ((ga - a1).norm() <= 1e-9) info.stabilizer.push_back(g);
    const bool seen = std::any_of(info.orbit.begin(), info.orbit.end(),
                                  [&](const Vec& p) { return (p - ga).norm() <= 1e-9; });
    if (!seen) info.orbit.push_back(ga);
  }
  info.count = static_cast<int>(info.orbit.size());
  if (info.count * static_cast<int>(info.stabilizer.size()) != group.order()) {
    throw Error(ErrorCode::InvalidArgument, "orbit-stabilizer identity failed");
  }

  // D is the interior of the union of g F-bar over the stabilizer. A mirror
  // meets D exactly when some stabilizer chamber lies on its negative side;
  // the remaining mirrors bound D.
  for (std::size_t k = 0; k < group.fund_normals.size(); ++k) {
    const Vec& n = group.fund_normals[k];
    bool crosses = false;
    for (int g : info.stabilizer) {
      if ((group.elements[static_cast<std::size_t>(g)] * group.seed).dot(n) < 0.0) {
        crosses = true;
        break;
      }
    }
    if (!crosses) info.region_D_normals.push_back(n);
  }
  return info;
}

namespace {

RegionGeometry geometry_from(const Vec& x, const std::vector<Vec>& f_normals,
                             const std::vector<Vec>& d_normals) {
  RegionGeometry out;
  out.in_F = std::all_of(f_normals.begin(), f_normals.end(),
                         [&](const Vec& n) { return x.dot(n) > 1e-12; });
  double dmin = std::numeric_limits<double>::infinity();
  for (const Vec& n : d_normals) dmin = std::min(dmin, x.dot(n));
  if (d_normals.empty()) {
    // D is all of space.
    out.in_D = true;
    out.dist_D = std::numeric_limits<double>::infinity();
    return out;
  }
  out.in_D = dmin > 1e-12;
  out.dist_D = out.in_D ? dmin : 0.0;
  return out;
}

}  // namespace

RegionGeometry region_geometry(const Vec& x, const OrbitInfo& info) {
  return geometry_from(x, info.fund_normals, info.region_D_normals);
}

RegionGeometry region_geometry(const Vec& x, const ReflectionGroup& group) {
  return geometry_from(x, group.fund_normals, group.fund_normals);
}

ReflectionGroup dihedral_group(int m) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "dihedral index must be positive");
  const double angle = std::numbers::pi / m;
  Vec n1(2), n2(2);
  n1 << 0.0, 1.0;
  n2 << std::sin(angle), -std::cos(angle);
  return generate_group(2, {Reflection{n1}, Reflection{n2}});
}

}  // namespace equivac
