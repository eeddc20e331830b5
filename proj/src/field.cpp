#include "equivac/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "equivac/error.hpp"

namespace equivac {

namespace {

std::size_t box_offset(const BallGrid& g, std::span<const int> idx) {
  const std::size_t side = static_cast<std::size_t>(2 * g.half_width + 1);
  std::size_t off = 0;
  for (int k = 0; k < g.dim; ++k) {
    off = off * side + static_cast<std::size_t>(idx[static_cast<std::size_t>(k)] + g.half_width);
  }
  return off;
}

double mirror_min(const Vec& x, const std::vector<Vec>& normals) {
  double m = std::numeric_limits<double>::infinity();
  for (const Vec& n : normals) m = std::min(m, x.dot(n));
  return m;
}

}  // namespace

const char* to_string(Lattice l) {
  return l == Lattice::Hexagonal ? "hexagonal" : "cartesian";
}

double BallGrid::cell_volume() const { return std::abs(basis.determinant()); }

std::int32_t BallGrid::find(std::span<const int> idx) const {
  for (int k = 0; k < dim; ++k) {
    const int i = idx[static_cast<std::size_t>(k)];
    if (i < -half_width || i > half_width) return -1;
  }
  return box[box_offset(*this, idx)];
}

std::int32_t BallGrid::find_point(const Vec& x) const {
  const Vec s = basis_inv * x;
  int idx[3];
  for (int k = 0; k < dim; ++k) {
    idx[k] = static_cast<int>(std::lround(s(k)));
    if (std::abs(s(k) - idx[k]) > 1e-9) return -1;
  }
  return find({idx, static_cast<std::size_t>(dim)});
}

std::vector<std::size_t> BallGrid::nodes_in_ball(const Vec& center, double radius) const {
  std::vector<std::size_t> out;
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < node_count; ++i) {
    if ((coords.col(static_cast<Eigen::Index>(i)) - center).squaredNorm() <= r2) out.push_back(i);
  }
  return out;
}

std::shared_ptr<const BallGrid> build_grid(int n, double R, double h, Lattice lattice,
                                           std::size_t max_nodes) {
  if (n < 1 || n > 3) throw Error(ErrorCode::InvalidArgument, "grid dimension must be 1, 2 or 3");
  if (!(R > 0.0) || !(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "R and h must be positive");
  if (h > 0.5 * R) throw Error(ErrorCode::InvalidArgument, "grid spacing h exceeds R/2");
  if (lattice == Lattice::Hexagonal && n != 2) {
    throw Error(ErrorCode::InvalidArgument, "hexagonal lattice needs n = 2");
  }

  auto g = std::make_shared<BallGrid>();
  g->dim = n;
  g->R = R;
  g->h = h;
  g->lattice = lattice;
  if (lattice == Lattice::Cartesian) {
    g->basis = h * Mat::Identity(n, n);
    for (int k = 0; k < n; ++k) {
      std::vector<int> e(static_cast<std::size_t>(n), 0);
      e[static_cast<std::size_t>(k)] = 1;
      g->offsets.push_back(e);
      e[static_cast<std::size_t>(k)] = -1;
      g->offsets.push_back(e);
    }
    g->stencil_weight = 1.0 / (h * h);
    g->half_width = static_cast<int>(std::floor(R / h + 1e-9));
  } else {
    g->basis.resize(2, 2);
    g->basis << h, 0.5 * h, 0.0, 0.5 * std::sqrt(3.0) * h;
    g->offsets = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, -1}, {-1, 1}};
    g->stencil_weight = 2.0 / (3.0 * h * h);
    // |x| <= R forces |i2| <= 2R/(sqrt3 h) and |i1| <= R/h + |i2|/2.
    g->half_width = static_cast<int>(std::floor(R / h + R / (std::sqrt(3.0) * h) + 1e-9)) + 1;
  }
  g->basis_inv = g->basis.inverse();
  g->stencil = static_cast<int>(g->offsets.size());

  const int K = g->half_width;
  const std::size_t side = static_cast<std::size_t>(2 * K + 1);
  const double est = std::pow(static_cast<double>(side), n);
  if (est > 64.0 * static_cast<double>(max_nodes) + 1e6) {
    throw Error(ErrorCode::GridTooLarge, "lattice box exceeds the node cap");
  }
  std::size_t box_size = 1;
  for (int k = 0; k < n; ++k) box_size *= side;
  g->box.assign(box_size, -1);

  // Integer radius test in units of h^2 for the Cartesian lattice keeps the
  // node set exact; the hexagonal lattice uses 4|x|^2/h^2 = (2i1 + i2)^2 + 3 i2^2.
  const double ratio = R / h;
  const double limit = (lattice == Lattice::Cartesian ? 1.0 : 4.0) * ratio * ratio * (1.0 + 1e-12);
  std::vector<int> idx(static_cast<std::size_t>(n), -K);
  std::vector<int> nodes_index;
  std::size_t count = 0;
  for (std::size_t off = 0; off < box_size; ++off) {
    // Decode with the last index fastest.
    std::size_t rem = off;
    for (int k = n - 1; k >= 0; --k) {
      idx[static_cast<std::size_t>(k)] = static_cast<int>(rem % side) - K;
      rem /= side;
    }
    long r2 = 0;
    if (lattice == Lattice::Cartesian) {
      for (int v : idx) r2 += static_cast<long>(v) * v;
    } else {
      const long a = 2L * idx[0] + idx[1];
      r2 = a * a + 3L * idx[1] * idx[1];
    }
    if (static_cast<double>(r2) > limit) continue;
    if (count >= max_nodes) throw Error(ErrorCode::GridTooLarge, "node count exceeds the cap");
    g->box[off] = static_cast<std::int32_t>(count++);
    nodes_index.insert(nodes_index.end(), idx.begin(), idx.end());
  }

  g->node_count = count;
  g->index = std::move(nodes_index);
  g->coords.resize(n, static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) {
    Vec s(n);
    for (int k = 0; k < n; ++k) s(k) = g->index[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)];
    g->coords.col(static_cast<Eigen::Index>(i)) = g->basis * s;
  }

  const auto dirs = static_cast<std::size_t>(g->stencil);
  g->neighbors.assign(count * dirs, -1);
  g->is_boundary.assign(count, 0);
  std::vector<int> nb(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t d = 0; d < dirs; ++d) {
      for (int k = 0; k < n; ++k) {
        nb[static_cast<std::size_t>(k)] = g->index[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)] +
                                          g->offsets[d][static_cast<std::size_t>(k)];
      }
      const std::int32_t j = g->find(nb);
      g->neighbors[i * dirs + d] = j;
      if (j < 0) g->is_boundary[i] = 1;
    }
  }
  return g;
}

bool lattice_preserved(Lattice lattice, const ReflectionGroup& group) {
  if (lattice == Lattice::Hexagonal && group.dim != 2) return false;
  Mat B;
  if (lattice == Lattice::Cartesian) {
    B = Mat::Identity(group.dim, group.dim);
  } else {
    B.resize(2, 2);
    B << 1.0, 0.5, 0.0, 0.5 * std::sqrt(3.0);
  }
  const Mat Binv = B.inverse();
  for (const Mat& e : group.elements) {
    const Mat m = Binv * e * B;
    if ((m - m.array().round().matrix()).cwiseAbs().maxCoeff() > 1e-9) return false;
  }
  return true;
}

Lattice preferred_lattice(const ReflectionGroup& group) {
  if (lattice_preserved(Lattice::Cartesian, group)) return Lattice::Cartesian;
  if (lattice_preserved(Lattice::Hexagonal, group)) return Lattice::Hexagonal;
  return Lattice::Cartesian;
}

std::vector<std::vector<std::int32_t>> node_permutation(const BallGrid& grid,
                                                        const ReflectionGroup& group) {
  std::vector<std::vector<std::int32_t>> perm;
  if (!lattice_preserved(grid.lattice, group)) return perm;
  perm.reserve(group.elements.size());
  for (const Mat& e : group.elements) {
    std::vector<std::int32_t> p(grid.node_count);
    for (std::size_t i = 0; i < grid.node_count; ++i) {
      p[i] = grid.find_point(e * grid.point(i));
      if (p[i] < 0) return {};
    }
    perm.push_back(std::move(p));
  }
  return perm;
}

// ---------------------------------------------------------------------------

VectorField::VectorField(std::shared_ptr<const BallGrid> g, int components)
    : grid(std::move(g)), values(Mat::Zero(components, static_cast<Eigen::Index>(grid->node_count))) {}

double VectorField::sup_norm() const {
  return values.cols() == 0 ? 0.0 : values.colwise().norm().maxCoeff();
}

ScalarField::ScalarField(std::shared_ptr<const BallGrid> g)
    : grid(std::move(g)), values(Vec::Zero(static_cast<Eigen::Index>(grid->node_count))) {}

VectorField laplacian(const VectorField& u) {
  const BallGrid& g = *u.grid;
  VectorField out(u.grid, static_cast<int>(u.values.rows()));
  for (std::size_t i = 0; i < g.node_count; ++i) {
    const auto ci = static_cast<Eigen::Index>(i);
    for (int d = 0; d < g.stencil; ++d) {
      const std::int32_t j = g.neighbor(i, d);
      if (j < 0) continue;
      out.values.col(ci) += u.values.col(j) - u.values.col(ci);
    }
    out.values.col(ci) *= g.stencil_weight;
  }
  return out;
}

ScalarField laplacian(const ScalarField& u) {
  const BallGrid& g = *u.grid;
  ScalarField out(u.grid);
  for (std::size_t i = 0; i < g.node_count; ++i) {
    const auto ci = static_cast<Eigen::Index>(i);
    double s = 0.0;
    for (int d = 0; d < g.stencil; ++d) {
      const std::int32_t j = g.neighbor(i, d);
      if (j >= 0) s += u.values(j) - u.values(ci);
    }
    out.values(ci) = s * g.stencil_weight;
  }
  return out;
}

double gradient_energy(const VectorField& u) {
  const BallGrid& g = *u.grid;
  const double w = 0.5 * g.cell_volume() * g.stencil_weight;
  double total = 0.0;
  for (std::size_t i = 0; i < g.node_count; ++i) {
    const auto ci = static_cast<Eigen::Index>(i);
    double s = 0.0;
    for (int d = 0; d < g.stencil; d += 2) {
      const std::int32_t j = g.neighbor(i, d);
      if (j >= 0) s += (u.values.col(j) - u.values.col(ci)).squaredNorm();
    }
    total += s * w;
  }
  return total;
}

double energy(const VectorField& u, const PotentialSpec& spec) {
  const BallGrid& g = *u.grid;
  const double vol = g.cell_volume();
  const double w = 0.5 * vol * g.stencil_weight;
  const auto n = static_cast<std::size_t>(u.values.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < g.node_count; ++i) {
    const auto ci = static_cast<Eigen::Index>(i);
    double s = 0.0;
    for (int d = 0; d < g.stencil; d += 2) {
      const std::int32_t j = g.neighbor(i, d);
      if (j >= 0) s += (u.values.col(j) - u.values.col(ci)).squaredNorm();
    }
    total += s * w + spec.W->value({u.values.col(ci).data(), n}) * vol;
  }
  return total;
}

double grid_inner(const VectorField& u, const VectorField& v) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < u.values.cols(); ++i) s += u.values.col(i).dot(v.values.col(i));
  return s * u.grid->cell_volume();
}

double grid_dirichlet(const VectorField& u, const VectorField& v) {
  const BallGrid& g = *u.grid;
  double s = 0.0;
  for (std::size_t i = 0; i < g.node_count; ++i) {
    const auto ci = static_cast<Eigen::Index>(i);
    for (int d = 0; d < g.stencil; d += 2) {
      const std::int32_t j = g.neighbor(i, d);
      if (j >= 0) s += (u.values.col(j) - u.values.col(ci)).dot(v.values.col(j) - v.values.col(ci));
    }
  }
  return s * g.cell_volume() * g.stencil_weight;
}

double grid_dirichlet(const ScalarField& u, const ScalarField& v) {
  const BallGrid& g = *u.grid;
  double s = 0.0;
  for (std::size_t i = 0; i < g.node_count; ++i) {
    const auto ci = static_cast<Eigen::Index>(i);
    for (int d = 0; d < g.stencil; d += 2) {
      const std::int32_t j = g.neighbor(i, d);
      if (j >= 0) s += (u.values(j) - u.values(ci)) * (v.values(j) - v.values(ci));
    }
  }
  return s * g.cell_volume() * g.stencil_weight;
}

Vec interpolate(const VectorField& u, const Vec& x) {
  const BallGrid& g = *u.grid;
  const int n = g.dim;
  const Vec s = g.basis_inv * x;
  int base[3] = {0, 0, 0};
  double frac[3] = {0, 0, 0};
  for (int k = 0; k < n; ++k) {
    const double f = std::floor(s(k));
    base[k] = static_cast<int>(f);
    frac[k] = s(k) - f;
  }

  // Corner offsets and weights.
  int corners[8][3];
  double weights[8];
  int ncorner = 0;
  if (g.lattice == Lattice::Cartesian) {
    for (int c = 0; c < (1 << n); ++c) {
      double w = 1.0;
      for (int k = 0; k < n; ++k) {
        const int bit = (c >> k) & 1;
        corners[ncorner][k] = base[k] + bit;
        w *= bit ? frac[k] : 1.0 - frac[k];
      }
      weights[ncorner++] = w;
    }
  } else {
    const double a = frac[0], b = frac[1];
    auto put = [&](int d0, int d1, double w) {
      corners[ncorner][0] = base[0] + d0;
      corners[ncorner][1] = base[1] + d1;
      weights[ncorner++] = w;
    };
    if (a + b <= 1.0) {
      put(0, 0, 1.0 - a - b);
      put(1, 0, a);
      put(0, 1, b);
    } else {
      put(1, 1, a + b - 1.0);
      put(1, 0, 1.0 - b);
      put(0, 1, 1.0 - a);
    }
  }

  Vec acc = Vec::Zero(u.values.rows());
  double wsum = 0.0;
  for (int c = 0; c < ncorner; ++c) {
    if (weights[c] <= 0.0) continue;
    const std::int32_t j = g.find({corners[c], static_cast<std::size_t>(n)});
    if (j < 0) continue;
    acc += weights[c] * u.values.col(j);
    wsum += weights[c];
  }
  if (wsum >= 1.0 - 1e-12) return acc / wsum;

  // Incomplete cell at the staircase boundary: least-squares affine fit over
  // nearby nodes keeps second order.
  const std::vector<std::size_t> near = g.nodes_in_ball(x, 2.5 * g.h);
  if (near.size() >= static_cast<std::size_t>(n + 2)) {
    Mat A(static_cast<Eigen::Index>(near.size()), n + 1);
    Mat B(static_cast<Eigen::Index>(near.size()), u.values.rows());
    for (std::size_t r = 0; r < near.size(); ++r) {
      const auto rr = static_cast<Eigen::Index>(r);
      A(rr, 0) = 1.0;
      A.row(rr).tail(n) = ((g.point(near[r]) - x) / g.h).transpose();
      B.row(rr) = u.values.col(static_cast<Eigen::Index>(near[r])).transpose();
    }
    const Mat coef = A.colPivHouseholderQr().solve(B);
    return coef.row(0).transpose();
  }
  if (wsum > 1e-12) return acc / wsum;

  // Nearest node as a last resort.
  std::int32_t j = -1;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.node_count; ++i) {
    const double d = (g.coords.col(static_cast<Eigen::Index>(i)) - x).squaredNorm();
    if (d < best) {
      best = d;
      j = static_cast<std::int32_t>(i);
    }
  }
  return u.values.col(j);
}

VectorField symmetrize(const VectorField& u, const ReflectionGroup& group) {
  const BallGrid& g = *u.grid;
  if (group.dim != g.dim || u.values.rows() != g.dim) {
    throw Error(ErrorCode::InvalidArgument, "group and field dimensions differ");
  }
  VectorField out(u.grid, g.dim);
  const double inv = 1.0 / group.order();
  const auto perm = node_permutation(g, group);
  for (std::size_t i = 0; i < g.node_count; ++i) {
    Vec acc = Vec::Zero(g.dim);
    if (!perm.empty()) {
      for (std::size_t e = 0; e < group.elements.size(); ++e) {
        acc += group.elements[e].transpose() * u.values.col(perm[e][i]);
      }
    } else {
      const Vec x = g.point(i);
      for (const Mat& e : group.elements) acc += e.transpose() * interpolate(u, e * x);
    }
    out.values.col(static_cast<Eigen::Index>(i)) = acc * inv;
  }
  return out;
}

double equivariance_residual(const VectorField& u, const ReflectionGroup& group) {
  const BallGrid& g = *u.grid;
  const auto perm = node_permutation(g, group);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.node_count; ++i) {
    const Vec ux = u.values.col(static_cast<Eigen::Index>(i));
    for (std::size_t e = 0; e < group.elements.size(); ++e) {
      const Mat& m = group.elements[e];
      const Vec ugx = perm.empty() ? interpolate(u, m * g.point(i)) : Vec(u.values.col(perm[e][i]));
      worst = std::max(worst, (ugx - m * ux).norm());
    }
  }
  return worst;
}

VectorField seed_affine(std::shared_ptr<const BallGrid> grid, const ReflectionGroup& group,
                        const OrbitInfo& orbit) {
  const BallGrid& g = *grid;
  VectorField out(grid, g.dim);
  const double tol = 1e-12 * std::max(1.0, g.R);
  for (std::size_t i = 0; i < g.node_count; ++i) {
    const Vec x = g.point(i);
    bool placed = false;
    for (const Mat& e : group.elements) {
      const Vec y = e * x;
      const double m = orbit.region_D_normals.empty() ? std::numeric_limits<double>::infinity()
                                                      : mirror_min(y, orbit.region_D_normals);
      if (m < -tol) continue;
      const double s = std::min(std::max(m, 0.0), 1.0);
      out.values.col(static_cast<Eigen::Index>(i)) = e.transpose() * (s * orbit.base_point);
      placed = true;
      break;
    }
    if (!placed) throw Error(ErrorCode::InvalidArgument, "node has no representative in D-bar");
  }
  return out;
}

Vec project_to_ball(const Vec& v, double M) {
  const double r = v.norm();
  return r <= M ? v : Vec(v * (M / r));
}

VectorField project_to_ball(const VectorField& u, double M) {
  if (!(M > 0.0)) throw Error(ErrorCode::InvalidArgument, "M must be positive");
  VectorField out = u;
  for (Eigen::Index i = 0; i < out.values.cols(); ++i) {
    const double r = out.values.col(i).norm();
    if (r > M) out.values.col(i) *= M / r;
  }
  return out;
}

double positivity_min(const VectorField& u, const ReflectionGroup& group) {
  const BallGrid& g = *u.grid;
  const double tol = 1e-12 * std::max(1.0, g.R);
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.node_count; ++i) {
    if (mirror_min(g.point(i), group.fund_normals) < -tol) continue;
    m = std::min(m, mirror_min(u.values.col(static_cast<Eigen::Index>(i)), group.fund_normals));
  }
  return m;
}

double strong_positivity_margin(const VectorField& u, const ReflectionGroup& group,
                                double margin) {
  const BallGrid& g = *u.grid;
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.node_count; ++i) {
    const Vec x = g.point(i);
    if (mirror_min(x, group.fund_normals) <= margin || x.norm() > g.R - margin) continue;
    m = std::min(m, mirror_min(u.values.col(static_cast<Eigen::Index>(i)), group.fund_normals));
  }
  return m;
}

ScalarField monitor_field(const VectorField& u, const QSpec& q) {
  ScalarField out(u.grid);
  const auto n = static_cast<std::size_t>(u.values.rows());
  for (Eigen::Index i = 0; i < u.values.cols(); ++i) {
    out.values(i) = q.value({u.values.col(i).data(), n});
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

std::string field_csv(const VectorField& u) {
  const BallGrid& g = *u.grid;
  const auto comps = u.values.rows();
  std::string out;
  for (int k = 0; k < g.dim; ++k) out += "x" + std::to_string(k + 1) + ",";
  for (Eigen::Index k = 0; k < comps; ++k) {
    out += "u" + std::to_string(k + 1);
    out += (k + 1 < comps) ? "," : "\n";
  }
  char buf[40];
  for (std::size_t i = 0; i < g.node_count; ++i) {
    const auto ci = static_cast<Eigen::Index>(i);
    for (int k = 0; k < g.dim; ++k) {
      std::snprintf(buf, sizeof buf, "%.16e,", g.coords(k, ci));
      out += buf;
    }
    for (Eigen::Index k = 0; k < comps; ++k) {
      std::snprintf(buf, sizeof buf, (k + 1 < comps) ? "%.16e," : "%.16e\n", u.values(k, ci));
      out += buf;
    }
  }
  return out;
}

void write_field_csv(const VectorField& u, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path);
  f << field_csv(u);
  if (!f) throw Error(ErrorCode::IoError, "write failed for " + path);
}

namespace {

struct RawCsv {
  int dim = 0;
  std::vector<double> xs;  // dim per row
  std::vector<double> us;  // dim per row
  std::size_t rows = 0;
};

RawCsv parse_field_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::string line;
  if (!std::getline(f, line)) throw Error(ErrorCode::IoError, "empty field file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  RawCsv raw;
  int xcols = 0, ucols = 0;
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) {
      if (!col.empty() && col[0] == 'x') ++xcols;
      else if (!col.empty() && col[0] == 'u') ++ucols;
      else throw Error(ErrorCode::IoError, "unexpected column '" + col + "' in " + path);
    }
  }
  if (xcols < 1 || xcols != ucols) throw Error(ErrorCode::IoError, "malformed header in " + path);
  raw.dim = xcols;

  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* p = line.c_str();
    for (int k = 0; k < 2 * raw.dim; ++k) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p || !std::isfinite(v)) {
        throw Error(ErrorCode::IoError, path + ":" + std::to_string(lineno) + ": bad number");
      }
      (k < raw.dim ? raw.xs : raw.us).push_back(v);
      p = end;
      if (k + 1 < 2 * raw.dim) {
        if (*p != ',') throw Error(ErrorCode::IoError, path + ":" + std::to_string(lineno) + ": missing column");
        ++p;
      }
    }
    ++raw.rows;
  }
  return raw;
}

VectorField assign_rows(const RawCsv& raw, std::shared_ptr<const BallGrid> grid,
                        const std::string& path) {
  const BallGrid& g = *grid;
  if (raw.dim != g.dim) throw Error(ErrorCode::IoError, "field dimension mismatch in " + path);
  VectorField out(grid, g.dim);
  std::vector<std::uint8_t> seen(g.node_count, 0);
  for (std::size_t r = 0; r < raw.rows; ++r) {
    Vec x(g.dim);
    for (int k = 0; k < g.dim; ++k) x(k) = raw.xs[r * static_cast<std::size_t>(g.dim) + static_cast<std::size_t>(k)];
    const std::int32_t j = g.find_point(x);
    if (j < 0) throw Error(ErrorCode::IoError, "node off the grid in " + path);
    for (int k = 0; k < g.dim; ++k) {
      out.values(k, j) = raw.us[r * static_cast<std::size_t>(g.dim) + static_cast<std::size_t>(k)];
    }
    seen[static_cast<std::size_t>(j)] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end() || raw.rows != g.node_count) {
    throw Error(ErrorCode::IoError, "field file does not cover the grid exactly: " + path);
  }
  return out;
}

}  // namespace

VectorField read_field_csv(const std::string& path, std::shared_ptr<const BallGrid> grid) {
  return assign_rows(parse_field_csv(path), std::move(grid), path);
}

VectorField read_field_csv(const std::string& path, double R_hint) {
  const RawCsv raw = parse_field_csv(path);
  if (raw.rows == 0) throw Error(ErrorCode::IoError, "no nodes in " + path);
  double h = std::numeric_limits<double>::infinity();
  double rmax = 0.0;
  bool cartesian = true;
  for (std::size_t r = 0; r < raw.rows; ++r) {
    double r2 = 0.0;
    for (int k = 0; k < raw.dim; ++k) {
      const double x = raw.xs[r * static_cast<std::size_t>(raw.dim) + static_cast<std::size_t>(k)];
      r2 += x * x;
    }
    const double rr = std::sqrt(r2);
    if (rr > 1e-12) h = std::min(h, rr);
    rmax = std::max(rmax, rr);
  }
  if (!std::isfinite(h)) throw Error(ErrorCode::IoError, "cannot infer spacing from " + path);
  for (std::size_t r = 0; r < raw.rows && cartesian; ++r) {
    for (int k = 0; k < raw.dim; ++k) {
      const double s = raw.xs[r * static_cast<std::size_t>(raw.dim) + static_cast<std::size_t>(k)] / h;
      if (std::abs(s - std::round(s)) > 1e-6) {
        cartesian = false;
        break;
      }
    }
  }
  const double R = R_hint > 0.0 ? R_hint : rmax;
  const Lattice lat = cartesian ? Lattice::Cartesian : Lattice::Hexagonal;
  return assign_rows(raw, build_grid(raw.dim, R, h, lat, std::max(kDefaultMaxNodes, raw.rows)), path);
}

}  // namespace equivac
