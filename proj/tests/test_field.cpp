#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"
#include "equivac/error.hpp"
#include "equivac/field.hpp"

using namespace equivac;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

VectorField field_from(std::shared_ptr<const BallGrid> g, auto&& f) {
  VectorField u(g, g->dim);
  for (std::size_t i = 0; i < g->node_count; ++i) u.values.col(static_cast<Eigen::Index>(i)) = f(g->point(i));
  return u;
}

VectorField random_field(std::shared_ptr<const BallGrid> g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(-1, 1);
  VectorField u(g, g->dim);
  for (Eigen::Index i = 0; i < u.values.size(); ++i) u.values.data()[i] = ud(rng);
  return u;
}

bool interior(const BallGrid& g, std::size_t i) { return !g.is_boundary[i]; }

}  // namespace

TEST_CASE("cartesian grid node counts") {
  CHECK(build_grid(2, 1.0, 0.5)->node_count == 13);
  CHECK_THROWS_AS(build_grid(2, 1.0, 2.0), Error);
  CHECK_THROWS_AS(build_grid(2, 1.0, 0.1, Lattice::Cartesian, 100), Error);

  for (double R : {2.0, 4.0}) {
    const double h = R / 25.0;
    const auto g = build_grid(2, R, h);
    const double expected = std::numbers::pi * R * R / (h * h);
    CHECK(std::abs(g->node_count - expected) <= 0.1 * expected);
  }
}

TEST_CASE("hexagonal grid node counts") {
  // Oracle: direct enumeration of i b1 + j b2 with b1 = (h, 0),
  // b2 = (h/2, sqrt(3) h / 2).
  auto count = [](double R, double h) {
    int c = 0;
    for (int i = -100; i <= 100; ++i) {
      for (int j = -100; j <= 100; ++j) {
        const double x = h * (i + 0.5 * j), y = h * 0.5 * std::sqrt(3.0) * j;
        if (x * x + y * y <= R * R * (1 + 1e-12)) ++c;
      }
    }
    return c;
  };
  CHECK(build_grid(2, 1.0, 0.5, Lattice::Hexagonal)->node_count == 19);
  CHECK(static_cast<int>(build_grid(2, 3.0, 0.1, Lattice::Hexagonal)->node_count) == count(3.0, 0.1));
  CHECK(static_cast<int>(build_grid(2, 2.5, 0.07, Lattice::Hexagonal)->node_count) == count(2.5, 0.07));
  CHECK_THROWS_AS(build_grid(3, 1.0, 0.1, Lattice::Hexagonal), Error);
}

TEST_CASE("neighbour table") {
  for (auto g : {build_grid(2, 2.0, 0.1), build_grid(3, 1.0, 0.1), build_grid(2, 2.0, 0.1, Lattice::Hexagonal)}) {
    for (std::size_t i = 0; i < g->node_count; ++i) {
      int present = 0;
      for (int d = 0; d < g->stencil; ++d) {
        const std::int32_t j = g->neighbor(i, d);
        if (j < 0) continue;
        ++present;
        // Opposite direction leads back.
        CHECK(g->neighbor(static_cast<std::size_t>(j), d ^ 1) == static_cast<std::int32_t>(i));
        CHECK((g->point(static_cast<std::size_t>(j)) - g->point(i)).norm() == doctest::Approx(g->h));
      }
      if (interior(*g, i)) CHECK(present == g->stencil);
      CHECK(g->point(i).norm() <= g->R * (1 + 1e-12));
    }
  }
}

TEST_CASE("laplacian on polynomials") {
  for (auto g : {build_grid(2, 2.0, 0.1), build_grid(3, 1.0, 0.1), build_grid(2, 2.0, 0.1, Lattice::Hexagonal)}) {
    const int n = g->dim;
    const VectorField c = field_from(g, [&](const Vec&) { return Vec::Constant(n, 0.7); });
    CHECK(laplacian(c).values.cwiseAbs().maxCoeff() == 0.0);

    const VectorField q = field_from(g, [&](const Vec& x) { return Vec::Constant(n, x.squaredNorm()); });
    Mat A = Mat::Random(n, n);
    const VectorField lin = field_from(g, [&](const Vec& x) { return Vec(A * x); });
    const VectorField lq = laplacian(q);
    const VectorField ll = laplacian(lin);
    for (std::size_t i = 0; i < g->node_count; ++i) {
      if (!interior(*g, i)) continue;
      for (int k = 0; k < n; ++k) {
        CHECK(lq.values(k, static_cast<Eigen::Index>(i)) == doctest::Approx(2.0 * n).epsilon(1e-9));
        CHECK(std::abs(ll.values(k, static_cast<Eigen::Index>(i))) <= 1e-9);
      }
    }
  }
}

TEST_CASE("summation by parts") {
  for (auto g : {build_grid(2, 2.0, 0.1), build_grid(2, 2.0, 0.1, Lattice::Hexagonal), build_grid(3, 1.0, 0.125)}) {
    const VectorField u = random_field(g, 1);
    const VectorField v = random_field(g, 2);
    const double lhs = grid_inner(laplacian(u), v);
    const double rhs = -grid_dirichlet(u, v);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * (1 + std::abs(lhs)));
    // The gradient energy is half the Dirichlet form.
    CHECK(gradient_energy(u) == doctest::Approx(0.5 * grid_dirichlet(u, u)).epsilon(1e-12));
  }
}

TEST_CASE("energy quadrature") {
  const PotentialSpec spec = make_triangle_potential();
  for (Lattice lat : {Lattice::Cartesian, Lattice::Hexagonal}) {
    const auto g = build_grid(2, 4.0, 0.1, lat);
    const VectorField a = field_from(g, [](const Vec&) { return v2(1, 0); });
    CHECK(std::abs(energy(a, spec)) <= 1e-12);
    const VectorField zero(g, 2);
    // W(0) = 1, so J is the disk area up to the lattice count error.
    CHECK(energy(zero, spec) == doctest::Approx(std::numbers::pi * 16).epsilon(0.03));
  }

  // Smooth test field: refinement changes J by < 2%.
  auto J_at = [&](double h) {
    const auto g = build_grid(2, 3.0, h, Lattice::Hexagonal);
    const VectorField u = field_from(g, [](const Vec& x) { return v2(std::cos(x(0)), std::sin(x(1)) * 0.5); });
    return energy(u, spec);
  };
  CHECK(std::abs(J_at(0.05) - J_at(0.1)) <= 0.02 * J_at(0.05));
}

TEST_CASE("symmetrize") {
  const ReflectionGroup d3 = dihedral_group(3);
  const ReflectionGroup d4 = dihedral_group(4);
  CHECK(preferred_lattice(d3) == Lattice::Hexagonal);
  CHECK(preferred_lattice(d4) == Lattice::Cartesian);
  CHECK(preferred_lattice(dihedral_group(6)) == Lattice::Hexagonal);
  CHECK(preferred_lattice(dihedral_group(2)) == Lattice::Cartesian);

  // Constant vectors average to zero over the full orbit.
  for (Lattice lat : {Lattice::Cartesian, Lattice::Hexagonal}) {
    const auto g = build_grid(2, 2.0, 0.1, lat);
    const VectorField b = field_from(g, [](const Vec&) { return v2(0.3, -1.2); });
    CHECK(symmetrize(b, d3).values.cwiseAbs().maxCoeff() <= 1e-12);
  }

  // Idempotence on random data for lattice-preserving groups.
  const auto gh = build_grid(2, 2.0, 0.1, Lattice::Hexagonal);
  const auto gc = build_grid(2, 2.0, 0.1);
  for (auto [g, grp] : {std::pair{gh, &d3}, std::pair{gc, &d4}}) {
    const VectorField s1 = symmetrize(random_field(g, 3), *grp);
    const VectorField s2 = symmetrize(s1, *grp);
    CHECK((s1.values - s2.values).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(equivariance_residual(s1, *grp) <= 1e-12);
  }

  // D3 on the Cartesian lattice needs interpolation: errors are O(h^2).
  // u = (x^2 - y^2, -2xy) is the gradient of the invariant Re z^3 / 3.
  const double h = 0.1;
  const auto g = build_grid(2, 2.0, h);
  const VectorField smooth = field_from(g, [](const Vec& x) { return v2(x(0) * x(0) - x(1) * x(1), -2 * x(0) * x(1)); });
  CHECK(equivariance_residual(smooth, d3) <= 5 * h * h);
  const VectorField ss = symmetrize(smooth, d3);
  CHECK((ss.values - smooth.values).cwiseAbs().maxCoeff() <= 5 * h * h);
  CHECK(equivariance_residual(ss, d3) <= 5 * h * h);
}

TEST_CASE("affine seed") {
  const ReflectionGroup d3 = dihedral_group(3);
  const OrbitInfo orbit = orbit_and_stabilizer(d3, v2(1, 0));
  const auto g = build_grid(2, 6.0, 0.1, Lattice::Hexagonal);
  const VectorField u = seed_affine(g, d3, orbit);
  for (std::size_t i = 0; i < g->node_count; ++i) {
    const Vec x = g->point(i);
    const RegionGeometry geo = region_geometry(x, orbit);
    const Vec ui = u.values.col(static_cast<Eigen::Index>(i));
    if (geo.in_D && geo.dist_D >= 1.0) CHECK((ui - v2(1, 0)).norm() == 0.0);
    if (geo.in_D) CHECK((ui - std::min(geo.dist_D, 1.0) * v2(1, 0)).norm() <= 1e-12);
  }
  // Nodes on the bounding mirrors of D map to 0.
  const double a = std::numbers::pi / 3;
  const std::int32_t j = g->find_point(v2(2 * std::cos(a), 2 * std::sin(a)));
  REQUIRE(j >= 0);
  CHECK(u.values.col(j).norm() <= 1e-12);

  CHECK(equivariance_residual(u, d3) <= 1e-12);
  CHECK(positivity_min(u, d3) >= -1e-15);

  // J(u_aff) grows linearly in R.
  const PotentialSpec spec = make_triangle_potential();
  std::vector<double> ratio;
  for (double R : {4.0, 8.0, 16.0}) {
    const auto gr = build_grid(2, R, 0.1, Lattice::Hexagonal);
    ratio.push_back(energy(seed_affine(gr, d3, orbit), spec) / R);
  }
  MESSAGE("J(u_aff)/R: " << ratio[0] << " " << ratio[1] << " " << ratio[2]);
  CHECK(std::abs(ratio[2] - ratio[1]) <= 0.1 * ratio[2]);
  CHECK(std::abs(ratio[1] - ratio[0]) <= 0.2 * ratio[2]);
}

TEST_CASE("projection to the M-ball") {
  CHECK((project_to_ball(v2(3, 4), 1.0) - v2(0.6, 0.8)).norm() <= 1e-15);
  CHECK((project_to_ball(v2(0.3, 0.4), 1.0) - v2(0.3, 0.4)).norm() == 0.0);
  const ReflectionGroup d3 = dihedral_group(3);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ud(-3, 3);
  for (int t = 0; t < 1000; ++t) {
    const Vec v = v2(ud(rng), ud(rng)), w = v2(ud(rng), ud(rng));
    const Vec pv = project_to_ball(v, 1.5), pw = project_to_ball(w, 1.5);
    CHECK((pv - pw).norm() <= (v - w).norm() + 1e-14);
    CHECK((project_to_ball(pv, 1.5) - pv).norm() <= 1e-15);
    for (const Mat& e : d3.elements) CHECK((project_to_ball(Vec(e * v), 1.5) - e * pv).norm() <= 1e-14);
  }
  const auto g = build_grid(2, 1.0, 0.1);
  const VectorField p = project_to_ball(random_field(g, 4), 0.5);
  CHECK(p.sup_norm() <= 0.5 + 1e-15);
  CHECK_THROWS_AS(project_to_ball(p, 0.0), Error);
}

TEST_CASE("positivity diagnostics") {
  const ReflectionGroup d3 = dihedral_group(3);
  const OrbitInfo orbit = orbit_and_stabilizer(d3, v2(1, 0));
  const auto g = build_grid(2, 4.0, 0.1, Lattice::Hexagonal);
  VectorField u = seed_affine(g, d3, orbit);
  // a1 sits on the x-axis mirror, so the seed is positive but not strongly.
  CHECK(positivity_min(u, d3) >= 0.0);
  CHECK(strong_positivity_margin(u, d3, g->h) == doctest::Approx(0.0));
  // Plant a violation at one node of F.
  const std::int32_t j = g->find_point(v2(2.0, 0.0));
  REQUIRE(j >= 0);
  u.values(1, j) = -0.3;
  CHECK(positivity_min(u, d3) == doctest::Approx(-0.3));
}

TEST_CASE("field CSV round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "equivac_field_test";
  std::filesystem::create_directories(dir);
  for (Lattice lat : {Lattice::Cartesian, Lattice::Hexagonal}) {
    const auto g = build_grid(2, 2.0, 0.1, lat);
    const VectorField u = random_field(g, 5);
    const std::string path = (dir / "f.csv").string();
    write_field_csv(u, path);
    const VectorField back = read_field_csv(path, g);
    CHECK((back.values - u.values).cwiseAbs().maxCoeff() == 0.0);
    const VectorField inferred = read_field_csv(path, 0.0);
    CHECK(inferred.grid->lattice == lat);
    CHECK(inferred.grid->node_count == g->node_count);
    CHECK(field_csv(inferred) == field_csv(u));
  }
  {
    std::FILE* f = std::fopen((dir / "bad.csv").string().c_str(), "w");
    std::fputs("x1,x2,u1,u2\n0,0,1,zz\n", f);
    std::fclose(f);
    CHECK_THROWS_AS(read_field_csv((dir / "bad.csv").string(), 0.0), Error);
  }
  std::filesystem::remove_all(dir);
}
