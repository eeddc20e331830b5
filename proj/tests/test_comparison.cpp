#include <cmath>
#include <vector>

#include "doctest.h"
#include "equivac/comparison.hpp"
#include "equivac/error.hpp"
#include "equivac/potential.hpp"

using namespace equivac;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

struct Constants {
  double c, q, Q;
  Constants() {
    const PotentialSpec spec = make_triangle_potential();
    c = spec.c;
    q = spec.q_bar;
    Q = 1.0 + spec.M;  // default Q = |u - a1| with |a1| = 1
  }
};

}  // namespace

TEST_CASE("phi1 matches cosh in one dimension") {
  const double c = 2.0, q = 0.3, l = 3.0;
  const RadialProfile p = solve_phi1(1, c, q, l);
  CHECK(p.values.back() == q);
  CHECK(p.radii.size() == kProfileSamples);
  for (std::size_t k = 0; k < p.radii.size(); ++k) {
    const double r = p.radii[k];
    CHECK(rel(p.values[k], q * std::cosh(c * r) / std::cosh(c * l)) <= 1e-8);
  }
  for (double r : {0.123, 1.77, 2.999}) {
    CHECK(rel(p.value(r), q * std::cosh(c * r) / std::cosh(c * l)) <= 1e-8);
    CHECK(rel(p.derivative(r), q * c * std::sinh(c * r) / std::cosh(c * l)) <= 1e-7);
  }
}

TEST_CASE("phi1 matches modified Bessel I0 in two dimensions") {
  const double c = 0.75, q = 0.234, l = 9.0;
  const RadialProfile p = solve_phi1(2, c, q, l);
  const double norm = std::cyl_bessel_i(0.0, c * l);
  for (std::size_t k = 0; k < p.radii.size(); k += 97) {
    const double r = p.radii[k];
    CHECK(rel(p.values[k], q * std::cyl_bessel_i(0.0, c * r) / norm) <= 1e-8);
  }
  CHECK(rel(p.derivs.back(), q * c * std::cyl_bessel_i(1.0, c * l) / norm) <= 1e-8);
}

TEST_CASE("phi1 matches sinh(cr)/r in three dimensions") {
  const double c = 1.3, q = 0.5, l = 4.0;
  const RadialProfile p = solve_phi1(3, c, q, l);
  const double norm = std::sinh(c * l) / l;
  for (std::size_t k = 1; k < p.radii.size(); k += 101) {
    const double r = p.radii[k];
    CHECK(rel(p.values[k], q * std::sinh(c * r) / r / norm) <= 1e-8);
  }
}

TEST_CASE("phi1 shape") {
  const Constants k;
  const RadialProfile p = solve_phi1(2, k.c, k.q, 12.0 / k.c);
  for (std::size_t i = 1; i < p.radii.size(); ++i) {
    CHECK(p.values[i] > p.values[i - 1]);
    CHECK(p.derivs[i] > p.derivs[i - 1]);
  }
  CHECK(p.values.front() > 0.0);
  // phi1'' = c^2 phi1 - (n-1)/r phi1' <= c^2 q_bar
  for (std::size_t i = 1; i < p.radii.size(); ++i) {
    const double second = k.c * k.c * p.values[i] - p.derivs[i] / p.radii[i];
    CHECK(second <= k.c * k.c * k.q);
  }
}

TEST_CASE("phi1 slope at the boundary approaches c q_bar") {
  const Constants k;
  const RadialProfile p1 = solve_phi1(1, k.c, k.q, 12.0 / k.c);
  CHECK(rel(p1.derivs.back(), k.c * k.q) <= 0.01);

  // n = 2: the gap is I1/I0 - 1 ~ -1/(2cl), so 1% needs cl of about 50.
  std::vector<double> slopes;
  for (double cl : {3.0, 6.0, 12.0, 24.0, 60.0}) {
    const RadialProfile p = solve_phi1(2, k.c, k.q, cl / k.c);
    const double oracle = std::cyl_bessel_i(1.0, cl) / std::cyl_bessel_i(0.0, cl);
    CHECK(rel(p.derivs.back() / (k.c * k.q), oracle) <= 1e-8);
    if (!slopes.empty()) CHECK(p.derivs.back() > slopes.back());
    slopes.push_back(p.derivs.back());
  }
  CHECK(rel(slopes.back(), k.c * k.q) <= 0.01);
}

TEST_CASE("phi1 overflow guard") {
  CHECK_THROWS_AS(solve_phi1(2, 1.0, 0.2, 701.0), Error);
  try {
    solve_phi1(2, 1.0, 0.2, 701.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Overflow);
  }
  CHECK_NOTHROW(solve_phi1(2, 1.0, 0.2, 699.0));
}

TEST_CASE("exponential bound rate increases towards c") {
  const Constants k;
  double prev = 0.0;
  for (double cl : {3.0, 6.0, 12.0, 24.0, 48.0}) {
    const RadialProfile p = solve_phi1(2, k.c, k.q, cl / k.c);
    const double h = fitted_decay_rate(p);
    // log phi1 is convex, so the smallest secant slope is the one through r = 0.
    const double oracle = std::log(k.q / p.values.front()) / p.params.l;
    CHECK(rel(h, oracle) <= 1e-9);
    CHECK(h > prev);
    CHECK(h < k.c);
    prev = h;
    for (std::size_t i = 0; i < p.radii.size(); ++i) {
      CHECK(p.values[i] <= std::exp(h * (p.radii[i] - p.params.l)) * k.q * (1 + 1e-12));
    }
  }
  const RadialProfile p1 = solve_phi1(1, k.c, k.q, 40.0 / k.c);
  CHECK(rel(fitted_decay_rate(p1), k.c) <= 0.02);
}

TEST_CASE("phi2 closed form") {
  const RadialProfile p = phi2_profile(2, 0.5, 1.5, 1.0, std::exp(1.0));
  CHECK(p.values.front() == 0.5);
  CHECK(p.values.back() == 1.5);
  CHECK(p.derivative(1.0) == doctest::Approx(1.0).epsilon(1e-14));
  for (std::size_t i = 1; i < p.radii.size(); ++i) {
    CHECK(p.values[i] > p.values[i - 1]);
    CHECK(p.derivs[i] < p.derivs[i - 1]);
  }

  const double q = 0.2, Q = 2.0, l = 3.0, L = 5.0;
  const RadialProfile p3 = phi2_profile(3, q, Q, l, L);
  for (double r : {3.0, 3.7, 4.4, 5.0}) {
    const double v = q + (Q - q) * (1 / l - 1 / r) / (1 / l - 1 / L);
    CHECK(p3.value(r) == doctest::Approx(v).epsilon(1e-13));
    const double d = (Q - q) * l / (r * r * (1 - l / L));
    CHECK(p3.derivative(r) == doctest::Approx(d).epsilon(1e-13));
  }
  CHECK_THROWS_AS(phi2_profile(2, q, Q, 2.0, 2.0), Error);
}

TEST_CASE("phi2 slope for fixed annulus width") {
  const double q = 0.234, Q = 2.05, lambda = 16.0;
  for (int n : {2, 3}) {
    double prev = 1e300;
    for (double l : {1.0, 10.0, 20.0, 40.0, 100.0 * lambda}) {
      const double d = phi2_profile(n, q, Q, l, l + lambda).derivs.front();
      CHECK(d < prev);
      prev = d;
    }
    // The n = 3 gap at l = 100 lambda is exactly 1%: (1 + 1/100) - 1.
    CHECK(std::abs(prev - (Q - q) / lambda) <= 0.01 * (1 + 1e-9) * (Q - q) / lambda);
  }

  // |phi2''| <= C0 / l with C0(l) = l max |phi2''| = (n-1) phi2'(l) nonincreasing.
  double c0_first = 0.0;
  for (double l : {10.0, 20.0, 40.0}) {
    const RadialProfile p = phi2_profile(2, q, Q, l, l + lambda);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < p.radii.size(); ++i) {
      const double step = p.radii[1] - p.radii[0];
      worst = std::max(worst, std::abs(p.derivs[i + 1] - p.derivs[i - 1]) / (2 * step));
    }
    if (c0_first == 0.0) c0_first = l * worst * 1.001;
    CHECK(l * worst <= c0_first);
  }
}

TEST_CASE("theta interpolates and bridges the slopes") {
  const Constants k;
  const double l = 16.0, lambda = 16.0;
  const RadialProfile p1 = solve_phi1(2, k.c, k.q, l);
  const RadialProfile p2 = phi2_profile(2, k.q, k.Q, l, l + lambda);
  const double target = 0.5 * (p1.derivs.back() + p2.derivs.front());
  std::vector<double> errs;
  for (double delta : {0.1, 0.05, 0.025}) {
    const RadialProfile t = theta_profile(2, p1, p2, delta);
    CHECK(t.values.front() == doctest::Approx(p1.value(l - delta)).epsilon(1e-14));
    CHECK(t.values.back() == doctest::Approx(p2.value(l + delta)).epsilon(1e-14));
    errs.push_back(std::abs(t.derivative(l) - target));
    CHECK(errs.back() <= 0.1 * delta);
  }
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double order = std::log2(errs[i - 1] / errs[i]);
    CHECK(order >= 0.8);
  }

  RadialProfile flat1 = p1, flat2 = p2;
  flat2.params.Q_max = flat2.params.q_bar;
  const double edge = p1.value(l - 0.5);
  flat2.params.q_bar = flat2.params.Q_max = edge;
  const RadialProfile t = theta_profile(2, flat1, flat2, 0.5);
  CHECK(t.params.inner_value == edge);
  for (double v : t.values) CHECK(v == doctest::Approx(edge).epsilon(1e-14));

  CHECK_THROWS_AS(theta_profile(2, p1, p2, l), Error);
  CHECK_THROWS_AS(theta_profile(2, p1, p2, 0.0), Error);
}

TEST_CASE("sigma assembly satisfies the barrier clauses") {
  const Constants k;
  const SigmaPack pack = assemble_sigma(2, k.c, k.q, k.Q, 1.0);
  const SigmaConstants& s = pack.constants;
  CHECK(pack.all_pass());
  CHECK(s.l0 == doctest::Approx(16.1358).epsilon(1e-4));
  CHECK(s.lambda == doctest::Approx(s.l0).epsilon(1e-12));
  CHECK(s.q_bar_prime < k.q);
  CHECK(s.delta > 0.0);
  CHECK(s.delta_prime > 0.0);
  CHECK(s.delta_prime < s.delta);
  CHECK(s.mu > 0.0);
  REQUIRE(pack.checks.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const BarrierCheck& c = pack.checks[i];
    CHECK(c.l == doctest::Approx(s.l0 * (1 << i)));
    CHECK(c.clause_i);
    CHECK(c.gap > s.mu);
    CHECK(c.clause_ii);
    CHECK(c.theta_margin > 0.0);
    CHECK(c.clause_iii);
  }

  const RadialProfile& sig = pack.sigma;
  const double l = sig.params.l, d = sig.params.delta;
  for (double r : {l - d, l + d}) {
    CHECK(std::abs(sig.value(r - 1e-12) - sig.value(r + 1e-12)) <= 1e-10);
  }
  CHECK(sig.value(0.0) > 0.0);
  CHECK(sig.value(sig.params.L) == doctest::Approx(k.Q).epsilon(1e-14));

  const RadialProfile far = sigma_at(pack, 3 * s.l0);
  CHECK(far.params.l == 3 * s.l0);
  CHECK(far.params.lambda == doctest::Approx(s.lambda));
  for (std::size_t i = 0; i < far.radii.size() && far.radii[i] <= far.params.l + s.delta_prime; ++i) {
    CHECK(far.values[i] < k.q);
  }
}

TEST_CASE("sigma assembly rejects bad input") {
  CHECK_THROWS_AS(assemble_sigma(2, 0.7, 0.2, 0.1, 1.0), Error);
  CHECK_THROWS_AS(assemble_sigma(2, 0.7, 0.2, 2.0, 1.0, 1.5), Error);
}
