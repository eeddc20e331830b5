#include "equivac/potential.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>

#include "equivac/error.hpp"

namespace equivac {

namespace {

double ipow(double x, int e) {
  double r = 1.0;
  for (int k = 0; k < e; ++k) r *= x;
  return r;
}

double min_eigenvalue(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

Mat hessian_at(const Potential& W, const Vec& u) {
  const auto n = u.size();
  Mat h(n, n);
  // Row-major fill into a column-major matrix of a symmetric object.
  W.hessian({u.data(), static_cast<std::size_t>(n)}, {h.data(), static_cast<std::size_t>(n * n)});
  return h;
}

Vec gradient_at(const Potential& W, const Vec& u) {
  Vec g(u.size());
  W.gradient({u.data(), static_cast<std::size_t>(u.size())},
             {g.data(), static_cast<std::size_t>(g.size())});
  return g;
}

double value_at(const Potential& W, const Vec& u) {
  return W.value({u.data(), static_cast<std::size_t>(u.size())});
}

Vec random_in_ball(std::mt19937_64& rng, int dim, double radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Vec v(dim);
  for (int k = 0; k < dim; ++k) v(k) = normal(rng);
  v.normalize();
  return v * radius * std::pow(uni(rng), 1.0 / dim);
}

}  // namespace

// ---------------------------------------------------------------------------
// Polynomial

Polynomial::Polynomial(int dim, std::vector<Term> terms) : dim_(dim), terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    if (static_cast<int>(t.exps.size()) != dim_) {
      throw Error(ErrorCode::InvalidArgument, "polynomial term has wrong number of exponents");
    }
    for (int e : t.exps) {
      if (e < 0) throw Error(ErrorCode::InvalidArgument, "negative polynomial exponent");
    }
  }
}

double Polynomial::value(std::span<const double> u) const {
  double s = 0.0;
  for (const auto& t : terms_) {
    double m = t.coeff;
    for (int j = 0; j < dim_; ++j) m *= ipow(u[static_cast<std::size_t>(j)], t.exps[static_cast<std::size_t>(j)]);
    s += m;
  }
  return s;
}

void Polynomial::gradient(std::span<const double> u, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& t : terms_) {
    for (int i = 0; i < dim_; ++i) {
      const int ei = t.exps[static_cast<std::size_t>(i)];
      if (ei == 0) continue;
      double m = t.coeff * ei;
      for (int j = 0; j < dim_; ++j) {
        const int e = t.exps[static_cast<std::size_t>(j)] - (j == i ? 1 : 0);
        m *= ipow(u[static_cast<std::size_t>(j)], e);
      }
      out[static_cast<std::size_t>(i)] += m;
    }
  }
}

void Polynomial::hessian(std::span<const double> u, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const auto n = static_cast<std::size_t>(dim_);
  for (const auto& t : terms_) {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        std::vector<int> e = t.exps;
        double m = t.coeff;
        m *= e[a];
        if (e[a] == 0) continue;
        e[a] -= 1;
        m *= e[b];
        if (e[b] == 0) continue;
        e[b] -= 1;
        for (std::size_t j = 0; j < n; ++j) m *= ipow(u[j], e[j]);
        out[a * n + b] += m;
      }
    }
  }
}

Polynomial Polynomial::operator-() const {
  Polynomial p = *this;
  for (auto& t : p.terms_) t.coeff = -t.coeff;
  return p;
}

Polynomial triangle_polynomial() {
  // |z|^6 - 2 Re z^3 + 1
  return Polynomial(2, {{1.0, {6, 0}},
                        {3.0, {4, 2}},
                        {3.0, {2, 4}},
                        {1.0, {0, 6}},
                        {-2.0, {3, 0}},
                        {6.0, {1, 2}},
                        {1.0, {0, 0}}});
}

// ---------------------------------------------------------------------------
// Triangle potential, via W = |f|^2 with f(z) = z^3 - 1 holomorphic.

double TrianglePotential::value(std::span<const double> u) const {
  const std::complex<double> z(u[0], u[1]);
  return std::norm(z * z * z - 1.0);
}

void TrianglePotential::gradient(std::span<const double> u, std::span<double> out) const {
  const std::complex<double> z(u[0], u[1]);
  const std::complex<double> g = 2.0 * (z * z * z - 1.0) * std::conj(3.0 * z * z);
  out[0] = g.real();
  out[1] = g.imag();
}

void TrianglePotential::hessian(std::span<const double> u, std::span<double> out) const {
  const std::complex<double> z(u[0], u[1]);
  const std::complex<double> f = z * z * z - 1.0;
  const double fp2 = std::norm(3.0 * z * z);
  const std::complex<double> s = 6.0 * z * std::conj(f);
  out[0] = 2.0 * s.real() + 2.0 * fp2;
  out[1] = -2.0 * s.imag();
  out[2] = out[1];
  out[3] = -2.0 * s.real() + 2.0 * fp2;
}

// ---------------------------------------------------------------------------

PotentialEval eval_potential(const PotentialSpec& spec, const Vec& u, bool want_hessian) {
  PotentialEval out;
  out.W = value_at(*spec.W, u);
  out.grad = gradient_at(*spec.W, u);
  if (want_hessian) out.hess = hessian_at(*spec.W, u);
  return out;
}

std::vector<Vec> sphere_directions(int dim, std::size_t count) {
  std::vector<Vec> dirs;
  dirs.reserve(count);
  if (dim == 1) {
    dirs.push_back(Vec::Constant(1, 1.0));
    dirs.push_back(Vec::Constant(1, -1.0));
    return dirs;
  }
  if (dim == 2) {
    for (std::size_t k = 0; k < count; ++k) {
      const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count);
      Vec v(2);
      v << std::cos(t), std::sin(t);
      dirs.push_back(v);
    }
    return dirs;
  }
  if (dim == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t k = 0; k < count; ++k) {
      const double y = 1.0 - 2.0 * (static_cast<double>(k) + 0.5) / static_cast<double>(count);
      const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
      const double t = golden * static_cast<double>(k);
      Vec v(3);
      v << r * std::cos(t), y, r * std::sin(t);
      dirs.push_back(v);
    }
    return dirs;
  }
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < count; ++k) {
    Vec v(dim);
    for (int j = 0; j < dim; ++j) v(j) = normal(rng);
    dirs.push_back(v.normalized());
  }
  return dirs;
}

ConvexityScan scan_convexity(const Potential& W, const Vec& center, double dr, double r_max) {
  const int n = W.dim();
  const auto dirs = sphere_directions(n, n == 2 ? 720 : 2000);
  auto shell_min = [&](double r) {
    double m = std::numeric_limits<double>::infinity();
    if (r == 0.0) return min_eigenvalue(hessian_at(W, center));
    for (const Vec& d : dirs) m = std::min(m, min_eigenvalue(hessian_at(W, center + r * d)));
    return m;
  };

  ConvexityScan scan;
  if (shell_min(0.0) <= 0.0) {
    throw Error(ErrorCode::HypothesisScanFailed, "Hessian is not positive definite at the minimum");
  }
  double last_good = 0.0;
  for (int k = 1; k * dr <= r_max; ++k) {
    if (shell_min(k * dr) <= 0.0) break;
    last_good = k * dr;
  }
  if (last_good <= 0.0) {
    throw Error(ErrorCode::HypothesisScanFailed, "no neighborhood with a positive definite Hessian");
  }
  scan.q_crit = last_good;
  scan.q_bar = 0.9 * last_good;

  double m = std::numeric_limits<double>::infinity();
  constexpr int kShells = 60;
  for (int j = 0; j <= kShells; ++j) m = std::min(m, shell_min(scan.q_bar * j / kShells));
  if (m <= 0.0) {
    throw Error(ErrorCode::HypothesisScanFailed, "Hessian scan could not certify 2c^2 > 0");
  }
  scan.min_eig_at_q_bar = m;
  scan.c = std::sqrt(0.5 * m);
  return scan;
}

double scan_invariant_radius(const Potential& W, double r_start, double dr, double r_limit) {
  const int n = W.dim();
  const auto dirs = sphere_directions(n, n == 2 ? 720 : 2000);
  auto sphere_min = [&](double r) {
    double m = std::numeric_limits<double>::infinity();
    for (const Vec& d : dirs) {
      const Vec u = r * d;
      m = std::min(m, gradient_at(W, u).dot(u));
    }
    return m;
  };
  // Radii are k * dr to keep the scan grid independent of r_start.
  const long k0 = std::max<long>(1, static_cast<long>(std::ceil(r_start / dr - 1e-9)));
  for (long k = k0; k * dr <= r_limit; ++k) {
    const double M = k * dr;
    const double outer = std::max(3.0 * M, M + 2.0);
    bool ok = true;
    for (long j = k; j * dr <= outer + 1e-12; ++j) {
      if (sphere_min(j * dr) <= 0.0) {
        ok = false;
        break;
      }
    }
    if (ok) return M;
  }
  throw Error(ErrorCode::HypothesisScanFailed, "no invariant radius M found");
}

PotentialSpec make_triangle_potential() {
  PotentialSpec spec;
  spec.W = std::make_shared<TrianglePotential>();
  spec.dim = 2;
  for (int k = 0; k < 3; ++k) {
    const double t = 2.0 * std::numbers::pi * k / 3.0;
    Vec a(2);
    a << std::cos(t), std::sin(t);
    spec.minima.push_back(a);
  }
  const ConvexityScan scan = scan_convexity(*spec.W, spec.minima[0]);
  spec.c = scan.c;
  spec.q_bar = scan.q_bar;
  spec.M = scan_invariant_radius(*spec.W, 1.0);
  return spec;
}

PotentialSpec make_polynomial_potential(const Polynomial& W, const OrbitInfo& orbit,
                                        const PotentialOverrides& overrides) {
  PotentialSpec spec;
  spec.W = std::make_shared<PolynomialPotential>(W);
  spec.dim = W.dim();
  if (orbit.base_point.size() != spec.dim) {
    throw Error(ErrorCode::InvalidArgument, "potential and group dimensions differ");
  }
  spec.minima = orbit.orbit;
  if (overrides.c && overrides.q_bar) {
    spec.c = *overrides.c;
    spec.q_bar = *overrides.q_bar;
  } else {
    const ConvexityScan scan = scan_convexity(*spec.W, orbit.base_point);
    spec.c = overrides.c.value_or(scan.c);
    spec.q_bar = overrides.q_bar.value_or(scan.q_bar);
  }
  if (overrides.M) {
    spec.M = *overrides.M;
  } else {
    double r0 = 0.0;
    for (const Vec& a : spec.minima) r0 = std::max(r0, a.norm());
    spec.M = scan_invariant_radius(*spec.W, r0);
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Q

double QSpec::value(std::span<const double> u) const {
  const auto n = static_cast<std::size_t>(base.size());
  double r2 = 0.0;
  double v[8];
  std::vector<double> heap;
  double* d = v;
  if (n > 8) {
    heap.resize(n);
    d = heap.data();
  }
  for (std::size_t k = 0; k < n; ++k) {
    d[k] = u[k] - base(static_cast<Eigen::Index>(k));
    r2 += d[k] * d[k];
  }
  double q = std::sqrt(r2);
  if (H) q += H->value({d, n});
  return q;
}

void QSpec::gradient(std::span<const double> u, std::span<double> out) const {
  const auto n = static_cast<std::size_t>(base.size());
  std::vector<double> d(n);
  double r2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    d[k] = u[k] - base(static_cast<Eigen::Index>(k));
    r2 += d[k] * d[k];
  }
  const double r = std::sqrt(r2);
  for (std::size_t k = 0; k < n; ++k) out[k] = r > 0.0 ? d[k] / r : 0.0;
  if (H && r > 0.0) {
    std::vector<double> gh(n);
    H->gradient(d, gh);
    for (std::size_t k = 0; k < n; ++k) out[k] += gh[k];
  }
}

QSpec make_q(const Vec& a1, double M, std::optional<Polynomial> H, std::uint64_t seed) {
  if (M <= 0.0) throw Error(ErrorCode::InvalidArgument, "M must be positive");
  const int n = static_cast<int>(a1.size());
  QSpec q;
  q.base = a1;
  if (H) {
    if (H->dim() != n) throw Error(ErrorCode::InvalidArgument, "H has wrong dimension");
    const std::vector<double> zero(static_cast<std::size_t>(n), 0.0);
    std::vector<double> g(static_cast<std::size_t>(n));
    H->gradient(zero, g);
    double gmax = 0.0;
    for (double x : g) gmax = std::max(gmax, std::abs(x));
    if (std::abs(H->value(zero)) > 1e-12 || gmax > 1e-12) {
      throw Error(ErrorCode::InvalidArgument, "H must satisfy H(0) = 0 and H_u(0) = 0");
    }
    q.H = std::move(H);
  }

  // Midpoint convexity on random pairs in a ball covering |u| <= M.
  std::mt19937_64 rng(seed);
  const double radius = M + a1.norm();
  for (int trial = 0; trial < 2000; ++trial) {
    const Vec u = random_in_ball(rng, n, radius);
    const Vec v = random_in_ball(rng, n, radius);
    const Vec mid = 0.5 * (u + v);
    const double lhs = q.value({mid.data(), static_cast<std::size_t>(n)});
    const double rhs = 0.5 * (q.value({u.data(), static_cast<std::size_t>(n)}) +
                              q.value({v.data(), static_cast<std::size_t>(n)}));
    if (lhs > rhs + 1e-12) throw Error(ErrorCode::NonConvexQ, "midpoint convexity sample failed");
  }

  if (!q.H) {
    q.Q_max = a1.norm() + M;
  } else {
    // Q is convex, so its maximum over the ball sits on the sphere |u| = M.
    double m = 0.0;
    for (const Vec& d : sphere_directions(n, n == 2 ? 3600 : 20000)) {
      const Vec u = M * d;
      m = std::max(m, q.value({u.data(), static_cast<std::size_t>(n)}));
    }
    q.Q_max = m;
  }
  return q;
}

QEval eval_q(const QSpec& q, const Vec& u) {
  QEval out;
  const auto n = static_cast<std::size_t>(u.size());
  out.Q = q.value({u.data(), n});
  out.grad = Vec(u.size());
  q.gradient({u.data(), n}, {out.grad.data(), n});
  return out;
}

// ---------------------------------------------------------------------------

HypothesisReport check_hypotheses(const PotentialSpec& spec, const QSpec& q,
                                  const ReflectionGroup& group, const OrbitInfo& orbit,
                                  std::size_t samples, std::uint64_t seed) {
  if (samples < 1000) throw Error(ErrorCode::InvalidArgument, "check_hypotheses needs >= 1000 samples");
  const int n = spec.dim;
  const auto un = static_cast<std::size_t>(n);
  const Potential& W = *spec.W;
  std::mt19937_64 rng(seed);
  HypothesisReport rep;

  // H1: zeros, positivity off the minima, Hessian bound near each minimum.
  rep.h1_max_W_at_minima = 0.0;
  for (const Vec& a : spec.minima) {
    rep.h1_max_W_at_minima = std::max(rep.h1_max_W_at_minima, std::abs(value_at(W, a)));
  }
  rep.h1_min_eig = std::numeric_limits<double>::infinity();
  for (const Vec& a : spec.minima) {
    rep.h1_min_eig = std::min(rep.h1_min_eig, min_eigenvalue(hessian_at(W, a)));
    for (std::size_t s = 0; s < samples; ++s) {
      const Vec u = a + random_in_ball(rng, n, spec.q_bar);
      rep.h1_min_eig = std::min(rep.h1_min_eig, min_eigenvalue(hessian_at(W, u)));
    }
  }
  rep.h1_certified_c = rep.h1_min_eig > 0.0 ? std::sqrt(0.5 * rep.h1_min_eig) : 0.0;
  rep.h1_min_W_off_minima = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    const Vec u = random_in_ball(rng, n, 2.0 * spec.M);
    double dmin = std::numeric_limits<double>::infinity();
    for (const Vec& a : spec.minima) dmin = std::min(dmin, (u - a).norm());
    if (dmin < 1e-3) continue;
    rep.h1_min_W_off_minima = std::min(rep.h1_min_W_off_minima, value_at(W, u));
  }
  rep.h1_pass = rep.h1_max_W_at_minima <= 1e-12 && rep.h1_min_eig > 0.0 &&
                rep.h1_min_W_off_minima > 0.0;

  // H2: G-invariance and radial monotonicity on |u| = M.
  rep.w_invariance_max = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Vec u = random_in_ball(rng, n, 2.0 * spec.M);
    const double w = value_at(W, u);
    for (const Mat& g : group.elements) {
      const double wg = value_at(W, g * u);
      rep.w_invariance_max = std::max(rep.w_invariance_max, std::abs(wg - w) / (1.0 + std::abs(w)));
    }
  }
  rep.h2_min_radial_derivative = std::numeric_limits<double>::infinity();
  for (const Vec& d : sphere_directions(n, std::max<std::size_t>(samples, 720))) {
    const Vec u = spec.M * d;
    rep.h2_min_radial_derivative = std::min(rep.h2_min_radial_derivative, gradient_at(W, u).dot(u));
  }
  rep.h2_pass = rep.w_invariance_max <= 1e-10 && rep.h2_min_radial_derivative >= 0.0;

  // H3: exactly one minimum in the closed fundamental region.
  rep.h3_minima_in_F = 0;
  for (const Vec& a : spec.minima) {
    if (group.in_fundamental_closure(a)) ++rep.h3_minima_in_F;
  }
  rep.h3_pass = rep.h3_minima_in_F == 1;

  // H4: Q-monotonicity on D \ {a1} within |u| <= M, plus G_{a1}-invariance.
  rep.h4_min = std::numeric_limits<double>::infinity();
  Vec qg(n);
  std::size_t taken = 0;
  for (std::size_t s = 0; taken < samples && s < 50 * samples; ++s) {
    const Vec u = random_in_ball(rng, n, spec.M);
    if (!region_geometry(u, orbit).in_D) continue;
    if ((u - q.base).norm() < 1e-9) continue;
    ++taken;
    q.gradient({u.data(), un}, {qg.data(), un});
    const double m = qg.dot(gradient_at(W, u));
    rep.h4_min = std::min(rep.h4_min, m);
    if (m < -1e-10) {
      ++rep.h4_violation_count;
      if (rep.h4_violations.size() < 32) rep.h4_violations.push_back(u);
    }
  }
  rep.h4_samples = taken;
  rep.q_invariance_max = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Vec u = random_in_ball(rng, n, spec.M);
    const double qu = q.value({u.data(), un});
    for (int gi : orbit.stabilizer) {
      const Vec gu = group.elements[static_cast<std::size_t>(gi)] * u;
      rep.q_invariance_max =
          std::max(rep.q_invariance_max, std::abs(q.value({gu.data(), un}) - qu) / (1.0 + qu));
    }
  }
  rep.h4_pass = rep.h4_violation_count == 0 && rep.q_invariance_max <= 1e-10;
  return rep;
}

}  // namespace equivac
