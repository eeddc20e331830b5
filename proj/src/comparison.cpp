#include "equivac/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "equivac/error.hpp"

namespace equivac {

namespace {

// Increasing radial harmonic function in dimension n.
double harmonic(int n, double r) {
  if (n == 1) return r;
  if (n == 2) return std::log(r);
  return -std::pow(r, 2.0 - n);
}

double harmonic_deriv(int n, double r) {
  if (n == 1) return 1.0;
  if (n == 2) return 1.0 / r;
  return (n - 2) * std::pow(r, 1.0 - n);
}

// Harmonic interpolant on [r1, r2] with values a, b.
double harmonic_value(int n, double r1, double r2, double a, double b, double r) {
  return a + (b - a) * (harmonic(n, r) - harmonic(n, r1)) / (harmonic(n, r2) - harmonic(n, r1));
}

double harmonic_slope(int n, double r1, double r2, double a, double b, double r) {
  return (b - a) * harmonic_deriv(n, r) / (harmonic(n, r2) - harmonic(n, r1));
}

std::vector<double> uniform(double a, double b, int count) {
  std::vector<double> r(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) r[static_cast<std::size_t>(k)] = a + (b - a) * k / (count - 1);
  r.back() = b;
  return r;
}

// y'' = c^2 y - (n-1)/r y' as a first-order system.
struct State {
  double y, dy;
};

State rhs(int n, double c2, double r, const State& s) {
  return {s.dy, c2 * s.y - (n - 1) * s.dy / r};
}

State rk4(int n, double c2, double r, const State& s, double dr) {
  const State k1 = rhs(n, c2, r, s);
  const State k2 = rhs(n, c2, r + 0.5 * dr, {s.y + 0.5 * dr * k1.y, s.dy + 0.5 * dr * k1.dy});
  const State k3 = rhs(n, c2, r + 0.5 * dr, {s.y + 0.5 * dr * k2.y, s.dy + 0.5 * dr * k2.dy});
  const State k4 = rhs(n, c2, r + dr, {s.y + dr * k3.y, s.dy + dr * k3.dy});
  return {s.y + dr / 6.0 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y),
          s.dy + dr / 6.0 * (k1.dy + 2 * k2.dy + 2 * k3.dy + k4.dy)};
}

double phi_glued(const RadialProfile& phi1, const RadialProfile& phi2, double r) {
  return r <= phi1.params.l ? phi1.value(r) : phi2.value(r);
}

}  // namespace

double RadialProfile::value(double r) const {
  const RadialParams& p = params;
  switch (kind) {
    case ProfileKind::Phi2:
      return harmonic_value(p.n, p.l, p.L, p.q_bar, p.Q_max, r);
    case ProfileKind::Theta:
      return harmonic_value(p.n, p.l - p.delta, p.l + p.delta, p.inner_value, p.outer_value, r);
    case ProfileKind::Sigma:
      if (r <= p.l - p.delta) return parts[0].value(r);
      if (r <= p.l + p.delta) return parts[1].value(r);
      return parts[2].value(r);
    case ProfileKind::Phi1:
      break;
  }
  // Cubic Hermite interpolation between samples.
  const double x = std::clamp(r, radii.front(), radii.back());
  const double step = radii[1] - radii[0];
  const auto k = std::min<std::size_t>(static_cast<std::size_t>((x - radii[0]) / step), radii.size() - 2);
  const double t = (x - radii[k]) / step;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * values[k] + (t3 - 2 * t2 + t) * step * derivs[k] +
         (-2 * t3 + 3 * t2) * values[k + 1] + (t3 - t2) * step * derivs[k + 1];
}

double RadialProfile::derivative(double r) const {
  const RadialParams& p = params;
  switch (kind) {
    case ProfileKind::Phi2:
      return harmonic_slope(p.n, p.l, p.L, p.q_bar, p.Q_max, r);
    case ProfileKind::Theta:
      return harmonic_slope(p.n, p.l - p.delta, p.l + p.delta, p.inner_value, p.outer_value, r);
    case ProfileKind::Sigma:
      if (r <= p.l - p.delta) return parts[0].derivative(r);
      if (r <= p.l + p.delta) return parts[1].derivative(r);
      return parts[2].derivative(r);
    case ProfileKind::Phi1:
      break;
  }
  const double x = std::clamp(r, radii.front(), radii.back());
  const double step = radii[1] - radii[0];
  const auto k = std::min<std::size_t>(static_cast<std::size_t>((x - radii[0]) / step), radii.size() - 2);
  const double t = (x - radii[k]) / step;
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * values[k] + (-6 * t2 + 6 * t) * values[k + 1]) / step +
         (3 * t2 - 4 * t + 1) * derivs[k] + (3 * t2 - 2 * t) * derivs[k + 1];
}

RadialProfile solve_phi1(int n, double c, double q_bar, double l) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
  if (!(l > 0.0) || !(c > 0.0) || !(q_bar > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "solve_phi1 needs positive l, c and q_bar");
  }
  if (c * l > 700.0) {
    throw Error(ErrorCode::Overflow, "c l = " + std::to_string(c * l) + " exceeds 700");
  }
  RadialProfile p;
  p.kind = ProfileKind::Phi1;
  p.params.n = n;
  p.params.c = c;
  p.params.q_bar = q_bar;
  p.params.l = l;
  p.radii = uniform(0.0, l, kProfileSamples);
  p.values.resize(p.radii.size());
  p.derivs.resize(p.radii.size());

  const double c2 = c * c;
  const double step = p.radii[1];
  const double r0 = std::min(1e-3 / c, 0.5 * step);
  // Series of the regular solution normalized to y(0) = 1.
  auto series = [&](double r) {
    const double a = c2 / (2.0 * n), b = c2 * c2 / (8.0 * n * (n + 2));
    return State{1.0 + a * r * r + b * r * r * r * r, 2.0 * a * r + 4.0 * b * r * r * r};
  };
  p.values[0] = 1.0;
  p.derivs[0] = 0.0;
  State s = series(r0);
  double r = r0;
  constexpr int kSub = 16;
  for (std::size_t k = 1; k < p.radii.size(); ++k) {
    const double target = p.radii[k];
    const double dr = (target - r) / kSub;
    for (int j = 0; j < kSub; ++j) {
      s = rk4(n, c2, r, s, dr);
      r += dr;
    }
    r = target;
    p.values[k] = s.y;
    p.derivs[k] = s.dy;
  }
  const double scale = q_bar / p.values.back();
  for (std::size_t k = 0; k < p.radii.size(); ++k) {
    p.values[k] *= scale;
    p.derivs[k] *= scale;
  }
  p.values.back() = q_bar;
  return p;
}

RadialProfile phi2_profile(int n, double q_bar, double Q_max, double l, double L) {
  if (!(l > 0.0) || !(L > l)) throw Error(ErrorCode::DegenerateAnnulus, "phi2 needs 0 < l < L");
  RadialProfile p;
  p.kind = ProfileKind::Phi2;
  p.params.n = n;
  p.params.q_bar = q_bar;
  p.params.Q_max = Q_max;
  p.params.l = l;
  p.params.L = L;
  p.params.lambda = L - l;
  p.radii = uniform(l, L, kProfileSamples);
  for (double r : p.radii) {
    p.values.push_back(p.value(r));
    p.derivs.push_back(p.derivative(r));
  }
  p.values.front() = q_bar;
  p.values.back() = Q_max;
  return p;
}

RadialProfile theta_profile(int n, const RadialProfile& phi1, const RadialProfile& phi2,
                            double delta) {
  const double l = phi1.params.l;
  if (!(delta > 0.0) || !(delta < l) || l + delta > phi2.params.L) {
    throw Error(ErrorCode::DegenerateAnnulus, "theta needs 0 < delta < l and l + delta <= L");
  }
  RadialProfile p;
  p.kind = ProfileKind::Theta;
  p.params = phi2.params;
  p.params.n = n;
  p.params.c = phi1.params.c;
  p.params.l = l;
  p.params.delta = delta;
  p.params.inner_value = phi1.value(l - delta);
  p.params.outer_value = phi2.value(l + delta);
  p.radii = uniform(l - delta, l + delta, kProfileSamples);
  for (double r : p.radii) {
    p.values.push_back(p.value(r));
    p.derivs.push_back(p.derivative(r));
  }
  return p;
}

RadialProfile sigma_profile(const RadialProfile& phi1, const RadialProfile& phi2,
                            const RadialProfile& theta) {
  RadialProfile p;
  p.kind = ProfileKind::Sigma;
  p.params = theta.params;
  p.params.L = phi2.params.L;
  p.params.lambda = phi2.params.L - phi2.params.l;
  p.parts = {phi1, theta, phi2};
  p.radii = uniform(0.0, p.params.L, kProfileSamples);
  for (double r : p.radii) {
    p.values.push_back(p.value(r));
    p.derivs.push_back(p.derivative(r));
  }
  return p;
}

double fitted_decay_rate(const RadialProfile& phi1) {
  const double l = phi1.params.l;
  const double top = phi1.values.back();
  double h = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < phi1.radii.size(); ++k) {
    h = std::min(h, std::log(top / phi1.values[k]) / (l - phi1.radii[k]));
  }
  return h;
}

bool SigmaPack::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const BarrierCheck& c) {
    return c.clause_i && c.clause_ii && c.clause_iii;
  }) && constants.q_bar_prime < sigma.params.q_bar;
}

namespace {

struct Trial {
  RadialProfile phi1, phi2, theta;
  double margin = 0.0;
  double crossing = std::numeric_limits<double>::quiet_NaN();
};

Trial try_delta(int n, double c, double q_bar, double Q_max, double l, double lambda,
                double delta) {
  Trial t;
  t.phi1 = solve_phi1(n, c, q_bar, l);
  t.phi2 = phi2_profile(n, q_bar, Q_max, l, l + lambda);
  t.theta = theta_profile(n, t.phi1, t.phi2, delta);
  t.margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k + 1 < t.theta.radii.size(); ++k) {
    const double r = t.theta.radii[k];
    t.margin = std::min(t.margin, phi_glued(t.phi1, t.phi2, r) - t.theta.values[k]);
  }
  if (t.margin > 0.0 && t.theta.value(l) < q_bar && t.theta.value(l + delta) > q_bar) {
    double a = l, b = l + delta;
    for (int it = 0; it < 200 && b - a > 1e-14 * l; ++it) {
      const double m = 0.5 * (a + b);
      (t.theta.value(m) < q_bar ? a : b) = m;
    }
    t.crossing = a - l;
  }
  return t;
}

}  // namespace

SigmaPack assemble_sigma(int n, double c, double q_bar, double Q_max, double l0_hint,
                         double rho) {
  if (!(c > 0.0) || !(q_bar > 0.0) || !(Q_max > q_bar) || !(l0_hint > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "assemble_sigma needs c, q_bar, l0_hint > 0 and Q_max > q_bar");
  }
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorCode::InvalidArgument, "rho must lie in (0, 1)");

  SigmaPack pack;
  SigmaConstants& k = pack.constants;
  k.rho = rho;

  // l0: first l on a geometric grid with phi1'(l) > phi2'(l), L = l / rho.
  double l = l0_hint;
  double gap = 0.0;
  for (;;) {
    const RadialProfile p1 = solve_phi1(n, c, q_bar, l);
    const RadialProfile p2 = phi2_profile(n, q_bar, Q_max, l, l / rho);
    gap = p1.derivs.back() - p2.derivs.front();
    if (gap > 0.0) break;
    l *= 1.05;
  }
  k.l0 = l;
  k.lambda = l * (1.0 / rho - 1.0);
  k.L0 = l + k.lambda;
  k.mu = 0.5 * gap;

  const double radii[3] = {k.l0, 2.0 * k.l0, 4.0 * k.l0};
  double delta = 0.5 * k.l0;
  std::vector<Trial> trials;
  bool found = false;
  for (int it = 0; it < 40; ++it) {
    trials.clear();
    bool ok = true;
    for (double lr : radii) {
      trials.push_back(try_delta(n, c, q_bar, Q_max, lr, k.lambda, delta));
      if (!(trials.back().margin > 0.0) || std::isnan(trials.back().crossing)) {
        ok = false;
        break;
      }
    }
    k.delta_iterations = it + 1;
    if (ok) {
      found = true;
      break;
    }
    delta *= 0.5;
  }
  if (!found) {
    throw Error(ErrorCode::NoAdmissibleDelta, "no admissible delta after 40 halvings");
  }
  k.delta = delta;

  double cross = std::numeric_limits<double>::infinity();
  for (const Trial& t : trials) cross = std::min(cross, t.crossing);
  k.delta_prime = 0.5 * cross;

  k.q_bar_prime = 0.0;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const Trial& t = trials[i];
    const RadialProfile s = sigma_profile(t.phi1, t.phi2, t.theta);
    const double top = radii[i] + k.delta_prime;
    double m = s.value(top);
    for (std::size_t j = 0; j < s.radii.size() && s.radii[j] <= top; ++j) m = std::max(m, s.values[j]);

    BarrierCheck chk;
    chk.l = radii[i];
    chk.gap = t.phi1.derivs.back() - t.phi2.derivs.front();
    chk.theta_margin = t.margin;
    chk.crossing = t.crossing;
    chk.sigma_max = m;
    chk.clause_i = chk.gap > k.mu;
    chk.clause_ii = t.margin > 0.0;
    pack.checks.push_back(chk);
    k.q_bar_prime = std::max(k.q_bar_prime, m);
    if (i == 0) pack.sigma = s;
  }
  for (BarrierCheck& chk : pack.checks) {
    chk.clause_iii = chk.sigma_max <= k.q_bar_prime && k.q_bar_prime < q_bar;
  }
  pack.sigma.params.c = c;
  pack.sigma.params.Q_max = Q_max;
  return pack;
}

RadialProfile sigma_at(const SigmaPack& pack, double l) {
  const RadialParams& p = pack.sigma.params;
  const RadialProfile phi1 = solve_phi1(p.n, p.c, p.q_bar, l);
  const RadialProfile phi2 = phi2_profile(p.n, p.q_bar, p.Q_max, l, l + pack.constants.lambda);
  const RadialProfile theta = theta_profile(p.n, phi1, phi2, pack.constants.delta);
  RadialProfile s = sigma_profile(phi1, phi2, theta);
  s.params.c = p.c;
  s.params.Q_max = p.Q_max;
  return s;
}

}  // namespace equivac
