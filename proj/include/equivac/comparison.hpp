#pragma once

#include <vector>

namespace equivac {

enum class ProfileKind { Phi1, Phi2, Theta, Sigma };

struct RadialParams {
  int n = 2;
  double c = 0.0;
  double q_bar = 0.0;
  double Q_max = 0.0;
  double l = 0.0;
  double L = 0.0;
  double lambda = 0.0;
  double delta = 0.0;
  // Theta only: boundary data at l - delta and l + delta.
  double inner_value = 0.0;
  double outer_value = 0.0;
};

/// A radial function r -> phi(|x|) sampled on a uniform grid, with exact
/// evaluation between samples where a closed form exists.
struct RadialProfile {
  ProfileKind kind = ProfileKind::Phi1;
  RadialParams params;
  std::vector<double> radii;
  std::vector<double> values;
  std::vector<double> derivs;
  // Sigma only: phi1, theta, phi2.
  std::vector<RadialProfile> parts;

  double r_min() const { return radii.front(); }
  double r_max() const { return radii.back(); }
  double value(double r) const;
  double derivative(double r) const;
};

constexpr int kProfileSamples = 2048;

/// Radial solution of Delta phi = c^2 phi in B_l with phi = q_bar on the
/// boundary, by scaling the regular solution. Throws Overflow for c l > 700.
RadialProfile solve_phi1(int n, double c, double q_bar, double l);

/// Radial harmonic function on [l, L] with phi(l) = q_bar, phi(L) = Q_max.
RadialProfile phi2_profile(int n, double q_bar, double Q_max, double l, double L);

/// Radial harmonic function on [l - delta, l + delta] matching phi1 and phi2
/// at the ends.
RadialProfile theta_profile(int n, const RadialProfile& phi1, const RadialProfile& phi2,
                            double delta);

/// Glued barrier: phi1 on [0, l - delta], theta on [l - delta, l + delta],
/// phi2 on [l + delta, L].
RadialProfile sigma_profile(const RadialProfile& phi1, const RadialProfile& phi2,
                            const RadialProfile& theta);

/// Largest h with phi1(r) <= exp(h (r - l)) phi1(l) at every sample r < l.
double fitted_decay_rate(const RadialProfile& phi1);

struct BarrierCheck {
  double l = 0.0;
  double gap = 0.0;            // phi1'(l) - phi2'(l)
  double theta_margin = 0.0;   // min (phi - theta) over the open annulus samples
  double crossing = 0.0;       // r* - l with theta(r*) = q_bar
  double sigma_max = 0.0;      // max sigma on [0, l + delta']
  bool clause_i = false;
  bool clause_ii = false;
  bool clause_iii = false;
};

struct SigmaConstants {
  double l0 = 0.0;
  double L0 = 0.0;
  double rho = 0.5;
  double lambda = 0.0;
  double delta = 0.0;
  double q_bar_prime = 0.0;
  double delta_prime = 0.0;
  double mu = 0.0;
  int delta_iterations = 0;
};

struct SigmaPack {
  RadialProfile sigma;  // assembled at l0
  SigmaConstants constants;
  std::vector<BarrierCheck> checks;  // l in {l0, 2 l0, 4 l0}
  bool all_pass() const;
};

/// Finds l0, lambda, delta, q_bar', delta', mu and verifies the three
/// clauses at l0, 2 l0 and 4 l0. Throws NoAdmissibleDelta if halving delta
/// 40 times does not succeed.
SigmaPack assemble_sigma(int n, double c, double q_bar, double Q_max, double l0_hint,
                         double rho = 0.5);

/// sigma built with the pack's lambda and delta at another radius l.
RadialProfile sigma_at(const SigmaPack& pack, double l);

}  // namespace equivac
