#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "equivac/comparison.hpp"
#include "equivac/coxeter.hpp"
#include "equivac/field.hpp"
#include "equivac/flow.hpp"
#include "equivac/potential.hpp"

namespace equivac {

/// Nonnegative tensor-product test function prod_i cos^2(pi (x_i - c_i) / (2 w))
/// on the cube |x_i - c_i| < w, with max value 1.
struct Bump {
  Vec center;
  double width = 0.0;
  double operator()(const Vec& x) const;
};

/// Seeded bumps with widths in [4h, R/4] whose support nodes all satisfy
/// `admissible`. Throws InsufficientNodes if none can be placed.
std::vector<Bump> random_bumps(const BallGrid& grid, std::size_t count, std::uint64_t seed,
                               const std::function<bool(std::size_t node)>& admissible);

struct BumpCheck {
  double min = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::vector<double> values;
};

struct KatoCheck : BumpCheck {
  std::vector<double> strong_values;
  // max |weak - strong| / max(|strong|, 1e-6 * term size) over the trials.
  double max_strong_weak_rel = 0.0;
};

/// <Q(u), Delta psi> - <<Delta u, Q_u(u)>, psi> over interior bumps psi.
KatoCheck kato_check(const VectorField& u, const QSpec& q, std::size_t trials,
                     std::uint64_t seed = 1);

struct SubharmonicCheck : BumpCheck {
  std::string warning;
};

/// -int grad Q(u) . grad phi over bumps supported in D_R at distance > 2h
/// from its boundary. `sign` = -1 replaces Q by -Q.
SubharmonicCheck subharmonic_check(const VectorField& u, const QSpec& q, const OrbitInfo& orbit,
                                   std::size_t trials, bool equilibrium, std::uint64_t seed = 2,
                                   double sign = 1.0);

struct DeGiorgiLevel {
  int level = 0;
  double radius = 0.0;
  double sup_Q = 0.0;
  double bound = 0.0;     // q_bar/2 + mu^level (Q_bar - q_bar/2)
  double sup_vhat = 0.0;  // sup over the level ball of (Q - q_bar/2)/(Q_{level-1} - q_bar/2)
  std::size_t nodes = 0;
};

struct DeGiorgiResult {
  Vec center;
  double radius = 0.0;
  double q_bar = 0.0;
  double Q_bar = 0.0;
  std::size_t ball_nodes = 0;
  std::size_t half_nodes = 0;
  double measure_fraction = 0.0;
  double degiorgi_sup = 0.0;
  double eps0 = 0.0;
  bool eps0_from_ball = true;  // else from all of D_R
  bool eps0_defined = true;    // false if {Q >= q_bar/2} has no D_R node
  // Empirical mu = degiorgi_sup; k_iter minimal with q_bar/2 + mu^k (Q_bar - q_bar/2) < q_bar.
  double mu = 0.0;
  int k_iter = 0;
  std::vector<DeGiorgiLevel> levels;
  bool levels_decreasing = false;
  bool final_below_q_bar = false;
  // Largest level radius whose measured sup of Q is <= q_bar, 0 if none.
  double certified_radius = 0.0;
};

/// v_hat(y) = (Q(y) - q_bar/2)/(Q_bar - q_bar/2) on B_radius(center), from
/// nodal values of Q and W. Throws BallOutsideD.
DeGiorgiResult degiorgi_from_values(const BallGrid& grid, const Vec& Qv, const Vec& Wv,
                                    double q_bar, double Q_bar, const OrbitInfo& orbit,
                                    const Vec& center, double radius);

DeGiorgiResult measure_and_degiorgi(const VectorField& u, const QSpec& q, const PotentialSpec& spec,
                                    const OrbitInfo& orbit, const Vec& center, double radius);

struct OrderingResult {
  std::size_t violations = 0;
  std::size_t admissible_centers = 0;  // B_L(xi) inside D_R
  std::size_t reachable_centers = 0;   // slid in from the seed ball
  std::size_t centers_checked = 0;
  bool vacuous = true;                 // no tangent ball could be placed
  double slack = 0.0;
  double l = 0.0;
  double L = 0.0;
  double seed_radius = 0.0;
  double coverage = 0.0;               // covered fraction of the D_R nodes
  double d0 = 0.0;                     // every D_R node at distance >= d0 from the boundary is covered
  // Delta Q(u) >= c^2 Q(u) - slack on interior D_R nodes with Q <= q_bar.
  std::size_t laplace_q_violations = 0;
  std::size_t laplace_q_nodes = 0;
  double laplace_q_min = 0.0;          // min of Delta Q - c^2 Q there
};

/// Grows the certified set from the De Giorgi seed ball by sliding balls
/// B_l(xi) with B_L(xi) inside D_R, checking Q(u) <= sigma(|x - xi|) + slack.
/// Throws SeedBallRejected if no level of the seed has sup Q <= q_bar.
OrderingResult comparison_ordering_check(const VectorField& u, const QSpec& q,
                                         const PotentialSpec& spec, const SigmaPack& pack,
                                         const OrbitInfo& orbit, const DeGiorgiResult& seed,
                                         double slack);

struct DecayFit {
  double K = 0.0;
  double k = 0.0;
  double r2 = 0.0;
  std::size_t nodes = 0;
};

/// Least squares of log|u - a1| against dist_D over D nodes with
/// dist_D in [d_min, d_max]. Throws InsufficientNodes below 50 nodes.
DecayFit decay_fit(const VectorField& u, const OrbitInfo& orbit, double d_min, double d_max);

/// (dist_D, log|u - a1|) pairs used by decay_fit, for plotting.
std::vector<std::pair<double, double>> decay_scatter(const VectorField& u, const OrbitInfo& orbit,
                                                     double d_min, double d_max);

struct SweepParams {
  double h = 0.1;
  FlowConfig flow;
  bool seed_only = false;
};

struct SweepResult {
  std::vector<double> radii;
  std::vector<double> energies;
  std::vector<std::size_t> steps;
  std::vector<double> residuals;
  double slope = 0.0;
  double intercept = 0.0;
};

/// Fits log J against log R. Throws InvalidArgument for fewer than 3 radii
/// and NoConvergence if a run stops early.
SweepResult energy_scaling_sweep(const std::vector<double>& radii, const PotentialSpec& spec,
                                 const ReflectionGroup& group, const OrbitInfo& orbit,
                                 const SweepParams& params);

struct PositivityCheck {
  double positivity_min = 0.0;
  double strong_margin = 0.0;
  double tol = 0.0;
  bool pass = false;
  bool strong_pass = false;
};

/// Minimum over the recorded samples and the final field.
PositivityCheck positivity_check(const FlowResult& history, const ReflectionGroup& group);

struct DiagnosticsReport {
  double kato_min = 0.0;
  double subharmonic_min = 0.0;
  double positivity_min = 0.0;
  double measure_fraction = 0.0;
  double degiorgi_sup = 0.0;
  double decay_K = 0.0;
  double decay_k = 0.0;
  double decay_R2 = 0.0;
  double energy_slope = 0.0;
  double eps0 = 0.0;
  std::size_t comparison_violations = 0;
};

}  // namespace equivac
