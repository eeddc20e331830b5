#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "equivac/coxeter.hpp"
#include "equivac/types.hpp"

namespace equivac {

/// Multivariate polynomial sum_k coeff_k * prod_j u_j^{exps_k[j]}.
class Polynomial {
 public:
  struct Term {
    double coeff = 0.0;
    std::vector<int> exps;
    bool operator==(const Term&) const = default;
  };

  Polynomial() = default;
  Polynomial(int dim, std::vector<Term> terms);

  int dim() const { return dim_; }
  const std::vector<Term>& terms() const { return terms_; }

  double value(std::span<const double> u) const;
  void gradient(std::span<const double> u, std::span<double> out) const;
  // Row-major dim x dim.
  void hessian(std::span<const double> u, std::span<double> out) const;

  Polynomial operator-() const;
  bool operator==(const Polynomial&) const = default;

 private:
  int dim_ = 0;
  std::vector<Term> terms_;
};

/// The potential W: R^n -> R and its derivatives. Implementations are
/// immutable and reentrant.
class Potential {
 public:
  virtual ~Potential() = default;
  virtual int dim() const = 0;
  virtual double value(std::span<const double> u) const = 0;
  virtual void gradient(std::span<const double> u, std::span<double> out) const = 0;
  virtual void hessian(std::span<const double> u, std::span<double> out) const = 0;
};

/// W(u) = |z^3 - 1|^2 with z = u1 + i u2.
class TrianglePotential final : public Potential {
 public:
  int dim() const override { return 2; }
  double value(std::span<const double> u) const override;
  void gradient(std::span<const double> u, std::span<double> out) const override;
  void hessian(std::span<const double> u, std::span<double> out) const override;
};

class PolynomialPotential final : public Potential {
 public:
  explicit PolynomialPotential(Polynomial p) : poly_(std::move(p)) {}
  int dim() const override { return poly_.dim(); }
  double value(std::span<const double> u) const override { return poly_.value(u); }
  void gradient(std::span<const double> u, std::span<double> out) const override {
    poly_.gradient(u, out);
  }
  void hessian(std::span<const double> u, std::span<double> out) const override {
    poly_.hessian(u, out);
  }
  const Polynomial& polynomial() const { return poly_; }

 private:
  Polynomial poly_;
};

/// Expansion of |z^3 - 1|^2 as a real polynomial in (u1, u2).
Polynomial triangle_polynomial();

struct PotentialSpec {
  std::shared_ptr<const Potential> W;
  int dim = 0;
  std::vector<Vec> minima;
  // v^T d2W(u) v >= 2 c^2 |v|^2 on |u - a_i| <= q_bar.
  double c = 0.0;
  double q_bar = 0.0;
  // W(s u) >= W(u) for s >= 1 and |u| = M.
  double M = 0.0;
};

struct PotentialEval {
  double W = 0.0;
  Vec grad;
  std::optional<Mat> hess;
};

PotentialEval eval_potential(const PotentialSpec& spec, const Vec& u, bool want_hessian);

struct ConvexityScan {
  double q_crit = 0.0;  // largest scanned radius with a positive definite Hessian
  double q_bar = 0.0;
  double c = 0.0;
  double min_eig_at_q_bar = 0.0;
};

/// Shell scan of the smallest Hessian eigenvalue around `center`; q_bar is
/// 90% of the largest radius on which the Hessian stays positive definite.
ConvexityScan scan_convexity(const Potential& W, const Vec& center, double dr = 0.005,
                             double r_max = 4.0);

/// Smallest scanned radius M (step dr) from which <W_u(u), u> > 0 on every
/// sphere between M and max(3M, M + 2).
double scan_invariant_radius(const Potential& W, double r_start, double dr = 0.05,
                             double r_limit = 50.0);

PotentialSpec make_triangle_potential();

struct PotentialOverrides {
  std::optional<double> c;
  std::optional<double> q_bar;
  std::optional<double> M;
};

/// Custom polynomial potential whose minima are the orbit of a1.
PotentialSpec make_polynomial_potential(const Polynomial& W, const OrbitInfo& orbit,
                                        const PotentialOverrides& overrides = {});

/// The monitor Q(u) = |u - a1| + H(u - a1).
struct QSpec {
  Vec base;
  std::optional<Polynomial> H;
  double Q_max = 0.0;

  double value(std::span<const double> u) const;
  // Q_u with the convention Q_u(a1) = 0.
  void gradient(std::span<const double> u, std::span<double> out) const;
};

struct QEval {
  double Q = 0.0;
  Vec grad;
};

/// Builds Q and Q_max = max_{|u| <= M} Q(u). Throws NonConvexQ if a
/// midpoint convexity sample fails.
QSpec make_q(const Vec& a1, double M, std::optional<Polynomial> H = std::nullopt,
             std::uint64_t seed = 7);

QEval eval_q(const QSpec& q, const Vec& u);

struct HypothesisReport {
  // H1
  double h1_min_eig = 0.0;
  double h1_certified_c = 0.0;
  double h1_max_W_at_minima = 0.0;
  double h1_min_W_off_minima = 0.0;
  bool h1_pass = false;
  // H2
  double h2_min_radial_derivative = 0.0;
  double w_invariance_max = 0.0;
  bool h2_pass = false;
  // H3
  int h3_minima_in_F = 0;
  bool h3_pass = false;
  // H4
  double h4_min = 0.0;
  std::size_t h4_violation_count = 0;
  std::size_t h4_samples = 0;
  std::vector<Vec> h4_violations;  // first few violating points
  double q_invariance_max = 0.0;
  bool h4_pass = false;
};

HypothesisReport check_hypotheses(const PotentialSpec& spec, const QSpec& q,
                                  const ReflectionGroup& group, const OrbitInfo& orbit,
                                  std::size_t samples, std::uint64_t seed = 11);

/// Unit directions used by the sphere scans: uniform angles for n = 2,
/// a Fibonacci lattice for n = 3, seeded Gaussian draws otherwise.
std::vector<Vec> sphere_directions(int dim, std::size_t count);

}  // namespace equivac
