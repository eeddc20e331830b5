#include "equivac/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "equivac/error.hpp"

namespace equivac {

double default_dt(const BallGrid& grid) { return 0.2 * grid.h * grid.h / grid.dim; }

double max_stable_dt(const BallGrid& grid) { return grid.h * grid.h / (2.0 * grid.dim); }

namespace {

double resolve_dt(const BallGrid& grid, const FlowConfig& cfg) {
  const double dt = cfg.dt.value_or(default_dt(grid));
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  return dt;
}

// Evaluates Delta u - W_u(u) into `force`, returns energy and residual.
StepStats evaluate(const VectorField& u, const PotentialSpec& spec, Mat& force) {
  const BallGrid& g = *u.grid;
  const auto n = static_cast<std::size_t>(g.dim);
  const double weight = g.stencil_weight;
  const double vol = g.cell_volume();
  const double wgrad = vol * 0.5 * weight;
  const int dirs = g.stencil;
  force.resize(u.values.rows(), u.values.cols());

  StepStats st;
  double grad[3];
  const double* U = u.values.data();
  double* Fp = force.data();
  for (std::size_t i = 0; i < g.node_count; ++i) {
    const double* ui = U + i * n;
    double* fi = Fp + i * n;
    for (std::size_t k = 0; k < n; ++k) fi[k] = 0.0;
    double edge = 0.0;
    for (int d = 0; d < dirs; ++d) {
      const std::int32_t j = g.neighbor(i, d);
      if (j < 0) continue;
      const double* uj = U + static_cast<std::size_t>(j) * n;
      double e2 = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double diff = uj[k] - ui[k];
        fi[k] += diff;
        e2 += diff * diff;
      }
      if ((d & 1) == 0) edge += e2;
    }
    spec.W->gradient({ui, n}, {grad, n});
    double r2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      fi[k] = fi[k] * weight - grad[k];
      r2 += fi[k] * fi[k];
    }
    st.residual = std::max(st.residual, r2);
    st.energy += edge * wgrad + spec.W->value({ui, n}) * vol;
  }
  st.residual = std::sqrt(st.residual);
  return st;
}

void apply(VectorField& u, const Mat& force, double dt, const PotentialSpec& spec, bool clamp) {
  u.values.noalias() += dt * force;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < u.values.cols(); ++i) {
    const double r = u.values.col(i).norm();
    worst = std::max(worst, r);
    if (clamp && r > spec.M) u.values.col(i) *= spec.M / r;
  }
  if (!(worst <= spec.M + 1.0)) {
    throw Error(ErrorCode::StabilityViolation,
                "sup |u| reached " + std::to_string(worst) + " > M + 1; reduce dt");
  }
}

}  // namespace

double pde_residual(const VectorField& u, const PotentialSpec& spec) {
  Mat force;
  return evaluate(u, spec, force).residual;
}

StepStats step_in_place(VectorField& u, const PotentialSpec& spec, const FlowConfig& cfg) {
  const double dt = resolve_dt(*u.grid, cfg);
  Mat force;
  const StepStats st = evaluate(u, spec, force);
  apply(u, force, dt, spec, cfg.clamp);
  return st;
}

VectorField step(const VectorField& u, const PotentialSpec& spec, const FlowConfig& cfg) {
  VectorField out = u;
  step_in_place(out, spec, cfg);
  return out;
}

FlowResult run_to_equilibrium(const VectorField& u0, const PotentialSpec& spec,
                              const FlowConfig& cfg, const ReflectionGroup& group,
                              const FlowProgress& progress) {
  if (!(cfg.residual_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "residual_tol must be positive");
  const BallGrid& g = *u0.grid;
  FlowResult res;
  res.dt = resolve_dt(g, cfg);
  res.field = u0;
  VectorField& u = res.field;
  const std::size_t pos_every = cfg.K_sym > 0 ? cfg.K_sym : std::max<std::size_t>(cfg.positivity_every, 1);

  auto sample_positivity = [&](std::size_t k) {
    res.positivity_samples.push_back({k, positivity_min(u, group)});
  };

  Mat force;
  bool symmetrizing = cfg.K_sym > 0;
  std::size_t k = 0;
  sample_positivity(0);
  for (;; ++k) {
    StepStats st = evaluate(u, spec, force);
    if (symmetrizing && k > 0 && k % cfg.K_sym == 0) {
      if (st.residual > cfg.sym_stop_residual) {
        const double before = st.energy;
        u = symmetrize(u, group);
        st = evaluate(u, spec, force);
        res.symmetrizations.push_back({k, before, st.energy});
      } else {
        symmetrizing = false;
      }
    }
    if (k > 0 && k % pos_every == 0) sample_positivity(k);
    res.energy_history.push_back(st.energy);
    res.residual = st.residual;
    if (progress && k % 1000 == 0) progress(k, st.energy, st.residual);
    if (st.residual <= cfg.residual_tol) {
      res.converged = true;
      break;
    }
    if (k >= cfg.max_steps) break;
    apply(u, force, res.dt, spec, cfg.clamp);
  }
  res.steps = k;
  if (res.positivity_samples.back().step != k) sample_positivity(k);
  res.positivity_min = std::numeric_limits<double>::infinity();
  for (const auto& s : res.positivity_samples) res.positivity_min = std::min(res.positivity_min, s.value);
  return res;
}

double max_step_energy_increase(const FlowResult& result) {
  const auto& J = result.energy_history;
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t ev = 0;
  for (std::size_t k = 1; k < J.size(); ++k) {
    double after = J[k];
    while (ev < result.symmetrizations.size() && result.symmetrizations[ev].step < k) ++ev;
    if (ev < result.symmetrizations.size() && result.symmetrizations[ev].step == k) {
      after = result.symmetrizations[ev].energy_before;
    }
    worst = std::max(worst, (after - J[k - 1]) / (1.0 + std::abs(J[k - 1])));
  }
  return J.size() < 2 ? 0.0 : worst;
}

}  // namespace equivac
