#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "equivac/coxeter.hpp"
#include "equivac/field.hpp"
#include "equivac/potential.hpp"

namespace equivac {

struct FlowConfig {
  std::optional<double> dt;  // default 0.2 h^2 / n
  std::size_t max_steps = 2'000'000;
  double residual_tol = 1e-5;
  // Re-symmetrize every K_sym steps (0 disables) while the residual is above
  // sym_stop_residual.
  std::size_t K_sym = 50;
  double sym_stop_residual = 0.0;
  bool clamp = true;
  // Positivity is sampled every K_sym steps, or this often if K_sym == 0.
  std::size_t positivity_every = 50;
};

double default_dt(const BallGrid& grid);
/// Explicit diffusion bound h^2 / (2n).
double max_stable_dt(const BallGrid& grid);

struct SymmetrizeEvent {
  std::size_t step = 0;
  double energy_before = 0.0;
  double energy_after = 0.0;
};

struct PositivitySample {
  std::size_t step = 0;
  double value = 0.0;
};

struct FlowResult {
  VectorField field;
  // J(u_k) for k = 0..steps; symmetrization happens between recorded steps
  // and is logged separately.
  std::vector<double> energy_history;
  std::vector<SymmetrizeEvent> symmetrizations;
  std::vector<PositivitySample> positivity_samples;
  double residual = 0.0;
  std::size_t steps = 0;
  bool converged = false;
  double positivity_min = 0.0;
  double dt = 0.0;
};

struct StepStats {
  double energy = 0.0;    // J(u) before the step
  double residual = 0.0;  // max_x |Delta u - W_u(u)| before the step
};

/// One explicit Euler step u <- u + dt (Delta u - W_u(u)), in place.
StepStats step_in_place(VectorField& u, const PotentialSpec& spec, const FlowConfig& cfg);

/// Functional form of one step.
VectorField step(const VectorField& u, const PotentialSpec& spec, const FlowConfig& cfg);

/// max_x |Delta u - W_u(u)|.
double pde_residual(const VectorField& u, const PotentialSpec& spec);

/// Largest (J after an Euler step - J before) / (1 + |J before|) along the
/// run; symmetrization jumps are excluded.
double max_step_energy_increase(const FlowResult& result);

using FlowProgress = std::function<void(std::size_t step, double energy, double residual)>;

FlowResult run_to_equilibrium(const VectorField& u0, const PotentialSpec& spec,
                              const FlowConfig& cfg, const ReflectionGroup& group,
                              const FlowProgress& progress = {});

}  // namespace equivac
