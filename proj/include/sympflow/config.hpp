#pragma once

// Run configuration: one flat JSON object. Unknown keys are rejected.
//
// Keys (all optional):
//   system            "sho" | "henon_heiles" | "damped"
//   mass, spring, damping
//   model_kind        "sympflow" | "mlp"
//   regime            "residual_only" | "regularized" | "mixed" | "supervised"
//   layers, hidden
//   epochs, fine_tune_epochs, learning_rate,
//   batch_collocation, batch_matching, batch_supervised,
//   dt, seed, derivative_mode ("exact" | "fd"), checkpoint_every
//   omega_lower, omega_upper   number (cube) or array of length 2d
//   n_trajectories, samples_per_trajectory, noise_std, data_dir
//   horizon, step, x0           rollout, drift and section settings
//   metric_samples, metric_k    evaluation settings
//   project            apply the physical-limit projection after each window
//   rtol, atol         reference integrator tolerances

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sympflow/eval.hpp"
#include "sympflow/systems.hpp"
#include "sympflow/train.hpp"

namespace sympflow {

struct RunConfig {
  std::string system = "sho";
  double mass = 1.0;
  double spring = 1.0;
  double damping = 0.0;

  int layers = 5;
  int hidden = 10;
  TrainConfig train;

  int n_trajectories = 100;
  int samples_per_trajectory = 50;
  double noise_std = 0.0;
  std::string data_dir;

  double horizon = 1000.0;
  std::optional<double> step;  // default 0.1 for series, 0.01 for sections
  PhasePoint x0;

  int metric_samples = 100;
  std::vector<int> metric_k = {1, 10, 100};

  bool project = false;
  double rtol = 1e-10;
  double atol = 1e-12;

  [[nodiscard]] SystemSpec system_spec() const;
  [[nodiscard]] RolloutSpec rollout_spec(double default_step) const;
};

// Defaults that depend on the system (box, initial condition, projection)
// are filled in when the corresponding key is absent.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace sympflow
