#pragma once

// Reference integration: adaptive Dormand-Prince 5(4) with PI step-size
// control and the method's native fourth-order continuous extension.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sympflow/phase_point.hpp"
#include "sympflow/systems.hpp"

namespace sympflow {

// f(t, y, dydt)
using OdeRhs = std::function<void(double, std::span<const double>, std::span<double>)>;

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  std::size_t max_steps = 50'000'000;
};

class DenseSolution {
 public:
  DenseSolution(std::size_t dim, double t0, std::vector<double> y0);

  [[nodiscard]] double t_begin() const { return t0_; }
  [[nodiscard]] double t_end() const { return t_end_; }
  [[nodiscard]] std::size_t steps() const { return step_t_.size(); }
  [[nodiscard]] std::size_t rejected_steps() const { return rejected_; }

  // State at any t in [t_begin, t_end].
  [[nodiscard]] std::vector<double> state_at(double t) const;
  [[nodiscard]] const std::vector<double>& final_state() const { return y_end_; }
  // Accepted step endpoints, t_begin first.
  [[nodiscard]] std::vector<double> mesh() const;

 private:
  friend DenseSolution integrate(const OdeRhs&, std::span<const double>, double, double,
                                 const IntegratorOptions&);

  std::size_t dim_;
  double t0_;
  double t_end_;
  std::vector<double> y_end_;
  std::size_t rejected_ = 0;
  std::vector<double> step_t_;
  std::vector<double> step_h_;
  std::vector<double> coeffs_;  // 5 * dim per step
};

DenseSolution integrate(const OdeRhs& rhs, std::span<const double> y0, double t0, double t_end,
                        const IntegratorOptions& options = {});

// Integrates the system's vector field from t = 0.
DenseSolution integrate(const SystemSpec& sys, const PhasePoint& x0, double t_end,
                        double rtol = 1e-10, double atol = 1e-12);

// States at the requested times (any order, all >= 0), from one dense run.
std::vector<PhasePoint> sample_states(const SystemSpec& sys, const PhasePoint& x0,
                                      std::span<const double> times, double rtol = 1e-10,
                                      double atol = 1e-12);

// Fixed-step Dormand-Prince (fifth-order solution), for order checks.
std::vector<double> integrate_fixed(const OdeRhs& rhs, std::span<const double> y0, double t0,
                                    double t_end, std::size_t steps);

OdeRhs system_rhs(const SystemSpec& sys);

// Axis-aligned box in phase space, ordered [q; p].
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  static Box cube(std::size_t dim, double lo, double hi);
  [[nodiscard]] std::size_t dim() const { return lower.size(); }
  void validate() const;
};

struct InitialCondition {
  int traj_id = 0;
  PhasePoint x0;
};

struct Sample {
  int traj_id = 0;
  double t = 0.0;
  PhasePoint y;
};

struct TrajectoryDataset {
  std::vector<InitialCondition> initial_conditions;
  std::vector<Sample> samples;
  double dt = 1.0;
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// x0 uniform in the box, sample times uniform in [0, dt] per trajectory,
// states from the reference integrator plus i.i.d. N(0, noise_std^2) per
// component. Initial conditions are noise free.
TrajectoryDataset generate_dataset(const SystemSpec& sys, const Box& omega, int n_trajectories,
                                   int samples_per_trajectory, double dt, double noise_std,
                                   std::uint64_t seed);

}  // namespace sympflow
