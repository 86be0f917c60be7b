#pragma once

// Long-time rollout, accuracy and energy metrics, and Poincare sections.

#include <cstdint>
#include <functional>
#include <vector>

#include "sympflow/integrate.hpp"
#include "sympflow/mlp_baseline.hpp"
#include "sympflow/sympflow_model.hpp"
#include "sympflow/systems.hpp"

namespace sympflow {

// A trained map psi(t, x) valid for t in [0, dt].
using FlowMap = std::function<PhasePoint(double t, const PhasePoint& x)>;

FlowMap flow_of(const SympFlowModel& model);
FlowMap flow_of(const MlpFlowModel& model);
// physical_limit_project applied after every window map.
FlowMap projected(FlowMap flow);

// psi_{t - dt floor(t/dt)} o (psi_dt)^floor(t/dt) applied to x0.
PhasePoint rollout(const FlowMap& flow, double dt, double t, const PhasePoint& x0);
PhasePoint rollout(const SympFlowModel& model, double dt, double t, const PhasePoint& x0);
PhasePoint rollout(const MlpFlowModel& model, double dt, double t, const PhasePoint& x0);

struct RolloutSpec {
  double dt = 1.0;
  double horizon = 1.0;
  double step = 0.1;
  PhasePoint x0;

  void validate() const;
};

struct TimedState {
  double t = 0.0;
  PhasePoint x;
};

// Grid t_j = j * step up to the horizon; each entry equals rollout(flow, dt,
// t_j, x0) bit for bit.
std::vector<double> time_grid(double horizon, double step);
std::vector<TimedState> rollout_path(const FlowMap& flow, const RolloutSpec& spec);

// Reference path from the adaptive integrator on the same grid.
std::vector<TimedState> reference_path(const SystemSpec& sys, const RolloutSpec& spec,
                                       double rtol = 1e-10, double atol = 1e-12);

struct MetricValue {
  double value = 0.0;
  int used = 0;
  int skipped = 0;  // denominator below 1e-12, or the reference orbit escaped
};

inline constexpr double kMetricDenominatorFloor = 1e-12;

// Initial conditions uniform in omega, drawn from mt19937_64(seed).
std::vector<PhasePoint> metric_initial_conditions(const Box& omega, int count, std::uint64_t seed);

// Mean of |psi(k dt, x) - ref(k dt, x)| / |ref(k dt, x)|.
MetricValue avg_relative_error(const FlowMap& flow, const SystemSpec& sys, const Box& omega,
                               int count, int k, double dt, std::uint64_t seed);
// Mean of |H(psi(k dt, x)) - H(x)| / |H(x)|.
MetricValue avg_energy_variation(const FlowMap& flow, const SystemSpec& sys, const Box& omega,
                                 int count, int k, double dt, std::uint64_t seed);

// Same formulas on precomputed states; used by the above and by tests.
MetricValue relative_error_of(const std::vector<PhasePoint>& predicted,
                              const std::vector<PhasePoint>& reference);
MetricValue energy_variation_of(const SystemSpec& sys, const std::vector<PhasePoint>& initial,
                                const std::vector<PhasePoint>& predicted);

struct DriftSample {
  double t = 0.0;
  double drift = 0.0;         // H(psi_t(x0)) - H(x0)
  double drift_over_t = 0.0;  // drift / t, 0 at t = 0
};

std::vector<DriftSample> energy_drift_series(const FlowMap& flow, const SystemSpec& sys,
                                             const PhasePoint& x0, double horizon, double step,
                                             double dt);
std::vector<DriftSample> energy_drift_series(const SystemSpec& sys,
                                             const std::vector<TimedState>& path);

// max_t |drift(t)| / |H(x0)|.
double max_relative_drift(const std::vector<DriftSample>& series, double h0);

// Least-squares slope of log|drift| against log t over t in [t_min, T],
// ignoring |drift| < 1e-14. Needs two usable points.
double drift_slope(const std::vector<DriftSample>& series, double t_min = 10.0);

struct SectionPoint {
  double t = 0.0;
  double q_y = 0.0;
  double p_y = 0.0;
  PhasePoint x;  // full state at the crossing, q_x set to 0
};

// Crossings of q_x = 0 from below with p_x > 0, by linear interpolation
// between consecutive samples.
std::vector<SectionPoint> poincare_section(const std::vector<TimedState>& path);
// As above, with the crossing time refined on a continuous trajectory.
std::vector<SectionPoint> poincare_section(const std::vector<TimedState>& path,
                                           const std::function<PhasePoint(double)>& state_at);

// Damped oscillator: RMS over the time grid of the physical (q, p) error of
// the projected rollout from embed_physical(q0, p0) against the closed form.
double damped_trajectory_error(const FlowMap& flow, const SystemSpec& sys, double q0, double p0,
                               double horizon, double step, double dt);

}  // namespace sympflow
