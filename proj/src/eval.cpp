#include "sympflow/eval.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace sympflow {

FlowMap flow_of(const SympFlowModel& model) {
  return [model](double t, const PhasePoint& x) { return forward(model, t, x); };
}

FlowMap flow_of(const MlpFlowModel& model) {
  return [model](double t, const PhasePoint& x) { return forward(model, t, x); };
}

FlowMap projected(FlowMap flow) {
  return [flow = std::move(flow)](double t, const PhasePoint& x) {
    return physical_limit_project(flow(t, x));
  };
}

namespace {

double window_remainder(double dt, double t, long long& windows) {
  const double k = std::floor(t / dt);
  windows = static_cast<long long>(k);
  return t - dt * k;
}

}  // namespace

PhasePoint rollout(const FlowMap& flow, double dt, double t, const PhasePoint& x0) {
  detail::require(dt > 0.0 && std::isfinite(dt), "rollout: dt must be positive");
  detail::require(t >= 0.0 && std::isfinite(t), "rollout: time must be nonnegative");
  long long windows = 0;
  const double rem = window_remainder(dt, t, windows);
  PhasePoint x = x0;
  for (long long i = 0; i < windows; ++i) x = flow(dt, x);
  return flow(rem, x);
}

PhasePoint rollout(const SympFlowModel& model, double dt, double t, const PhasePoint& x0) {
  return rollout(flow_of(model), dt, t, x0);
}

PhasePoint rollout(const MlpFlowModel& model, double dt, double t, const PhasePoint& x0) {
  return rollout(flow_of(model), dt, t, x0);
}

void RolloutSpec::validate() const {
  detail::require(step > 0.0 && step <= dt && dt <= horizon,
                  "rollout spec: need 0 < step <= dt <= horizon");
  detail::require(!x0.q.empty() && x0.q.size() == x0.p.size(),
                  "rollout spec: initial condition missing or malformed");
}

std::vector<double> time_grid(double horizon, double step) {
  detail::require(step > 0.0 && horizon >= 0.0, "time grid: need step > 0 and horizon >= 0");
  const double ratio = horizon / step;
  auto n = static_cast<long long>(std::floor(ratio));
  if (ratio - static_cast<double>(n) > 1.0 - 1e-9) ++n;
  std::vector<double> ts(static_cast<std::size_t>(n) + 1);
  for (long long j = 0; j <= n; ++j) ts[static_cast<std::size_t>(j)] = static_cast<double>(j) * step;
  if (std::abs(ts.back() - horizon) <= 1e-9 * std::max(1.0, horizon)) ts.back() = horizon;
  return ts;
}

std::vector<TimedState> rollout_path(const FlowMap& flow, const RolloutSpec& spec) {
  spec.validate();
  std::vector<TimedState> out;
  const auto ts = time_grid(spec.horizon, spec.step);
  out.reserve(ts.size());
  PhasePoint window_state = spec.x0;  // (psi_dt)^done (x0)
  long long done = 0;
  for (double t : ts) {
    long long windows = 0;
    const double rem = window_remainder(spec.dt, t, windows);
    while (done < windows) {
      window_state = flow(spec.dt, window_state);
      ++done;
    }
    out.push_back({t, flow(rem, window_state)});
  }
  return out;
}

std::vector<TimedState> reference_path(const SystemSpec& sys, const RolloutSpec& spec, double rtol,
                                       double atol) {
  detail::require(spec.step > 0.0 && spec.horizon > 0.0, "reference path: need step, horizon > 0");
  const auto ts = time_grid(spec.horizon, spec.step);
  const auto sol = integrate(sys, spec.x0, ts.back(), rtol, atol);
  std::vector<TimedState> out;
  out.reserve(ts.size());
  for (double t : ts) out.push_back({t, split(sol.state_at(t))});
  return out;
}

std::vector<PhasePoint> metric_initial_conditions(const Box& omega, int count, std::uint64_t seed) {
  omega.validate();
  detail::require(count >= 1, "metrics: sample count must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<PhasePoint> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    std::vector<double> flat(omega.dim());
    for (std::size_t j = 0; j < flat.size(); ++j) {
      flat[j] = omega.lower[j] + (omega.upper[j] - omega.lower[j]) * unit(rng);
    }
    out.push_back(split(flat));
  }
  return out;
}

MetricValue relative_error_of(const std::vector<PhasePoint>& predicted,
                              const std::vector<PhasePoint>& reference) {
  detail::require(predicted.size() == reference.size() && !predicted.empty(),
                  "relative error: need equally many predicted and reference states");
  MetricValue m;
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto a = flatten(predicted[i]);
    const auto b = flatten(reference[i]);
    const double denom = norm2(b);
    if (denom < kMetricDenominatorFloor) {
      ++m.skipped;
      continue;
    }
    std::vector<double> diff(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) diff[j] = a[j] - b[j];
    sum += norm2(diff) / denom;
    ++m.used;
  }
  m.value = m.used > 0 ? sum / m.used : 0.0;
  return m;
}

MetricValue energy_variation_of(const SystemSpec& sys, const std::vector<PhasePoint>& initial,
                                const std::vector<PhasePoint>& predicted) {
  detail::require(predicted.size() == initial.size() && !predicted.empty(),
                  "energy variation: need equally many initial and predicted states");
  MetricValue m;
  double sum = 0.0;
  for (std::size_t i = 0; i < initial.size(); ++i) {
    const double h0 = hamiltonian(sys, initial[i]);
    if (std::abs(h0) < kMetricDenominatorFloor) {
      ++m.skipped;
      continue;
    }
    sum += std::abs(hamiltonian(sys, predicted[i]) - h0) / std::abs(h0);
    ++m.used;
  }
  m.value = m.used > 0 ? sum / m.used : 0.0;
  return m;
}

namespace {

std::vector<PhasePoint> predict_all(const FlowMap& flow, const std::vector<PhasePoint>& ics, int k,
                                    double dt) {
  detail::require(k >= 1, "metrics: k must be a positive integer");
  std::vector<PhasePoint> out;
  out.reserve(ics.size());
  for (const auto& x : ics) out.push_back(rollout(flow, dt, k * dt, x));
  return out;
}

}  // namespace

MetricValue avg_relative_error(const FlowMap& flow, const SystemSpec& sys, const Box& omega,
                               int count, int k, double dt, std::uint64_t seed) {
  const auto ics = metric_initial_conditions(omega, count, seed);
  const auto predicted = predict_all(flow, ics, k, dt);
  // Orbits that escape to infinity before k dt have no reference and are skipped.
  std::vector<PhasePoint> kept_predicted, reference;
  int escaped = 0;
  for (std::size_t i = 0; i < ics.size(); ++i) {
    try {
      reference.push_back(split(integrate(sys, ics[i], k * dt).final_state()));
      kept_predicted.push_back(predicted[i]);
    } catch (const StiffnessError&) {
      ++escaped;
    }
  }
  if (reference.empty()) return MetricValue{0.0, 0, escaped};
  auto m = relative_error_of(kept_predicted, reference);
  m.skipped += escaped;
  return m;
}

MetricValue avg_energy_variation(const FlowMap& flow, const SystemSpec& sys, const Box& omega,
                                 int count, int k, double dt, std::uint64_t seed) {
  const auto ics = metric_initial_conditions(omega, count, seed);
  return energy_variation_of(sys, ics, predict_all(flow, ics, k, dt));
}

std::vector<DriftSample> energy_drift_series(const SystemSpec& sys,
                                             const std::vector<TimedState>& path) {
  detail::require(!path.empty(), "energy drift: empty path");
  const double h0 = hamiltonian(sys, path.front().x);
  std::vector<DriftSample> out;
  out.reserve(path.size());
  for (const auto& s : path) {
    const double drift = hamiltonian(sys, s.x) - h0;
    out.push_back({s.t, drift, s.t > 0.0 ? drift / s.t : 0.0});
  }
  return out;
}

std::vector<DriftSample> energy_drift_series(const FlowMap& flow, const SystemSpec& sys,
                                             const PhasePoint& x0, double horizon, double step,
                                             double dt) {
  return energy_drift_series(sys, rollout_path(flow, {dt, horizon, step, x0}));
}

double max_relative_drift(const std::vector<DriftSample>& series, double h0) {
  detail::require(std::abs(h0) >= kMetricDenominatorFloor, "relative drift: H0 is zero");
  double worst = 0.0;
  for (const auto& s : series) {
    if (!std::isfinite(s.drift)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::abs(s.drift) / std::abs(h0));
  }
  return worst;
}

double drift_slope(const std::vector<DriftSample>& series, double t_min) {
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& s : series) {
    if (s.t < t_min || std::abs(s.drift) < 1e-14 || !std::isfinite(s.drift)) continue;
    const double x = std::log(s.t);
    const double y = std::log(std::abs(s.drift));
    n += 1;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  detail::require(n >= 2 && denom > 0.0, "drift slope: fewer than two usable samples");
  return (n * sxy - sx * sy) / denom;
}

namespace {

void check_section_state(const PhasePoint& x) {
  detail::require(x.q.size() == 2 && x.p.size() == 2,
                  "poincare section: expected four-dimensional states (q_x, q_y, p_x, p_y)");
}

PhasePoint lerp(const PhasePoint& a, const PhasePoint& b, double s) {
  PhasePoint x = a;
  for (std::size_t k = 0; k < a.q.size(); ++k) {
    x.q[k] = a.q[k] + s * (b.q[k] - a.q[k]);
    x.p[k] = a.p[k] + s * (b.p[k] - a.p[k]);
  }
  return x;
}

template <class Refine>
std::vector<SectionPoint> section(const std::vector<TimedState>& path, Refine&& refine) {
  std::vector<SectionPoint> out;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const auto& a = path[i];
    const auto& b = path[i + 1];
    check_section_state(a.x);
    const double qa = a.x.q[0];
    const double qb = b.x.q[0];
    if (!(qa < 0.0 && qb >= 0.0)) continue;
    const double s = qa / (qa - qb);
    double t = a.t + s * (b.t - a.t);
    PhasePoint x = lerp(a.x, b.x, s);
    refine(a, b, t, x);
    x.q[0] = 0.0;
    if (!(x.p[0] > 0.0)) continue;
    out.push_back({t, x.q[1], x.p[1], x});
  }
  return out;
}

}  // namespace

std::vector<SectionPoint> poincare_section(const std::vector<TimedState>& path) {
  return section(path, [](const TimedState&, const TimedState&, double&, PhasePoint&) {});
}

std::vector<SectionPoint> poincare_section(const std::vector<TimedState>& path,
                                           const std::function<PhasePoint(double)>& state_at) {
  // Illinois iteration on q_x(t) inside the bracketing interval.
  return section(path, [&](const TimedState& a, const TimedState& b, double& t, PhasePoint& x) {
    double t0 = a.t, f0 = a.x.q[0];
    double t1 = b.t, f1 = b.x.q[0];
    int side = 0;
    for (int it = 0; it < 100; ++it) {
      const double tm = (f1 == f0) ? 0.5 * (t0 + t1) : t1 - f1 * (t1 - t0) / (f1 - f0);
      x = state_at(tm);
      t = tm;
      const double fm = x.q[0];
      if (fm == 0.0 || std::abs(t1 - t0) < 1e-15 * std::max(1.0, std::abs(t1))) break;
      if ((fm < 0.0) == (f0 < 0.0)) {
        t0 = tm;
        f0 = fm;
        if (side == -1) f1 *= 0.5;
        side = -1;
      } else {
        t1 = tm;
        f1 = fm;
        if (side == 1) f0 *= 0.5;
        side = 1;
      }
      if (std::abs(fm) < 1e-15) break;
    }
  });
}

double damped_trajectory_error(const FlowMap& flow, const SystemSpec& sys, double q0, double p0,
                               double horizon, double step, double dt) {
  detail::require(sys.is_damped(), "damped trajectory error: system is not the damped oscillator");
  const auto path = rollout_path(projected(flow), {dt, horizon, step, embed_physical(q0, p0)});
  const PhasePoint x0{{q0}, {p0}};
  double sum = 0.0;
  for (const auto& s : path) {
    const auto exact = analytic_solution(sys, x0, s.t);
    const double dq = s.x.q[0] - exact.q[0];
    const double dp = s.x.p[0] - exact.p[0];
    sum += dq * dq + dp * dp;
  }
  return std::sqrt(sum / static_cast<double>(path.size()));
}

}  // namespace sympflow
