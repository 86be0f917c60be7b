#include "sympflow/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace sympflow {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
// fifth-order minus fourth-order weights
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// continuous extension
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct Stages {
  std::vector<double> k1, k2, k3, k4, k5, k6, k7, tmp, y1;
  explicit Stages(std::size_t n)
      : k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y1(n) {}
};

// One step from (t, y) with k1 = f(t, y) already filled. Leaves the
// fifth-order result in s.y1 and f(t + h, y1) in s.k7.
void dopri_step(const OdeRhs& f, double t, std::span<const double> y, double h, Stages& s) {
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < n; ++i) s.tmp[i] = y[i] + h * a21 * s.k1[i];
  f(t + c2 * h, s.tmp, s.k2);
  for (std::size_t i = 0; i < n; ++i) s.tmp[i] = y[i] + h * (a31 * s.k1[i] + a32 * s.k2[i]);
  f(t + c3 * h, s.tmp, s.k3);
  for (std::size_t i = 0; i < n; ++i)
    s.tmp[i] = y[i] + h * (a41 * s.k1[i] + a42 * s.k2[i] + a43 * s.k3[i]);
  f(t + c4 * h, s.tmp, s.k4);
  for (std::size_t i = 0; i < n; ++i)
    s.tmp[i] = y[i] + h * (a51 * s.k1[i] + a52 * s.k2[i] + a53 * s.k3[i] + a54 * s.k4[i]);
  f(t + c5 * h, s.tmp, s.k5);
  for (std::size_t i = 0; i < n; ++i)
    s.tmp[i] = y[i] + h * (a61 * s.k1[i] + a62 * s.k2[i] + a63 * s.k3[i] + a64 * s.k4[i] +
                           a65 * s.k5[i]);
  f(t + h, s.tmp, s.k6);
  for (std::size_t i = 0; i < n; ++i)
    s.y1[i] = y[i] + h * (a71 * s.k1[i] + a73 * s.k3[i] + a74 * s.k4[i] + a75 * s.k5[i] +
                          a76 * s.k6[i]);
  f(t + h, s.y1, s.k7);
}

double error_norm(std::span<const double> y, const Stages& s, double h,
                  const IntegratorOptions& opt) {
  double sum = 0.0;
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double err = h * (e1 * s.k1[i] + e3 * s.k3[i] + e4 * s.k4[i] + e5 * s.k5[i] +
                            e6 * s.k6[i] + e7 * s.k7[i]);
    const double scale = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(s.y1[i]));
    sum += (err / scale) * (err / scale);
  }
  return std::sqrt(sum / static_cast<double>(n));
}

// Starting step after Hairer, Norsett and Wanner.
double initial_step(const OdeRhs& f, double t0, std::span<const double> y0,
                    std::span<const double> f0, double span, const IntegratorOptions& opt) {
  const std::size_t n = y0.size();
  double dnf = 0.0, dny = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sk = opt.atol + opt.rtol * std::abs(y0[i]);
    dnf += (f0[i] / sk) * (f0[i] / sk);
    dny += (y0[i] / sk) * (y0[i] / sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, span);
  std::vector<double> y1(n), f1(n);
  for (std::size_t i = 0; i < n; ++i) y1[i] = y0[i] + h * f0[i];
  f(t0 + h, y1, f1);
  double der2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sk = opt.atol + opt.rtol * std::abs(y0[i]);
    der2 += ((f1[i] - f0[i]) / sk) * ((f1[i] - f0[i]) / sk);
  }
  der2 = std::sqrt(der2) / h;
  const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3)
                                   : std::pow(0.01 / der12, 1.0 / 5.0);
  return std::min({100.0 * h, h1, span});
}

}  // namespace

DenseSolution::DenseSolution(std::size_t dim, double t0, std::vector<double> y0)
    : dim_(dim), t0_(t0), t_end_(t0), y_end_(std::move(y0)) {}

std::vector<double> DenseSolution::state_at(double t) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(t_end_));
  detail::require(t >= t0_ - tol && t <= t_end_ + tol,
                  "dense solution: time " + std::to_string(t) + " outside the integrated range");
  if (step_t_.empty()) return y_end_;
  auto it = std::upper_bound(step_t_.begin(), step_t_.end(), t);
  std::size_t k = it == step_t_.begin() ? 0 : static_cast<std::size_t>(it - step_t_.begin()) - 1;
  k = std::min(k, step_t_.size() - 1);
  const double theta = (t - step_t_[k]) / step_h_[k];
  const double theta1 = 1.0 - theta;
  const double* r = coeffs_.data() + 5 * dim_ * k;
  std::vector<double> y(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    y[i] = r[i] +
           theta * (r[dim_ + i] +
                    theta1 * (r[2 * dim_ + i] + theta * (r[3 * dim_ + i] + theta1 * r[4 * dim_ + i])));
  }
  return y;
}

std::vector<double> DenseSolution::mesh() const {
  std::vector<double> m{t0_};
  for (std::size_t k = 0; k < step_t_.size(); ++k) m.push_back(step_t_[k] + step_h_[k]);
  if (!m.empty() && !step_t_.empty()) m.back() = t_end_;
  return m;
}

DenseSolution integrate(const OdeRhs& rhs, std::span<const double> y0, double t0, double t_end,
                        const IntegratorOptions& options) {
  detail::require(t_end > t0 && std::isfinite(t_end), "integrate: end time must exceed start time");
  detail::require(options.rtol > 0.0 && options.atol > 0.0, "integrate: tolerances must be positive");
  const std::size_t n = y0.size();
  DenseSolution sol(n, t0, std::vector<double>(y0.begin(), y0.end()));

  constexpr double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
  constexpr double facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0;
  const double span = t_end - t0;
  const double h_floor = 1e-14 * span;

  std::vector<double> y(y0.begin(), y0.end());
  Stages s(n);
  rhs(t0, y, s.k1);
  double h = initial_step(rhs, t0, y, s.k1, span, options);
  double t = t0;
  double fac_old = 1e-4;
  bool last_rejected = false;

  std::size_t steps = 0;
  while (t < t_end) {
    if (++steps > options.max_steps) throw StiffnessError("integrate: step budget exhausted");
    bool last = false;
    if (t + 1.01 * h >= t_end) {
      h = t_end - t;
      last = true;
    }
    if (h < h_floor) {
      throw StiffnessError("integrate: step size underflow at t = " + std::to_string(t));
    }
    dopri_step(rhs, t, y, h, s);
    const double err = error_norm(y, s, h, options);
    const double fac11 = std::pow(err, expo1);
    if (err <= 1.0 && std::isfinite(err)) {
      double fac = fac11 / std::pow(fac_old, beta);
      fac = std::max(facc2, std::min(facc1, fac / safe));
      fac_old = std::max(err, 1e-4);

      // dense output coefficients for [t, t + h]
      const std::size_t base = sol.coeffs_.size();
      sol.coeffs_.resize(base + 5 * n);
      double* r = sol.coeffs_.data() + base;
      for (std::size_t i = 0; i < n; ++i) {
        const double ydiff = s.y1[i] - y[i];
        const double bspl = h * s.k1[i] - ydiff;
        r[i] = y[i];
        r[n + i] = ydiff;
        r[2 * n + i] = bspl;
        r[3 * n + i] = ydiff - h * s.k7[i] - bspl;
        r[4 * n + i] = h * (d1 * s.k1[i] + d3 * s.k3[i] + d4 * s.k4[i] + d5 * s.k5[i] +
                            d6 * s.k6[i] + d7 * s.k7[i]);
      }
      sol.step_t_.push_back(t);
      sol.step_h_.push_back(h);

      y = s.y1;
      s.k1 = s.k7;
      t = last ? t_end : t + h;
      double h_new = h / fac;
      if (last_rejected) h_new = std::min(h_new, h);
      last_rejected = false;
      h = h_new;
    } else {
      const double shrink = std::isfinite(err) ? std::min(facc1, fac11 / safe) : facc1;
      h /= shrink;
      last_rejected = true;
      ++sol.rejected_;
    }
  }
  sol.t_end_ = t_end;
  sol.y_end_ = y;
  return sol;
}

OdeRhs system_rhs(const SystemSpec& sys) {
  const auto d = static_cast<std::size_t>(sys.half_dim());
  return [sys, d](double, std::span<const double> y, std::span<double> dydt) {
    PhasePoint x{{y.begin(), y.begin() + static_cast<std::ptrdiff_t>(d)},
                 {y.begin() + static_cast<std::ptrdiff_t>(d), y.end()}};
    const auto f = kernel::vector_field<double>(sys, x);
    std::copy(f.begin(), f.end(), dydt.begin());
  };
}

DenseSolution integrate(const SystemSpec& sys, const PhasePoint& x0, double t_end, double rtol,
                        double atol) {
  detail::require(x0.q.size() == static_cast<std::size_t>(sys.half_dim()) &&
                      x0.p.size() == x0.q.size(),
                  "integrate: initial condition dimension does not match " + sys.name());
  IntegratorOptions opt;
  opt.rtol = rtol;
  opt.atol = atol;
  const auto y0 = flatten(x0);
  return integrate(system_rhs(sys), y0, 0.0, t_end, opt);
}

std::vector<PhasePoint> sample_states(const SystemSpec& sys, const PhasePoint& x0,
                                      std::span<const double> times, double rtol, double atol) {
  std::vector<PhasePoint> out;
  out.reserve(times.size());
  double t_max = 0.0;
  for (double t : times) {
    detail::require(t >= 0.0 && std::isfinite(t), "sample_states: times must be nonnegative");
    t_max = std::max(t_max, t);
  }
  if (t_max == 0.0) {
    for (std::size_t i = 0; i < times.size(); ++i) out.push_back(x0);
    return out;
  }
  const auto sol = integrate(sys, x0, t_max, rtol, atol);
  for (double t : times) out.push_back(split(sol.state_at(t)));
  return out;
}

std::vector<double> integrate_fixed(const OdeRhs& rhs, std::span<const double> y0, double t0,
                                    double t_end, std::size_t steps) {
  detail::require(steps > 0, "integrate_fixed: need at least one step");
  const double h = (t_end - t0) / static_cast<double>(steps);
  std::vector<double> y(y0.begin(), y0.end());
  Stages s(y.size());
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = t0 + static_cast<double>(k) * h;
    rhs(t, y, s.k1);
    dopri_step(rhs, t, y, h, s);
    y = s.y1;
  }
  return y;
}

Box Box::cube(std::size_t dim, double lo, double hi) {
  return {std::vector<double>(dim, lo), std::vector<double>(dim, hi)};
}

void Box::validate() const {
  detail::require(!lower.empty() && lower.size() == upper.size(),
                  "box: bounds must be nonempty and of equal dimension");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    detail::require(std::isfinite(lower[i]) && std::isfinite(upper[i]) && lower[i] < upper[i],
                    "box: empty or unbounded along coordinate " + std::to_string(i));
  }
}

void TrajectoryDataset::validate() const {
  detail::require(dt > 0.0, "dataset: window must be positive");
  detail::require(!initial_conditions.empty(), "dataset: no initial conditions");
  for (const auto& s : samples) {
    const bool known = std::any_of(initial_conditions.begin(), initial_conditions.end(),
                                   [&](const InitialCondition& ic) { return ic.traj_id == s.traj_id; });
    detail::require(known, "dataset: sample references unknown trajectory " +
                               std::to_string(s.traj_id));
    detail::require(s.t >= 0.0 && s.t <= dt, "dataset: sample time outside [0, dt]");
  }
}

TrajectoryDataset generate_dataset(const SystemSpec& sys, const Box& omega, int n_trajectories,
                                   int samples_per_trajectory, double dt, double noise_std,
                                   std::uint64_t seed) {
  omega.validate();
  detail::require(omega.dim() == 2 * static_cast<std::size_t>(sys.half_dim()),
                  "generate_dataset: box dimension does not match the system");
  detail::require(n_trajectories >= 1 && samples_per_trajectory >= 1,
                  "generate_dataset: need at least one trajectory and one sample");
  detail::require(dt > 0.0 && std::isfinite(dt), "generate_dataset: window must be positive");
  detail::require(noise_std >= 0.0, "generate_dataset: noise level must be nonnegative");

  TrajectoryDataset data;
  data.dt = dt;
  data.noise_std = noise_std;
  data.seed = seed;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t dim = omega.dim();
  for (int n = 0; n < n_trajectories; ++n) {
    std::vector<double> flat(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      flat[i] = omega.lower[i] + (omega.upper[i] - omega.lower[i]) * unit(rng);
    }
    data.initial_conditions.push_back({n, split(flat)});
  }
  std::normal_distribution<double> noise(0.0, noise_std > 0.0 ? noise_std : 1.0);
  for (const auto& ic : data.initial_conditions) {
    std::vector<double> times(static_cast<std::size_t>(samples_per_trajectory));
    for (double& t : times) t = dt * unit(rng);
    const auto sol = integrate(sys, ic.x0, dt);
    for (double t : times) {
      auto y = sol.state_at(t);
      if (noise_std > 0.0) {
        for (double& v : y) v += noise(rng);
      }
      data.samples.push_back({ic.traj_id, t, split(y)});
    }
  }
  return data;
}

}  // namespace sympflow
