#include "sympflow/systems.hpp"

#include <cmath>

namespace sympflow {

namespace {

void check_dim(const SystemSpec& sys, const PhasePoint& x, const char* who) {
  detail::require(x.q.size() == static_cast<std::size_t>(sys.half_dim()) &&
                      x.p.size() == x.q.size(),
                  std::string(who) + ": phase point dimension does not match " + sys.name());
}

}  // namespace

SystemSpec::SystemSpec(Variant v) : variant_(std::move(v)) {
  std::visit(
      [](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (!std::is_same_v<S, HenonHeiles>) {
          detail::require(s.mass > 0.0 && std::isfinite(s.mass), "system: mass must be positive");
          detail::require(s.spring > 0.0 && std::isfinite(s.spring),
                          "system: spring constant must be positive");
        }
        if constexpr (std::is_same_v<S, DampedAugmented>) {
          detail::require(s.damping >= 0.0 && std::isfinite(s.damping),
                          "system: damping must be nonnegative");
        }
      },
      variant_);
}

int SystemSpec::half_dim() const {
  return std::holds_alternative<HarmonicOscillator>(variant_) ? 1 : 2;
}

std::string SystemSpec::name() const {
  switch (variant_.index()) {
    case 0:
      return "sho";
    case 1:
      return "henon_heiles";
    default:
      return "damped";
  }
}

double hamiltonian(const SystemSpec& sys, const PhasePoint& x) {
  check_dim(sys, x, "hamiltonian");
  return kernel::hamiltonian<double>(sys, x);
}

std::vector<double> vector_field(const SystemSpec& sys, const PhasePoint& x) {
  check_dim(sys, x, "vector_field");
  return kernel::vector_field<double>(sys, x);
}

PhasePoint physical_limit_project(const PhasePoint& x) {
  detail::require(x.q.size() == 2 && x.p.size() == 2,
                  "physical_limit_project: expected an augmented point (q_a, q_b, pi_a, pi_b)");
  const double q = 0.5 * (x.q[0] + x.q[1]);
  const double p = 0.5 * (x.p[0] - x.p[1]);
  return {{q, q}, {p, -p}};
}

PhasePoint embed_physical(double q, double p) { return {{q, q}, {p, -p}}; }

PhasePoint analytic_solution(const SystemSpec& sys, const PhasePoint& x0, double t) {
  if (std::holds_alternative<HenonHeiles>(sys.variant())) {
    throw UnsupportedCase("analytic_solution: no closed form for " + sys.name());
  }
  detail::require(x0.q.size() == 1 && x0.p.size() == 1,
                  "analytic_solution: expected a physical (q, p) initial condition");
  if (const auto* sho = std::get_if<HarmonicOscillator>(&sys.variant())) {
    const double w = std::sqrt(sho->spring / sho->mass);
    const double c = std::cos(w * t), s = std::sin(w * t);
    const double q = x0.q[0] * c + x0.p[0] / (sho->mass * w) * s;
    const double v = -x0.q[0] * w * s + x0.p[0] / sho->mass * c;
    return {{q}, {sho->mass * v}};
  }
  if (const auto* damped = std::get_if<DampedAugmented>(&sys.variant())) {
    const double m = damped->mass;
    const double gamma = damped->damping / (2.0 * m);
    const double w0_sq = damped->spring / m;
    if (gamma * gamma >= w0_sq) {
      throw UnsupportedCase("analytic_solution: only the underdamped case is supported");
    }
    const double wd = std::sqrt(w0_sq - gamma * gamma);
    const double q0 = x0.q[0];
    const double v0 = x0.p[0] / m;
    const double decay = std::exp(-gamma * t);
    const double c = std::cos(wd * t), s = std::sin(wd * t);
    const double q = decay * (q0 * c + (v0 + gamma * q0) / wd * s);
    const double v = decay * (v0 * c - (gamma * v0 + w0_sq * q0) / wd * s);
    return {{q}, {m * v}};
  }
  throw UnsupportedCase("analytic_solution: no closed form for " + sys.name());
}

}  // namespace sympflow
