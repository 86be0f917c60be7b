#pragma once

// Benchmark Hamiltonian systems.
//
// Coordinates are ordered [q; p]:
//   harmonic oscillator     (q, p)
//   Henon-Heiles            (q_x, q_y, p_x, p_y)
//   damped oscillator       (q_a, q_b, pi_a, pi_b) in the doubled phase space

#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "sympflow/ad.hpp"
#include "sympflow/phase_point.hpp"

namespace sympflow {

struct HarmonicOscillator {
  double mass = 1.0;
  double spring = 1.0;
};

struct HenonHeiles {};

// Doubled-variable form of m q'' + lambda q' + k q = 0.
struct DampedAugmented {
  double mass = 1.0;
  double spring = 1.0;
  double damping = 0.0;
};

class SystemSpec {
 public:
  using Variant = std::variant<HarmonicOscillator, HenonHeiles, DampedAugmented>;

  SystemSpec(Variant v);  // NOLINT: implicit on purpose
  template <class S>
    requires(!std::is_same_v<std::decay_t<S>, Variant> && !std::is_same_v<std::decay_t<S>, SystemSpec> &&
             std::is_constructible_v<Variant, S>)
  SystemSpec(S s) : SystemSpec(Variant(std::move(s))) {}  // NOLINT

  [[nodiscard]] const Variant& variant() const { return variant_; }
  [[nodiscard]] int half_dim() const;
  [[nodiscard]] std::string name() const;
  [[nodiscard]] bool is_damped() const { return std::holds_alternative<DampedAugmented>(variant_); }

 private:
  Variant variant_;
};

double hamiltonian(const SystemSpec& sys, const PhasePoint& x);
std::vector<double> vector_field(const SystemSpec& sys, const PhasePoint& x);

// (q_a, q_b, pi_a, pi_b) -> ((q_a+q_b)/2, (q_a+q_b)/2, (pi_a-pi_b)/2, -(pi_a-pi_b)/2)
PhasePoint physical_limit_project(const PhasePoint& x);
PhasePoint embed_physical(double q, double p);

// Closed-form trajectory. For the damped system x0 is the physical (q, p)
// as a one-dimensional phase point and the result is physical as well.
PhasePoint analytic_solution(const SystemSpec& sys, const PhasePoint& x0, double t);

namespace kernel {

template <class T>
T hamiltonian(const SystemSpec& sys, const PhaseState<T>& x) {
  return std::visit(
      [&x](const auto& s) -> T {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, HarmonicOscillator>) {
          return T(0.5 / s.mass) * ad::square(x.p[0]) + T(0.5 * s.spring) * ad::square(x.q[0]);
        } else if constexpr (std::is_same_v<S, HenonHeiles>) {
          const T& qx = x.q[0];
          const T& qy = x.q[1];
          const T kinetic = T(0.5) * (ad::square(x.p[0]) + ad::square(x.p[1]));
          const T potential = T(0.5) * (ad::square(qx) + ad::square(qy)) + ad::square(qx) * qy -
                              ad::square(qy) * qy * T(1.0 / 3.0);
          return kinetic + potential;
        } else {
          const T& qa = x.q[0];
          const T& qb = x.q[1];
          const T& pa = x.p[0];
          const T& pb = x.p[1];
          const T c = T(s.damping / (2.0 * s.mass));
          return T(0.5 / s.mass) * (ad::square(pa) - ad::square(pb)) + c * (qa - qb) * (pa - pb) +
                 T(0.5 * s.spring) * (qa - qb) * (qa + qb);
        }
      },
      sys.variant());
}

// dx/dt = J grad H(x), ordered [q_dot; p_dot].
template <class T>
std::vector<T> vector_field(const SystemSpec& sys, const PhaseState<T>& x) {
  return std::visit(
      [&x](const auto& s) -> std::vector<T> {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, HarmonicOscillator>) {
          return {x.p[0] * T(1.0 / s.mass), -(T(s.spring) * x.q[0])};
        } else if constexpr (std::is_same_v<S, HenonHeiles>) {
          const T& qx = x.q[0];
          const T& qy = x.q[1];
          return {x.p[0], x.p[1], -qx - T(2.0) * qx * qy, -qy - (ad::square(qx) - ad::square(qy))};
        } else {
          const T& qa = x.q[0];
          const T& qb = x.q[1];
          const T& pa = x.p[0];
          const T& pb = x.p[1];
          const T c = T(s.damping / (2.0 * s.mass));
          const T inv_m = T(1.0 / s.mass);
          const T k = T(s.spring);
          return {pa * inv_m + c * (qa - qb), -(pb * inv_m) - c * (qa - qb),
                  -(c * (pa - pb)) - k * qa, c * (pa - pb) + k * qb};
        }
      },
      sys.variant());
}

}  // namespace kernel
}  // namespace sympflow
