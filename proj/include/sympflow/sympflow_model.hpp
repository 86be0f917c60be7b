#pragma once

// Time-dependent symplectic flow built from exact shear maps.
//
//   psi(t, .) = phi_p^L o phi_q^L o ... o phi_p^1 o phi_q^1
//
// where the position shear phi_q leaves q fixed and moves p by
// -(grad V_q(t, q) - grad V_q(0, q)), and the momentum shear phi_p leaves p
// fixed and moves q by +(grad V_p(t, p) - grad V_p(0, p)).

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sympflow/phase_point.hpp"
#include "sympflow/potential_net.hpp"

namespace sympflow {

struct LayerPair {
  PotentialNet position;  // V_q, updates p
  PotentialNet momentum;  // V_p, updates q

  bool operator==(const LayerPair&) const = default;
};

class SympFlowModel {
 public:
  // L layer pairs with all parameters zero (the identity map).
  SympFlowModel(int d, int layers, int h = 10);
  static SympFlowModel random(int d, int layers, int h, std::uint64_t seed);

  [[nodiscard]] int dim() const { return d_; }
  [[nodiscard]] int hidden() const { return h_; }
  [[nodiscard]] int layers() const { return static_cast<int>(pairs_.size()); }

  [[nodiscard]] const LayerPair& pair(int i) const;
  LayerPair& pair(int i);

  [[nodiscard]] std::size_t param_count() const;
  // Nets in order (Vq_1, Vp_1, ..., Vq_L, Vp_L), each in canonical order.
  [[nodiscard]] std::vector<double> flat_params() const;
  void set_flat_params(std::span<const double> flat);

  bool operator==(const SympFlowModel&) const = default;

 private:
  int d_;
  int h_;
  std::vector<LayerPair> pairs_;
};

std::size_t param_count(const SympFlowModel& model);

PhasePoint apply_q_layer(const PotentialNet& net, double t, const PhasePoint& x);
PhasePoint apply_p_layer(const PotentialNet& net, double t, const PhasePoint& x);
PhasePoint invert_q_layer(const PotentialNet& net, double t, const PhasePoint& x);
PhasePoint invert_p_layer(const PotentialNet& net, double t, const PhasePoint& x);

PhasePoint forward(const SympFlowModel& model, double t, const PhasePoint& x);
PhasePoint time_derivative(const SympFlowModel& model, double t, const PhasePoint& x,
                           DerivativeMode mode = DerivativeMode::Exact);
// D_x psi(t, x), rows and columns ordered [q; p].
Matrix jacobian(const SympFlowModel& model, double t, const PhasePoint& x);

// ---------------------------------------------------------------------------
// Generic kernels over a flat parameter vector of any scalar type.

template <class T>
struct SympFlowView {
  int d = 0;
  int h = 0;
  std::vector<std::pair<NetView<T>, NetView<T>>> pairs;
};

template <class T>
SympFlowView<T> make_view(const SympFlowModel& shape, std::span<const T> flat) {
  detail::require(flat.size() == shape.param_count(), "sympflow: flat parameter length mismatch");
  SympFlowView<T> v{shape.dim(), shape.hidden(), {}};
  const std::size_t per_net = potential_param_count(shape.dim(), shape.hidden());
  const T* at = flat.data();
  for (int i = 0; i < shape.layers(); ++i) {
    NetView<T> vq{shape.dim(), shape.hidden(), at};
    NetView<T> vp{shape.dim(), shape.hidden(), at + per_net};
    v.pairs.emplace_back(vq, vp);
    at += 2 * per_net;
  }
  return v;
}

namespace kernel {

// Moves `target` by sign * (grad V(t, source) - grad V(0, source)).
template <class T>
void shear(const NetView<T>& net, const T& t, const std::vector<T>& source, std::vector<T>& target,
           double sign) {
  const auto g_t = input_gradient<T>(net, t, source);
  const auto g_0 = input_gradient<T>(net, T(0.0), source);
  for (std::size_t k = 0; k < target.size(); ++k) target[k] += T(sign) * (g_t[k] - g_0[k]);
}

template <class T>
void q_layer(const NetView<T>& net, const T& t, PhaseState<T>& x, double sign = 1.0) {
  shear(net, t, x.q, x.p, -sign);
}

template <class T>
void p_layer(const NetView<T>& net, const T& t, PhaseState<T>& x, double sign = 1.0) {
  shear(net, t, x.p, x.q, sign);
}

template <class T>
PhaseState<T> forward(const SympFlowView<T>& m, const T& t, PhaseState<T> x) {
  for (const auto& [vq, vp] : m.pairs) {
    q_layer(vq, t, x);
    p_layer(vp, t, x);
  }
  return x;
}

// Shear together with its time derivative along a trajectory whose state
// velocity is `source_dot` for the source coordinates.
template <class T>
void shear_with_velocity(const NetView<T>& net, const T& t, const std::vector<T>& source,
                         const std::vector<T>& source_dot, std::vector<T>& target,
                         std::vector<T>& target_dot, double sign) {
  const auto jet_t = gradient_jet<T>(net, t, source, source_dot, T(1.0));
  const auto jet_0 = gradient_jet<T>(net, T(0.0), source, source_dot, T(0.0));
  for (std::size_t k = 0; k < target.size(); ++k) {
    target[k] += T(sign) * (jet_t.grad[k] - jet_0.grad[k]);
    target_dot[k] += T(sign) * (jet_t.tangent[k] - jet_0.tangent[k]);
  }
}

template <class T>
struct StateVelocity {
  PhaseState<T> state;
  PhaseState<T> velocity;
};

template <class T>
StateVelocity<T> forward_with_velocity(const SympFlowView<T>& m, const T& t, PhaseState<T> x) {
  PhaseState<T> v{std::vector<T>(x.q.size(), T(0.0)), std::vector<T>(x.p.size(), T(0.0))};
  for (const auto& [vq, vp] : m.pairs) {
    shear_with_velocity(vq, t, x.q, v.q, x.p, v.p, -1.0);
    shear_with_velocity(vp, t, x.p, v.p, x.q, v.q, 1.0);
  }
  return {std::move(x), std::move(v)};
}

template <class T>
PhaseState<T> central_time_difference(const SympFlowView<T>& m, const T& t, const PhaseState<T>& x) {
  const auto plus = forward(m, t + T(kFlowFdStep), x);
  const auto minus = forward(m, t - T(kFlowFdStep), x);
  PhaseState<T> v{std::vector<T>(x.q.size()), std::vector<T>(x.p.size())};
  const T scale(0.5 / kFlowFdStep);
  for (std::size_t k = 0; k < x.q.size(); ++k) {
    v.q[k] = (plus.q[k] - minus.q[k]) * scale;
    v.p[k] = (plus.p[k] - minus.p[k]) * scale;
  }
  return v;
}

}  // namespace kernel
}  // namespace sympflow
