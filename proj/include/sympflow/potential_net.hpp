#pragma once

// Scalar potential V(t, q) = l3(tanh(l2(tanh(l1([q; t]))))) and its exact
// derivative quantities.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sympflow/ad.hpp"
#include "sympflow/errors.hpp"

namespace sympflow {

using ad::Var;

enum class QuantityKind { Value, TimePartial, InputGradient, MixedTimeInputGradient };

// Canonical order: A1 (h x (d+1), row-major, last column multiplies t), b1,
// A2 (h x h, row-major), b2, A3 (1 x h), b3.
[[nodiscard]] constexpr std::size_t potential_param_count(int d, int h) {
  const auto dd = static_cast<std::size_t>(d);
  const auto hh = static_cast<std::size_t>(h);
  return hh * (dd + 1) + hh + hh * hh + hh + hh + 1;
}

// Non-owning view of one potential's parameters in canonical order.
template <class T>
struct NetView {
  int d = 0;
  int h = 0;
  const T* p = nullptr;

  [[nodiscard]] const T* a1() const { return p; }
  [[nodiscard]] const T* b1() const { return p + h * (d + 1); }
  [[nodiscard]] const T* a2() const { return b1() + h; }
  [[nodiscard]] const T* b2() const { return a2() + h * h; }
  [[nodiscard]] const T* a3() const { return b2() + h; }
  [[nodiscard]] const T& b3() const { return a3()[h]; }
};

class PotentialNet {
 public:
  // All parameters zero.
  PotentialNet(int d, int h = 10);
  PotentialNet(int d, int h, std::vector<double> params);

  // Each layer uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static PotentialNet random(int d, int h, std::mt19937_64& rng);

  [[nodiscard]] int dim() const { return d_; }
  [[nodiscard]] int hidden() const { return h_; }
  [[nodiscard]] std::size_t param_count() const { return params_.size(); }
  [[nodiscard]] std::span<const double> params() const { return params_; }
  [[nodiscard]] std::span<double> mutable_params() { return params_; }
  void set_params(std::span<const double> values);

  [[nodiscard]] NetView<double> view() const { return {d_, h_, params_.data()}; }

  bool operator==(const PotentialNet&) const = default;

 private:
  int d_;
  int h_;
  std::vector<double> params_;
};

double eval(const PotentialNet& net, double t, std::span<const double> q);
double time_partial(const PotentialNet& net, double t, std::span<const double> q);
std::vector<double> grad_input(const PotentialNet& net, double t, std::span<const double> q);
std::vector<double> mixed_time_input_gradient(const PotentialNet& net, double t,
                                              std::span<const double> q);
std::vector<double> hessian_vector_product(const PotentialNet& net, double t,
                                           std::span<const double> q, std::span<const double> v);

// Gradient over all parameters of <cotangent, quantity(net, t, q)>. The
// cotangent has length 1 for scalar quantities and d for vector ones.
std::vector<double> param_grad(const PotentialNet& net, QuantityKind quantity, double t,
                               std::span<const double> q, std::span<const double> cotangent);

// ---------------------------------------------------------------------------
// Kernels, generic over double and ad::Var.

namespace kernel {

using std::tanh;

template <class T>
struct Activations {
  std::vector<T> a1, s1, a2, s2;
};

template <class T>
Activations<T> activate(const NetView<T>& n, const T& t, std::span<const T> q) {
  const int d = n.d, h = n.h;
  Activations<T> act;
  act.a1.resize(h);
  act.s1.resize(h);
  act.a2.resize(h);
  act.s2.resize(h);
  std::vector<T> in(q.begin(), q.end());
  in.push_back(t);
  for (int i = 0; i < h; ++i) {
    const T z = ad::dot(n.a1() + i * (d + 1), 1, in.data(), 1, d + 1, n.b1()[i]);
    act.a1[i] = tanh(z);
    act.s1[i] = T(1.0) - ad::square(act.a1[i]);
  }
  for (int i = 0; i < h; ++i) {
    const T z = ad::dot(n.a2() + i * h, 1, act.a1.data(), 1, h, n.b2()[i]);
    act.a2[i] = tanh(z);
    act.s2[i] = T(1.0) - ad::square(act.a2[i]);
  }
  return act;
}

template <class T>
T value(const NetView<T>& n, const T& t, std::span<const T> q) {
  const auto act = activate(n, t, q);
  return ad::dot(n.a3(), 1, act.a2.data(), 1, n.h, n.b3());
}

// Derivative of V along the input direction (dq, dt).
template <class T>
T directional(const NetView<T>& n, const Activations<T>& act, std::span<const T> dq, const T& dt) {
  const int d = n.d, h = n.h;
  std::vector<T> dir(dq.begin(), dq.end());
  dir.push_back(dt);
  std::vector<T> da1(h), da2(h);
  for (int i = 0; i < h; ++i) {
    da1[i] = act.s1[i] * ad::dot(n.a1() + i * (d + 1), 1, dir.data(), 1, d + 1);
  }
  for (int i = 0; i < h; ++i) {
    da2[i] = act.s2[i] * ad::dot(n.a2() + i * h, 1, da1.data(), 1, h);
  }
  return ad::dot(n.a3(), 1, da2.data(), 1, h);
}

template <class T>
T time_partial(const NetView<T>& n, const T& t, std::span<const T> q) {
  const auto act = activate(n, t, q);
  const std::vector<T> zero(static_cast<std::size_t>(n.d), T(0.0));
  return directional<T>(n, act, zero, T(1.0));
}

template <class T>
std::vector<T> input_gradient(const NetView<T>& n, const Activations<T>& act) {
  const int d = n.d, h = n.h;
  std::vector<T> g2(h), g1(h), grad(d);
  for (int i = 0; i < h; ++i) g2[i] = act.s2[i] * n.a3()[i];
  for (int j = 0; j < h; ++j) g1[j] = act.s1[j] * ad::dot(n.a2() + j, h, g2.data(), 1, h);
  for (int k = 0; k < d; ++k) grad[k] = ad::dot(n.a1() + k, d + 1, g1.data(), 1, h);
  return grad;
}

template <class T>
std::vector<T> input_gradient(const NetView<T>& n, const T& t, std::span<const T> q) {
  return input_gradient(n, activate(n, t, q));
}

template <class T>
struct GradientJet {
  std::vector<T> grad;     // grad_q V(t, q)
  std::vector<T> tangent;  // d/ds grad_q V(t + s dt, q + s dq) at s = 0
};

// grad_q V together with its derivative along (dq, dt). With (0, 1) the
// tangent is the mixed derivative d_t grad_q V; with (v, 0) it is the
// Hessian-vector product.
template <class T>
GradientJet<T> gradient_jet(const NetView<T>& n, const T& t, std::span<const T> q,
                            std::span<const T> dq, const T& dt) {
  const int d = n.d, h = n.h;
  const auto act = activate(n, t, q);
  std::vector<T> dir(dq.begin(), dq.end());
  dir.push_back(dt);

  std::vector<T> da1(h), da2(h);
  for (int i = 0; i < h; ++i) {
    da1[i] = act.s1[i] * ad::dot(n.a1() + i * (d + 1), 1, dir.data(), 1, d + 1);
  }
  for (int i = 0; i < h; ++i) {
    da2[i] = act.s2[i] * ad::dot(n.a2() + i * h, 1, da1.data(), 1, h);
  }

  // backward pass for grad_q V and its tangent
  std::vector<T> g2(h), dg2(h);
  for (int i = 0; i < h; ++i) {
    g2[i] = act.s2[i] * n.a3()[i];
    dg2[i] = T(-2.0) * act.a2[i] * da2[i] * n.a3()[i];
  }
  std::vector<T> g1(h), dg1(h);
  for (int j = 0; j < h; ++j) {
    const T u = ad::dot(n.a2() + j, h, g2.data(), 1, h);
    const T du = ad::dot(n.a2() + j, h, dg2.data(), 1, h);
    g1[j] = act.s1[j] * u;
    const T ds1 = T(-2.0) * act.a1[j] * da1[j];
    dg1[j] = ad::mul_add(ds1, u, act.s1[j], du);
  }
  GradientJet<T> jet;
  jet.grad.resize(d);
  jet.tangent.resize(d);
  for (int k = 0; k < d; ++k) {
    jet.grad[k] = ad::dot(n.a1() + k, d + 1, g1.data(), 1, h);
    jet.tangent[k] = ad::dot(n.a1() + k, d + 1, dg1.data(), 1, h);
  }
  return jet;
}

}  // namespace kernel
}  // namespace sympflow
