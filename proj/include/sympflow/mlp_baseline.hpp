#pragma once

// Unconstrained baseline flow psi(t, x) = x + tanh(t) * N([x; t]) where N is a
// tanh MLP with widths 2d+1, h, ..., h, 2d and a linear output layer.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "sympflow/ad.hpp"
#include "sympflow/phase_point.hpp"

namespace sympflow {

class MlpFlowModel {
 public:
  // `layers` affine maps; all parameters zero.
  MlpFlowModel(int d, int layers, int h = 10);
  static MlpFlowModel random(int d, int layers, int h, std::uint64_t seed);

  [[nodiscard]] int dim() const { return d_; }
  [[nodiscard]] int layers() const { return static_cast<int>(widths_.size()) - 1; }
  [[nodiscard]] int hidden() const { return h_; }
  // c_1 .. c_{L+1}
  [[nodiscard]] const std::vector<int>& widths() const { return widths_; }

  [[nodiscard]] std::size_t param_count() const { return params_.size(); }
  // Per layer in order: A_i row-major (c_{i+1} x c_i), then b_i.
  [[nodiscard]] std::span<const double> flat_params() const { return params_; }
  void set_flat_params(std::span<const double> flat);

  bool operator==(const MlpFlowModel&) const = default;

 private:
  int d_;
  int h_;
  std::vector<int> widths_;
  std::vector<double> params_;
};

std::size_t param_count(const MlpFlowModel& model);
PhasePoint forward(const MlpFlowModel& model, double t, const PhasePoint& x);
PhasePoint time_derivative(const MlpFlowModel& model, double t, const PhasePoint& x,
                           DerivativeMode mode = DerivativeMode::Exact);

template <class T>
struct MlpView {
  const std::vector<int>* widths = nullptr;
  const T* p = nullptr;
  int d = 0;
};

template <class T>
MlpView<T> make_view(const MlpFlowModel& shape, std::span<const T> flat) {
  detail::require(flat.size() == shape.param_count(), "mlp: flat parameter length mismatch");
  return {&shape.widths(), flat.data(), shape.dim()};
}

namespace kernel {

using std::tanh;

// Output of the inner network N([x; t]) and optionally its derivative in t.
template <class T>
void mlp_network(const MlpView<T>& m, const T& t, const PhaseState<T>& x, std::vector<T>& out,
                 std::vector<T>* out_dt) {
  const auto& w = *m.widths;
  std::vector<T> z(x.q);
  z.insert(z.end(), x.p.begin(), x.p.end());
  z.push_back(t);
  std::vector<T> dz;
  if (out_dt) {
    dz.assign(z.size(), T(0.0));
    dz.back() = T(1.0);
  }
  const T* at = m.p;
  const std::size_t n_layers = w.size() - 1;
  for (std::size_t layer = 0; layer < n_layers; ++layer) {
    const int in = w[layer];
    const int outw = w[layer + 1];
    const T* a = at;
    const T* b = at + static_cast<std::ptrdiff_t>(in) * outw;
    std::vector<T> u(static_cast<std::size_t>(outw));
    std::vector<T> du(out_dt ? static_cast<std::size_t>(outw) : 0);
    for (int i = 0; i < outw; ++i) {
      u[i] = ad::dot(a + i * in, 1, z.data(), 1, in, b[i]);
      if (out_dt) du[i] = ad::dot(a + i * in, 1, dz.data(), 1, in);
    }
    if (layer + 1 < n_layers) {
      for (int i = 0; i < outw; ++i) {
        u[i] = tanh(u[i]);
        if (out_dt) du[i] = (T(1.0) - ad::square(u[i])) * du[i];
      }
    }
    z = std::move(u);
    if (out_dt) dz = std::move(du);
    at = b + outw;
  }
  out = std::move(z);
  if (out_dt) *out_dt = std::move(dz);
}

template <class T>
PhaseState<T> forward(const MlpView<T>& m, const T& t, const PhaseState<T>& x) {
  std::vector<T> net;
  mlp_network<T>(m, t, x, net, nullptr);
  const T gate = tanh(t);
  PhaseState<T> y = x;
  const std::size_t d = x.q.size();
  for (std::size_t k = 0; k < d; ++k) {
    y.q[k] += gate * net[k];
    y.p[k] += gate * net[d + k];
  }
  return y;
}

template <class T>
struct MlpStateVelocity {
  PhaseState<T> state;
  PhaseState<T> velocity;
};

template <class T>
MlpStateVelocity<T> forward_with_velocity(const MlpView<T>& m, const T& t, const PhaseState<T>& x) {
  std::vector<T> net, net_dt;
  mlp_network<T>(m, t, x, net, &net_dt);
  const T gate = tanh(t);
  const T gate_dt = T(1.0) - ad::square(gate);
  MlpStateVelocity<T> out{x, {std::vector<T>(x.q.size()), std::vector<T>(x.p.size())}};
  const std::size_t d = x.q.size();
  for (std::size_t k = 0; k < d; ++k) {
    out.state.q[k] += gate * net[k];
    out.state.p[k] += gate * net[d + k];
    out.velocity.q[k] = ad::mul_add(gate_dt, net[k], gate, net_dt[k]);
    out.velocity.p[k] = ad::mul_add(gate_dt, net[d + k], gate, net_dt[d + k]);
  }
  return out;
}

template <class T>
PhaseState<T> central_time_difference(const MlpView<T>& m, const T& t, const PhaseState<T>& x) {
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
