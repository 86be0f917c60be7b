#pragma once

// Exact time-dependent Hamiltonian generating a SympFlow.
//
// Pair i (phi_p^i o phi_q^i) is generated by
//   H^i(t, q, p) = dV_p^i/dt(t, p) + dV_q^i/dt(t, q - (grad V_p^i(t, p) - grad V_p^i(0, p)))
// and the full network by
//   H(t, x) = sum_i H^i(t, (P_{i+1} o ... o P_L)^{-1}(x)),
// which is the composition rule for Hamiltonian flows unrolled from the last
// pair to the first. No time-only offset is added.
//
// Pair indices are zero-based here: pairs 0 .. L-1.

#include <iterator>
#include <vector>

#include "sympflow/sympflow_model.hpp"

namespace sympflow {

double pair_hamiltonian(const SympFlowModel& model, int pair, double t, const PhasePoint& x);

// Inverse of P_{L-1} o ... o P_first at time t. `first == layers()` gives x.
PhasePoint tail_inverse(const SympFlowModel& model, int first, double t, const PhasePoint& x);

double extract(const SympFlowModel& model, double t, const PhasePoint& x);

// grad_x of `extract`, ordered [dH/dq; dH/dp].
std::vector<double> extract_gradient(const SympFlowModel& model, double t, const PhasePoint& x,
                                     DerivativeMode mode = DerivativeMode::Exact);

// Hamiltonian of the periodic long-time extension:
// extract(model, t - dt * floor(t / dt), x).
double piecewise_hamiltonian(const SympFlowModel& model, double dt, double t, const PhasePoint& x);

inline constexpr double kHamiltonianFdStep = 1e-5;

namespace kernel {

template <class T>
T pair_hamiltonian(const NetView<T>& vq, const NetView<T>& vp, const T& t, const PhaseState<T>& x) {
  const std::vector<T> zero(x.p.size(), T(0.0));
  const auto act_p = activate<T>(vp, t, x.p);
  const T vdot_p = directional<T>(vp, act_p, zero, T(1.0));
  const auto g_t = input_gradient<T>(vp, act_p);
  const auto g_0 = input_gradient<T>(vp, T(0.0), x.p);
  std::vector<T> q(x.q);
  for (std::size_t k = 0; k < q.size(); ++k) q[k] -= g_t[k] - g_0[k];
  return vdot_p + time_partial<T>(vq, t, q);
}

template <class T>
void invert_pair(const NetView<T>& vq, const NetView<T>& vp, const T& t, PhaseState<T>& x) {
  p_layer(vp, t, x, -1.0);
  q_layer(vq, t, x, -1.0);
}

template <class T>
PhaseState<T> tail_inverse(const SympFlowView<T>& m, int first, const T& t, PhaseState<T> x) {
  for (int i = static_cast<int>(m.pairs.size()) - 1; i >= first; --i) {
    invert_pair(m.pairs[static_cast<std::size_t>(i)].first,
                m.pairs[static_cast<std::size_t>(i)].second, t, x);
  }
  return x;
}

// Accumulates the pair terms from the last pair backwards, carrying the
// running tail inverse so every pair is inverted once.
template <class T>
T extract(const SympFlowView<T>& m, const T& t, PhaseState<T> x) {
  T total(0.0);
  for (auto it = m.pairs.rbegin(); it != m.pairs.rend(); ++it) {
    total += pair_hamiltonian<T>(it->first, it->second, t, x);
    if (std::next(it) != m.pairs.rend()) invert_pair<T>(it->first, it->second, t, x);
  }
  return total;
}

}  // namespace kernel
}  // namespace sympflow
