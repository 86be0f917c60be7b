#include "sympflow/hamiltonian_extract.hpp"

#include <cmath>
#include <string>

namespace sympflow {

namespace {

void check_inputs(const SympFlowModel& model, double t, const PhasePoint& x, const char* who) {
  detail::require(x.q.size() == static_cast<std::size_t>(model.dim()) && x.p.size() == x.q.size(),
                  std::string(who) + ": phase point dimension does not match the model");
  detail::require(std::isfinite(t), std::string(who) + ": time must be finite");
}

}  // namespace

double pair_hamiltonian(const SympFlowModel& model, int pair, double t, const PhasePoint& x) {
  check_inputs(model, t, x, "pair_hamiltonian");
  const auto& lp = model.pair(pair);
  return kernel::pair_hamiltonian<double>(lp.position.view(), lp.momentum.view(), t, x);
}

PhasePoint tail_inverse(const SympFlowModel& model, int first, double t, const PhasePoint& x) {
  check_inputs(model, t, x, "tail_inverse");
  detail::require(first >= 0 && first <= model.layers(), "tail_inverse: pair index out of range");
  const auto flat = model.flat_params();
  return kernel::tail_inverse<double>(make_view<double>(model, flat), first, t, x);
}

double extract(const SympFlowModel& model, double t, const PhasePoint& x) {
  check_inputs(model, t, x, "extract");
  const auto flat = model.flat_params();
  return kernel::extract<double>(make_view<double>(model, flat), t, x);
}

std::vector<double> extract_gradient(const SympFlowModel& model, double t, const PhasePoint& x,
                                     DerivativeMode mode) {
  check_inputs(model, t, x, "extract_gradient");
  const auto flat = model.flat_params();
  const auto d = x.q.size();
  std::vector<double> grad(2 * d);

  if (mode == DerivativeMode::FiniteDifference) {
    const auto view = make_view<double>(model, flat);
    auto coords = flatten(x);
    for (std::size_t k = 0; k < 2 * d; ++k) {
      const double saved = coords[k];
      coords[k] = saved + kHamiltonianFdStep;
      const double up = kernel::extract<double>(view, t, split(coords));
      coords[k] = saved - kHamiltonianFdStep;
      const double down = kernel::extract<double>(view, t, split(coords));
      coords[k] = saved;
      grad[k] = (up - down) / (2.0 * kHamiltonianFdStep);
    }
    return grad;
  }

  // Reverse mode over the state; the parameters enter as constants.
  ad::Tape tape;
  ad::TapeScope scope(tape);
  const std::vector<Var> params(flat.begin(), flat.end());
  const auto view = make_view<Var>(model, params);
  PhaseState<Var> xs;
  for (double v : x.q) xs.q.push_back(Var::leaf(v));
  for (double v : x.p) xs.p.push_back(Var::leaf(v));
  const auto leaves = flatten(xs);
  const Var h = kernel::extract<Var>(view, Var(t), xs);
  std::vector<double> adjoint;
  tape.backward(h.i, 1.0, adjoint);
  for (std::size_t k = 0; k < 2 * d; ++k) {
    grad[k] = adjoint[static_cast<std::size_t>(leaves[k].i)];
  }
  return grad;
}

double piecewise_hamiltonian(const SympFlowModel& model, double dt, double t, const PhasePoint& x) {
  detail::require(dt > 0.0 && std::isfinite(dt), "piecewise_hamiltonian: window must be positive");
  detail::require(t >= 0.0, "piecewise_hamiltonian: time must be nonnegative");
  const double windows = std::floor(t / dt);
  return extract(model, t - dt * windows, x);
}

}  // namespace sympflow
