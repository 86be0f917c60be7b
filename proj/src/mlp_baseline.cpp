#include "sympflow/mlp_baseline.hpp"

#include <random>
#include <string>

namespace sympflow {

namespace {

void check_point(const MlpFlowModel& m, double t, const PhasePoint& x, const char* who) {
  detail::require(x.q.size() == static_cast<std::size_t>(m.dim()) && x.p.size() == x.q.size(),
                  std::string(who) + ": phase point dimension does not match the model");
  detail::require(std::isfinite(t), std::string(who) + ": time must be finite");
}

}  // namespace

MlpFlowModel::MlpFlowModel(int d, int layers, int h) : d_(d), h_(h) {
  detail::require(d > 0, "mlp: dimension must be positive");
  detail::require(layers > 0, "mlp: layer count must be positive");
  detail::require(h > 0, "mlp: hidden width must be positive");
  widths_.push_back(2 * d + 1);
  for (int i = 1; i < layers; ++i) widths_.push_back(h);
  widths_.push_back(2 * d);
  std::size_t count = 0;
  for (std::size_t i = 0; i + 1 < widths_.size(); ++i) {
    count += static_cast<std::size_t>(widths_[i] * widths_[i + 1] + widths_[i + 1]);
  }
  params_.assign(count, 0.0);
}

MlpFlowModel MlpFlowModel::random(int d, int layers, int h, std::uint64_t seed) {
  MlpFlowModel model(d, layers, h);
  std::mt19937_64 rng(seed);
  std::size_t at = 0;
  for (std::size_t i = 0; i + 1 < model.widths_.size(); ++i) {
    const int fan_in = model.widths_[i];
    const auto n = static_cast<std::size_t>(fan_in * model.widths_[i + 1] + model.widths_[i + 1]);
    const double bound = std::sqrt(1.0 / fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t k = 0; k < n; ++k) model.params_[at + k] = dist(rng);
    at += n;
  }
  return model;
}

void MlpFlowModel::set_flat_params(std::span<const double> flat) {
  detail::require(flat.size() == params_.size(), "mlp: flat parameter length mismatch");
  std::copy(flat.begin(), flat.end(), params_.begin());
}

std::size_t param_count(const MlpFlowModel& model) { return model.param_count(); }

PhasePoint forward(const MlpFlowModel& model, double t, const PhasePoint& x) {
  check_point(model, t, x, "forward");
  return kernel::forward<double>(make_view<double>(model, model.flat_params()), t, x);
}

PhasePoint time_derivative(const MlpFlowModel& model, double t, const PhasePoint& x,
                           DerivativeMode mode) {
  check_point(model, t, x, "time_derivative");
  const auto view = make_view<double>(model, model.flat_params());
  if (mode == DerivativeMode::FiniteDifference) {
    return kernel::central_time_difference<double>(view, t, x);
  }
  return kernel::forward_with_velocity<double>(view, t, x).velocity;
}

}  // namespace sympflow
