#include "sympflow/sympflow_model.hpp"

#include <random>
#include <string>

namespace sympflow {

namespace {

void check_point(int d, const PhasePoint& x, const char* who) {
  detail::require(x.q.size() == static_cast<std::size_t>(d) && x.p.size() == x.q.size(),
                  std::string(who) + ": phase point dimension does not match the model");
}

void check_time(double t, const char* who) {
  detail::require(std::isfinite(t), std::string(who) + ": time must be finite");
}

PhasePoint shear_layer(const PotentialNet& net, double t, const PhasePoint& x, bool position,
                       double sign, const char* who) {
  check_point(net.dim(), x, who);
  check_time(t, who);
  PhasePoint y = x;
  if (position) {
    kernel::q_layer<double>(net.view(), t, y, sign);
  } else {
    kernel::p_layer<double>(net.view(), t, y, sign);
  }
  return y;
}

// Tangent propagation through one shear: the target tangent moves by
// sign * (Hess V(t, s) - Hess V(0, s)) * source tangent.
void shear_tangent(const NetView<double>& net, double t, const std::vector<double>& source,
                   const std::vector<double>& source_tangent, std::vector<double>& target_tangent,
                   double sign) {
  const auto jet_t = kernel::gradient_jet<double>(net, t, source, source_tangent, 0.0);
  const auto jet_0 = kernel::gradient_jet<double>(net, 0.0, source, source_tangent, 0.0);
  for (std::size_t k = 0; k < target_tangent.size(); ++k) {
    target_tangent[k] += sign * (jet_t.tangent[k] - jet_0.tangent[k]);
  }
}

}  // namespace

SympFlowModel::SympFlowModel(int d, int layers, int h) : d_(d), h_(h) {
  detail::require(layers > 0, "sympflow: layer count must be positive");
  pairs_.reserve(static_cast<std::size_t>(layers));
  for (int i = 0; i < layers; ++i) pairs_.push_back({PotentialNet(d, h), PotentialNet(d, h)});
}

SympFlowModel SympFlowModel::random(int d, int layers, int h, std::uint64_t seed) {
  SympFlowModel model(d, layers, h);
  std::mt19937_64 rng(seed);
  for (auto& pair : model.pairs_) {
    pair.position = PotentialNet::random(d, h, rng);
    pair.momentum = PotentialNet::random(d, h, rng);
  }
  return model;
}

const LayerPair& SympFlowModel::pair(int i) const {
  detail::require(i >= 0 && i < layers(), "sympflow: layer index out of range");
  return pairs_[static_cast<std::size_t>(i)];
}

LayerPair& SympFlowModel::pair(int i) {
  detail::require(i >= 0 && i < layers(), "sympflow: layer index out of range");
  return pairs_[static_cast<std::size_t>(i)];
}

std::size_t SympFlowModel::param_count() const {
  return 2 * pairs_.size() * potential_param_count(d_, h_);
}

std::vector<double> SympFlowModel::flat_params() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  for (const auto& pair : pairs_) {
    flat.insert(flat.end(), pair.position.params().begin(), pair.position.params().end());
    flat.insert(flat.end(), pair.momentum.params().begin(), pair.momentum.params().end());
  }
  return flat;
}

void SympFlowModel::set_flat_params(std::span<const double> flat) {
  detail::require(flat.size() == param_count(), "sympflow: flat parameter length mismatch");
  const std::size_t per_net = potential_param_count(d_, h_);
  std::size_t at = 0;
  for (auto& pair : pairs_) {
    pair.position.set_params(flat.subspan(at, per_net));
    pair.momentum.set_params(flat.subspan(at + per_net, per_net));
    at += 2 * per_net;
  }
}

std::size_t param_count(const SympFlowModel& model) { return model.param_count(); }

PhasePoint apply_q_layer(const PotentialNet& net, double t, const PhasePoint& x) {
  return shear_layer(net, t, x, true, 1.0, "apply_q_layer");
}

PhasePoint apply_p_layer(const PotentialNet& net, double t, const PhasePoint& x) {
  return shear_layer(net, t, x, false, 1.0, "apply_p_layer");
}

PhasePoint invert_q_layer(const PotentialNet& net, double t, const PhasePoint& x) {
  return shear_layer(net, t, x, true, -1.0, "invert_q_layer");
}

PhasePoint invert_p_layer(const PotentialNet& net, double t, const PhasePoint& x) {
  return shear_layer(net, t, x, false, -1.0, "invert_p_layer");
}

PhasePoint forward(const SympFlowModel& model, double t, const PhasePoint& x) {
  check_point(model.dim(), x, "forward");
  check_time(t, "forward");
  const auto flat = model.flat_params();
  return kernel::forward<double>(make_view<double>(model, flat), t, x);
}

PhasePoint time_derivative(const SympFlowModel& model, double t, const PhasePoint& x,
                           DerivativeMode mode) {
  check_point(model.dim(), x, "time_derivative");
  check_time(t, "time_derivative");
  const auto flat = model.flat_params();
  const auto view = make_view<double>(model, flat);
  if (mode == DerivativeMode::FiniteDifference) {
    return kernel::central_time_difference<double>(view, t, x);
  }
  return kernel::forward_with_velocity<double>(view, t, x).velocity;
}

Matrix jacobian(const SympFlowModel& model, double t, const PhasePoint& x) {
  check_point(model.dim(), x, "jacobian");
  check_time(t, "jacobian");
  const auto d = static_cast<std::size_t>(model.dim());
  Matrix jac(2 * d, 2 * d);
  const auto flat = model.flat_params();
  const auto view = make_view<double>(model, flat);
  for (std::size_t col = 0; col < 2 * d; ++col) {
    PhasePoint state = x;
    PhasePoint tangent{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    if (col < d) {
      tangent.q[col] = 1.0;
    } else {
      tangent.p[col - d] = 1.0;
    }
    for (const auto& [vq, vp] : view.pairs) {
      shear_tangent(vq, t, state.q, tangent.q, tangent.p, -1.0);
      kernel::q_layer<double>(vq, t, state);
      shear_tangent(vp, t, state.p, tangent.p, tangent.q, 1.0);
      kernel::p_layer<double>(vp, t, state);
    }
    for (std::size_t r = 0; r < d; ++r) {
      jac(r, col) = tangent.q[r];
      jac(d + r, col) = tangent.p[r];
    }
  }
  return jac;
}

}  // namespace sympflow
