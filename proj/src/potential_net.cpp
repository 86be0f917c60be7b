#include "sympflow/potential_net.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sympflow {

namespace {

void check_shape(int d, int h) {
  detail::require(d > 0, "potential net: input dimension must be positive");
  detail::require(h > 0, "potential net: hidden width must be positive");
}

void check_input(const PotentialNet& net, double t, std::span<const double> q) {
  detail::require(q.size() == static_cast<std::size_t>(net.dim()),
                  "potential net: expected input of dimension " + std::to_string(net.dim()) +
                      ", got " + std::to_string(q.size()));
  detail::require(std::isfinite(t), "potential net: time must be finite");
}

void fill_uniform(std::span<double> out, int fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(1.0 / fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& x : out) x = dist(rng);
}

}  // namespace

PotentialNet::PotentialNet(int d, int h) : d_(d), h_(h) {
  check_shape(d, h);
  params_.assign(potential_param_count(d, h), 0.0);
}

PotentialNet::PotentialNet(int d, int h, std::vector<double> params)
    : d_(d), h_(h), params_(std::move(params)) {
  check_shape(d, h);
  detail::require(params_.size() == potential_param_count(d, h),
                  "potential net: parameter vector has wrong length");
}

PotentialNet PotentialNet::random(int d, int h, std::mt19937_64& rng) {
  PotentialNet net(d, h);
  auto p = net.mutable_params();
  const auto hh = static_cast<std::size_t>(h);
  const auto in = static_cast<std::size_t>(d + 1);
  std::size_t at = 0;
  // layer 1 weights and bias share fan_in = d + 1
  fill_uniform(p.subspan(at, hh * in + hh), d + 1, rng);
  at += hh * in + hh;
  fill_uniform(p.subspan(at, hh * hh + hh), h, rng);
  at += hh * hh + hh;
  fill_uniform(p.subspan(at, hh + 1), h, rng);
  return net;
}

void PotentialNet::set_params(std::span<const double> values) {
  detail::require(values.size() == params_.size(),
                  "potential net: parameter vector has wrong length");
  std::copy(values.begin(), values.end(), params_.begin());
}

double eval(const PotentialNet& net, double t, std::span<const double> q) {
  check_input(net, t, q);
  return kernel::value<double>(net.view(), t, q);
}

double time_partial(const PotentialNet& net, double t, std::span<const double> q) {
  check_input(net, t, q);
  return kernel::time_partial<double>(net.view(), t, q);
}

std::vector<double> grad_input(const PotentialNet& net, double t, std::span<const double> q) {
  check_input(net, t, q);
  return kernel::input_gradient<double>(net.view(), t, q);
}

std::vector<double> mixed_time_input_gradient(const PotentialNet& net, double t,
                                              std::span<const double> q) {
  check_input(net, t, q);
  const std::vector<double> zero(q.size(), 0.0);
  return kernel::gradient_jet<double>(net.view(), t, q, zero, 1.0).tangent;
}

std::vector<double> hessian_vector_product(const PotentialNet& net, double t,
                                           std::span<const double> q, std::span<const double> v) {
  check_input(net, t, q);
  detail::require(v.size() == q.size(), "hessian_vector_product: direction has wrong dimension");
  return kernel::gradient_jet<double>(net.view(), t, q, v, 0.0).tangent;
}

std::vector<double> param_grad(const PotentialNet& net, QuantityKind quantity, double t,
                               std::span<const double> q, std::span<const double> cotangent) {
  check_input(net, t, q);
  const bool scalar = quantity == QuantityKind::Value || quantity == QuantityKind::TimePartial;
  const std::size_t out_dim = scalar ? 1 : q.size();
  detail::require(cotangent.size() == out_dim,
                  "param_grad: cotangent dimension does not match the quantity");

  ad::Tape tape;
  ad::TapeScope scope(tape);
  std::vector<Var> params;
  params.reserve(net.param_count());
  for (double v : net.params()) params.push_back(Var::leaf(v));
  const NetView<Var> view{net.dim(), net.hidden(), params.data()};
  const std::vector<Var> qv(q.begin(), q.end());
  const Var tv(t);

  std::vector<Var> out;
  switch (quantity) {
    case QuantityKind::Value:
      out.push_back(kernel::value<Var>(view, tv, qv));
      break;
    case QuantityKind::TimePartial:
      out.push_back(kernel::time_partial<Var>(view, tv, qv));
      break;
    case QuantityKind::InputGradient:
      out = kernel::input_gradient<Var>(view, tv, qv);
      break;
    case QuantityKind::MixedTimeInputGradient: {
      const std::vector<Var> zero(q.size(), Var(0.0));
      out = kernel::gradient_jet<Var>(view, tv, qv, zero, Var(1.0)).tangent;
      break;
    }
  }
  std::vector<Var> weights(cotangent.begin(), cotangent.end());
  const Var objective = ad::dot(out.data(), 1, weights.data(), 1, out.size());

  std::vector<double> adjoint;
  tape.backward(objective.i, 1.0, adjoint);
  std::vector<double> grad(net.param_count(), 0.0);
  for (std::size_t k = 0; k < grad.size(); ++k) {
    if (params[k].i < static_cast<ad::Tape::Index>(adjoint.size())) grad[k] = adjoint[params[k].i];
  }
  return grad;
}

}  // namespace sympflow
