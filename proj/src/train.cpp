#include "sympflow/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sympflow {

namespace {

template <class V>
struct scalar_of;
template <class T>
struct scalar_of<SympFlowView<T>> {
  using type = T;
};
template <class T>
struct scalar_of<MlpView<T>> {
  using type = T;
};
template <class V>
using scalar_t = typename scalar_of<std::decay_t<V>>::type;

std::vector<double> params_of(const SympFlowModel& m) { return m.flat_params(); }
std::vector<double> params_of(const MlpFlowModel& m) {
  return {m.flat_params().begin(), m.flat_params().end()};
}

template <class T>
T squared_distance(const PhaseState<T>& a, const PhaseState<T>& b) {
  T s(0.0);
  for (std::size_t k = 0; k < a.q.size(); ++k) s += ad::square(a.q[k] - b.q[k]);
  for (std::size_t k = 0; k < a.p.size(); ++k) s += ad::square(a.p[k] - b.p[k]);
  return s;
}

template <class T>
T squared_distance(const PhaseState<T>& v, const std::vector<T>& flat) {
  const std::size_t d = v.q.size();
  T s(0.0);
  for (std::size_t k = 0; k < d; ++k) s += ad::square(v.q[k] - flat[k]);
  for (std::size_t k = 0; k < d; ++k) s += ad::square(v.p[k] - flat[d + k]);
  return s;
}

// Mean over `n` points of term(view, i) evaluated in doubles.
template <class Model, class Term>
double mean_value(const Model& model, std::size_t n, Term&& term) {
  const auto flat = params_of(model);
  const auto view = make_view<double>(model, std::span<const double>(flat));
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += term(view, i);
  return sum / static_cast<double>(n);
}

// Adds scale * d(term_i)/d(params) for every point to `grad`; returns
// scale * sum of terms. One tape holds the parameter leaves and is cut back
// to them after each point.
template <class Model, class Term>
double accumulate_gradient(const Model& model, std::span<const double> flat, std::size_t n,
                           double scale, Term&& term, std::vector<double>& grad) {
  ad::Tape tape;
  ad::TapeScope scope(tape);
  std::vector<Var> leaves;
  leaves.reserve(flat.size());
  for (double v : flat) leaves.push_back(Var::leaf(v));
  const auto view = make_view<Var>(model, std::span<const Var>(leaves));
  const auto base = tape.size();
  std::vector<double> adjoint;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Var r = term(view, i);
    sum += r.v;
    tape.backward(r.i, scale, adjoint);
    for (std::size_t j = 0; j < flat.size(); ++j) grad[j] += adjoint[j];
    tape.truncate(base);
  }
  return sum * scale;
}

void check_points(int d, std::span<const CollocationPoint> points, const char* who) {
  detail::require(!points.empty(), std::string(who) + ": empty batch");
  for (const auto& pt : points) {
    detail::require(pt.x.q.size() == static_cast<std::size_t>(d) && pt.x.p.size() == pt.x.q.size(),
                    std::string(who) + ": point dimension does not match the model");
  }
}

void check_system(int d, const SystemSpec& sys, const char* who) {
  detail::require(sys.half_dim() == d,
                  std::string(who) + ": model dimension does not match " + sys.name());
}

// Per-point terms. `View` is a SympFlowView or MlpView of any scalar.

template <class View>
auto residual_term(const View& v, const CollocationPoint& pt, const SystemSpec& sys,
                   DerivativeMode mode) {
  using T = scalar_t<View>;
  const auto x = lift<T>(pt.x);
  const T t(pt.t);
  if (mode == DerivativeMode::Exact) {
    const auto sv = kernel::forward_with_velocity<T>(v, t, x);
    return squared_distance(sv.velocity, kernel::vector_field<T>(sys, sv.state));
  }
  const auto state = kernel::forward<T>(v, t, x);
  const auto vel = kernel::central_time_difference<T>(v, t, x);
  return squared_distance(vel, kernel::vector_field<T>(sys, state));
}

template <class T>
T ham_match_term(const SympFlowView<T>& v, const CollocationPoint& pt, const SystemSpec& sys) {
  const T h = kernel::extract<T>(v, T(pt.t), lift<T>(pt.x));
  return ad::square(h - T(hamiltonian(sys, pt.x)));
}

template <class T>
T energy_reg_term(const MlpView<T>& v, const CollocationPoint& pt, const SystemSpec& sys) {
  const auto y = kernel::forward<T>(v, T(pt.t), lift<T>(pt.x));
  return ad::square(kernel::hamiltonian<T>(sys, y) - T(hamiltonian(sys, pt.x)));
}

template <class View>
auto supervised_term(const View& v, const TrajectoryDataset& data,
                     const std::vector<const PhasePoint*>& x0_of, std::size_t s) {
  using T = scalar_t<View>;
  const auto& sample = data.samples[s];
  const auto y = kernel::forward<T>(v, T(sample.t), lift<T>(*x0_of[s]));
  return squared_distance(y, lift<T>(sample.y));
}

// Initial condition of every sample, resolved once.
std::vector<const PhasePoint*> sample_origins(const TrajectoryDataset& data, int d) {
  data.validate();
  detail::require(!data.samples.empty(), "supervised loss: empty dataset");
  std::vector<const PhasePoint*> out(data.samples.size());
  for (std::size_t s = 0; s < data.samples.size(); ++s) {
    const auto it = std::find_if(
        data.initial_conditions.begin(), data.initial_conditions.end(),
        [&](const InitialCondition& ic) { return ic.traj_id == data.samples[s].traj_id; });
    out[s] = &it->x0;
  }
  detail::require(out.front()->q.size() == static_cast<std::size_t>(d),
                  "supervised loss: dataset dimension does not match the model");
  return out;
}

template <class Model>
double supervised_value(const Model& model, const TrajectoryDataset& data) {
  const auto origins = sample_origins(data, model.dim());
  return mean_value(model, data.samples.size(), [&](const auto& v, std::size_t s) {
    return supervised_term(v, data, origins, s);
  });
}

template <class Model>
LossGradient supervised_gradient(const Model& model, const TrajectoryDataset& data,
                                 std::span<const std::size_t> indices) {
  detail::require(!indices.empty(), "supervised loss: empty minibatch");
  const auto origins = sample_origins(data, model.dim());
  const auto flat = params_of(model);
  LossGradient out;
  out.grad.assign(flat.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(indices.size());
  out.value = accumulate_gradient(
      model, flat, indices.size(), scale,
      [&](const auto& v, std::size_t i) {
        detail::require(indices[i] < data.samples.size(), "supervised loss: sample index out of range");
        return supervised_term(v, data, origins, indices[i]);
      },
      out.grad);
  return out;
}

template <class Model>
double residual_value(const Model& model, std::span<const CollocationPoint> points,
                      const SystemSpec& sys, DerivativeMode mode) {
  check_points(model.dim(), points, "residual loss");
  check_system(model.dim(), sys, "residual loss");
  return mean_value(model, points.size(), [&](const auto& v, std::size_t i) {
    return residual_term(v, points[i], sys, mode);
  });
}

// Matching term for each family: L2 or the energy regularizer.
double matching_value(const SympFlowModel& m, std::span<const CollocationPoint> pts,
                      const SystemSpec& sys) {
  return loss_ham_match(m, pts, sys);
}
double matching_value(const MlpFlowModel& m, std::span<const CollocationPoint> pts,
                      const SystemSpec& sys) {
  return loss_energy_reg(m, pts, sys);
}

template <class View>
auto matching_term(const View& v, const CollocationPoint& pt, const SystemSpec& sys) {
  using T = scalar_t<View>;
  if constexpr (std::is_same_v<std::decay_t<View>, SympFlowView<T>>) {
    return ham_match_term<T>(v, pt, sys);
  } else {
    return energy_reg_term<T>(v, pt, sys);
  }
}

template <class Model>
LossGradient unsupervised_gradient(const Model& model, const LossBatches& batches,
                                   const SystemSpec& sys, bool with_matching,
                                   DerivativeMode mode) {
  check_points(model.dim(), batches.collocation, "residual loss");
  check_system(model.dim(), sys, "residual loss");
  if (with_matching) check_points(model.dim(), batches.matching, "matching loss");
  const auto flat = params_of(model);
  LossGradient out;
  out.grad.assign(flat.size(), 0.0);
  const auto& col = batches.collocation;
  out.residual = accumulate_gradient(
      model, flat, col.size(), 1.0 / static_cast<double>(col.size()),
      [&](const auto& v, std::size_t i) { return residual_term(v, col[i], sys, mode); }, out.grad);
  if (with_matching) {
    const auto& mat = batches.matching;
    out.matching = accumulate_gradient(
        model, flat, mat.size(), 1.0 / static_cast<double>(mat.size()),
        [&](const auto& v, std::size_t i) { return matching_term(v, mat[i], sys); }, out.grad);
  }
  out.value = out.residual + out.matching;
  return out;
}

template <class Model>
double unsupervised_total(const Model& model, Regime regime, const LossBatches& batches,
                          const SystemSpec& sys, DerivativeMode mode) {
  detail::require(regime != Regime::Supervised, "total_loss: the supervised regime needs a dataset");
  double total = residual_value(model, batches.collocation, sys, mode);
  if (regime != Regime::ResidualOnly) total += matching_value(model, batches.matching, sys);
  return total;
}

bool finite(const LossGradient& lg) {
  if (!std::isfinite(lg.value)) return false;
  return std::all_of(lg.grad.begin(), lg.grad.end(), [](double g) { return std::isfinite(g); });
}

[[noreturn]] void diverged(int step, const LossGradient& lg) {
  std::ostringstream msg;
  msg << "training diverged at step " << step << ": total=" << lg.value
      << " residual=" << lg.residual << " matching=" << lg.matching;
  throw TrainingDiverged(msg.str());
}

template <class Model>
void check_config(const Model& model, const TrainConfig& config, ModelKind kind) {
  config.validate();
  detail::require(config.model_kind == kind, "train: config model_kind is " +
                                                 to_string(config.model_kind) + " but the model is " +
                                                 to_string(kind));
  detail::require(config.omega.dim() == 2 * static_cast<std::size_t>(model.dim()),
                  "train: box dimension does not match the model");
}

template <class Model>
TrainReport train_unsupervised(Model& model, const TrainConfig& config, const SystemSpec& sys,
                               const CheckpointCallback& on_checkpoint, ModelKind kind) {
  check_config(model, config, kind);
  check_system(model.dim(), sys, "train");
  detail::require(config.regime != Regime::Supervised,
                  "train: the supervised regime needs a dataset");
  const auto start = std::chrono::steady_clock::now();

  const bool mixed = config.regime == Regime::Mixed;
  const int steps = config.epochs + (mixed ? config.fine_tune_epochs : 0);
  std::mt19937_64 rng(config.seed);
  AdamState adam;
  const AdamOptions opt{config.learning_rate};
  auto flat = params_of(model);

  TrainReport report;
  report.seed = config.seed;
  for (int step = 0; step < steps; ++step) {
    bool with_matching = config.regime != Regime::ResidualOnly;
    // The baseline keeps its energy regularizer during fine-tuning.
    if (mixed && step >= config.epochs && kind == ModelKind::SympFlow) with_matching = false;

    const auto col = sample_collocation(config.omega, config.dt, config.batch_collocation, rng);
    std::vector<CollocationPoint> mat;
    if (with_matching) mat = sample_collocation(config.omega, config.dt, config.batch_matching, rng);

    const auto lg =
        unsupervised_loss_gradient(model, {col, mat}, sys, with_matching, config.derivative_mode);
    if (!finite(lg)) diverged(step, lg);
    report.total.push_back(lg.value);
    report.residual.push_back(lg.residual);
    report.matching.push_back(lg.matching);

    adam_step(flat, lg.grad, adam, opt);
    model.set_flat_params(flat);
    if (on_checkpoint && config.checkpoint_every > 0 && (step + 1) % config.checkpoint_every == 0) {
      on_checkpoint(step + 1, flat);
    }
  }
  report.steps = steps;
  report.final_params = flat;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

template <class Model>
TrainReport train_supervised(Model& model, const TrainConfig& config, const TrajectoryDataset& data,
                             const CheckpointCallback& on_checkpoint, ModelKind kind) {
  check_config(model, config, kind);
  detail::require(config.regime == Regime::Supervised,
                  "train: a dataset can only drive the supervised regime");
  data.validate();
  detail::require(!data.samples.empty(), "train: empty dataset");
  const auto start = std::chrono::steady_clock::now();

  std::mt19937_64 rng(config.seed);
  AdamState adam;
  const AdamOptions opt{config.learning_rate};
  auto flat = params_of(model);
  std::vector<std::size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(config.batch_supervised);

  TrainReport report;
  report.seed = config.seed;
  int steps = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t at = 0; at < order.size(); at += batch) {
      const std::size_t end = std::min(order.size(), at + batch);
      const auto lg = supervised_loss_gradient(
          model, data, std::span<const std::size_t>(order.data() + at, end - at));
      if (!finite(lg)) diverged(steps, lg);
      epoch_loss += lg.value;
      ++batches;
      adam_step(flat, lg.grad, adam, opt);
      model.set_flat_params(flat);
      ++steps;
    }
    epoch_loss /= static_cast<double>(batches);
    report.total.push_back(epoch_loss);
    report.supervised.push_back(epoch_loss);
    if (on_checkpoint && config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0) {
      on_checkpoint(epoch + 1, flat);
    }
  }
  report.steps = steps;
  report.final_params = flat;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace

std::string to_string(ModelKind kind) { return kind == ModelKind::SympFlow ? "sympflow" : "mlp"; }

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::ResidualOnly:
      return "residual_only";
    case Regime::Regularized:
      return "regularized";
    case Regime::Mixed:
      return "mixed";
    case Regime::Supervised:
      return "supervised";
  }
  return "?";
}

std::string to_string(DerivativeMode mode) {
  return mode == DerivativeMode::Exact ? "exact" : "fd";
}

ModelKind parse_model_kind(const std::string& s) {
  if (s == "sympflow") return ModelKind::SympFlow;
  if (s == "mlp") return ModelKind::Mlp;
  throw InvalidInput("unknown model kind '" + s + "' (expected sympflow or mlp)");
}

Regime parse_regime(const std::string& s) {
  for (Regime r : {Regime::ResidualOnly, Regime::Regularized, Regime::Mixed, Regime::Supervised}) {
    if (s == to_string(r)) return r;
  }
  throw InvalidInput("unknown regime '" + s +
                     "' (expected residual_only, regularized, mixed or supervised)");
}

DerivativeMode parse_derivative_mode(const std::string& s) {
  if (s == "exact") return DerivativeMode::Exact;
  if (s == "fd") return DerivativeMode::FiniteDifference;
  throw InvalidInput("unknown derivative mode '" + s + "' (expected exact or fd)");
}

void TrainConfig::validate() const {
  detail::require(epochs >= 0, "train config: epochs must be nonnegative");
  detail::require(fine_tune_epochs >= 0, "train config: fine_tune_epochs must be nonnegative");
  detail::require(learning_rate > 0.0 && std::isfinite(learning_rate),
                  "train config: learning_rate must be positive");
  detail::require(batch_collocation >= 1 && batch_matching >= 1 && batch_supervised >= 1,
                  "train config: batch sizes must be positive");
  detail::require(dt > 0.0 && std::isfinite(dt), "train config: dt must be positive");
  detail::require(checkpoint_every >= 0, "train config: checkpoint_every must be nonnegative");
  omega.validate();
}

double loss_supervised(const SympFlowModel& model, const TrajectoryDataset& data) {
  return supervised_value(model, data);
}
double loss_supervised(const MlpFlowModel& model, const TrajectoryDataset& data) {
  return supervised_value(model, data);
}

double loss_residual(const SympFlowModel& model, std::span<const CollocationPoint> points,
                     const SystemSpec& sys, DerivativeMode mode) {
  return residual_value(model, points, sys, mode);
}
double loss_residual(const MlpFlowModel& model, std::span<const CollocationPoint> points,
                     const SystemSpec& sys, DerivativeMode mode) {
  return residual_value(model, points, sys, mode);
}

double loss_ham_match(const SympFlowModel& model, std::span<const CollocationPoint> points,
                      const SystemSpec& sys) {
  check_points(model.dim(), points, "matching loss");
  check_system(model.dim(), sys, "matching loss");
  return mean_value(model, points.size(), [&](const auto& v, std::size_t i) {
    return ham_match_term<double>(v, points[i], sys);
  });
}

double loss_ham_match(const MlpFlowModel&, std::span<const CollocationPoint>, const SystemSpec&) {
  throw UnsupportedCase("matching loss: Hamiltonian extraction is undefined for the MLP baseline");
}

double loss_energy_reg(const MlpFlowModel& model, std::span<const CollocationPoint> points,
                       const SystemSpec& sys) {
  check_points(model.dim(), points, "energy regularizer");
  check_system(model.dim(), sys, "energy regularizer");
  return mean_value(model, points.size(), [&](const auto& v, std::size_t i) {
    return energy_reg_term<double>(v, points[i], sys);
  });
}

double total_loss(const SympFlowModel& model, Regime regime, const LossBatches& batches,
                  const SystemSpec& sys, DerivativeMode mode) {
  return unsupervised_total(model, regime, batches, sys, mode);
}
double total_loss(const MlpFlowModel& model, Regime regime, const LossBatches& batches,
                  const SystemSpec& sys, DerivativeMode mode) {
  return unsupervised_total(model, regime, batches, sys, mode);
}
double total_loss(const SympFlowModel& model, Regime regime, const TrajectoryDataset& data) {
  detail::require(regime == Regime::Supervised, "total_loss: a dataset implies the supervised regime");
  return loss_supervised(model, data);
}
double total_loss(const MlpFlowModel& model, Regime regime, const TrajectoryDataset& data) {
  detail::require(regime == Regime::Supervised, "total_loss: a dataset implies the supervised regime");
  return loss_supervised(model, data);
}

LossGradient unsupervised_loss_gradient(const SympFlowModel& model, const LossBatches& batches,
                                        const SystemSpec& sys, bool with_matching,
                                        DerivativeMode mode) {
  return unsupervised_gradient(model, batches, sys, with_matching, mode);
}
LossGradient unsupervised_loss_gradient(const MlpFlowModel& model, const LossBatches& batches,
                                        const SystemSpec& sys, bool with_matching,
                                        DerivativeMode mode) {
  return unsupervised_gradient(model, batches, sys, with_matching, mode);
}
LossGradient supervised_loss_gradient(const SympFlowModel& model, const TrajectoryDataset& data,
                                      std::span<const std::size_t> sample_indices) {
  return supervised_gradient(model, data, sample_indices);
}
LossGradient supervised_loss_gradient(const MlpFlowModel& model, const TrajectoryDataset& data,
                                      std::span<const std::size_t> sample_indices) {
  return supervised_gradient(model, data, sample_indices);
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamOptions& options) {
  detail::require(params.size() == grads.size(), "adam: parameter and gradient lengths differ");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  detail::require(state.m.size() == params.size(), "adam: state length mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(state.step));
  for (std::size_t j = 0; j < params.size(); ++j) {
    state.m[j] = options.beta1 * state.m[j] + (1.0 - options.beta1) * grads[j];
    state.v[j] = options.beta2 * state.v[j] + (1.0 - options.beta2) * grads[j] * grads[j];
    const double m_hat = state.m[j] / c1;
    const double v_hat = state.v[j] / c2;
    params[j] -= options.learning_rate * m_hat / (std::sqrt(v_hat) + options.epsilon);
  }
}

std::vector<CollocationPoint> sample_collocation(const Box& omega, double dt, int n,
                                                 std::mt19937_64& rng) {
  omega.validate();
  detail::require(dt > 0.0, "sample_collocation: dt must be positive");
  detail::require(n >= 0, "sample_collocation: count must be nonnegative");
  detail::require(omega.dim() % 2 == 0, "sample_collocation: box dimension must be even");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<CollocationPoint> out(static_cast<std::size_t>(n));
  const std::size_t dim = omega.dim();
  for (auto& pt : out) {
    pt.t = dt * unit(rng);
    std::vector<double> flat(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      flat[i] = omega.lower[i] + (omega.upper[i] - omega.lower[i]) * unit(rng);
    }
    pt.x = split(flat);
  }
  return out;
}

std::vector<CollocationPoint> sample_collocation(const Box& omega, double dt, int n,
                                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_collocation(omega, dt, n, rng);
}

TrainReport train(SympFlowModel& model, const TrainConfig& config, const SystemSpec& sys,
                  const CheckpointCallback& on_checkpoint) {
  return train_unsupervised(model, config, sys, on_checkpoint, ModelKind::SympFlow);
}
TrainReport train(MlpFlowModel& model, const TrainConfig& config, const SystemSpec& sys,
                  const CheckpointCallback& on_checkpoint) {
  return train_unsupervised(model, config, sys, on_checkpoint, ModelKind::Mlp);
}
TrainReport train(SympFlowModel& model, const TrainConfig& config, const TrajectoryDataset& data,
                  const CheckpointCallback& on_checkpoint) {
  return train_supervised(model, config, data, on_checkpoint, ModelKind::SympFlow);
}
TrainReport train(MlpFlowModel& model, const TrainConfig& config, const TrajectoryDataset& data,
                  const CheckpointCallback& on_checkpoint) {
  return train_supervised(model, config, data, on_checkpoint, ModelKind::Mlp);
}

}  // namespace sympflow
