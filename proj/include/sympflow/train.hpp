#pragma once

// Losses, Adam and the training regimes for both model families.
//
// Every loss is a mean over points of a per-point term written once as a
// template over the scalar type. Evaluated with doubles it gives the loss
// value; evaluated with ad::Var over parameter leaves it gives the exact
// parameter gradient, including the residual loss whose gradient needs the
// third derivatives of the potentials.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sympflow/hamiltonian_extract.hpp"
#include "sympflow/integrate.hpp"
#include "sympflow/mlp_baseline.hpp"
#include "sympflow/sympflow_model.hpp"
#include "sympflow/systems.hpp"

namespace sympflow {

enum class ModelKind { SympFlow, Mlp };
enum class Regime { ResidualOnly, Regularized, Mixed, Supervised };

std::string to_string(ModelKind kind);
std::string to_string(Regime regime);
std::string to_string(DerivativeMode mode);
ModelKind parse_model_kind(const std::string& s);
Regime parse_regime(const std::string& s);
DerivativeMode parse_derivative_mode(const std::string& s);

struct CollocationPoint {
  double t = 0.0;
  PhasePoint x;
};

struct TrainConfig {
  ModelKind model_kind = ModelKind::SympFlow;
  Regime regime = Regime::Regularized;
  int epochs = 5000;
  int fine_tune_epochs = 0;
  double learning_rate = 1e-3;
  int batch_collocation = 1024;
  int batch_matching = 1024;
  // Minibatch size for the supervised regime.
  int batch_supervised = 256;
  double dt = 1.0;
  Box omega = Box::cube(2, -1.2, 1.2);
  std::uint64_t seed = 0;
  DerivativeMode derivative_mode = DerivativeMode::Exact;
  int checkpoint_every = 0;  // 0 disables the checkpoint callback

  void validate() const;
};

// One entry per optimizer step, except in the supervised regime where an
// entry is the mean minibatch loss over one pass through the data.
struct TrainReport {
  std::vector<double> total;
  std::vector<double> residual;
  std::vector<double> matching;  // L2 (SympFlow) or energy regularizer (MLP)
  std::vector<double> supervised;
  std::vector<double> final_params;
  std::uint64_t seed = 0;
  int steps = 0;
  double wall_seconds = 0.0;
};

// ---------------------------------------------------------------------------
// Losses

double loss_supervised(const SympFlowModel& model, const TrajectoryDataset& data);
double loss_supervised(const MlpFlowModel& model, const TrajectoryDataset& data);

double loss_residual(const SympFlowModel& model, std::span<const CollocationPoint> points,
                     const SystemSpec& sys, DerivativeMode mode = DerivativeMode::Exact);
double loss_residual(const MlpFlowModel& model, std::span<const CollocationPoint> points,
                     const SystemSpec& sys, DerivativeMode mode = DerivativeMode::Exact);

double loss_ham_match(const SympFlowModel& model, std::span<const CollocationPoint> points,
                      const SystemSpec& sys);
// The baseline has no extracted Hamiltonian.
[[noreturn]] double loss_ham_match(const MlpFlowModel& model,
                                   std::span<const CollocationPoint> points, const SystemSpec& sys);

double loss_energy_reg(const MlpFlowModel& model, std::span<const CollocationPoint> points,
                       const SystemSpec& sys);

struct LossBatches {
  std::span<const CollocationPoint> collocation;
  std::span<const CollocationPoint> matching;
};

// residual_only -> L1; regularized and mixed -> L1 + L2 (SympFlow) or
// L1 + energy regularizer (MLP). The supervised overloads take the data.
double total_loss(const SympFlowModel& model, Regime regime, const LossBatches& batches,
                  const SystemSpec& sys, DerivativeMode mode = DerivativeMode::Exact);
double total_loss(const MlpFlowModel& model, Regime regime, const LossBatches& batches,
                  const SystemSpec& sys, DerivativeMode mode = DerivativeMode::Exact);
double total_loss(const SympFlowModel& model, Regime regime, const TrajectoryDataset& data);
double total_loss(const MlpFlowModel& model, Regime regime, const TrajectoryDataset& data);

// Loss value and exact gradient over the flat parameter vector.
struct LossGradient {
  double value = 0.0;
  double residual = 0.0;
  double matching = 0.0;
  std::vector<double> grad;
};

// `with_matching` adds L2 (SympFlow) or the energy regularizer (MLP) on the
// matching batch.
LossGradient unsupervised_loss_gradient(const SympFlowModel& model, const LossBatches& batches,
                                        const SystemSpec& sys, bool with_matching,
                                        DerivativeMode mode);
LossGradient unsupervised_loss_gradient(const MlpFlowModel& model, const LossBatches& batches,
                                        const SystemSpec& sys, bool with_matching,
                                        DerivativeMode mode);
LossGradient supervised_loss_gradient(const SympFlowModel& model, const TrajectoryDataset& data,
                                      std::span<const std::size_t> sample_indices);
LossGradient supervised_loss_gradient(const MlpFlowModel& model, const TrajectoryDataset& data,
                                      std::span<const std::size_t> sample_indices);

// ---------------------------------------------------------------------------
// Optimizer and sampling

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamOptions& options = {});

// (t, x) uniform in [0, dt] x omega.
std::vector<CollocationPoint> sample_collocation(const Box& omega, double dt, int n,
                                                 std::mt19937_64& rng);
std::vector<CollocationPoint> sample_collocation(const Box& omega, double dt, int n,
                                                 std::uint64_t seed);

// ---------------------------------------------------------------------------
// Training loops

using CheckpointCallback = std::function<void(int epoch, std::span<const double> params)>;

TrainReport train(SympFlowModel& model, const TrainConfig& config, const SystemSpec& sys,
                  const CheckpointCallback& on_checkpoint = {});
TrainReport train(MlpFlowModel& model, const TrainConfig& config, const SystemSpec& sys,
                  const CheckpointCallback& on_checkpoint = {});
TrainReport train(SympFlowModel& model, const TrainConfig& config, const TrajectoryDataset& data,
                  const CheckpointCallback& on_checkpoint = {});
TrainReport train(MlpFlowModel& model, const TrainConfig& config, const TrajectoryDataset& data,
                  const CheckpointCallback& on_checkpoint = {});

}  // namespace sympflow
