#include "sympflow/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <variant>

#include "CLI11.hpp"
#include "json.hpp"
#include "sympflow/config.hpp"
#include "sympflow/io.hpp"

namespace sympflow {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::string out;
  std::string checkpoint;
  std::optional<std::uint64_t> seed;
};

using AnyModel = std::variant<SympFlowModel, MlpFlowModel>;

RunConfig load(const Options& o) {
  auto c = load_config(o.config);
  if (o.seed) c.train.seed = *o.seed;
  return c;
}

AnyModel load_model(const Options& o, const RunConfig& c) {
  if (o.checkpoint.empty()) throw InvalidInput("--checkpoint is required for this command");
  const auto ckpt = read_checkpoint(o.checkpoint);
  const int d = c.system_spec().half_dim();
  if (ckpt.d != d) {
    throw InvalidInput("checkpoint dimension " + std::to_string(ckpt.d) + " does not match system " +
                       c.system);
  }
  if (ckpt.kind == ModelKind::SympFlow) return to_sympflow(ckpt);
  return to_mlp(ckpt);
}

FlowMap flow_for(const AnyModel& m, const RunConfig& c) {
  FlowMap f = std::visit([](const auto& model) { return flow_of(model); }, m);
  return c.project ? projected(std::move(f)) : f;
}

std::string state_header(std::size_t dim) {
  std::string h;
  for (std::size_t i = 1; i <= dim; ++i) h += ",x_" + std::to_string(i);
  return h;
}

int run_generate(const Options& o, std::ostream& out) {
  const auto c = load(o);
  const auto data = generate_dataset(c.system_spec(), c.train.omega, c.n_trajectories,
                                     c.samples_per_trajectory, c.train.dt, c.noise_std, c.train.seed);
  write_dataset(data, o.out);
  out << "wrote " << data.initial_conditions.size() << " initial conditions and "
      << data.samples.size() << " samples to " << o.out << "\n";
  return 0;
}

int run_train(const Options& o, std::ostream& out) {
  const auto c = load(o);
  const auto sys = c.system_spec();
  const int d = sys.half_dim();
  const fs::path dir = o.out;
  fs::create_directories(dir);

  std::optional<TrajectoryDataset> data;
  if (c.train.regime == Regime::Supervised) {
    data = c.data_dir.empty()
               ? generate_dataset(sys, c.train.omega, c.n_trajectories, c.samples_per_trajectory,
                                  c.train.dt, c.noise_std, c.train.seed)
               : read_dataset(c.data_dir, c.train.dt);
  }

  AnyModel model = c.train.model_kind == ModelKind::SympFlow
                       ? AnyModel(SympFlowModel::random(d, c.layers, c.hidden, c.train.seed))
                       : AnyModel(MlpFlowModel::random(d, c.layers, c.hidden, c.train.seed));

  const TrainReport report = std::visit(
      [&](auto& m) {
        using M = std::decay_t<decltype(m)>;
        const CheckpointCallback save = [&](int epoch, std::span<const double> params) {
          M snapshot = m;
          snapshot.set_flat_params(params);
          save_checkpoint(snapshot, dir / ("checkpoint_" + std::to_string(epoch) + ".ckpt"),
                          c.train.seed);
        };
        return data ? train(m, c.train, *data, save) : train(m, c.train, sys, save);
      },
      model);

  std::visit([&](const auto& m) { save_checkpoint(m, dir / "model.ckpt", c.train.seed); }, model);

  std::ostringstream csv;
  if (data) {
    csv << "epoch,supervised\n";
    for (std::size_t i = 0; i < report.supervised.size(); ++i) {
      csv << i + 1 << "," << format_double(report.supervised[i]) << "\n";
    }
  } else {
    csv << "step,total,residual,matching\n";
    for (std::size_t i = 0; i < report.total.size(); ++i) {
      csv << i + 1 << "," << format_double(report.total[i]) << ","
          << format_double(report.residual[i]) << "," << format_double(report.matching[i]) << "\n";
    }
  }
  write_text_file(dir / "loss.csv", csv.str());

  nlohmann::ordered_json meta;
  meta["seed"] = report.seed;
  meta["steps"] = report.steps;
  meta["wall_seconds"] = report.wall_seconds;
  meta["final_loss"] = report.total.empty() ? 0.0 : report.total.back();
  write_text_file(dir / "train_report.json", meta.dump(2) + "\n");

  out << "trained " << to_string(c.train.model_kind) << " (" << to_string(c.train.regime)
      << ") for " << report.steps << " steps in " << report.wall_seconds << " s; final loss "
      << (report.total.empty() ? 0.0 : report.total.back()) << "\n";
  return 0;
}

int run_rollout(const Options& o, std::ostream& out) {
  const auto c = load(o);
  const auto sys = c.system_spec();
  const auto model = load_model(o, c);
  const auto path = rollout_path(flow_for(model, c), c.rollout_spec(0.1));
  const double h0 = hamiltonian(sys, path.front().x);
  std::ostringstream csv;
  csv << "t" << state_header(2 * path.front().x.q.size()) << ",energy,drift\n";
  for (const auto& s : path) {
    const double h = hamiltonian(sys, s.x);
    csv << format_double(s.t);
    for (double v : flatten(s.x)) csv << "," << format_double(v);
    csv << "," << format_double(h) << "," << format_double(h - h0) << "\n";
  }
  write_text_file(fs::path(o.out) / "rollout.csv", csv.str());
  out << "wrote " << path.size() << " rollout rows\n";
  return 0;
}

int run_evaluate(const Options& o, std::ostream& out) {
  const auto c = load(o);
  const auto sys = c.system_spec();
  const auto model = load_model(o, c);
  const auto flow = flow_for(model, c);
  const double dt = c.train.dt;

  std::ostringstream metrics;
  metrics << "metric,k,value,used,skipped\n";
  auto row = [&](const std::string& name, int k, double v, int used, int skipped) {
    metrics << name << "," << k << "," << format_double(v) << "," << used << "," << skipped << "\n";
  };
  for (int k : c.metric_k) {
    const auto e = avg_relative_error(flow, sys, c.train.omega, c.metric_samples, k, dt, c.train.seed);
    row("avg_relative_error", k, e.value, e.used, e.skipped);
    const auto h = avg_energy_variation(flow, sys, c.train.omega, c.metric_samples, k, dt, c.train.seed);
    row("avg_energy_variation", k, h.value, h.used, h.skipped);
  }

  const auto path = rollout_path(flow, c.rollout_spec(0.1));
  const auto series = energy_drift_series(sys, path);
  const double h0 = hamiltonian(sys, c.x0);
  if (std::abs(h0) >= kMetricDenominatorFloor) {
    row("max_relative_drift", 0, max_relative_drift(series, h0), 1, 0);
  }
  try {
    row("drift_slope", 0, drift_slope(series), 1, 0);
  } catch (const InvalidInput&) {
    row("drift_slope", 0, 0.0, 0, 1);
  }
  if (sys.is_damped() && c.x0.q.size() == 2) {
    const auto phys = physical_limit_project(c.x0);
    const double horizon = std::min(c.horizon, 10.0);
    row("damped_l2_error", 0,
        damped_trajectory_error(flow, sys, phys.q[0], phys.p[0], horizon, c.step.value_or(0.1), dt),
        1, 0);
  }
  write_text_file(fs::path(o.out) / "metrics.csv", metrics.str());

  std::ostringstream drift;
  drift << "t,drift,drift_over_t\n";
  for (const auto& s : series) {
    drift << format_double(s.t) << "," << format_double(s.drift) << ","
          << format_double(s.drift_over_t) << "\n";
  }
  write_text_file(fs::path(o.out) / "energy_drift.csv", drift.str());
  out << "wrote metrics.csv and energy_drift.csv\n";
  return 0;
}

int run_poincare(const Options& o, std::ostream& out) {
  const auto c = load(o);
  const auto sys = c.system_spec();
  if (sys.half_dim() != 2 || sys.is_damped()) {
    throw InvalidInput("poincare: sections are defined for the henon_heiles system");
  }
  const auto spec = c.rollout_spec(0.01);
  std::vector<SectionPoint> points;
  if (o.checkpoint.empty()) {
    const auto sol = integrate(sys, c.x0, time_grid(spec.horizon, spec.step).back(), c.rtol, c.atol);
    std::vector<TimedState> path;
    for (double t : time_grid(spec.horizon, spec.step)) path.push_back({t, split(sol.state_at(t))});
    points = poincare_section(path, [&](double t) { return split(sol.state_at(t)); });
  } else {
    points = poincare_section(rollout_path(flow_for(load_model(o, c), c), spec));
  }
  std::ostringstream csv;
  csv << "t,q_y,p_y,energy\n";
  for (const auto& p : points) {
    csv << format_double(p.t) << "," << format_double(p.q_y) << "," << format_double(p.p_y) << ","
        << format_double(hamiltonian(sys, p.x)) << "\n";
  }
  write_text_file(fs::path(o.out) / "poincare.csv", csv.str());
  out << "wrote " << points.size() << " section points\n";
  return 0;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"SympFlow: symplectic neural flows for Hamiltonian dynamics", "sympflow"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;

  auto add = [&](const std::string& name, const std::string& help, bool needs_checkpoint) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "Run configuration (flat JSON)")->required();
    sub->add_option("--out", o.out, "Output directory")->required();
    sub->add_option("--seed", seed, "Seed overriding the config");
    auto* ck = sub->add_option("--checkpoint", o.checkpoint, "Model checkpoint");
    if (needs_checkpoint) ck->required();
    return sub;
  };
  auto* gen = add("generate-data", "Sample a trajectory dataset", false);
  auto* trn = add("train", "Train a model", false);
  auto* rol = add("rollout", "Long-time rollout of a trained model", true);
  auto* evl = add("evaluate", "Accuracy and energy metrics", true);
  auto* poi = add("poincare", "Poincare section (reference integrator without --checkpoint)", false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--seed") > 0) o.seed = seed;
  }

  try {
    if (gen->parsed()) return run_generate(o, out);
    if (trn->parsed()) return run_train(o, out);
    if (rol->parsed()) return run_rollout(o, out);
    if (evl->parsed()) return run_evaluate(o, out);
    if (poi->parsed()) return run_poincare(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "error: no command given\n";
  return 2;
}

int cli_dispatch(int argc, const char* const* argv) {
  return cli_dispatch(argc, argv, std::cout, std::cerr);
}

}  // namespace sympflow
