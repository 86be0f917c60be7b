#include "sympflow/config.hpp"

#include <set>

#include "json.hpp"
#include "sympflow/io.hpp"

namespace sympflow {

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "system",         "mass",
      "spring",         "damping",
      "model_kind",     "regime",
      "layers",         "hidden",
      "epochs",         "fine_tune_epochs",
      "learning_rate",  "batch_collocation",
      "batch_matching", "batch_supervised",
      "dt",             "seed",
      "derivative_mode", "checkpoint_every",
      "omega_lower",    "omega_upper",
      "n_trajectories", "samples_per_trajectory",
      "noise_std",      "data_dir",
      "horizon",        "step",
      "x0",             "metric_samples",
      "metric_k",       "project",
      "rtol",           "atol"};
  return keys;
}

template <class T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string("config: key '") + key + "' has the wrong type");
  }
}

template <class T>
void read(const json& j, const char* key, T& target) {
  if (j.contains(key)) target = get<T>(j, key);
}

std::vector<double> bound(const json& j, const char* key, std::size_t dim, double fallback) {
  if (!j.contains(key)) return std::vector<double>(dim, fallback);
  const auto& v = j.at(key);
  if (v.is_number()) return std::vector<double>(dim, v.get<double>());
  auto out = get<std::vector<double>>(j, key);
  if (out.size() != dim) {
    throw FormatError(std::string("config: '") + key + "' needs " + std::to_string(dim) + " entries");
  }
  return out;
}

}  // namespace

SystemSpec RunConfig::system_spec() const {
  if (system == "sho") return SystemSpec(HarmonicOscillator{mass, spring});
  if (system == "henon_heiles") return SystemSpec(HenonHeiles{});
  if (system == "damped") return SystemSpec(DampedAugmented{mass, spring, damping});
  throw InvalidInput("unknown system '" + system + "' (expected sho, henon_heiles or damped)");
}

RolloutSpec RunConfig::rollout_spec(double default_step) const {
  return {train.dt, horizon, step.value_or(default_step), x0};
}

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: not valid JSON (") + e.what() + ")");
  }
  if (!j.is_object()) throw FormatError("config: top level must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known_keys().count(key)) throw FormatError("config: unknown key '" + key + "'");
    if (value.is_object()) throw FormatError("config: key '" + key + "' must not be nested");
  }

  RunConfig c;
  read(j, "system", c.system);
  read(j, "mass", c.mass);
  read(j, "spring", c.spring);
  read(j, "damping", c.damping);
  const SystemSpec sys = c.system_spec();
  const auto dim = static_cast<std::size_t>(2 * sys.half_dim());

  read(j, "layers", c.layers);
  read(j, "hidden", c.hidden);
  auto& t = c.train;
  if (j.contains("model_kind")) t.model_kind = parse_model_kind(get<std::string>(j, "model_kind"));
  if (j.contains("regime")) t.regime = parse_regime(get<std::string>(j, "regime"));
  if (j.contains("derivative_mode")) {
    t.derivative_mode = parse_derivative_mode(get<std::string>(j, "derivative_mode"));
  }
  read(j, "epochs", t.epochs);
  read(j, "fine_tune_epochs", t.fine_tune_epochs);
  read(j, "learning_rate", t.learning_rate);
  read(j, "batch_collocation", t.batch_collocation);
  read(j, "batch_matching", t.batch_matching);
  read(j, "batch_supervised", t.batch_supervised);
  read(j, "dt", t.dt);
  read(j, "seed", t.seed);
  read(j, "checkpoint_every", t.checkpoint_every);

  const double half_width = c.system == "henon_heiles" ? 1.0 : 1.2;
  t.omega = {bound(j, "omega_lower", dim, -half_width), bound(j, "omega_upper", dim, half_width)};

  read(j, "n_trajectories", c.n_trajectories);
  read(j, "samples_per_trajectory", c.samples_per_trajectory);
  read(j, "noise_std", c.noise_std);
  read(j, "data_dir", c.data_dir);
  read(j, "horizon", c.horizon);
  if (j.contains("step")) c.step = get<double>(j, "step");
  read(j, "metric_samples", c.metric_samples);
  read(j, "metric_k", c.metric_k);
  read(j, "rtol", c.rtol);
  read(j, "atol", c.atol);

  c.project = sys.is_damped();
  read(j, "project", c.project);

  if (j.contains("x0")) {
    const auto x0 = get<std::vector<double>>(j, "x0");
    if (x0.size() != dim) {
      throw FormatError("config: 'x0' needs " + std::to_string(dim) + " entries");
    }
    c.x0 = split(x0);
  } else if (c.system == "sho") {
    c.x0 = {{1.0}, {0.0}};
  } else if (c.system == "henon_heiles") {
    c.x0 = {{0.3, -0.3}, {0.3, 0.0}};
  } else {
    c.x0 = embed_physical(1.0, 0.0);
  }

  try {
    t.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  if (c.layers < 1 || c.hidden < 1) throw FormatError("config: layers and hidden must be positive");
  if (c.n_trajectories < 1 || c.samples_per_trajectory < 1) {
    throw FormatError("config: n_trajectories and samples_per_trajectory must be positive");
  }
  if (c.noise_std < 0.0) throw FormatError("config: noise_std must be nonnegative");
  if ((c.step && !(*c.step > 0.0)) || !(c.horizon > 0.0)) throw FormatError("config: step and horizon must be positive");
  if (c.metric_samples < 1) throw FormatError("config: metric_samples must be positive");
  for (int k : c.metric_k) {
    if (k < 1) throw FormatError("config: metric_k entries must be positive");
  }
  if (!(c.rtol > 0.0) || !(c.atol > 0.0)) throw FormatError("config: rtol and atol must be positive");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw FormatError("config file not found: " + path.string());
  return parse_config(read_text_file(path));
}

}  // namespace sympflow
