#include "sympflow/io.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace sympflow {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

std::vector<std::uint8_t> to_bytes(std::span<const double> values) {
  std::vector<std::uint8_t> out;
  out.reserve(values.size() * 8);
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
  return out;
}

std::vector<double> from_bytes(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 8 != 0) throw FormatError("checkpoint: parameter payload is not a whole number of doubles");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[8 * i + b]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

template <class T>
T json_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("checkpoint: missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(std::string("checkpoint: field '") + key + "' has the wrong type");
  }
}

// Splits one CSV line; no quoting is used by these files.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw FormatError(where + ": '" + s + "' is not a number");
  }
  return v;
}

int parse_id(const std::string& s, const std::string& where) {
  const double v = parse_number(s, where);
  if (v != static_cast<double>(static_cast<int>(v))) throw FormatError(where + ": bad trajectory id");
  return static_cast<int>(v);
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::string header(const char* lead, const char* var, std::size_t dim) {
  std::string h = lead;
  for (std::size_t i = 1; i <= dim; ++i) h += std::string(",") + var + "_" + std::to_string(i);
  return h;
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t n = bytes[i] << 16;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw FormatError("base64: length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    const bool last = i + 4 == text.size();
    int pad = 0;
    std::array<int, 4> v{};
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + static_cast<std::size_t>(k)];
      if (c == '=' && last && k >= 2) {
        v[static_cast<std::size_t>(k)] = 0;
        ++pad;
        continue;
      }
      if (pad > 0) throw FormatError("base64: data after padding");
      v[static_cast<std::size_t>(k)] = decode_char(c);
      if (v[static_cast<std::size_t>(k)] < 0) throw FormatError("base64: invalid character");
    }
    const std::uint32_t n = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out.push_back(static_cast<std::uint8_t>(n >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(n >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(n));
  }
  return out;
}

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  nlohmann::ordered_json j;
  j["magic"] = kCheckpointMagic;
  j["kind"] = to_string(ckpt.kind);
  j["d"] = ckpt.d;
  j["L"] = ckpt.layers;
  j["h"] = ckpt.hidden;
  j["seed"] = ckpt.seed;
  j["params"] = base64_encode(to_bytes(ckpt.params));
  return j.dump(2) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: not valid JSON (") + e.what() + ")");
  }
  if (!j.is_object()) throw FormatError("checkpoint: top level must be an object");
  if (!j.contains("magic") || !j["magic"].is_string() || j["magic"] != kCheckpointMagic) {
    throw FormatError("checkpoint: missing or wrong magic string");
  }
  Checkpoint c;
  const auto kind = json_field<std::string>(j, "kind");
  if (kind == "sympflow") {
    c.kind = ModelKind::SympFlow;
  } else if (kind == "mlp") {
    c.kind = ModelKind::Mlp;
  } else {
    throw FormatError("checkpoint: unknown kind '" + kind + "'");
  }
  c.d = json_field<int>(j, "d");
  c.layers = json_field<int>(j, "L");
  c.hidden = json_field<int>(j, "h");
  c.seed = json_field<std::uint64_t>(j, "seed");
  c.params = from_bytes(base64_decode(json_field<std::string>(j, "params")));
  if (c.d <= 0 || c.layers <= 0 || c.hidden <= 0) throw FormatError("checkpoint: nonpositive shape");
  return c;
}

Checkpoint make_checkpoint(const SympFlowModel& model, std::uint64_t seed) {
  return {ModelKind::SympFlow, model.dim(), model.layers(), model.hidden(), seed,
          model.flat_params()};
}

Checkpoint make_checkpoint(const MlpFlowModel& model, std::uint64_t seed) {
  return {ModelKind::Mlp,
          model.dim(),
          model.layers(),
          model.hidden(),
          seed,
          {model.flat_params().begin(), model.flat_params().end()}};
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("write failed for " + path.string());
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_text_file(path, checkpoint_to_json(ckpt));
}

void save_checkpoint(const SympFlowModel& model, const std::filesystem::path& path,
                     std::uint64_t seed) {
  save_checkpoint(make_checkpoint(model, seed), path);
}

void save_checkpoint(const MlpFlowModel& model, const std::filesystem::path& path,
                     std::uint64_t seed) {
  save_checkpoint(make_checkpoint(model, seed), path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_text_file(path));
}

SympFlowModel to_sympflow(const Checkpoint& ckpt) {
  if (ckpt.kind != ModelKind::SympFlow) {
    throw KindMismatch("checkpoint holds an mlp model, expected sympflow");
  }
  SympFlowModel model(ckpt.d, ckpt.layers, ckpt.hidden);
  if (ckpt.params.size() != model.param_count()) {
    throw FormatError("checkpoint: parameter count does not match the declared shape");
  }
  model.set_flat_params(ckpt.params);
  return model;
}

MlpFlowModel to_mlp(const Checkpoint& ckpt) {
  if (ckpt.kind != ModelKind::Mlp) {
    throw KindMismatch("checkpoint holds a sympflow model, expected mlp");
  }
  MlpFlowModel model(ckpt.d, ckpt.layers, ckpt.hidden);
  if (ckpt.params.size() != model.param_count()) {
    throw FormatError("checkpoint: parameter count does not match the declared shape");
  }
  model.set_flat_params(ckpt.params);
  return model;
}

SympFlowModel load_sympflow(const std::filesystem::path& path) {
  return to_sympflow(read_checkpoint(path));
}

MlpFlowModel load_mlp(const std::filesystem::path& path) { return to_mlp(read_checkpoint(path)); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_dataset(const TrajectoryDataset& data, const std::filesystem::path& dir) {
  data.validate();
  const std::size_t dim = 2 * data.initial_conditions.front().x0.q.size();
  std::string ics = header("traj_id", "x", dim) + "\n";
  for (const auto& ic : data.initial_conditions) {
    ics += std::to_string(ic.traj_id);
    for (double v : flatten(ic.x0)) ics += "," + format_double(v);
    ics += "\n";
  }
  std::string samples = header("traj_id,t", "y", dim) + "\n";
  for (const auto& s : data.samples) {
    samples += std::to_string(s.traj_id) + "," + format_double(s.t);
    for (double v : flatten(s.y)) samples += "," + format_double(v);
    samples += "\n";
  }
  std::filesystem::create_directories(dir);
  write_text_file(dir / "ics.csv", ics);
  write_text_file(dir / "samples.csv", samples);
}

TrajectoryDataset read_dataset(const std::filesystem::path& dir, double dt) {
  const auto ic_lines = read_lines(dir / "ics.csv");
  const auto sample_lines = read_lines(dir / "samples.csv");
  if (ic_lines.size() < 2) throw FormatError("ics.csv: no initial conditions");
  const auto ic_head = split_csv(ic_lines.front());
  if (ic_head.size() < 3 || ic_head.size() % 2 == 0 || ic_head[0] != "traj_id") {
    throw FormatError("ics.csv: unexpected header '" + ic_lines.front() + "'");
  }
  const std::size_t dim = ic_head.size() - 1;
  if (ic_lines.front() != header("traj_id", "x", dim)) {
    throw FormatError("ics.csv: unexpected header '" + ic_lines.front() + "'");
  }
  if (sample_lines.empty() || sample_lines.front() != header("traj_id,t", "y", dim)) {
    throw FormatError("samples.csv: header missing or inconsistent with ics.csv");
  }
  TrajectoryDataset data;
  data.dt = dt;
  for (std::size_t i = 1; i < ic_lines.size(); ++i) {
    const auto cells = split_csv(ic_lines[i]);
    const std::string where = "ics.csv line " + std::to_string(i + 1);
    if (cells.size() != dim + 1) throw FormatError(where + ": wrong number of fields");
    std::vector<double> x(dim);
    for (std::size_t k = 0; k < dim; ++k) x[k] = parse_number(cells[k + 1], where);
    data.initial_conditions.push_back({parse_id(cells[0], where), split(x)});
  }
  for (std::size_t i = 1; i < sample_lines.size(); ++i) {
    const auto cells = split_csv(sample_lines[i]);
    const std::string where = "samples.csv line " + std::to_string(i + 1);
    if (cells.size() != dim + 2) throw FormatError(where + ": wrong number of fields");
    std::vector<double> y(dim);
    for (std::size_t k = 0; k < dim; ++k) y[k] = parse_number(cells[k + 2], where);
    data.samples.push_back({parse_id(cells[0], where), parse_number(cells[1], where), split(y)});
  }
  try {
    data.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("dataset: ") + e.what());
  }
  return data;
}

}  // namespace sympflow
