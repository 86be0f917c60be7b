#pragma once

// Checkpoint and dataset files.
//
// Checkpoint: JSON object
//   {"magic": "sympflow-ckpt-v1", "kind": "sympflow" | "mlp",
//    "d": .., "L": .., "h": .., "seed": .., "params": "<base64>"}
// where params holds IEEE-754 little-endian doubles in flat parameter order.
//
// Dataset: ics.csv (traj_id,x_1..x_2d) and samples.csv (traj_id,t,y_1..y_2d),
// 17 significant digits.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sympflow/integrate.hpp"
#include "sympflow/mlp_baseline.hpp"
#include "sympflow/sympflow_model.hpp"
#include "sympflow/train.hpp"

namespace sympflow {

inline constexpr const char* kCheckpointMagic = "sympflow-ckpt-v1";

struct Checkpoint {
  ModelKind kind = ModelKind::SympFlow;
  int d = 0;
  int layers = 0;
  int hidden = 0;
  std::uint64_t seed = 0;
  std::vector<double> params;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws FormatError on characters outside the alphabet or bad padding.
std::vector<std::uint8_t> base64_decode(const std::string& text);

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

Checkpoint make_checkpoint(const SympFlowModel& model, std::uint64_t seed = 0);
Checkpoint make_checkpoint(const MlpFlowModel& model, std::uint64_t seed = 0);

void save_checkpoint(const SympFlowModel& model, const std::filesystem::path& path,
                     std::uint64_t seed = 0);
void save_checkpoint(const MlpFlowModel& model, const std::filesystem::path& path,
                     std::uint64_t seed = 0);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Throw KindMismatch when the file holds the other family.
SympFlowModel load_sympflow(const std::filesystem::path& path);
MlpFlowModel load_mlp(const std::filesystem::path& path);
SympFlowModel to_sympflow(const Checkpoint& ckpt);
MlpFlowModel to_mlp(const Checkpoint& ckpt);

// Shortest round-trip text is not required; 17 significant digits are.
std::string format_double(double v);

void write_dataset(const TrajectoryDataset& data, const std::filesystem::path& dir);
// The files carry no window length; `dt` supplies it.
TrajectoryDataset read_dataset(const std::filesystem::path& dir, double dt);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace sympflow
