#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "sympflow/cli.hpp"
#include "sympflow/config.hpp"
#include "sympflow/io.hpp"

using namespace sympflow;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("sympflow_test_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sympflow");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

bool same_bits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_SUITE("checkpoints") {
  TEST_CASE("base64 round trip") {
    CHECK(base64_encode(std::vector<std::uint8_t>{'M', 'a', 'n'}) == "TWFu");
    CHECK(base64_encode(std::vector<std::uint8_t>{'M', 'a'}) == "TWE=");
    CHECK(base64_encode(std::vector<std::uint8_t>{'M'}) == "TQ==");
    std::vector<std::uint8_t> bytes(257);
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<std::uint8_t>(i * 37);
    CHECK(base64_decode(base64_encode(bytes)) == bytes);
    CHECK_THROWS_AS(base64_decode("TW*u"), FormatError);
  }

  TEST_CASE("save and load preserve every bit") {
    TempDir dir;
    const auto m = SympFlowModel::random(2, 3, 10, 1);
    save_checkpoint(m, dir.path / "a.ckpt", 1);
    const auto back = load_sympflow(dir.path / "a.ckpt");
    CHECK(back == m);
    CHECK(same_bits(back.flat_params(), m.flat_params()));

    auto odd = MlpFlowModel::random(1, 4, 7, 2);
    auto p = std::vector<double>(odd.flat_params().begin(), odd.flat_params().end());
    p[0] = -0.0;
    p[1] = 5e-324;
    p[2] = 1.0 / 3.0;
    odd.set_flat_params(p);
    save_checkpoint(odd, dir.path / "b.ckpt", 2);
    const auto mb = load_mlp(dir.path / "b.ckpt");
    CHECK(same_bits(mb.flat_params(), odd.flat_params()));
    CHECK(std::signbit(mb.flat_params()[0]));
    CHECK(read_checkpoint(dir.path / "b.ckpt").seed == 2);
  }

  TEST_CASE("checkpoint JSON layout") {
    const auto j = nlohmann::json::parse(checkpoint_to_json(make_checkpoint(SympFlowModel(1, 2, 4), 9)));
    CHECK(j.at("magic") == "sympflow-ckpt-v1");
    CHECK(j.at("kind") == "sympflow");
    CHECK(j.at("d") == 1);
    CHECK(j.at("L") == 2);
    CHECK(j.at("h") == 4);
    CHECK(j.at("seed") == 9);
    CHECK(base64_decode(j.at("params").get<std::string>()).size() == 8 * SympFlowModel(1, 2, 4).param_count());
  }

  TEST_CASE("corrupted magic and cross-kind loads fail") {
    TempDir dir;
    save_checkpoint(SympFlowModel::random(1, 1, 10, 3), dir.path / "s.ckpt", 3);
    auto text = read_text_file(dir.path / "s.ckpt");
    CHECK_THROWS_AS(load_mlp(dir.path / "s.ckpt"), KindMismatch);
    text.replace(text.find("sympflow-ckpt-v1"), 16, "sympflow-ckpt-v0");
    write_text_file(dir.path / "bad.ckpt", text);
    CHECK_THROWS_AS(load_sympflow(dir.path / "bad.ckpt"), FormatError);
    CHECK_THROWS_AS(checkpoint_from_json("not json"), FormatError);
    CHECK_THROWS_AS(load_sympflow(dir.path / "missing.ckpt"), FormatError);
  }
}

TEST_SUITE("datasets and config") {
  TEST_CASE("dataset CSV round trip is exact") {
    TempDir dir;
    const auto data = generate_dataset(HenonHeiles{}, Box::cube(4, -1.0, 1.0), 3, 4, 1.0, 0.01, 5);
    write_dataset(data, dir.path);
    const auto lines = lines_of(read_text_file(dir.path / "samples.csv"));
    CHECK(lines.front() == "traj_id,t,y_1,y_2,y_3,y_4");
    CHECK(lines_of(read_text_file(dir.path / "ics.csv")).front() == "traj_id,x_1,x_2,x_3,x_4");
    const auto back = read_dataset(dir.path, 1.0);
    REQUIRE(back.samples.size() == data.samples.size());
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
      CHECK(back.samples[i].t == data.samples[i].t);
      CHECK(back.samples[i].y == data.samples[i].y);
      CHECK(back.samples[i].traj_id == data.samples[i].traj_id);
    }
    for (std::size_t i = 0; i < data.initial_conditions.size(); ++i)
      CHECK(back.initial_conditions[i].x0 == data.initial_conditions[i].x0);
  }

  TEST_CASE("config defaults and overrides") {
    const auto sho = parse_config("{}");
    CHECK(sho.system == "sho");
    CHECK(sho.train.omega.lower == std::vector<double>{-1.2, -1.2});
    CHECK(sho.x0 == PhasePoint{{1.0}, {0.0}});
    CHECK_FALSE(sho.project);

    const auto hh = parse_config(R"({"system": "henon_heiles", "epochs": 10, "omega_upper": [1, 2, 3, 4]})");
    CHECK(hh.train.omega.lower == std::vector<double>(4, -1.0));
    CHECK(hh.train.omega.upper == std::vector<double>{1, 2, 3, 4});
    CHECK(hh.train.epochs == 10);
    CHECK(hh.x0 == PhasePoint{{0.3, -0.3}, {0.3, 0.0}});

    const auto damped = parse_config(R"({"system": "damped", "damping": 0.5, "regime": "residual_only"})");
    CHECK(damped.project);
    CHECK(damped.x0 == embed_physical(1.0, 0.0));
    CHECK(damped.train.regime == Regime::ResidualOnly);
  }

  TEST_CASE("bad configs are rejected") {
    CHECK_THROWS_AS(parse_config(R"({"epochz": 3})"), FormatError);
    CHECK_THROWS_AS(parse_config(R"({"train": {"epochs": 3}})"), FormatError);
    CHECK_THROWS_AS(parse_config(R"({"epochs": "many"})"), FormatError);
    CHECK_THROWS_AS(parse_config(R"({"learning_rate": -1})"), FormatError);
    CHECK_THROWS_AS(parse_config(R"({"x0": [1, 2, 3]})"), FormatError);
    CHECK_THROWS_AS(parse_config("[1, 2]"), FormatError);
    CHECK_THROWS_AS(parse_config("{"), FormatError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), FormatError);
  }
}

TEST_SUITE("command line") {
  TEST_CASE("help exits zero with usage text") {
    const auto r = run_cli({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("rollout") != std::string::npos);
  }

  TEST_CASE("missing or broken configs fail with a message") {
    TempDir dir;
    const auto r = run_cli({"train", "--config", (dir.path / "nope.json").string(), "--out", dir.path.string()});
    CHECK(r.code != 0);
    CHECK(r.err.find("error:") != std::string::npos);
    write_text_file(dir.path / "c.json", R"({"bogus": 1})");
    CHECK(run_cli({"train", "--config", (dir.path / "c.json").string(), "--out", dir.path.string()}).code != 0);
    CHECK(run_cli({"rollout", "--config", (dir.path / "c.json").string(), "--out", dir.path.string()}).code != 0);
    CHECK(run_cli({}).code != 0);
  }

  TEST_CASE("train, rollout and evaluate produce consistent artifacts") {
    TempDir dir;
    const auto cfg = dir.path / "cfg.json";
    write_text_file(cfg, R"({"system": "sho", "layers": 2, "hidden": 5, "epochs": 20, "batch_collocation": 8,
                             "batch_matching": 8, "seed": 3, "horizon": 12, "step": 0.25,
                             "metric_samples": 5, "metric_k": [1, 2], "checkpoint_every": 10})");
    const auto out = dir.path / "run";
    REQUIRE(run_cli({"train", "--config", cfg.string(), "--out", out.string()}).code == 0);
    CHECK(fs::exists(out / "checkpoint_10.ckpt"));
    CHECK(fs::exists(out / "checkpoint_20.ckpt"));
    CHECK(lines_of(read_text_file(out / "loss.csv")).size() == 21);

    const auto ckpt = (out / "model.ckpt").string();
    REQUIRE(run_cli({"rollout", "--config", cfg.string(), "--out", out.string(), "--checkpoint", ckpt}).code == 0);
    const auto model = load_sympflow(ckpt);
    const auto rows = lines_of(read_text_file(out / "rollout.csv"));
    REQUIRE(rows.size() == 1 + 49);
    CHECK(rows[0] == "t,x_1,x_2,energy,drift");
    const PhasePoint x0{{1.0}, {0.0}};
    bool match = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double t = 0.25 * static_cast<double>(i - 1);
      const auto y = rollout(model, 1.0, t, x0);
      const double h = hamiltonian(HarmonicOscillator{}, y);
      const std::string expect = format_double(t) + "," + format_double(y.q[0]) + "," + format_double(y.p[0]) +
                                 "," + format_double(h) + "," + format_double(h - 0.5);
      match = match && rows[i] == expect;
    }
    CHECK(match);

    REQUIRE(run_cli({"evaluate", "--config", cfg.string(), "--out", out.string(), "--checkpoint", ckpt}).code == 0);
    const auto metrics = lines_of(read_text_file(out / "metrics.csv"));
    CHECK(metrics[0] == "metric,k,value,used,skipped");
    CHECK(metrics.size() == 1 + 4 + 2);
    CHECK(fs::exists(out / "energy_drift.csv"));

    // checkpoints of the wrong dimension are refused
    write_text_file(dir.path / "hh.json", R"({"system": "henon_heiles"})");
    CHECK(run_cli({"rollout", "--config", (dir.path / "hh.json").string(), "--out", out.string(), "--checkpoint",
                   ckpt})
              .code != 0);
  }

  TEST_CASE("generate-data and poincare") {
    TempDir dir;
    const auto cfg = dir.path / "cfg.json";
    write_text_file(cfg, R"({"system": "henon_heiles", "n_trajectories": 2, "samples_per_trajectory": 3,
                             "horizon": 200, "seed": 4})");
    REQUIRE(run_cli({"generate-data", "--config", cfg.string(), "--out", (dir.path / "data").string()}).code == 0);
    CHECK(read_dataset(dir.path / "data", 1.0).samples.size() == 6);
    REQUIRE(run_cli({"poincare", "--config", cfg.string(), "--out", dir.path.string()}).code == 0);
    const auto rows = lines_of(read_text_file(dir.path / "poincare.csv"));
    CHECK(rows[0] == "t,q_y,p_y,energy");
    CHECK(rows.size() > 5);
  }
}
