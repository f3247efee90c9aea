#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "fovrl/commands.hpp"
#include "fovrl/frame.hpp"

using namespace fovrl;
using namespace fovrl::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream o;
  o << in.rdbuf();
  return o.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

const char* kTinyConfig =
    "mode=sequential\nworkers=1\nconv=2x8x4,2x4x2\nlstm_size=8\nmax_episode_steps=100\n";

}  // namespace

TEST_CASE("sliding mean") {
  std::vector<double> s(200);
  std::iota(s.begin(), s.end(), 1.0);
  const auto c = sliding_mean(s, 100);
  CHECK(c.size() == 101);
  CHECK(c.back().mean_score == doctest::Approx(150.5));
  CHECK(c.front().mean_score == doctest::Approx(50.5));
  const std::vector<double> few = {2, 4, 9};
  const auto one = sliding_mean(few, 100);
  REQUIRE(one.size() == 1);
  CHECK(one[0].mean_score == doctest::Approx(5.0));
  const std::vector<double> flat(150, 3.0);
  for (const auto& p : sliding_mean(flat, 100)) CHECK(p.mean_score == 3.0);
  CHECK(sliding_mean(std::vector<double>{}, 100).empty());
}

TEST_CASE("train, eval and curve end to end") {
  TempDir dir("fovrl_cli");
  write(dir.path / "run.cfg", std::string(kTinyConfig) + "T_max=200\n");
  std::ostringstream err;
  REQUIRE(cmd_train(dir.path / "run.cfg", dir.path / "run", err) == kExitOk);
  CHECK(fs::exists(dir.path / "run" / "checkpoint.bin"));
  CHECK(lines(dir.path / "run" / "updates.csv").front() == train::kUpdateCsvHeader);

  REQUIRE(cmd_eval(dir.path / "run.cfg", dir.path / "run" / "checkpoint.bin", 3, dir.path / "eval", err) == kExitOk);
  const auto scores = lines(dir.path / "eval" / "scores.csv");
  CHECK(scores.front() == "episode,steps,raw_score");
  CHECK(scores.size() == 4);
  std::int64_t steps = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    std::istringstream row(scores[i]);
    std::string a, b;
    std::getline(row, a, ',');
    std::getline(row, b, ',');
    steps += std::stoll(b);
  }
  const auto heat = lines(dir.path / "eval" / "heatmap.csv");
  CHECK(heat.size() == 81);
  std::int64_t cells = 0;
  for (std::size_t y = 1; y < heat.size(); ++y) {
    std::istringstream row(heat[y]);
    std::string cell;
    std::getline(row, cell, ',');
    while (std::getline(row, cell, ',')) cells += std::stoll(cell);
  }
  CHECK(cells == steps);
  const Frame pgm = read_pgm(dir.path / "eval" / "heatmap.pgm");
  CHECK(pgm.width == 80);
  CHECK(*std::max_element(pgm.values.begin(), pgm.values.end()) == 1.0);

  REQUIRE(cmd_curve(dir.path / "run", err) == kExitOk);
  const auto curve = lines(dir.path / "run" / "curve.csv");
  CHECK(curve.front() == "episode,mean_score");
  CHECK(curve.size() == 2);
}

TEST_CASE("eval with zero episodes writes only headers") {
  TempDir dir("fovrl_cli_zero");
  write(dir.path / "run.cfg", std::string(kTinyConfig) + "T_max=0\n");
  std::ostringstream err;
  REQUIRE(cmd_train(dir.path / "run.cfg", dir.path / "run", err) == kExitOk);
  REQUIRE(cmd_eval(dir.path / "run.cfg", dir.path / "run" / "checkpoint.bin", 0, dir.path / "eval", err) == kExitOk);
  CHECK(slurp(dir.path / "eval" / "scores.csv") == "episode,steps,raw_score\n");
}

TEST_CASE("exit codes") {
  TempDir dir("fovrl_cli_err");
  write(dir.path / "run.cfg", std::string(kTinyConfig) + "T_max=0\n");
  write(dir.path / "bad.cfg", "gamma=1.5\n");
  write(dir.path / "blocker", "x");
  std::ostringstream err;
  CHECK(cmd_train(dir.path / "run.cfg", dir.path / "blocker" / "out", err) == kExitIo);
  CHECK(cmd_train(dir.path / "bad.cfg", dir.path / "out", err) == kExitError);
  CHECK(err.str().find("line 1") != std::string::npos);
  CHECK(cmd_train(dir.path / "missing.cfg", dir.path / "out", err) != kExitOk);

  fs::create_directories(dir.path / "badrun");
  write(dir.path / "badrun" / "episodes.csv", std::string(train::kEpisodeCsvHeader) + "\n0,0,5,abc,0,0\n");
  CHECK(cmd_curve(dir.path / "badrun", err) == kExitMalformed);
  write(dir.path / "badrun" / "episodes.csv", "nonsense\n");
  CHECK(cmd_curve(dir.path / "badrun", err) == kExitMalformed);
  CHECK(cmd_eval(dir.path / "run.cfg", dir.path / "nope.bin", 1, dir.path / "eval", err) == kExitError);
}

TEST_CASE("FOVEA_SEED overrides the config seed") {
  TempDir dir("fovrl_cli_seed");
  write(dir.path / "run.cfg", std::string(kTinyConfig) + "T_max=60\nseed=1\n");
  std::ostringstream err;
  ::setenv(kSeedEnvVar, "1", 1);
  REQUIRE(cmd_train(dir.path / "run.cfg", dir.path / "a", err) == kExitOk);
  ::setenv(kSeedEnvVar, "77", 1);
  REQUIRE(cmd_train(dir.path / "run.cfg", dir.path / "b", err) == kExitOk);
  ::unsetenv(kSeedEnvVar);
  REQUIRE(cmd_train(dir.path / "run.cfg", dir.path / "c", err) == kExitOk);
  CHECK(slurp(dir.path / "a" / "checkpoint.bin") == slurp(dir.path / "c" / "checkpoint.bin"));
  CHECK(slurp(dir.path / "a" / "checkpoint.bin") != slurp(dir.path / "b" / "checkpoint.bin"));
  ::setenv(kSeedEnvVar, "x1", 1);
  CHECK(cmd_train(dir.path / "run.cfg", dir.path / "d", err) == kExitError);
  ::unsetenv(kSeedEnvVar);
}
