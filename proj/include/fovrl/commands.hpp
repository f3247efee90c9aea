#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "fovrl/trainer.hpp"

// CLI command bodies. Each returns a process exit code and reports errors on
// `err`: 0 success, 1 generic failure, 2 I/O failure, 3 malformed run data.
namespace fovrl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitMalformed = 3;

inline constexpr const char* kSeedEnvVar = "FOVEA_SEED";
inline constexpr const char* kScoresFile = "scores.csv";
inline constexpr const char* kHeatmapCsvFile = "heatmap.csv";
inline constexpr const char* kHeatmapPgmFile = "heatmap.pgm";
inline constexpr const char* kCurveFile = "curve.csv";
inline constexpr int kCurveWindow = 100;

struct CurvePoint {
  std::int64_t episode;  // index of the last episode in the window
  double mean_score;
};

// Mean over every full window; a single averaged point when there are fewer
// values than the window.
std::vector<CurvePoint> sliding_mean(std::span<const double> scores, int window = kCurveWindow);

// Raw scores from an episodes.csv stream; throws MalformedData.
std::vector<double> read_episode_scores(std::istream& in);

class MalformedData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int cmd_train(const std::filesystem::path& config, const std::filesystem::path& out_dir, std::ostream& err);
int cmd_eval(const std::filesystem::path& config, const std::filesystem::path& checkpoint, int episodes,
             const std::filesystem::path& out_dir, std::ostream& err);
int cmd_curve(const std::filesystem::path& run_dir, std::ostream& err, int window = kCurveWindow);

// Writes visit counts as a P5 image, linearly rescaled so the maximum is 255.
void write_heatmap_pgm(const std::filesystem::path& path, std::span<const std::int64_t> counts, int width, int height);

}  // namespace fovrl::cli
