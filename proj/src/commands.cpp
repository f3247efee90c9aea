#include "fovrl/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "fovrl/config.hpp"
#include "fovrl/errors.hpp"

namespace fovrl::cli {

namespace {

cfg::ExperimentConfig load_config(const std::filesystem::path& path) {
  cfg::ExperimentConfig c = cfg::parse_config(path);
  if (const char* s = std::getenv(kSeedEnvVar); s != nullptr && *s != '\0') {
    std::uint64_t seed = 0;
    const char* end = s + std::char_traits<char>::length(s);
    auto [ptr, ec] = std::from_chars(s, end, seed);
    if (ec != std::errc{} || ptr != end) throw ConfigError(std::string(kSeedEnvVar) + " is not an unsigned integer");
    c.train.seed = seed;
  }
  return c;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    body();
    return kExitOk;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const MalformedData& e) {
    err << "error: " << e.what() << '\n';
    return kExitMalformed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace

std::vector<CurvePoint> sliding_mean(std::span<const double> scores, int window) {
  if (window < 1) throw InvalidInput("window must be >= 1");
  std::vector<CurvePoint> out;
  if (scores.empty()) return out;
  const auto n = scores.size();
  const auto w = static_cast<std::size_t>(window);
  if (n < w) {
    double sum = 0.0;
    for (double s : scores) sum += s;
    out.push_back({static_cast<std::int64_t>(n - 1), sum / static_cast<double>(n)});
    return out;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < w; ++i) sum += scores[i];
  out.push_back({static_cast<std::int64_t>(w - 1), sum / static_cast<double>(w)});
  for (std::size_t i = w; i < n; ++i) {
    sum += scores[i] - scores[i - w];
    out.push_back({static_cast<std::int64_t>(i), sum / static_cast<double>(w)});
  }
  return out;
}

std::vector<double> read_episode_scores(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw MalformedData("episode log is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != train::kEpisodeCsvHeader) throw MalformedData("unexpected episode log header: " + line);

  std::vector<double> scores;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cols.push_back(cell);
    if (cols.size() != 6) throw MalformedData("line " + std::to_string(line_no) + ": expected 6 columns");
    double score = 0.0;
    const std::string& s = cols[3];
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), score);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
      throw MalformedData("line " + std::to_string(line_no) + ": bad raw_score '" + s + "'");
    }
    scores.push_back(score);
  }
  return scores;
}

void write_heatmap_pgm(const std::filesystem::path& path, std::span<const std::int64_t> counts, int width,
                       int height) {
  if (counts.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw InvalidInput("heat map size does not match its dimensions");
  }
  const std::int64_t peak = counts.empty() ? 0 : *std::ranges::max_element(counts);
  std::ofstream out = open_out(path);
  out << "P5\n" << width << ' ' << height << "\n255\n";
  for (const std::int64_t c : counts) {
    const auto v = peak == 0 ? 0 : static_cast<int>((c * 255 + peak / 2) / peak);
    out.put(static_cast<char>(static_cast<unsigned char>(v)));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

int cmd_train(const std::filesystem::path& config, const std::filesystem::path& out_dir, std::ostream& err) {
  return guarded(err, [&] {
    const cfg::ExperimentConfig c = load_config(config);
    ensure_dir(out_dir);
    train::RunOptions opts;
    opts.out_dir = out_dir;
    train::run_training(c.train, opts);
  });
}

int cmd_eval(const std::filesystem::path& config, const std::filesystem::path& checkpoint, int episodes,
             const std::filesystem::path& out_dir, std::ostream& err) {
  return guarded(err, [&] {
    if (episodes < 0) throw InvalidInput("episode count must be >= 0");
    const cfg::ExperimentConfig c = load_config(config);
    const tensor::ParamVector params = tensor::load_checkpoint(checkpoint);
    ensure_dir(out_dir);

    train::EvalOptions opts;
    opts.seed = c.train.seed;
    const train::EvalResult result = train::evaluate(params, c.train, episodes, opts);

    std::ofstream scores = open_out(out_dir / kScoresFile);
    scores << "episode,steps,raw_score\n";
    for (std::size_t i = 0; i < result.episodes.size(); ++i) {
      scores << i << ',' << result.episodes[i].steps << ',' << result.episodes[i].raw_score << '\n';
    }
    if (!scores) throw IoError("failed writing scores");

    std::ofstream heat = open_out(out_dir / kHeatmapCsvFile);
    heat << 'y';
    for (int x = 0; x < result.width; ++x) heat << ",x" << x;
    heat << '\n';
    for (int y = 0; y < result.height; ++y) {
      heat << y;
      for (int x = 0; x < result.width; ++x) heat << ',' << result.heatmap[static_cast<std::size_t>(y * result.width + x)];
      heat << '\n';
    }
    if (!heat) throw IoError("failed writing heat map");
    write_heatmap_pgm(out_dir / kHeatmapPgmFile, result.heatmap, result.width, result.height);
  });
}

int cmd_curve(const std::filesystem::path& run_dir, std::ostream& err, int window) {
  return guarded(err, [&] {
    const auto path = run_dir / train::kEpisodeLogFile;
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    const std::vector<double> scores = read_episode_scores(in);
    const auto points = sliding_mean(scores, window);
    std::ofstream out = open_out(run_dir / kCurveFile);
    out << "episode,mean_score\n";
    out.precision(10);
    for (const auto& p : points) out << p.episode << ',' << p.mean_score << '\n';
    if (!out) throw IoError("failed writing curve");
  });
}

}  // namespace fovrl::cli
