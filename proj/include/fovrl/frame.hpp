#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace fovrl {

inline constexpr int kScreenWidth = 80;
inline constexpr int kScreenHeight = 80;

// Grayscale image, row-major, intensities in [0,1].
struct Frame {
  int width = kScreenWidth;
  int height = kScreenHeight;
  std::vector<double> values;

  Frame() : values(static_cast<std::size_t>(kScreenWidth) * kScreenHeight, 0.0) {}
  Frame(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }

  std::size_t size() const { return values.size(); }
  std::span<const double> view() const { return values; }

  bool operator==(const Frame&) const = default;
};

// Throws InvalidInput unless dimensions are positive, the value count matches
// and every value is finite and within [0,1].
void validate_frame(const Frame& frame);

Frame pixelwise_max(const Frame& a, const Frame& b);

// Binary P5 graymap, maxval 255, intensity = round(value * 255).
void write_pgm(const std::filesystem::path& path, const Frame& frame);
Frame read_pgm(const std::filesystem::path& path);

}  // namespace fovrl
