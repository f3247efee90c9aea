#include "fovrl/frame.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "fovrl/errors.hpp"

namespace fovrl {

void validate_frame(const Frame& frame) {
  if (frame.width <= 0 || frame.height <= 0) {
    throw InvalidInput("frame dimensions must be positive");
  }
  if (frame.values.size() != static_cast<std::size_t>(frame.width) * frame.height) {
    throw InvalidInput("frame value count does not match " + std::to_string(frame.width) + "x" +
                       std::to_string(frame.height));
  }
  for (double v : frame.values) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw InvalidInput("frame values must be finite and within [0,1]");
    }
  }
}

Frame pixelwise_max(const Frame& a, const Frame& b) {
  if (a.width != b.width || a.height != b.height) {
    throw InvalidInput("pixelwise_max: frame size mismatch");
  }
  Frame out(a.width, a.height);
  std::transform(a.values.begin(), a.values.end(), b.values.begin(), out.values.begin(),
                 [](double x, double y) { return std::max(x, y); });
  return out;
}

void write_pgm(const std::filesystem::path& path, const Frame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << frame.width << ' ' << frame.height << "\n255\n";
  std::vector<unsigned char> bytes(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const double v = std::clamp(frame.values[i], 0.0, 1.0);
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Frame read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255) {
    throw InvalidInput("unsupported PGM header in " + path.string());
  }
  in.get();
  Frame frame(w, h);
  std::vector<unsigned char> bytes(frame.size());
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw InvalidInput("truncated PGM " + path.string());
  for (std::size_t i = 0; i < bytes.size(); ++i) frame.values[i] = bytes[i] / 255.0;
  return frame;
}

}  // namespace fovrl
