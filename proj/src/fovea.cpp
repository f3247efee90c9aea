#include "fovrl/fovea.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "fovrl/errors.hpp"

namespace fovrl::fovea {
namespace {

void check_focal_point(FocalPoint fp, int width, int height) {
  if (fp.x < 0 || fp.x >= width || fp.y < 0 || fp.y >= height) {
    throw InvalidInput("focal point (" + std::to_string(fp.x) + "," + std::to_string(fp.y) +
                       ") outside the frame");
  }
}

Rect screen_rect(int width, int height) { return {0, 0, width, height}; }

Rect intersect(const Rect& a, const Rect& b) {
  return {std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1), std::min(a.y1, b.y1)};
}

// Visits every block of `layer_index` that owns at least one pixel. The
// callback receives the block rectangle (already clipped to layer and screen)
// and the rectangle of the next-inner layer to exclude (may be empty).
template <typename Fn>
void for_each_owned_block(const RoiConfig& cfg, std::size_t layer_index, FocalPoint fp, int width,
                          int height, Fn&& fn) {
  const RoiLayer& layer = cfg.layers[layer_index];
  const Rect outer = layer_rect(layer, fp);
  const Rect inner = layer_index > 0 ? layer_rect(cfg.layers[layer_index - 1], fp) : Rect{};
  const Rect visible = intersect(outer, screen_rect(width, height));
  if (visible.empty()) return;
  const int s = layer.factor;
  for (int by = outer.y0; by < outer.y1; by += s) {
    for (int bx = outer.x0; bx < outer.x1; bx += s) {
      const Rect block = intersect({bx, by, bx + s, by + s}, visible);
      if (block.empty()) continue;
      if (!inner.empty() && inner.covers(block)) continue;
      fn(block, inner);
    }
  }
}

}  // namespace

void RoiConfig::validate() const {
  if (layers.empty()) throw InvalidConfig("RoI config needs at least one layer");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const RoiLayer& l = layers[i];
    if (l.factor <= 0) throw InvalidConfig("subsampling factor must be a positive integer");
    if (l.width <= 0 || l.height <= 0) throw InvalidConfig("focal rectangle must be non-empty");
    if (l.width % 2 != 0 || l.height % 2 != 0) {
      throw InvalidConfig("focal width/height must be even, got " + std::to_string(l.width) + "x" +
                          std::to_string(l.height));
    }
    if (i > 0) {
      const RoiLayer& in = layers[i - 1];
      if (l.width <= in.width || l.height <= in.height) {
        throw InvalidConfig("focal rectangles must strictly grow outward");
      }
      if (l.factor < in.factor) throw InvalidConfig("subsampling factors must be non-decreasing outward");
    }
  }
  if (peripheral_grid <= 0) throw InvalidConfig("peripheral grid must be positive");
}

Rect layer_rect(const RoiLayer& layer, FocalPoint fp) {
  const int x0 = fp.x - layer.width / 2;
  const int y0 = fp.y - layer.height / 2;
  return {x0, y0, x0 + layer.width, y0 + layer.height};
}

VisualAction visual_action_from_index(int index) {
  if (index < 0 || index >= kVisualActionCount) {
    throw InvalidInput("visual action index out of range: " + std::to_string(index));
  }
  return static_cast<VisualAction>(index);
}

std::string_view visual_action_name(VisualAction a) {
  switch (a) {
    case VisualAction::kStay: return "STAY";
    case VisualAction::kUp: return "UP";
    case VisualAction::kDown: return "DOWN";
    case VisualAction::kLeft: return "LEFT";
    case VisualAction::kRight: return "RIGHT";
  }
  return "?";
}

Frame apply_roi(const Frame& frame, const RoiConfig& cfg, FocalPoint fp) {
  validate_frame(frame);
  cfg.validate();
  check_focal_point(fp, frame.width, frame.height);

  Frame out(frame.width, frame.height, 0.0);
  for (std::size_t li = 0; li < cfg.layers.size(); ++li) {
    for_each_owned_block(cfg, li, fp, frame.width, frame.height, [&](const Rect& block, const Rect& inner) {
      double sum = 0.0;
      int count = 0;
      for (int y = block.y0; y < block.y1; ++y) {
        for (int x = block.x0; x < block.x1; ++x) {
          if (inner.contains(x, y)) continue;
          sum += frame.at(x, y);
          ++count;
        }
      }
      const double mean = sum / count;
      for (int y = block.y0; y < block.y1; ++y) {
        for (int x = block.x0; x < block.x1; ++x) {
          if (!inner.contains(x, y)) out.at(x, y) = mean;
        }
      }
    });
  }
  if (cfg.peripheral) return apply_peripheral(frame, cfg, fp, out);
  return out;
}

Frame apply_peripheral(const Frame& frame, const RoiConfig& cfg, FocalPoint fp, const Frame& partial) {
  validate_frame(frame);
  cfg.validate();
  check_focal_point(fp, frame.width, frame.height);
  if (!cfg.peripheral) throw ContractViolation("apply_peripheral called on a non-peripheral config");
  if (partial.width != frame.width || partial.height != frame.height ||
      partial.values.size() != frame.values.size()) {
    throw InvalidInput("partial frame size does not match the source frame");
  }
  const int grid = cfg.peripheral_grid;
  if (frame.width % grid != 0 || frame.height % grid != 0) {
    throw InvalidConfig("peripheral grid " + std::to_string(grid) + " does not divide the frame");
  }
  const int bw = frame.width / grid;
  const int bh = frame.height / grid;
  const Rect outer = layer_rect(cfg.layers.back(), fp);

  Frame out = partial;
  for (int gy = 0; gy < grid; ++gy) {
    for (int gx = 0; gx < grid; ++gx) {
      const Rect block{gx * bw, gy * bh, (gx + 1) * bw, (gy + 1) * bh};
      if (outer.covers(block)) continue;
      double sum = 0.0;
      for (int y = block.y0; y < block.y1; ++y) {
        for (int x = block.x0; x < block.x1; ++x) sum += frame.at(x, y);
      }
      const double mean = sum / (bw * bh);
      for (int y = block.y0; y < block.y1; ++y) {
        for (int x = block.x0; x < block.x1; ++x) {
          if (!outer.contains(x, y)) out.at(x, y) = mean;
        }
      }
    }
  }
  return out;
}

int peripheral_visible_blocks(const RoiConfig& cfg, FocalPoint fp, int width, int height) {
  cfg.validate();
  const int grid = cfg.peripheral_grid;
  if (width % grid != 0 || height % grid != 0) {
    throw InvalidConfig("peripheral grid " + std::to_string(grid) + " does not divide the frame");
  }
  const int bw = width / grid;
  const int bh = height / grid;
  const Rect outer = layer_rect(cfg.layers.back(), fp);
  int visible = 0;
  for (int gy = 0; gy < grid; ++gy) {
    for (int gx = 0; gx < grid; ++gx) {
      if (!outer.covers({gx * bw, gy * bh, (gx + 1) * bw, (gy + 1) * bh})) ++visible;
    }
  }
  return visible;
}

std::int64_t visible_pixel_count(const RoiConfig& cfg, bool /*fp_interior*/) {
  cfg.validate();
  // Exact rational accumulation over the common denominator of all factor^2.
  std::int64_t denom = 1;
  for (const RoiLayer& l : cfg.layers) denom = std::lcm(denom, std::int64_t{l.factor} * l.factor);
  std::int64_t numer = 0;
  std::int64_t inner_area = 0;
  for (const RoiLayer& l : cfg.layers) {
    const std::int64_t area = std::int64_t{l.width} * l.height;
    const std::int64_t f2 = std::int64_t{l.factor} * l.factor;
    numer += (area - inner_area) * (denom / f2);
    inner_area = area;
  }
  std::int64_t total = (numer + denom - 1) / denom;
  if (cfg.peripheral) {
    total += peripheral_visible_blocks(cfg, screen_center());
  }
  return total;
}

std::int64_t block_value_count(const RoiConfig& cfg, FocalPoint fp, int width, int height) {
  cfg.validate();
  check_focal_point(fp, width, height);
  std::int64_t count = 0;
  for (std::size_t li = 0; li < cfg.layers.size(); ++li) {
    for_each_owned_block(cfg, li, fp, width, height, [&](const Rect&, const Rect&) { ++count; });
  }
  if (cfg.peripheral) count += peripheral_visible_blocks(cfg, fp, width, height);
  return count;
}

FocalPoint move_focal_point(FocalPoint fp, VisualAction a, int step, int width, int height) {
  switch (a) {
    case VisualAction::kStay: break;
    case VisualAction::kUp: fp.y -= step; break;
    case VisualAction::kDown: fp.y += step; break;
    case VisualAction::kLeft: fp.x -= step; break;
    case VisualAction::kRight: fp.x += step; break;
  }
  fp.x = std::clamp(fp.x, 0, width - 1);
  fp.y = std::clamp(fp.y, 0, height - 1);
  return fp;
}

}  // namespace fovrl::fovea
