#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string_view>
#include <vector>

#include "fovrl/frame.hpp"

// Region-of-Interest foveation: nested block-averaged focal layers centred on
// a movable focal point, with an optional very-low-resolution periphery.
namespace fovrl::fovea {

struct FocalPoint {
  int x = kScreenWidth / 2;
  int y = kScreenHeight / 2;

  auto operator<=>(const FocalPoint&) const = default;
};

inline FocalPoint screen_center(int width = kScreenWidth, int height = kScreenHeight) {
  return {width / 2, height / 2};
}

struct RoiLayer {
  int width = 0;
  int height = 0;
  int factor = 1;

  bool operator==(const RoiLayer&) const = default;
};

// Layers are ordered innermost first. A Constant layer is a one-element list.
struct RoiConfig {
  std::vector<RoiLayer> layers;
  bool peripheral = false;
  int peripheral_grid = 5;

  // Throws InvalidConfig on odd or non-nested rectangles, zero or decreasing
  // factors, or a non-positive peripheral grid.
  void validate() const;

  bool operator==(const RoiConfig&) const = default;
};

// Half-open pixel rectangle [x0,x1) x [y0,y1); may extend off-screen.
struct Rect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  bool covers(const Rect& r) const { return r.x0 >= x0 && r.x1 <= x1 && r.y0 >= y0 && r.y1 <= y1; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
};

Rect layer_rect(const RoiLayer& layer, FocalPoint fp);

enum class VisualAction : int { kStay = 0, kUp = 1, kDown = 2, kLeft = 3, kRight = 4 };
inline constexpr int kVisualActionCount = 5;
inline constexpr int kDefaultGazeStep = 5;

VisualAction visual_action_from_index(int index);
std::string_view visual_action_name(VisualAction a);

// Full-canvas foveated frame. Each layer's ring is block-averaged on a grid
// anchored at that layer's top-left corner; a block's mean is taken over the
// pixels it owns (inside the layer, outside the next-inner layer, on-screen)
// and replicated over them. Outside the outermost layer pixels are zero, or
// the peripheral fill when cfg.peripheral is set.
Frame apply_roi(const Frame& frame, const RoiConfig& cfg, FocalPoint fp);

// Fills every pixel outside the outermost focal rectangle with the mean of
// its peripheral block, computed from the original frame. Blocks fully
// covered by the outermost rectangle stay hidden.
Frame apply_peripheral(const Frame& frame, const RoiConfig& cfg, FocalPoint fp, const Frame& partial);

// Number of peripheral blocks not fully hidden by the outermost rectangle.
int peripheral_visible_blocks(const RoiConfig& cfg, FocalPoint fp, int width = kScreenWidth,
                              int height = kScreenHeight);

// Nominal pixel-value budget: sum over layers of ring area / factor^2 plus,
// for peripheral configs, the visible background blocks at the centred focal
// point. A fractional total (only possible for geometries whose rings are not
// block-aligned) is rounded up.
std::int64_t visible_pixel_count(const RoiConfig& cfg, bool fp_interior = true);

// Exact number of value-carrying blocks that apply_roi produces for this focal
// point: focal blocks owning at least one on-screen pixel plus visible
// peripheral blocks.
std::int64_t block_value_count(const RoiConfig& cfg, FocalPoint fp, int width = kScreenWidth,
                               int height = kScreenHeight);

FocalPoint move_focal_point(FocalPoint fp, VisualAction a, int step = kDefaultGazeStep,
                            int width = kScreenWidth, int height = kScreenHeight);

}  // namespace fovrl::fovea
