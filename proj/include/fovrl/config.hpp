#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fovrl/fovea.hpp"
#include "fovrl/trainer.hpp"

// Experiment configuration: flat `key=value` text, one key per line, `#`
// starts a comment. Every key is optional; an empty file gives the default
// hyperparameters and the Non-FoA model.
namespace fovrl::cfg {

struct ModelEntry {
  std::string name;  // display name, e.g. "Decreasing(P) 30-50-70"
  std::string slug;  // e.g. "decreasing_p_30_50_70"
  fovea::RoiConfig roi;
  std::int64_t pixel_count;
};

inline constexpr const char* kCustomModel = "custom";

const std::vector<ModelEntry>& model_catalog();
// Accepts display names and slugs; nullopt if unknown.
std::optional<ModelEntry> find_model(std::string_view name);

struct ExperimentConfig {
  std::string model_name = "Non-FoA, sub1";
  train::TrainConfig train;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig default_config();
// Errors name the offending line ("line 3: gamma=1.5: ..."). Throws
// ConfigError; a missing file throws IoError.
ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig parse_config(const std::filesystem::path& path);
std::string emit_config(const ExperimentConfig& config);

// "16x8x4,32x4x2" <-> conv stack; "30x30x1,50x50x2" <-> RoI layers.
std::string format_conv(const std::vector<net::ConvSpec>& conv);
std::string format_layers(const std::vector<fovea::RoiLayer>& layers);

}  // namespace fovrl::cfg
