#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fovrl/tensor.hpp"

namespace fovrl::tensor {

struct ParamSpec {
  std::string name;
  Shape shape;

  bool operator==(const ParamSpec&) const = default;
};

// Named parameter tensors packed into one flat buffer (theta). The layout is
// fixed at construction; only values change afterwards.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::vector<ParamSpec> specs);

  std::size_t size() const { return values_.size(); }
  std::size_t tensor_count() const { return specs_.size(); }
  const std::vector<ParamSpec>& specs() const { return specs_; }
  const ParamSpec& spec(std::size_t i) const { return specs_.at(i); }
  std::size_t offset(std::size_t i) const { return offsets_.at(i); }
  std::optional<std::size_t> find(const std::string& name) const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> tensor(std::size_t i);
  std::span<const double> tensor(std::size_t i) const;
  std::span<double> tensor(const std::string& name);
  // Slice of a flat buffer aligned with this layout (e.g. a gradient).
  std::span<double> slice(std::span<double> flat, std::size_t i) const;

  std::uint64_t version() const { return version_; }
  void bump_version() { ++version_; }

  bool same_layout(const ParamVector& other) const { return specs_ == other.specs_; }

  // One external leaf per tensor. Gradients accumulate into the matching
  // slice of `grad` (same layout, size()); empty means no gradient.
  std::vector<Var> bind(Tape& tape, std::span<double> grad = {}) const;

  bool operator==(const ParamVector& other) const {
    return specs_ == other.specs_ && values_ == other.values_;
  }

 private:
  std::vector<ParamSpec> specs_;
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
  std::uint64_t version_ = 0;
};

// Binary checkpoint, little-endian:
//   "FVRL" | version u32 | tensor count u64 |
//   per tensor: name length u32, name bytes, rank u32, dims u64 x rank,
//               float64 values.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const ParamVector& params);
ParamVector read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const ParamVector& params);
ParamVector load_checkpoint(const std::filesystem::path& path);

}  // namespace fovrl::tensor
