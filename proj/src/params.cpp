#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "fovrl/errors.hpp"
#include "fovrl/params.hpp"

namespace fovrl::tensor {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw InvalidCheckpoint("truncated checkpoint");
  return v;
}

constexpr std::array<char, 4> kMagic = {'F', 'V', 'R', 'L'};

}  // namespace

ParamVector::ParamVector(std::vector<ParamSpec> specs) : specs_(std::move(specs)) {
  std::unordered_set<std::string> seen;
  std::size_t total = 0;
  for (const ParamSpec& s : specs_) {
    if (!seen.insert(s.name).second) throw InvalidShape("duplicate parameter name '" + s.name + "'");
    if (s.shape.empty()) throw InvalidShape("parameter '" + s.name + "' has no shape");
    offsets_.push_back(total);
    total += element_count(s.shape);
  }
  values_.assign(total, 0.0);
}

std::optional<std::size_t> ParamVector::find(const std::string& name) const {
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (specs_[i].name == name) return i;
  }
  return std::nullopt;
}

std::span<double> ParamVector::tensor(std::size_t i) {
  return std::span<double>(values_).subspan(offsets_.at(i), element_count(specs_[i].shape));
}

std::span<const double> ParamVector::tensor(std::size_t i) const {
  return std::span<const double>(values_).subspan(offsets_.at(i), element_count(specs_[i].shape));
}

std::span<double> ParamVector::tensor(const std::string& name) {
  const auto i = find(name);
  if (!i) throw InvalidShape("no parameter named '" + name + "'");
  return tensor(*i);
}

std::span<double> ParamVector::slice(std::span<double> flat, std::size_t i) const {
  if (flat.size() != values_.size()) throw InvalidShape("flat buffer does not match parameter layout");
  return flat.subspan(offsets_.at(i), element_count(specs_[i].shape));
}

std::vector<Var> ParamVector::bind(Tape& tape, std::span<double> grad) const {
  if (!grad.empty() && grad.size() != values_.size()) {
    throw InvalidShape("gradient buffer does not match parameter layout");
  }
  std::vector<Var> vars;
  vars.reserve(specs_.size());
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const std::size_t n = element_count(specs_[i].shape);
    const std::span<double> g = grad.empty() ? std::span<double>{} : grad.subspan(offsets_[i], n);
    vars.push_back(tape.external(tensor(i), specs_[i].shape, g));
  }
  return vars;
}

void write_checkpoint(std::ostream& out, const ParamVector& params) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, params.tensor_count());
  for (std::size_t i = 0; i < params.tensor_count(); ++i) {
    const ParamSpec& s = params.spec(i);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.name.size()));
    out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.shape.size()));
    for (std::size_t d : s.shape) put<std::uint64_t>(out, d);
    const auto v = params.tensor(i);
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
}

ParamVector read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw InvalidCheckpoint("bad checkpoint magic");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw InvalidCheckpoint("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = get<std::uint64_t>(in);
  if (count > (1u << 20)) throw InvalidCheckpoint("implausible tensor count");
  std::vector<ParamSpec> specs;
  std::vector<std::vector<double>> data;
  for (std::uint64_t t = 0; t < count; ++t) {
    ParamSpec s;
    const auto name_len = get<std::uint32_t>(in);
    if (name_len > 4096) throw InvalidCheckpoint("implausible tensor name length");
    s.name.resize(name_len);
    in.read(s.name.data(), name_len);
    const auto rank = get<std::uint32_t>(in);
    if (rank == 0 || rank > 8) throw InvalidCheckpoint("bad tensor rank for '" + s.name + "'");
    std::uint64_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const auto d = get<std::uint64_t>(in);
      if (d == 0 || d > (1ull << 32)) throw InvalidCheckpoint("bad dimension for '" + s.name + "'");
      s.shape.push_back(static_cast<std::size_t>(d));
      n *= d;
    }
    if (n > (1ull << 31)) throw InvalidCheckpoint("tensor '" + s.name + "' too large");
    std::vector<double> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw InvalidCheckpoint("truncated values for '" + s.name + "'");
    specs.push_back(std::move(s));
    data.push_back(std::move(v));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw InvalidCheckpoint("trailing bytes after the last tensor");
  ParamVector params;
  try {
    params = ParamVector(std::move(specs));
  } catch (const std::invalid_argument& e) {
    throw InvalidCheckpoint(e.what());
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto dst = params.tensor(i);
    std::copy(data[i].begin(), data[i].end(), dst.begin());
  }
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const ParamVector& params) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    write_checkpoint(out, params);
    if (!out) throw IoError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ParamVector load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidCheckpoint("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace fovrl::tensor
