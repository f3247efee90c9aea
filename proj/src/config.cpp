#include "fovrl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "fovrl/errors.hpp"

namespace fovrl::cfg {

namespace {

fovea::RoiConfig roi(std::vector<fovea::RoiLayer> layers, bool peripheral) {
  return fovea::RoiConfig{std::move(layers), peripheral, 5};
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::ranges::transform(s, s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

struct Bad {
  std::string why;
};

template <class T>
T parse_number(const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end || v.empty()) throw Bad{"not a number"};
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) throw Bad{"not finite"};
  }
  return out;
}

double parse_double(const std::string& v) { return parse_number<double>(v); }

std::int64_t parse_int(const std::string& v) { return parse_number<std::int64_t>(v); }

int parse_small_int(const std::string& v) {
  const auto n = parse_int(v);
  if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max()) throw Bad{"out of range"};
  return static_cast<int>(n);
}

bool parse_bool(const std::string& v) {
  const std::string l = lower(v);
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  throw Bad{"expected true or false"};
}

void require(bool ok, const char* why) {
  if (!ok) throw Bad{why};
}

std::vector<int> parse_triple(const std::string& item) {
  const auto parts = split(lower(item), 'x');
  if (parts.size() != 3) throw Bad{"expected AxBxC entries"};
  std::vector<int> out;
  for (const auto& p : parts) out.push_back(parse_small_int(p));
  return out;
}

std::vector<net::ConvSpec> parse_conv(const std::string& v) {
  std::vector<net::ConvSpec> out;
  for (const auto& item : split(v, ',')) {
    const auto t = parse_triple(item);
    require(t[0] > 0 && t[1] > 0 && t[2] > 0, "conv entries must be positive");
    out.push_back({t[0], t[1], t[2]});
  }
  require(!out.empty(), "need at least one conv layer");
  return out;
}

std::vector<fovea::RoiLayer> parse_layers(const std::string& v) {
  std::vector<fovea::RoiLayer> out;
  for (const auto& item : split(v, ',')) {
    const auto t = parse_triple(item);
    out.push_back({t[0], t[1], t[2]});
  }
  require(!out.empty(), "need at least one layer");
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

const char* fmt_bool(bool b) { return b ? "true" : "false"; }

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

// Application order matters only for model_name, which must come first so
// later geometry keys can refine it.
const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = [] {
    std::vector<std::pair<std::string, Setter>> t;
    auto add = [&](std::string key, Setter s) { t.emplace_back(std::move(key), std::move(s)); };
    add("model_name", [](ExperimentConfig& c, const std::string& v) {
      if (lower(v) == kCustomModel) {
        c.model_name = kCustomModel;
        return;
      }
      const auto m = find_model(v);
      if (!m) throw Bad{"unknown model name"};
      c.model_name = m->name;
      c.train.roi = m->roi;
    });
    add("roi_layers", [](ExperimentConfig& c, const std::string& v) {
      require(c.model_name == kCustomModel, "roi_layers requires model_name=custom");
      c.train.roi.layers = parse_layers(v);
    });
    add("roi_peripheral", [](ExperimentConfig& c, const std::string& v) {
      require(c.model_name == kCustomModel, "roi_peripheral requires model_name=custom");
      c.train.roi.peripheral = parse_bool(v);
    });
    add("peripheral_grid", [](ExperimentConfig& c, const std::string& v) {
      const int g = parse_small_int(v);
      require(g > 0 && kScreenWidth % g == 0 && kScreenHeight % g == 0, "must be a positive divisor of 80");
      c.train.roi.peripheral_grid = g;
    });
    add("vis_step", [](ExperimentConfig& c, const std::string& v) {
      const int s = parse_small_int(v);
      require(s >= 1 && s < kScreenWidth, "must be in [1, 79]");
      c.train.gaze_step = s;
    });
    add("env", [](ExperimentConfig& c, const std::string& v) {
      try {
        c.train.env_kind = env::parse_env_kind(v);
      } catch (const std::exception& e) {
        throw Bad{e.what()};
      }
    });
    add("seed", [](ExperimentConfig& c, const std::string& v) { c.train.seed = parse_number<std::uint64_t>(v); });
    add("workers", [](ExperimentConfig& c, const std::string& v) {
      const int w = parse_small_int(v);
      require(w >= 1 && w <= 1024, "must be in [1, 1024]");
      c.train.workers = w;
    });
    add("mode", [](ExperimentConfig& c, const std::string& v) {
      try {
        c.train.mode = train::parse_mode(v);
      } catch (const std::exception& e) {
        throw Bad{e.what()};
      }
    });
    add("gamma", [](ExperimentConfig& c, const std::string& v) {
      const double x = parse_double(v);
      require(x >= 0.0 && x <= 1.0, "gamma must be in [0, 1]");
      c.train.hyper.gamma = x;
    });
    add("lambda", [](ExperimentConfig& c, const std::string& v) {
      const double x = parse_double(v);
      require(x >= 0.0 && x <= 1.0, "lambda must be in [0, 1]");
      c.train.hyper.lambda = x;
    });
    add("beta", [](ExperimentConfig& c, const std::string& v) {
      const double x = parse_double(v);
      require(x >= 0.0, "beta must be >= 0");
      c.train.hyper.beta = x;
    });
    add("lr", [](ExperimentConfig& c, const std::string& v) {
      const double x = parse_double(v);
      require(x > 0.0, "lr must be > 0");
      c.train.optimizer.lr = x;
    });
    add("adam_beta1", [](ExperimentConfig& c, const std::string& v) {
      const double x = parse_double(v);
      require(x >= 0.0 && x < 1.0, "must be in [0, 1)");
      c.train.optimizer.beta1 = x;
    });
    add("adam_beta2", [](ExperimentConfig& c, const std::string& v) {
      const double x = parse_double(v);
      require(x >= 0.0 && x < 1.0, "must be in [0, 1)");
      c.train.optimizer.beta2 = x;
    });
    add("adam_eps", [](ExperimentConfig& c, const std::string& v) {
      const double x = parse_double(v);
      require(x > 0.0, "must be > 0");
      c.train.optimizer.eps = x;
    });
    add("t_max", [](ExperimentConfig& c, const std::string& v) {
      const int x = parse_small_int(v);
      require(x >= 1, "t_max must be >= 1");
      c.train.t_max = x;
    });
    add("T_max", [](ExperimentConfig& c, const std::string& v) {
      const auto x = parse_int(v);
      require(x >= 0, "T_max must be >= 0");
      c.train.T_max = x;
    });
    add("value_coef", [](ExperimentConfig& c, const std::string& v) {
      const double x = parse_double(v);
      require(x >= 0.0, "must be >= 0");
      c.train.loss.value_coef = x;
    });
    add("vis_bootstrap_exponent", [](ExperimentConfig& c, const std::string& v) {
      const std::string l = lower(v);
      if (l == "k") {
        c.train.loss.vis_bootstrap_exponent = adv::VisBootstrapExponent::kK;
      } else if (l == "k-1") {
        c.train.loss.vis_bootstrap_exponent = adv::VisBootstrapExponent::kKMinus1;
      } else {
        throw Bad{"expected k or k-1"};
      }
    });
    add("grad_clip", [](ExperimentConfig& c, const std::string& v) {
      const double x = parse_double(v);
      require(x >= 0.0, "must be >= 0 (0 disables)");
      c.train.grad_clip = x;
    });
    add("checkpoint_every", [](ExperimentConfig& c, const std::string& v) {
      const auto x = parse_int(v);
      require(x >= 0, "must be >= 0");
      c.train.checkpoint_every = x;
    });
    add("frame_skip", [](ExperimentConfig& c, const std::string& v) {
      const int x = parse_small_int(v);
      require(x >= 1, "must be >= 1");
      c.train.env.frame_skip = x;
    });
    add("max_pool_screens", [](ExperimentConfig& c, const std::string& v) { c.train.env.max_pool_screens = parse_bool(v); });
    add("noop_min", [](ExperimentConfig& c, const std::string& v) {
      const int x = parse_small_int(v);
      require(x >= 0, "must be >= 0");
      c.train.env.noop_min = x;
    });
    add("noop_max", [](ExperimentConfig& c, const std::string& v) {
      const int x = parse_small_int(v);
      require(x >= 0, "must be >= 0");
      c.train.env.noop_max = x;
    });
    add("clip_rewards", [](ExperimentConfig& c, const std::string& v) { c.train.env.clip_rewards = parse_bool(v); });
    add("life_loss_terminal",
        [](ExperimentConfig& c, const std::string& v) { c.train.env.life_loss_terminal = parse_bool(v); });
    add("fire_on_reset", [](ExperimentConfig& c, const std::string& v) { c.train.env.fire_on_reset = parse_bool(v); });
    add("max_episode_steps", [](ExperimentConfig& c, const std::string& v) {
      const int x = parse_small_int(v);
      require(x >= 1, "must be >= 1");
      c.train.env.max_episode_steps = x;
    });
    add("conv", [](ExperimentConfig& c, const std::string& v) { c.train.net.conv = parse_conv(v); });
    add("lstm_size", [](ExperimentConfig& c, const std::string& v) {
      const int x = parse_small_int(v);
      require(x >= 1, "must be >= 1");
      c.train.net.lstm_size = x;
    });
    return t;
  }();
  return table;
}

}  // namespace

const std::vector<ModelEntry>& model_catalog() {
  static const std::vector<ModelEntry> catalog = {
      {"Non-FoA, sub1", "non_foa_sub1", roi({{80, 80, 1}}, false), 6400},
      {"Constant 50x50, sub1", "constant_50x50_sub1", roi({{50, 50, 1}}, false), 2500},
      {"Constant 50x50, sub2", "constant_50x50_sub2", roi({{50, 50, 2}}, false), 625},
      {"Constant 70x70, sub2", "constant_70x70_sub2", roi({{70, 70, 2}}, false), 1225},
      {"Decreasing 30-50-70", "decreasing_30_50_70", roi({{30, 30, 1}, {50, 50, 2}, {70, 70, 4}}, false), 1450},
      {"Constant(P) 70x70, sub2", "constant_p_70x70_sub2", roi({{70, 70, 2}}, true), 1241},
      {"Decreasing(P) 30-50-70", "decreasing_p_30_50_70", roi({{30, 30, 1}, {50, 50, 2}, {70, 70, 4}}, true), 1466},
  };
  return catalog;
}

std::optional<ModelEntry> find_model(std::string_view name) {
  const std::string n = trim(name);
  for (const auto& m : model_catalog()) {
    if (n == m.name || lower(n) == m.slug) return m;
  }
  return std::nullopt;
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.train.roi = model_catalog().front().roi;
  return c;
}

ExperimentConfig parse_config_text(std::string_view text) {
  ExperimentConfig c = default_config();
  const auto& table = setters();
  std::map<std::string, std::pair<int, std::string>> entries;

  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto where = "line " + std::to_string(line_no) + ": '" + line + "': ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::ranges::find(table, key, &std::pair<std::string, Setter>::first) == table.end()) {
      throw ConfigError(where + "unknown key '" + key + "'");
    }
    if (entries.contains(key)) throw ConfigError(where + "duplicate key '" + key + "'");
    entries.emplace(key, std::pair{line_no, value});
  }

  for (const auto& [key, set] : table) {
    const auto it = entries.find(key);
    if (it == entries.end()) continue;
    const auto& [ln, value] = it->second;
    try {
      set(c, value);
    } catch (const Bad& bad) {
      throw ConfigError("line " + std::to_string(ln) + ": '" + key + "=" + value + "': " + bad.why);
    }
  }

  try {
    c.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

std::string format_conv(const std::vector<net::ConvSpec>& conv) {
  std::string out;
  for (const auto& c : conv) {
    if (!out.empty()) out += ',';
    out += std::to_string(c.out_channels) + 'x' + std::to_string(c.kernel) + 'x' + std::to_string(c.stride);
  }
  return out;
}

std::string format_layers(const std::vector<fovea::RoiLayer>& layers) {
  std::string out;
  for (const auto& l : layers) {
    if (!out.empty()) out += ',';
    out += std::to_string(l.width) + 'x' + std::to_string(l.height) + 'x' + std::to_string(l.factor);
  }
  return out;
}

std::string emit_config(const ExperimentConfig& config) {
  const train::TrainConfig& t = config.train;
  std::ostringstream o;
  o << "model_name=" << config.model_name << '\n';
  if (config.model_name == kCustomModel) {
    o << "roi_layers=" << format_layers(t.roi.layers) << '\n';
    o << "roi_peripheral=" << fmt_bool(t.roi.peripheral) << '\n';
  }
  o << "peripheral_grid=" << t.roi.peripheral_grid << '\n'
    << "vis_step=" << t.gaze_step << '\n'
    << "env=" << env::env_kind_name(t.env_kind) << '\n'
    << "seed=" << t.seed << '\n'
    << "workers=" << t.workers << '\n'
    << "mode=" << train::mode_name(t.mode) << '\n'
    << "gamma=" << format_double(t.hyper.gamma) << '\n'
    << "lambda=" << format_double(t.hyper.lambda) << '\n'
    << "beta=" << format_double(t.hyper.beta) << '\n'
    << "lr=" << format_double(t.optimizer.lr) << '\n'
    << "adam_beta1=" << format_double(t.optimizer.beta1) << '\n'
    << "adam_beta2=" << format_double(t.optimizer.beta2) << '\n'
    << "adam_eps=" << format_double(t.optimizer.eps) << '\n'
    << "t_max=" << t.t_max << '\n'
    << "T_max=" << t.T_max << '\n'
    << "value_coef=" << format_double(t.loss.value_coef) << '\n'
    << "vis_bootstrap_exponent="
    << (t.loss.vis_bootstrap_exponent == adv::VisBootstrapExponent::kK ? "k" : "k-1") << '\n'
    << "grad_clip=" << format_double(t.grad_clip) << '\n'
    << "checkpoint_every=" << t.checkpoint_every << '\n'
    << "frame_skip=" << t.env.frame_skip << '\n'
    << "max_pool_screens=" << fmt_bool(t.env.max_pool_screens) << '\n'
    << "noop_min=" << t.env.noop_min << '\n'
    << "noop_max=" << t.env.noop_max << '\n'
    << "clip_rewards=" << fmt_bool(t.env.clip_rewards) << '\n'
    << "life_loss_terminal=" << fmt_bool(t.env.life_loss_terminal) << '\n'
    << "fire_on_reset=" << fmt_bool(t.env.fire_on_reset) << '\n'
    << "max_episode_steps=" << t.env.max_episode_steps << '\n'
    << "conv=" << format_conv(t.net.conv) << '\n'
    << "lstm_size=" << t.net.lstm_size << '\n';
  return o.str();
}

}  // namespace fovrl::cfg
