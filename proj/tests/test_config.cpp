#include <random>

#include "doctest.h"
#include "fovrl/config.hpp"
#include "fovrl/errors.hpp"

using namespace fovrl;
using namespace fovrl::cfg;

TEST_CASE("empty file gives the default hyperparameters") {
  const ExperimentConfig c = parse_config_text("");
  CHECK(c.train.hyper.gamma == 0.99);
  CHECK(c.train.hyper.lambda == 0.92);
  CHECK(c.train.hyper.beta == 0.01);
  CHECK(c.train.optimizer.lr == 1e-4);
  CHECK(c.train.t_max == 20);
  CHECK(c.model_name == "Non-FoA, sub1");
  CHECK(c.train.env.frame_skip == 4);
  CHECK(c.train.env.noop_max == 30);
  CHECK(c.train.net.lstm_size == 256);
  CHECK(c == default_config());
}

TEST_CASE("model names expand to the catalog geometry") {
  const ExperimentConfig c = parse_config_text("model_name=Constant 70x70, sub2\n");
  CHECK(c.train.roi.layers == std::vector<fovea::RoiLayer>{{70, 70, 2}});
  CHECK_FALSE(c.train.roi.peripheral);
  const ExperimentConfig d = parse_config_text("model_name = decreasing_p_30_50_70  # slug\n");
  CHECK(d.model_name == "Decreasing(P) 30-50-70");
  CHECK(d.train.roi.layers == std::vector<fovea::RoiLayer>{{30, 30, 1}, {50, 50, 2}, {70, 70, 4}});
  CHECK(d.train.roi.peripheral);
}

TEST_CASE("catalog pixel counts") {
  const std::vector<std::int64_t> expect = {6400, 2500, 625, 1225, 1450, 1241, 1466};
  REQUIRE(model_catalog().size() == 7);
  for (std::size_t i = 0; i < 7; ++i) {
    const auto& m = model_catalog()[i];
    CHECK(m.pixel_count == expect[i]);
    const auto c = parse_config_text("model_name=" + m.name);
    CHECK(fovea::visible_pixel_count(c.train.roi) == expect[i]);
    CHECK(parse_config_text("model_name=" + m.slug).train.roi == c.train.roi);
  }
}

TEST_CASE("errors name the offending line") {
  auto message = [](const std::string& text) -> std::string {
    try {
      parse_config_text(text);
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message("# c\ngamma=1.5\n").find("line 2") != std::string::npos);
  CHECK(message("gamma=1.5").find("gamma") != std::string::npos);
  CHECK(message("bogus=1").find("unknown key") != std::string::npos);
  CHECK(message("gamma").find("key=value") != std::string::npos);
  CHECK(message("lr=abc").find("line 1") != std::string::npos);
  CHECK(message("lr=0").find("lr") != std::string::npos);
  CHECK(message("gamma=0.9\ngamma=0.8").find("duplicate") != std::string::npos);
  CHECK(message("model_name=Constant 60x60").find("unknown model") != std::string::npos);
  CHECK(message("roi_layers=30x30x1").find("custom") != std::string::npos);
  CHECK(message("mode=parallel").find("mode") != std::string::npos);
  CHECK(message("model_name=custom\nroi_layers=31x31x1").find("invalid configuration") != std::string::npos);
  CHECK(message("conv=16x8").find("conv") != std::string::npos);
  CHECK_THROWS_AS(parse_config("/nonexistent/dir/x.cfg"), IoError);
}

TEST_CASE("emit and parse round trip") {
  CHECK(parse_config_text(emit_config(default_config())) == default_config());
  std::mt19937_64 rng(5);
  for (int i = 0; i < 30; ++i) {
    ExperimentConfig c = parse_config_text("model_name=" + model_catalog()[rng() % 7].slug);
    c.train.hyper.gamma = std::uniform_real_distribution<double>(0, 1)(rng);
    c.train.hyper.lambda = std::uniform_real_distribution<double>(0, 1)(rng);
    c.train.optimizer.lr = std::uniform_real_distribution<double>(1e-6, 1e-2)(rng);
    c.train.seed = rng();
    c.train.workers = 1 + static_cast<int>(rng() % 32);
    c.train.mode = static_cast<train::TrainMode>(rng() % 3);
    c.train.env_kind = static_cast<env::EnvKind>(rng() % 3);
    c.train.loss.vis_bootstrap_exponent = static_cast<adv::VisBootstrapExponent>(rng() % 2);
    c.train.net.conv = {{8, 8, 4}, {16, 4, 2}};
    c.train.net.lstm_size = 64;
    c.train.env.clip_rewards = rng() % 2;
    c.train.grad_clip = 40.0;
    CHECK(parse_config_text(emit_config(c)) == c);
  }
  ExperimentConfig custom = parse_config_text("model_name=custom\nroi_layers=20x20x1,40x60x3\nroi_peripheral=true\n");
  CHECK(custom.train.roi.layers.size() == 2);
  CHECK(parse_config_text(emit_config(custom)) == custom);
}
