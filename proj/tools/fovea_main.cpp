#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fovrl/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Foveated dual-head actor-critic: train, evaluate, learning curves"};
  app.require_subcommand(1);

  std::string config, out_dir, checkpoint, run_dir;
  int episodes = 0;

  auto* train = app.add_subcommand("train", "Train a model; writes checkpoint.bin, episodes.csv, updates.csv");
  train->add_option("config", config, "Experiment config file")->required();
  train->add_option("out-dir", out_dir, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint; writes scores.csv, heatmap.csv, heatmap.pgm");
  eval->add_option("config", config, "Experiment config file")->required();
  eval->add_option("checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("episodes", episodes, "Number of episodes")->required()->check(CLI::NonNegativeNumber);
  eval->add_option("out-dir", out_dir, "Output directory")->required();

  auto* curve = app.add_subcommand("curve", "Sliding-window mean score from a run's episodes.csv");
  curve->add_option("run-dir", run_dir, "Training output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (*train) return fovrl::cli::cmd_train(config, out_dir, std::cerr);
  if (*eval) return fovrl::cli::cmd_eval(config, checkpoint, episodes, out_dir, std::cerr);
  return fovrl::cli::cmd_curve(run_dir, std::cerr);
}
