// Command-line driver: train, eval and compare.
//
//   m2dqn train --config <file> [--seed S] [--out DIR]
//   m2dqn eval --checkpoint <file> --env <name> [--games 50] [--seed S]
//   m2dqn compare --baseline <log>... --variant <log>... [--variant <log>...]
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "m2dqn/config.hpp"
#include "m2dqn/errors.hpp"
#include "m2dqn/harness.hpp"
#include "m2dqn/qnet.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

std::string run_stem(const m2dqn::RunLog& log) {
  std::string stem = log.env + "_" + m2dqn::to_string(log.algorithm);
  if (log.algorithm == m2dqn::Algorithm::kM2Ddqn) stem += "_N" + std::to_string(log.group_size);
  return stem + "_seed" + std::to_string(log.seed);
}

int run_train(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<std::string> out) {
  m2dqn::RunConfig config;
  try {
    config = m2dqn::load_config(config_path);
    if (out) config.output_dir = *out;
    if (seed) config.seeds = {*seed};
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    fs::create_directories(config.output_dir);
    for (std::uint64_t s : config.seeds) {
      std::cerr << "training " << config.env << " " << m2dqn::to_string(config.algorithm) << " seed " << s << "\n";
      auto progress = [](const m2dqn::EvalRecord& r) {
        std::fprintf(stderr, "  step %9lld  eval %9.3f  max %8.1f  eps %.3f  phi %.4g  |d| %.4g\n",
                     static_cast<long long>(r.step), r.mean_eval_score, r.max_episode_score, r.epsilon, r.mean_phi,
                     r.mean_step_norm);
      };
      const m2dqn::TrainResult result = m2dqn::train(config, s, progress);
      const fs::path stem = fs::path(config.output_dir) / run_stem(result.log);
      m2dqn::save_runlog(result.log, stem.string() + ".json");
      m2dqn::emit_csv(result.log, stem.string() + ".csv");
      m2dqn::save_checkpoint(result.online, stem.string() + ".ckpt");
      std::cout << stem.string() << ".json  max_eval_score " << result.log.summary.max_eval_score
                << "  step_to_solve "
                << (result.log.summary.step_to_solve ? std::to_string(*result.log.summary.step_to_solve) : "-")
                << "  wall " << result.log.summary.wall_time_seconds << "s\n";
    }
  } catch (const m2dqn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}

int run_eval(const std::string& checkpoint, const std::string& env, int games, std::uint64_t seed) {
  if (games < 1) {
    std::cerr << "config error: --games must be at least 1\n";
    return kExitConfig;
  }
  try {
    const m2dqn::QNetwork net = m2dqn::load_checkpoint(checkpoint);
    const m2dqn::EvalResult result = m2dqn::evaluate(net, env, games, seed);
    std::printf("env %s games %d mean %.17g\n", env.c_str(), games, result.mean_score);
    for (std::size_t i = 0; i < result.per_game.size(); ++i) {
      std::printf("game %zu %.17g\n", i, result.per_game[i]);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}

int run_compare(const std::vector<std::string>& baseline, const std::vector<std::vector<std::string>>& variants) {
  try {
    std::vector<m2dqn::RunLog> base;
    for (const auto& p : baseline) base.push_back(m2dqn::load_runlog(p));
    std::vector<std::vector<m2dqn::RunLog>> arms;
    for (const auto& group : variants) {
      std::vector<m2dqn::RunLog> arm;
      for (const auto& p : group) arm.push_back(m2dqn::load_runlog(p));
      arms.push_back(std::move(arm));
    }
    std::cout << m2dqn::compare(base, arms).render();
  } catch (const m2dqn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Double DQN and max-mean multi-batch DQN on classic-control tasks"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "Train from a key=value config file");
  std::string config_path;
  std::optional<std::uint64_t> train_seed;
  std::optional<std::string> out_dir;
  train->add_option("--config", config_path, "Config file")->required();
  train->add_option("--seed", train_seed, "Run only this seed");
  train->add_option("--out", out_dir, "Output directory (overrides output_dir)");

  auto* eval = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  std::string checkpoint, env;
  int games = 50;
  std::uint64_t eval_seed = 0;
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--env", env, "Environment name")->required();
  eval->add_option("--games", games, "Number of games");
  eval->add_option("--seed", eval_seed, "Seed of the first game");

  auto* cmp = app.add_subcommand("compare", "Normalise variant run logs against a baseline");
  std::vector<std::string> baseline;
  std::vector<std::vector<std::string>> variants;
  cmp->add_option("--baseline", baseline, "Baseline run logs (one arm)")->required();
  cmp->add_option("--variant", variants, "Variant run logs; repeat the flag for each arm")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*train) return run_train(config_path, train_seed, out_dir);
  if (*eval) return run_eval(checkpoint, env, games, eval_seed);
  return run_compare(baseline, variants);
}
