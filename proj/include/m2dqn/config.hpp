#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "m2dqn/agent.hpp"

namespace m2dqn {

enum class Algorithm { kDdqn, kM2Ddqn };

std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);

/// Full description of a training experiment. The config-file keys are the
/// member names below, except `N` for group_size.
struct RunConfig {
  std::string env = "CartPole-v1";
  Algorithm algorithm = Algorithm::kM2Ddqn;
  int N = 5;
  std::vector<int> hidden_layers = {128, 64, 64};
  double learning_rate = 5e-4;
  std::int64_t max_step = 200000;
  std::int64_t replay_size = 10000;
  int batch_size = 128;
  double gamma = 0.99;
  std::int64_t eval_interval = 2000;
  int eval_games = 50;
  std::vector<std::uint64_t> seeds = {0};
  std::string output_dir = "runs";

  std::int64_t target_sync_interval = 500;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  /// Negative means "10% of max_step".
  std::int64_t epsilon_decay_steps = -1;
  /// Negative means "batch_size".
  std::int64_t warmup_steps = -1;
  /// Stop a run at the first evaluation that reaches the solve threshold.
  bool stop_on_solve = false;

  /// Checks ranges and that the environment name is known. Does not build
  /// the environment, so a LunarLander-v2 config validates.
  void validate() const;

  /// Agent-level view, with the derived defaults resolved.
  AgentConfig agent_config() const;
  std::int64_t resolved_epsilon_decay_steps() const;
  std::int64_t resolved_warmup_steps() const;

  /// Layer sizes of the Q-network for this config's environment.
  std::vector<int> layer_sizes() const;

  /// Key=value rendering that load_config parses back to an equal config.
  std::string to_text() const;
};

/// Per-environment defaults for hidden layers, max_step and replay size;
/// batch size 128, learning rate 5e-4 and gamma 0.99 everywhere.
RunConfig default_config(std::string_view env);

/// Parses flat `key = value` lines; `#` starts a comment. The `env` key
/// selects the default table, every other key overrides it. Unknown keys,
/// duplicate keys and malformed values throw ConfigError.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace m2dqn
