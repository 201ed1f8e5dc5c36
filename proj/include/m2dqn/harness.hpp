#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "m2dqn/config.hpp"
#include "m2dqn/qnet.hpp"

namespace m2dqn {

struct EvalRecord {
  std::int64_t step = 0;
  double mean_eval_score = 0.0;
  double max_episode_score = 0.0;
  double epsilon = 0.0;
  /// Mean of max_j f_j over the updates since the previous record (0 if none).
  double mean_phi = 0.0;
  /// Mean of ||G^T lambda|| over the same updates (0 if none).
  double mean_step_norm = 0.0;

  bool operator==(const EvalRecord&) const = default;
};

struct RunSummary {
  /// Best mean evaluation score over all records.
  double max_eval_score = 0.0;
  /// Step of the first record whose mean reached the solve threshold.
  std::optional<std::int64_t> step_to_solve;
  /// Steps actually executed (less than max_step only with stop_on_solve).
  std::int64_t steps_run = 0;
  double wall_time_seconds = 0.0;
};

struct RunLog {
  std::string env;
  Algorithm algorithm = Algorithm::kDdqn;
  int group_size = 1;
  std::uint64_t seed = 0;
  std::optional<double> solve_threshold;
  std::vector<EvalRecord> records;
  RunSummary summary;

  /// Human label used in comparison tables, e.g. "M2DDQN (N=5)".
  std::string arm_label() const;
};

/// Equality of everything a run determines; wall time is excluded.
bool same_outcome(const RunLog& a, const RunLog& b);

struct EvalResult {
  double mean_score = 0.0;
  std::vector<double> per_game;
};

/// Plays n_games greedy episodes on fresh environments reset with seeds
/// seed, seed+1, ...
EvalResult evaluate(const QNetwork& net, std::string_view env, int n_games, std::uint64_t seed);

struct TrainResult {
  RunLog log;
  QNetwork online;
};

using ProgressCallback = std::function<void(const EvalRecord&)>;

/// Runs one seeded training run of config's algorithm: act, store, update,
/// sync every step; evaluate at step 0 and every eval_interval steps.
TrainResult train(const RunConfig& config, std::uint64_t seed, const ProgressCallback& progress = {});

/// CSV header written by emit_csv.
inline constexpr std::string_view kCsvHeader =
    "step,mean_eval_score,max_episode_score,epsilon,mean_phi,mean_step_norm";

/// One row per record, doubles with 17 significant digits.
std::string to_csv(const RunLog& log);
void emit_csv(const RunLog& log, const std::filesystem::path& path);
std::vector<EvalRecord> parse_csv(std::string_view text);

std::string to_json(const RunLog& log);
RunLog runlog_from_json(std::string_view text);
void save_runlog(const RunLog& log, const std::filesystem::path& path);
RunLog load_runlog(const std::filesystem::path& path);

struct ComparisonRow {
  std::string label;
  int runs = 0;
  int solved = 0;
  double max_score = 0.0;                  // mean over runs of max_eval_score
  std::optional<double> step_to_solve;     // median over runs, unsolved = never
  std::optional<double> max_score_pct;
  std::optional<double> step_to_solve_pct;
};

struct ComparisonTable {
  std::string env;
  std::vector<ComparisonRow> rows;  // baseline first

  /// Environment | Method | MaxScore | StepToSolve table; "-" where a value is
  /// absent.
  std::string render() const;
};

/// Normalises each arm against the baseline arm (baseline = 100%). Each arm
/// is a list of runs (seeds) of one method on one environment.
ComparisonTable compare(const std::vector<RunLog>& baseline, const std::vector<std::vector<RunLog>>& variants);

}  // namespace m2dqn
