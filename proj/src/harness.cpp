#include "m2dqn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "m2dqn/agent.hpp"
#include "m2dqn/envs.hpp"
#include "m2dqn/errors.hpp"
#include "m2dqn/random.hpp"
#include "m2dqn/replay.hpp"

namespace m2dqn {

std::string RunLog::arm_label() const {
  if (algorithm == Algorithm::kDdqn) return "DDQN";
  return "M2DDQN (N=" + std::to_string(group_size) + ")";
}

bool same_outcome(const RunLog& a, const RunLog& b) {
  return a.env == b.env && a.algorithm == b.algorithm && a.group_size == b.group_size && a.seed == b.seed &&
         a.solve_threshold == b.solve_threshold && a.records == b.records &&
         a.summary.max_eval_score == b.summary.max_eval_score && a.summary.step_to_solve == b.summary.step_to_solve &&
         a.summary.steps_run == b.summary.steps_run;
}

EvalResult evaluate(const QNetwork& net, std::string_view env_name, int n_games, std::uint64_t seed) {
  if (n_games < 1) throw ContractViolation("evaluate: n_games must be at least 1");
  auto env = make_env(env_name);
  EvalResult result;
  result.per_game.reserve(static_cast<std::size_t>(n_games));
  for (int g = 0; g < n_games; ++g) {
    std::vector<double> state = env->reset(seed + static_cast<std::uint64_t>(g));
    double total = 0.0;
    while (true) {
      StepResult r = env->step(greedy_action(net, state));
      total += r.reward;
      if (r.done()) break;
      state = std::move(r.next_state);
    }
    result.per_game.push_back(total);
  }
  double sum = 0.0;
  for (double v : result.per_game) sum += v;
  result.mean_score = sum / static_cast<double>(n_games);
  return result;
}

TrainResult train(const RunConfig& config, std::uint64_t seed, const ProgressCallback& progress) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  auto env = make_env(config.env);  // LunarLander-v2 is rejected here
  const EnvSpec spec = env->spec();
  const AgentConfig agent = config.agent_config();

  Rng env_rng = make_rng(seed, Stream::kEnvironment);
  Rng replay_rng = make_rng(seed, Stream::kReplay);
  Rng explore_rng = make_rng(seed, Stream::kExploration);
  const std::uint64_t eval_base = substream_seed(seed, Stream::kEvaluation);

  QNetwork online = QNetwork::init(config.layer_sizes(), substream_seed(seed, Stream::kInit));
  QNetwork target = online;
  ReplayBuffer buffer(static_cast<std::size_t>(config.replay_size));

  RunLog log;
  log.env = spec.name;
  log.algorithm = config.algorithm;
  log.group_size = agent.group_size;
  log.seed = seed;
  log.solve_threshold = spec.solve_threshold;

  double phi_sum = 0.0, norm_sum = 0.0;
  std::int64_t updates = 0;
  std::uint64_t evals_done = 0;

  // Returns true when this record solves the task for the first time.
  auto record = [&](std::int64_t step) {
    const EvalResult eval =
        evaluate(online, spec.name, config.eval_games, eval_base + evals_done * static_cast<std::uint64_t>(config.eval_games));
    ++evals_done;
    EvalRecord rec;
    rec.step = step;
    rec.mean_eval_score = eval.mean_score;
    rec.max_episode_score = *std::max_element(eval.per_game.begin(), eval.per_game.end());
    rec.epsilon = agent.epsilon.at(step);
    rec.mean_phi = updates > 0 ? phi_sum / static_cast<double>(updates) : 0.0;
    rec.mean_step_norm = updates > 0 ? norm_sum / static_cast<double>(updates) : 0.0;
    phi_sum = norm_sum = 0.0;
    updates = 0;
    log.records.push_back(rec);
    if (progress) progress(rec);
    if (log.records.size() == 1 || rec.mean_eval_score > log.summary.max_eval_score) {
      log.summary.max_eval_score = rec.mean_eval_score;
    }
    if (!log.summary.step_to_solve && spec.solve_threshold && rec.mean_eval_score >= *spec.solve_threshold) {
      log.summary.step_to_solve = step;
      return true;
    }
    return false;
  };

  record(0);
  std::vector<double> state = env->reset(env_rng());
  std::int64_t t = 0;
  bool stop = false;
  while (t < config.max_step && !stop) {
    const double epsilon = agent.epsilon.at(t);
    ++t;
    const int action = select_action(online, state, epsilon, explore_rng);
    StepResult result = env->step(action);
    buffer.push({state, action, result.reward, result.next_state, result.terminated});

    if (static_cast<std::int64_t>(buffer.size()) >= agent.warmup_steps) {
      const UpdateReport report = config.algorithm == Algorithm::kDdqn
                                      ? ddqn_update(online, target, buffer, agent, replay_rng)
                                      : m2_update(online, target, buffer, agent, replay_rng);
      phi_sum += report.phi;
      norm_sum += report.step_norm;
      ++updates;
    }
    sync_target(online, target, t, agent);

    if (result.done()) {
      state = env->reset(env_rng());
    } else {
      state = std::move(result.next_state);
    }

    if (t % config.eval_interval == 0) {
      stop = record(t) && config.stop_on_solve;
    }
  }

  log.summary.steps_run = t;
  log.summary.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {std::move(log), std::move(online)};
}

// --------------------------------------------------------------------- CSV

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

}  // namespace

std::string to_csv(const RunLog& log) {
  std::vector<EvalRecord> rows = log.records;
  std::stable_sort(rows.begin(), rows.end(), [](const EvalRecord& a, const EvalRecord& b) { return a.step < b.step; });
  std::string out(kCsvHeader);
  out += '\n';
  for (const EvalRecord& r : rows) {
    out += std::to_string(r.step) + ',' + format_double(r.mean_eval_score) + ',' + format_double(r.max_episode_score) +
           ',' + format_double(r.epsilon) + ',' + format_double(r.mean_phi) + ',' + format_double(r.mean_step_norm) +
           '\n';
  }
  return out;
}

void emit_csv(const RunLog& log, const std::filesystem::path& path) { write_file(path, to_csv(log)); }

std::vector<EvalRecord> parse_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ConfigError("CSV: missing or unexpected header");
  std::vector<EvalRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell[6];
    for (int i = 0; i < 6; ++i) {
      if (!std::getline(fields, cell[i], ',')) throw ConfigError("CSV: short row '" + line + "'");
    }
    EvalRecord r;
    r.step = std::stoll(cell[0]);
    r.mean_eval_score = std::strtod(cell[1].c_str(), nullptr);
    r.max_episode_score = std::strtod(cell[2].c_str(), nullptr);
    r.epsilon = std::strtod(cell[3].c_str(), nullptr);
    r.mean_phi = std::strtod(cell[4].c_str(), nullptr);
    r.mean_step_norm = std::strtod(cell[5].c_str(), nullptr);
    records.push_back(r);
  }
  return records;
}

// -------------------------------------------------------------------- JSON

std::string to_json(const RunLog& log) {
  nlohmann::ordered_json j;
  j["env"] = log.env;
  j["algorithm"] = to_string(log.algorithm);
  j["N"] = log.group_size;
  j["seed"] = log.seed;
  j["solve_threshold"] = log.solve_threshold ? nlohmann::ordered_json(*log.solve_threshold) : nlohmann::ordered_json(nullptr);
  auto& records = j["records"] = nlohmann::ordered_json::array();
  for (const EvalRecord& r : log.records) {
    records.push_back({{"step", r.step},
                       {"mean_eval_score", r.mean_eval_score},
                       {"max_episode_score", r.max_episode_score},
                       {"epsilon", r.epsilon},
                       {"mean_phi", r.mean_phi},
                       {"mean_step_norm", r.mean_step_norm}});
  }
  j["summary"] = {
      {"max_eval_score", log.summary.max_eval_score},
      {"step_to_solve",
       log.summary.step_to_solve ? nlohmann::ordered_json(*log.summary.step_to_solve) : nlohmann::ordered_json()},
      {"steps_run", log.summary.steps_run},
      {"wall_time_seconds", log.summary.wall_time_seconds}};
  return j.dump(2) + "\n";
}

RunLog runlog_from_json(std::string_view text) {
  RunLog log;
  try {
    const auto j = nlohmann::json::parse(text);
    log.env = j.at("env").get<std::string>();
    log.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    log.group_size = j.at("N").get<int>();
    log.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("solve_threshold").is_null()) log.solve_threshold = j.at("solve_threshold").get<double>();
    for (const auto& r : j.at("records")) {
      log.records.push_back({r.at("step").get<std::int64_t>(), r.at("mean_eval_score").get<double>(),
                             r.at("max_episode_score").get<double>(), r.at("epsilon").get<double>(),
                             r.at("mean_phi").get<double>(), r.at("mean_step_norm").get<double>()});
    }
    const auto& s = j.at("summary");
    log.summary.max_eval_score = s.at("max_eval_score").get<double>();
    if (!s.at("step_to_solve").is_null()) log.summary.step_to_solve = s.at("step_to_solve").get<std::int64_t>();
    log.summary.steps_run = s.at("steps_run").get<std::int64_t>();
    log.summary.wall_time_seconds = s.value("wall_time_seconds", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed run log: ") + e.what());
  }
  return log;
}

void save_runlog(const RunLog& log, const std::filesystem::path& path) { write_file(path, to_json(log)); }

RunLog load_runlog(const std::filesystem::path& path) { return runlog_from_json(read_file(path)); }

// ----------------------------------------------------------------- compare

namespace {

ComparisonRow summarise_arm(const std::vector<RunLog>& runs) {
  ComparisonRow row;
  row.label = runs.front().arm_label();
  row.runs = static_cast<int>(runs.size());
  std::vector<double> steps;
  double score_sum = 0.0;
  for (const RunLog& r : runs) {
    score_sum += r.summary.max_eval_score;
    if (r.summary.step_to_solve) {
      ++row.solved;
      steps.push_back(static_cast<double>(*r.summary.step_to_solve));
    } else {
      steps.push_back(std::numeric_limits<double>::infinity());
    }
  }
  row.max_score = score_sum / static_cast<double>(runs.size());
  std::sort(steps.begin(), steps.end());
  const std::size_t n = steps.size();
  const double median = n % 2 ? steps[n / 2] : 0.5 * (steps[n / 2 - 1] + steps[n / 2]);
  if (std::isfinite(median)) row.step_to_solve = median;
  return row;
}

// Ratio in percent where larger means a better score. For negative scores
// (every step costs -1) a smaller magnitude is better, so the ratio inverts.
std::optional<double> score_percent(double variant, double baseline) {
  if (baseline > 0.0) return 100.0 * variant / baseline;
  if (baseline < 0.0 && variant != 0.0) return 100.0 * baseline / variant;
  if (baseline == variant) return 100.0;
  return std::nullopt;
}

std::string percent(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", *v);
  return buf;
}

}  // namespace

ComparisonTable compare(const std::vector<RunLog>& baseline, const std::vector<std::vector<RunLog>>& variants) {
  if (baseline.empty()) throw ConfigError("compare: missing baseline arm");
  if (variants.empty()) throw ConfigError("compare: need at least one variant arm");
  ComparisonTable table;
  table.env = baseline.front().env;
  auto check_env = [&](const std::vector<RunLog>& arm) {
    if (arm.empty()) throw ConfigError("compare: empty arm");
    for (const RunLog& r : arm) {
      if (r.env != table.env) throw ConfigError("compare: arms ran on different environments");
    }
  };
  check_env(baseline);
  for (const auto& arm : variants) check_env(arm);

  ComparisonRow base = summarise_arm(baseline);
  auto normalise = [&](ComparisonRow row) {
    row.max_score_pct = score_percent(row.max_score, base.max_score);
    if (row.step_to_solve && base.step_to_solve && *base.step_to_solve > 0.0) {
      row.step_to_solve_pct = 100.0 * *row.step_to_solve / *base.step_to_solve;
    } else if (row.step_to_solve && base.step_to_solve) {
      row.step_to_solve_pct = *row.step_to_solve == 0.0 ? std::optional<double>(100.0) : std::nullopt;
    }
    return row;
  };
  table.rows.push_back(normalise(base));
  for (const auto& arm : variants) table.rows.push_back(normalise(summarise_arm(arm)));
  return table;
}

std::string ComparisonTable::render() const {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %-16s %10s %12s\n", "Environment", "Method", "MaxScore", "StepToSolve");
  out << line;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::snprintf(line, sizeof(line), "%-16s %-16s %10s %12s\n", i == 0 ? env.c_str() : "", rows[i].label.c_str(),
                  percent(rows[i].max_score_pct).c_str(), percent(rows[i].step_to_solve_pct).c_str());
    out << line;
  }
  return out.str();
}

}  // namespace m2dqn
