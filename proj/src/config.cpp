#include "m2dqn/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "m2dqn/envs.hpp"
#include "m2dqn/errors.hpp"

namespace m2dqn {

std::string to_string(Algorithm algorithm) {
  return algorithm == Algorithm::kDdqn ? "ddqn" : "m2ddqn";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "ddqn") return Algorithm::kDdqn;
  if (name == "m2ddqn") return Algorithm::kM2Ddqn;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'; expected ddqn or m2ddqn");
}

RunConfig default_config(std::string_view env) {
  RunConfig c;
  c.env = std::string(env);
  if (env == "CartPole-v1") {
    c.hidden_layers = {128, 64, 64};
    c.max_step = 200000;
    c.replay_size = 10000;
  } else if (env == "LunarLander-v2") {
    c.hidden_layers = {128, 64, 64};
    c.max_step = 1000000;
    c.replay_size = 50000;
  } else if (env == "MountainCar-v0") {
    c.hidden_layers = {64, 32, 32};
    c.max_step = 1000000;
    c.replay_size = 50000;
  } else if (env == "Acrobot-v1") {
    c.hidden_layers = {64, 32, 32};
    c.max_step = 60000;
    c.replay_size = 3000;
  } else {
    throw ConfigError("unknown environment '" + std::string(env) + "'");
  }
  c.learning_rate = 5e-4;
  c.batch_size = 128;
  c.gamma = 0.99;
  return c;
}

void RunConfig::validate() const {
  const auto names = known_environments();
  if (std::find(names.begin(), names.end(), env) == names.end()) {
    throw ConfigError("unknown environment '" + env + "'");
  }
  if (N < 1) throw ConfigError("N must be at least 1");
  for (int h : hidden_layers) {
    if (h < 1) throw ConfigError("hidden layer sizes must be positive");
  }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be finite and >= 0");
  if (max_step < 0) throw ConfigError("max_step must be >= 0");
  if (replay_size < 1) throw ConfigError("replay_size must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (eval_interval < 1) throw ConfigError("eval_interval must be positive");
  if (eval_games < 1) throw ConfigError("eval_games must be positive");
  if (seeds.empty()) throw ConfigError("seeds must list at least one seed");
  if (target_sync_interval < 1) throw ConfigError("target_sync_interval must be positive");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0)) throw ConfigError("epsilon_start must lie in [0, 1]");
  if (!(epsilon_end >= 0.0 && epsilon_end <= 1.0)) throw ConfigError("epsilon_end must lie in [0, 1]");
  agent_config().validate();
}

std::int64_t RunConfig::resolved_epsilon_decay_steps() const {
  return epsilon_decay_steps >= 0 ? epsilon_decay_steps : max_step / 10;
}

std::int64_t RunConfig::resolved_warmup_steps() const {
  return warmup_steps >= 0 ? std::max<std::int64_t>(warmup_steps, 1) : batch_size;
}

AgentConfig RunConfig::agent_config() const {
  AgentConfig a;
  a.group_size = algorithm == Algorithm::kDdqn ? 1 : N;
  a.batch_size = batch_size;
  a.learning_rate = learning_rate;
  a.gamma = gamma;
  a.target_sync_interval = target_sync_interval;
  a.epsilon = {epsilon_start, epsilon_end, resolved_epsilon_decay_steps()};
  a.warmup_steps = resolved_warmup_steps();
  return a;
}

std::vector<int> RunConfig::layer_sizes() const {
  const EnvSpec spec = env_spec(env);
  std::vector<int> sizes{spec.state_dim};
  sizes.insert(sizes.end(), hidden_layers.begin(), hidden_layers.end());
  sizes.push_back(spec.n_actions);
  return sizes;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("key '" + std::string(key) + "': expected an integer, got '" + std::string(value) + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  const std::string s(value);
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(out)) {
    throw ConfigError("key '" + std::string(key) + "': expected a real number, got '" + s + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("key '" + std::string(key) + "': expected true or false, got '" + std::string(value) + "'");
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view value) {
  std::vector<T> out;
  if (trim(value).empty()) return out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const auto item = trim(value.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    out.push_back(parse_integer<T>(key, item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string RunConfig::to_text() const {
  std::ostringstream out;
  out << "env = " << env << "\n"
      << "algorithm = " << to_string(algorithm) << "\n"
      << "N = " << N << "\n"
      << "hidden_layers = " << join(hidden_layers) << "\n"
      << "learning_rate = " << format_double(learning_rate) << "\n"
      << "max_step = " << max_step << "\n"
      << "replay_size = " << replay_size << "\n"
      << "batch_size = " << batch_size << "\n"
      << "gamma = " << format_double(gamma) << "\n"
      << "eval_interval = " << eval_interval << "\n"
      << "eval_games = " << eval_games << "\n"
      << "seeds = " << join(seeds) << "\n"
      << "output_dir = " << output_dir << "\n"
      << "target_sync_interval = " << target_sync_interval << "\n"
      << "epsilon_start = " << format_double(epsilon_start) << "\n"
      << "epsilon_end = " << format_double(epsilon_end) << "\n"
      << "epsilon_decay_steps = " << epsilon_decay_steps << "\n"
      << "warmup_steps = " << warmup_steps << "\n"
      << "stop_on_solve = " << (stop_on_solve ? "true" : "false") << "\n";
  return out.str();
}

RunConfig parse_config(std::string_view text) {
  std::map<std::string, std::string, std::less<>> entries;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!entries.emplace(key, value).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }

  const auto env_it = entries.find("env");
  if (env_it == entries.end()) throw ConfigError("config must set 'env'");
  RunConfig c = default_config(env_it->second);
  entries.erase(env_it);

  for (const auto& [key, value] : entries) {
    if (key == "algorithm") c.algorithm = parse_algorithm(value);
    else if (key == "N") c.N = parse_integer<int>(key, value);
    else if (key == "hidden_layers") c.hidden_layers = parse_list<int>(key, value);
    else if (key == "learning_rate") c.learning_rate = parse_real(key, value);
    else if (key == "max_step") c.max_step = parse_integer<std::int64_t>(key, value);
    else if (key == "replay_size") c.replay_size = parse_integer<std::int64_t>(key, value);
    else if (key == "batch_size") c.batch_size = parse_integer<int>(key, value);
    else if (key == "gamma") c.gamma = parse_real(key, value);
    else if (key == "eval_interval") c.eval_interval = parse_integer<std::int64_t>(key, value);
    else if (key == "eval_games") c.eval_games = parse_integer<int>(key, value);
    else if (key == "seeds") c.seeds = parse_list<std::uint64_t>(key, value);
    else if (key == "output_dir") c.output_dir = value;
    else if (key == "target_sync_interval") c.target_sync_interval = parse_integer<std::int64_t>(key, value);
    else if (key == "epsilon_start") c.epsilon_start = parse_real(key, value);
    else if (key == "epsilon_end") c.epsilon_end = parse_real(key, value);
    else if (key == "epsilon_decay_steps") c.epsilon_decay_steps = parse_integer<std::int64_t>(key, value);
    else if (key == "warmup_steps") c.warmup_steps = parse_integer<std::int64_t>(key, value);
    else if (key == "stop_on_solve") c.stop_on_solve = parse_bool(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace m2dqn
