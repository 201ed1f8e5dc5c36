#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>

#include "m2dqn/agent.hpp"
#include "m2dqn/config.hpp"
#include "m2dqn/envs.hpp"
#include "m2dqn/errors.hpp"
#include "m2dqn/harness.hpp"
#include "m2dqn/minimax_qp.hpp"
#include "m2dqn/qnet.hpp"
#include "m2dqn/replay.hpp"

namespace py = pybind11;
using namespace m2dqn;

namespace {

TrainingBatch to_training_batch(const Eigen::MatrixXd& states, const std::vector<int>& actions,
                                const std::vector<double>& targets) {
  // Python passes one state per row; the network wants one per column.
  return {states.transpose(), actions, targets};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Max-mean multi-batch Double DQN: environments, Q-network, dual QP, training harness";

  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_RuntimeError);
  py::register_exception<UnsupportedEnvironment>(m, "UnsupportedEnvironment", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<EnvSpec>(m, "EnvSpec")
      .def_readonly("name", &EnvSpec::name)
      .def_readonly("state_dim", &EnvSpec::state_dim)
      .def_readonly("n_actions", &EnvSpec::n_actions)
      .def_readonly("max_episode_steps", &EnvSpec::max_episode_steps)
      .def_readonly("solve_threshold", &EnvSpec::solve_threshold);

  py::class_<StepResult>(m, "StepResult")
      .def_readonly("next_state", &StepResult::next_state)
      .def_readonly("reward", &StepResult::reward)
      .def_readonly("terminated", &StepResult::terminated)
      .def_readonly("truncated", &StepResult::truncated)
      .def_property_readonly("done", &StepResult::done);

  py::class_<Environment>(m, "Environment")
      .def_property_readonly("spec", &Environment::spec, py::return_value_policy::reference_internal)
      .def("reset", &Environment::reset, py::arg("seed"))
      .def("reset_to", [](Environment& e, const std::vector<double>& s) { return e.reset_to(s); },
           py::arg("physics_state"))
      .def("step", &Environment::step, py::arg("action"))
      .def("physics_state", &Environment::physics_state)
      .def("observation", &Environment::observation)
      .def_property_readonly("elapsed_steps", &Environment::elapsed_steps)
      .def_property_readonly("episode_running", &Environment::episode_running);

  m.def("known_environments", &known_environments);
  m.def("env_spec", &env_spec, py::arg("name"));
  m.def("make_env", &make_env, py::arg("name"));

  py::class_<QNetwork>(m, "QNetwork")
      .def(py::init<std::vector<int>>(), py::arg("layer_sizes"))
      .def_static("init", &QNetwork::init, py::arg("layer_sizes"), py::arg("seed"))
      .def_static("parameter_count", &QNetwork::parameter_count, py::arg("layer_sizes"))
      .def_property_readonly("layer_sizes", &QNetwork::layer_sizes)
      .def_property_readonly("num_parameters", &QNetwork::num_parameters)
      .def("flatten", &QNetwork::flatten)
      .def("unflatten", &QNetwork::unflatten, py::arg("theta"))
      .def(
          "forward",
          [](const QNetwork& net, const Eigen::MatrixXd& states) -> Eigen::MatrixXd {
            return net.forward(Eigen::MatrixXd(states.transpose())).transpose();
          },
          py::arg("states"), "Q-values, one row per state row.")
      .def(
          "loss_and_grad",
          [](const QNetwork& net, const Eigen::MatrixXd& states, const std::vector<int>& actions,
             const std::vector<double>& targets) {
            const LossAndGrad lg = net.group_loss_and_grad(to_training_batch(states, actions, targets));
            return py::make_tuple(lg.loss, lg.grad);
          },
          py::arg("states"), py::arg("actions"), py::arg("targets"))
      .def("apply_step", &QNetwork::apply_step, py::arg("direction"), py::arg("alpha"))
      .def("copy", [](const QNetwork& n) { return n; });

  m.def("save_checkpoint", &save_checkpoint, py::arg("net"), py::arg("path"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  py::class_<DualSolution>(m, "DualSolution")
      .def_readonly("lam", &DualSolution::lambda)
      .def_readonly("objective", &DualSolution::objective)
      .def_readonly("gap", &DualSolution::gap)
      .def_readonly("iterations", &DualSolution::iterations);

  m.def(
      "solve_dual",
      [](const Eigen::VectorXd& losses, const Jacobian& jacobian, double tolerance) {
        return solve_dual(GroupObjective{losses, jacobian}, tolerance);
      },
      py::arg("losses"), py::arg("jacobian"), py::arg("tolerance") = 1e-12,
      "Minimises 1/2 l^T G G^T l - f^T l over the simplex.");
  m.def(
      "descent_direction",
      [](const Eigen::VectorXd& losses, const Jacobian& jacobian, const Eigen::VectorXd& lambda) {
        return descent_direction(GroupObjective{losses, jacobian}, lambda);
      },
      py::arg("losses"), py::arg("jacobian"), py::arg("lam"));
  m.def("project_onto_simplex", &project_onto_simplex, py::arg("v"));

  py::enum_<Algorithm>(m, "Algorithm").value("DDQN", Algorithm::kDdqn).value("M2DDQN", Algorithm::kM2Ddqn);

  py::class_<RunConfig>(m, "RunConfig")
      .def_readwrite("env", &RunConfig::env)
      .def_readwrite("algorithm", &RunConfig::algorithm)
      .def_readwrite("N", &RunConfig::N)
      .def_readwrite("hidden_layers", &RunConfig::hidden_layers)
      .def_readwrite("learning_rate", &RunConfig::learning_rate)
      .def_readwrite("max_step", &RunConfig::max_step)
      .def_readwrite("replay_size", &RunConfig::replay_size)
      .def_readwrite("batch_size", &RunConfig::batch_size)
      .def_readwrite("gamma", &RunConfig::gamma)
      .def_readwrite("eval_interval", &RunConfig::eval_interval)
      .def_readwrite("eval_games", &RunConfig::eval_games)
      .def_readwrite("seeds", &RunConfig::seeds)
      .def_readwrite("output_dir", &RunConfig::output_dir)
      .def_readwrite("target_sync_interval", &RunConfig::target_sync_interval)
      .def_readwrite("epsilon_start", &RunConfig::epsilon_start)
      .def_readwrite("epsilon_end", &RunConfig::epsilon_end)
      .def_readwrite("epsilon_decay_steps", &RunConfig::epsilon_decay_steps)
      .def_readwrite("warmup_steps", &RunConfig::warmup_steps)
      .def_readwrite("stop_on_solve", &RunConfig::stop_on_solve)
      .def("validate", &RunConfig::validate)
      .def("layer_sizes", &RunConfig::layer_sizes)
      .def("to_text", &RunConfig::to_text);

  m.def("default_config", &default_config, py::arg("env"));
  m.def("parse_config", &parse_config, py::arg("text"));
  m.def("load_config", &load_config, py::arg("path"));

  py::class_<EvalRecord>(m, "EvalRecord")
      .def_readonly("step", &EvalRecord::step)
      .def_readonly("mean_eval_score", &EvalRecord::mean_eval_score)
      .def_readonly("max_episode_score", &EvalRecord::max_episode_score)
      .def_readonly("epsilon", &EvalRecord::epsilon)
      .def_readonly("mean_phi", &EvalRecord::mean_phi)
      .def_readonly("mean_step_norm", &EvalRecord::mean_step_norm);

  py::class_<RunSummary>(m, "RunSummary")
      .def_readonly("max_eval_score", &RunSummary::max_eval_score)
      .def_readonly("step_to_solve", &RunSummary::step_to_solve)
      .def_readonly("steps_run", &RunSummary::steps_run)
      .def_readonly("wall_time_seconds", &RunSummary::wall_time_seconds);

  py::class_<RunLog>(m, "RunLog")
      .def_readonly("env", &RunLog::env)
      .def_readonly("algorithm", &RunLog::algorithm)
      .def_readonly("group_size", &RunLog::group_size)
      .def_readonly("seed", &RunLog::seed)
      .def_readonly("solve_threshold", &RunLog::solve_threshold)
      .def_readonly("records", &RunLog::records)
      .def_readonly("summary", &RunLog::summary)
      .def_property_readonly("label", &RunLog::arm_label)
      .def("to_csv", [](const RunLog& l) { return to_csv(l); })
      .def("to_json", [](const RunLog& l) { return to_json(l); });

  m.def("runlog_from_json", &runlog_from_json, py::arg("text"));

  m.def(
      "evaluate",
      [](const QNetwork& net, const std::string& env, int n_games, std::uint64_t seed) {
        const EvalResult r = evaluate(net, env, n_games, seed);
        return py::make_tuple(r.mean_score, r.per_game);
      },
      py::arg("net"), py::arg("env"), py::arg("n_games") = 50, py::arg("seed") = 0,
      "Greedy evaluation; returns (mean score, per-game scores).");

  m.def(
      "train",
      [](const RunConfig& config, std::uint64_t seed) {
        std::optional<TrainResult> r;
        {
          py::gil_scoped_release release;
          r.emplace(train(config, seed));
        }
        return py::make_tuple(std::move(r->log), std::move(r->online));
      },
      py::arg("config"), py::arg("seed"), "Runs one training run; returns (RunLog, trained QNetwork).");

  m.def(
      "compare",
      [](const std::vector<RunLog>& baseline, const std::vector<std::vector<RunLog>>& variants) {
        return compare(baseline, variants).render();
      },
      py::arg("baseline"), py::arg("variants"), "Normalised comparison table as text.");
}
