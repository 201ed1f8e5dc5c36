"""Max-mean multi-batch Double DQN on classic-control tasks."""

from ._core import (
    Algorithm,
    ConfigError,
    ContractViolation,
    QNetwork,
    RunConfig,
    UnsupportedEnvironment,
    UsageError,
    compare,
    default_config,
    descent_direction,
    env_spec,
    evaluate,
    known_environments,
    load_checkpoint,
    load_config,
    make_env,
    parse_config,
    project_onto_simplex,
    runlog_from_json,
    save_checkpoint,
    solve_dual,
    train,
)

__all__ = [
    "Algorithm",
    "ConfigError",
    "ContractViolation",
    "QNetwork",
    "RunConfig",
    "UnsupportedEnvironment",
    "UsageError",
    "compare",
    "default_config",
    "descent_direction",
    "env_spec",
    "evaluate",
    "known_environments",
    "load_checkpoint",
    "load_config",
    "make_env",
    "parse_config",
    "project_onto_simplex",
    "runlog_from_json",
    "save_checkpoint",
    "solve_dual",
    "train",
]
