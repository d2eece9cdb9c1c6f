"""Solver and verification suite for HJB quasi-variational inequalities."""

from ._core import (
    Config,
    QviError,
    Run,
    check_dpp,
    estimate_value,
    load_config,
    load_config_text,
    load_run,
    solve,
    validate,
    verify,
)

__all__ = [
    "Config",
    "QviError",
    "Run",
    "check_dpp",
    "estimate_value",
    "load_config",
    "load_config_text",
    "load_run",
    "solve",
    "validate",
    "verify",
]
