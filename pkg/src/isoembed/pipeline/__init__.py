"""Experiment orchestration: designed scenarios and the CLI entry points."""

from .cli import build_parser, main, run
from .scenario import (
    ScenarioParams,
    build_designed_scenario,
    load_candidates,
    save_candidates,
)

__all__ = [
    "ScenarioParams",
    "build_designed_scenario",
    "build_parser",
    "load_candidates",
    "main",
    "run",
    "save_candidates",
]
