"""Deterministic fixed-point tapped-delay-line channel emulator."""

from ._kernels import BACKEND
from .engine import Channel, EngineParams, ProcessStats, TapError, TapSet, passthrough_taps, process_block
from .fixed_point import QuantizerConfig, dequantize, quantize
from .planner import (AttenOutOfRange, DelayOutOfRange, PathCollision, PathSpec, PlanError,
                      PlannedPath, SpecSheet, derive_specs, plan_multipath, plan_path)
from .scenario import Scenario, Schedule, ScenarioError, compile_schedule, parse_scenario
from .stream_io import read_iq, write_iq
from .verify import estimate_delay, measure_attenuation_db, measure_power_dbfs

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Channel", "EngineParams", "ProcessStats", "TapError", "TapSet",
    "passthrough_taps", "process_block", "QuantizerConfig", "dequantize", "quantize",
    "AttenOutOfRange", "DelayOutOfRange", "PathCollision", "PathSpec", "PlanError",
    "PlannedPath", "SpecSheet", "derive_specs", "plan_multipath", "plan_path",
    "Scenario", "Schedule", "ScenarioError", "compile_schedule", "parse_scenario",
    "read_iq", "write_iq", "estimate_delay", "measure_attenuation_db", "measure_power_dbfs",
]
