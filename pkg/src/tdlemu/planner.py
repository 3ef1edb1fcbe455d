"""Physical path requests -> quantized taps, plus resolution and range figures."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import EngineParams, TapSet

C_LIGHT = 299_792_458.0
SHIFT_DB = 20.0 * math.log10(2.0)  # attenuation of one right shift
_EPS = 1e-9
_LN10 = math.log(10.0)


class PlanError(ValueError):
    """Base for requests the emulator cannot realize."""


class DelayOutOfRange(PlanError):
    pass


class AttenOutOfRange(PlanError):
    pass


class PathCollision(PlanError):
    pass


@dataclass(frozen=True)
class PathSpec:
    delay_ns: float
    atten_db: float

    def __post_init__(self):
        if not (math.isfinite(self.delay_ns) and math.isfinite(self.atten_db)):
            raise ValueError("delay_ns and atten_db must be finite")
        if self.delay_ns < 0:
            raise DelayOutOfRange(f"negative delay {self.delay_ns} ns")
        if self.atten_db < 0:
            raise AttenOutOfRange(f"negative attenuation {self.atten_db} dB (gain not supported)")


@dataclass(frozen=True)
class PlannedPath:
    tap_index: int
    coeff: int
    shift_needed: int
    achieved_delay_ns: float
    achieved_atten_db: float
    delay_error_ns: float
    atten_error_db: float


@dataclass(frozen=True)
class SpecSheet:
    delay_resolution_s: float
    max_delay_s: float
    distance_step_m: float
    max_distance_m: float
    worst_case_resolution_db: float
    max_attenuation_db: float
    max_velocity_mps: float

    # Table I quotes roughly 144 dB for the same parameters
    TABLE_MAX_ATTEN_NOTE = ("published spec sheet lists ~144 dB maximum attenuation; "
                            "the extended-range formula gives (r+s)*20log10(2)")

    def lines(self) -> list[str]:
        return [
            f"delay_resolution_ns={self.delay_resolution_s * 1e9:.6g}",
            f"max_delay_ns={self.max_delay_s * 1e9:.6g}",
            f"distance_step_m={self.distance_step_m:.6g}",
            f"max_distance_m={self.max_distance_m:.6g}",
            f"worst_case_resolution_db={self.worst_case_resolution_db:.6g}",
            f"max_attenuation_db={self.max_attenuation_db:.2f}",
            f"max_velocity_mps={self.max_velocity_mps:.6g}",
        ]


def tap_gain_db(b: int, r: int) -> float:
    """Gain of a tap with coefficient ``b`` at ``r`` coefficient bits (<= 0 dB)."""
    top = (1 << r) - 1
    if not 1 <= b <= top:
        raise ValueError(f"coefficient must be in [1, {top}], got {b}")
    return 20.0 * math.log10(b / top)


def atten_resolution_db(b: int) -> float:
    """Gap to the next coefficient, 20*log10((b + 1) / b)."""
    if b < 1:
        raise ValueError(f"coefficient must be >= 1, got {b}")
    return 20.0 * math.log10((b + 1) / b)


def reduced_dynamic_range_db(r: int, max_res_db: float) -> float:
    """Attenuation span usable with coefficients alone at resolution ``max_res_db``."""
    return extended_dynamic_range_db(r, 0, max_res_db)


def extended_dynamic_range_db(r: int, s: int, max_res_db: float) -> float:
    if not max_res_db > 0:
        raise ValueError(f"resolution must be > 0, got {max_res_db}")
    if s < 0:
        raise ValueError(f"shift bits must be >= 0, got {s}")
    return (r + s) * SHIFT_DB + 20.0 * math.log10(math.expm1(max_res_db * _LN10 / 20.0))


def worst_case_resolution_db(r: int) -> float:
    """Resolution bound when the shift stage keeps coefficients in their top octave."""
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    return 20.0 * math.log1p(10.0 ** 0.3 / 2.0**r) / _LN10


def max_attenuation_db(params: EngineParams) -> float:
    # extended range at a one-shift-step (6.02 dB) resolution
    return extended_dynamic_range_db(params.coeff_bits, params.shift_bits, SHIFT_DB)


def fspl_db(distance_m: float, carrier_hz: float) -> float:
    if not (distance_m > 0 and carrier_hz > 0):
        raise ValueError("distance and carrier frequency must be positive")
    return 20.0 * math.log10(4.0 * math.pi * distance_m * carrier_hz / C_LIGHT)


def max_velocity_mps(update_rate_hz: float, clock_hz: float) -> float:
    """Fastest node speed emulated at one delay step per channel update."""
    if update_rate_hz < 0 or not clock_hz > 0:
        raise ValueError("update rate must be >= 0 and clock > 0")
    return C_LIGHT * update_rate_hz / clock_hz


def derive_specs(params: EngineParams, update_rate_hz: float) -> SpecSheet:
    f = params.clock_hz
    n = params.taps_n
    return SpecSheet(
        delay_resolution_s=1.0 / f,
        max_delay_s=(n - 1) / f,
        distance_step_m=C_LIGHT / f,
        max_distance_m=C_LIGHT * (n - 1) / f,
        worst_case_resolution_db=worst_case_resolution_db(params.coeff_bits),
        max_attenuation_db=max_attenuation_db(params),
        max_velocity_mps=max_velocity_mps(update_rate_hz, f),
    )


def _tap_index(delay_ns: float, params: EngineParams) -> int:
    steps = delay_ns * params.clock_hz / 1e9
    idx = math.ceil(steps - 0.5)  # ties go to the lower index
    max_ns = params.max_delay_s * 1e9
    if delay_ns > max_ns * (1 + _EPS) + _EPS:
        raise DelayOutOfRange(f"delay {delay_ns} ns exceeds maximum {max_ns:.6g} ns")
    return min(idx, params.taps_n - 1)


def _coeff_for(residual_db: float, params: EngineParams) -> float:
    return params.coeff_max * 10.0 ** (-residual_db / 20.0)


def _round_coeff(x: float) -> int:
    return int(math.floor(x + 0.5))


def _greedy_shift(atten_db: float, limit: int | None) -> int:
    j = int(math.floor(atten_db / SHIFT_DB + _EPS))
    return j if limit is None else min(limit, j)


def _finish(spec: PathSpec, idx: int, b: int, j: int, params: EngineParams) -> PlannedPath:
    achieved_delay = idx * 1e9 / params.clock_hz
    achieved_atten = j * SHIFT_DB - tap_gain_db(b, params.coeff_bits)
    return PlannedPath(
        tap_index=idx,
        coeff=b,
        shift_needed=j,
        achieved_delay_ns=achieved_delay,
        achieved_atten_db=achieved_atten,
        delay_error_ns=achieved_delay - spec.delay_ns,
        atten_error_db=achieved_atten - spec.atten_db,
    )


def _check_atten(spec: PathSpec, params: EngineParams) -> None:
    top = max_attenuation_db(params)
    if spec.atten_db > top + _EPS:
        raise AttenOutOfRange(f"attenuation {spec.atten_db} dB exceeds maximum {top:.2f} dB")


def plan_path(spec: PathSpec, params: EngineParams) -> PlannedPath:
    """Quantize one path: nearest tap, largest shift not exceeding the
    attenuation, then the nearest coefficient for the residual."""
    idx = _tap_index(spec.delay_ns, params)
    _check_atten(spec, params)
    j = _greedy_shift(spec.atten_db, params.shift_bits)
    b = _round_coeff(_coeff_for(spec.atten_db - j * SHIFT_DB, params))
    b = max(1, min(params.coeff_max, b))
    return _finish(spec, idx, b, j, params)


@dataclass(frozen=True)
class MultipathPlan:
    taps: TapSet
    paths: list[PlannedPath]
    clip_risk: bool

    @property
    def warnings(self) -> list[str]:
        if self.clip_risk:
            return ["coefficient sum exceeds full scale; output may clip"]
        return []


def plan_multipath(specs: Sequence[PathSpec], params: EngineParams) -> MultipathPlan:
    """Plan 1-3 paths onto one TapSet sharing a single shift.

    The shift is the smallest per-path greedy shift; other paths absorb the
    difference in their coefficients.
    """
    specs = list(specs)
    if not 1 <= len(specs) <= 3:
        raise PlanError(f"need 1 to 3 paths, got {len(specs)}")
    indices = []
    for s in specs:
        indices.append(_tap_index(s.delay_ns, params))
        _check_atten(s, params)
    seen = {}
    for k, i in enumerate(indices):
        if i in seen:
            raise PathCollision(f"paths {seen[i] + 1} and {k + 1} both quantize to tap {i}")
        seen[i] = k
    j = min(_greedy_shift(s.atten_db, params.shift_bits) for s in specs)
    planned = []
    for s, i in zip(specs, indices):
        b = _round_coeff(_coeff_for(s.atten_db - j * SHIFT_DB, params))
        if b < 1:
            raise AttenOutOfRange(
                f"path at {s.delay_ns} ns needs {s.atten_db} dB, beyond coefficient range at shared shift {j}")
        planned.append(_finish(s, i, min(b, params.coeff_max), j, params))
    taps = TapSet(j, tuple(sorted((p.tap_index, p.coeff) for p in planned)))
    return MultipathPlan(taps, planned, taps.coeff_sum() > params.coeff_max)


def resolution_curve(params: EngineParams, atten_grid, shift_limit: int | None = None) -> np.ndarray:
    """Resolution at the planned coefficient for each attenuation in the grid.

    Returns an array of rows ``(atten_db, res_with_shift_db, res_without_shift_db)``.
    The with-shift column lets the shift grow as far as the attenuation needs
    (``shift_limit=None``); pass ``params.shift_bits`` for the engine-bounded curve.
    """
    rows = []
    for g in np.asarray(atten_grid, dtype=float):
        if g < 0:
            raise ValueError("attenuation grid must be >= 0")
        j = _greedy_shift(g, shift_limit)
        b_shift = max(1, min(params.coeff_max, _round_coeff(_coeff_for(g - j * SHIFT_DB, params))))
        b_plain = max(1, min(params.coeff_max, _round_coeff(_coeff_for(g, params))))
        rows.append((g, atten_resolution_db(b_shift), atten_resolution_db(b_plain)))
    return np.array(rows, dtype=float).reshape(-1, 3)


def write_resolution_csv(rows: np.ndarray, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("atten_db,res_with_shift_db,res_without_shift_db\n")
        for g, w, wo in rows:
            fh.write(f"{g:.4f},{w:.9g},{wo:.9g}\n")
