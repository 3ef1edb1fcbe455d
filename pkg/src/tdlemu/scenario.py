"""Scenario CSVs and their compilation into sample-indexed TapSet schedules.

Scenario CSV::

    t_ms,delay_ns_1,atten_db_1,delay_ns_2,atten_db_2,delay_ns_3,atten_db_3
    0,0,0
    1,5,6.02,,,40,20

Rows may stop early; an empty (or missing) delay/atten pair disables that
path. Times are milliseconds from scenario start, strictly increasing,
first row at 0.

Schedule CSV (compiled form)::

    sample_index,shift_j,taps
    0,0,0:32767
    1000,1,0:32767;3:16384
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from .engine import EngineParams, TapError, TapSet
from .planner import PathSpec, PlanError, plan_multipath

SCENARIO_HEADER = ["t_ms", "delay_ns_1", "atten_db_1", "delay_ns_2", "atten_db_2",
                   "delay_ns_3", "atten_db_3"]
SCHEDULE_HEADER = ["sample_index", "shift_j", "taps"]


class ScenarioError(ValueError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


@dataclass
class ScenarioRow:
    t_ms: float
    paths: list[PathSpec]


@dataclass
class Scenario:
    update_rate_hz: float
    rows: list[ScenarioRow] = field(default_factory=list)


@dataclass
class Schedule:
    entries: list[tuple[int, TapSet]]
    params: EngineParams
    sample_rate_hz: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(SCHEDULE_HEADER) + "\n")
        for idx, taps in self.entries:
            tap_field = ";".join(f"{i}:{b}" for i, b in taps.taps)
            buf.write(f"{idx},{taps.shift},{tap_field}\n")
        return buf.getvalue()


def _number(text: str, row: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ScenarioError(f"malformed number {text!r} in column {column}", row) from None
    if not math.isfinite(value):
        raise ScenarioError(f"non-finite value in column {column}", row)
    return value


def _rows(text: str):
    if text.startswith("\ufeff"):
        text = text[1:]
    reader = csv.reader(io.StringIO(text, newline=""))
    for line in reader:
        if line and any(cell.strip() for cell in line):
            yield [cell.strip() for cell in line]


def parse_scenario(text: str, update_rate_hz: float | None = None) -> Scenario:
    """Parse and validate a scenario CSV.

    Row numbers in errors count data rows from 1. When ``update_rate_hz`` is
    not given it is inferred from the tightest row spacing (0 for a single row).
    """
    lines = _rows(text)
    header = next(lines, None)
    if header is None:
        raise ScenarioError("empty scenario")
    if header[: len(SCENARIO_HEADER)] != SCENARIO_HEADER[: len(header)] or len(header) % 2 == 0:
        raise ScenarioError(f"bad header {header}; expected {','.join(SCENARIO_HEADER)}")
    rows = []
    for n, cells in enumerate(lines, start=1):
        if len(cells) > len(SCENARIO_HEADER):
            raise ScenarioError(f"{len(cells)} columns; at most 3 paths per row", n)
        t = _number(cells[0], n, "t_ms")
        if not rows and t != 0:
            raise ScenarioError("first row must be at t_ms=0", n)
        if rows and t <= rows[-1].t_ms:
            raise ScenarioError(f"time {t} ms is not after previous row ({rows[-1].t_ms} ms)", n)
        paths = []
        pairs = cells[1:] + [""] * (len(cells) % 2 == 0)
        for k in range(0, len(pairs), 2):
            d, a = pairs[k], pairs[k + 1]
            if not d and not a:
                continue
            if not d or not a:
                raise ScenarioError(f"path {k // 2 + 1} has only one of delay/attenuation", n)
            try:
                paths.append(PathSpec(_number(d, n, SCENARIO_HEADER[k + 1]),
                                      _number(a, n, SCENARIO_HEADER[k + 2])))
            except PlanError as exc:
                raise ScenarioError(str(exc), n) from exc
        if not paths:
            raise ScenarioError("row has no enabled path", n)
        rows.append(ScenarioRow(t, paths))
    if not rows:
        raise ScenarioError("scenario has no rows")
    if update_rate_hz is None:
        gaps = [b.t_ms - a.t_ms for a, b in zip(rows, rows[1:])]
        update_rate_hz = 1000.0 / min(gaps) if gaps else 0.0
    return Scenario(update_rate_hz, rows)


def compile_schedule(sc: Scenario, params: EngineParams, sample_rate_hz: float) -> Schedule:
    """Plan every row and pin it to ``round(t_ms * Fs / 1000)``."""
    if not sample_rate_hz > 0:
        raise ValueError("sample rate must be positive")
    entries = []
    for n, row in enumerate(sc.rows, start=1):
        idx = int(math.floor(row.t_ms * sample_rate_hz / 1000.0 + 0.5))
        if entries and idx == entries[-1][0]:
            raise ScenarioError(f"maps to sample {idx}, same as the previous row", n)
        try:
            plan = plan_multipath(row.paths, params)
        except PlanError as exc:
            raise type(exc)(f"row {n}: {exc}") from exc
        entries.append((idx, plan.taps))
    return Schedule(entries, params, sample_rate_hz)


def parse_schedule(text: str, params: EngineParams, sample_rate_hz: float = 0.0) -> Schedule:
    lines = _rows(text)
    header = next(lines, None)
    if header != SCHEDULE_HEADER:
        raise ScenarioError(f"bad schedule header {header}; expected {','.join(SCHEDULE_HEADER)}")
    entries = []
    for n, cells in enumerate(lines, start=1):
        if len(cells) != 3:
            raise ScenarioError(f"expected 3 columns, got {len(cells)}", n)
        try:
            idx, shift = int(cells[0]), int(cells[1])
            pairs = []
            for item in filter(None, cells[2].split(";")):
                i, b = item.split(":")
                pairs.append((int(i), int(b)))
            taps = TapSet(shift, tuple(pairs))
            taps.validate(params)
        except (ValueError, TapError) as exc:
            raise ScenarioError(str(exc), n) from exc
        if idx < 0 or idx >= 2**64:
            raise ScenarioError(f"sample index {idx} out of range", n)
        if not entries and idx != 0:
            raise ScenarioError("first entry must be at sample 0", n)
        if entries and idx <= entries[-1][0]:
            raise ScenarioError("sample indices must be strictly increasing", n)
        entries.append((idx, taps))
    if not entries:
        raise ScenarioError("schedule has no entries")
    return Schedule(entries, params, sample_rate_hz)
