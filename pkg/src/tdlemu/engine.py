"""Fixed-point tapped-delay-line channel core.

Output sample ``n`` (per I/Q component) is the exact integer accumulation
``A = sum_i b_i * x[n - i]`` divided by ``2**j * (2**r - 1)`` with rounding
half away from zero, then saturated to 16 bits. ``hardware-order`` mode
instead shifts each input sample right by ``j`` (floor) before it enters the
delay line and divides the accumulation by ``2**r - 1`` only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .fixed_point import as_iq

MODES = ("combined", "hardware-order")


class TapError(ValueError):
    """TapSet not legal for the given engine parameters."""


@dataclass(frozen=True)
class EngineParams:
    clock_hz: float = 200e6
    taps_n: int = 42
    coeff_bits: int = 15
    shift_bits: int = 8

    def __post_init__(self):
        if not (np.isfinite(self.clock_hz) and self.clock_hz > 0):
            raise ValueError(f"clock_hz must be positive, got {self.clock_hz}")
        if int(self.taps_n) != self.taps_n or self.taps_n < 1:
            raise ValueError(f"taps_n must be an integer >= 1, got {self.taps_n}")
        if int(self.coeff_bits) != self.coeff_bits or self.coeff_bits < 1:
            raise ValueError(f"coeff_bits must be an integer >= 1, got {self.coeff_bits}")
        if int(self.shift_bits) != self.shift_bits or self.shift_bits < 0:
            raise ValueError(f"shift_bits must be an integer >= 0, got {self.shift_bits}")
        # 2|A| + D and 2D must stay inside int64 for the kernels to be exact
        worst = 2 * self.taps_n * 32768 * self.coeff_max + 2 * self.divisor(self.shift_bits)
        if worst >= 2**63:
            raise ValueError("taps_n/coeff_bits/shift_bits too large for exact 64-bit accumulation")

    @property
    def coeff_max(self) -> int:
        return (1 << self.coeff_bits) - 1

    @property
    def delay_step_s(self) -> float:
        return 1.0 / self.clock_hz

    @property
    def max_delay_s(self) -> float:
        return (self.taps_n - 1) / self.clock_hz

    def divisor(self, shift: int) -> int:
        return (1 << shift) * self.coeff_max


@dataclass(frozen=True)
class TapSet:
    """Instantaneous channel: global right shift plus sparse (index, coeff) taps."""

    shift: int = 0
    taps: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "taps", tuple((int(i), int(b)) for i, b in self.taps))
        idx = [i for i, _ in self.taps]
        if any(b < 0 for _, b in self.taps):
            raise TapError("coefficients must be >= 0")
        if any(i < 0 for i in idx):
            raise TapError("tap indices must be >= 0")
        if any(a >= b for a, b in zip(idx, idx[1:])):
            raise TapError(f"tap indices must be strictly increasing, got {idx}")
        if self.shift < 0:
            raise TapError("shift must be >= 0")

    def validate(self, params: EngineParams) -> None:
        if self.shift > params.shift_bits:
            raise TapError(f"shift {self.shift} exceeds shift_bits {params.shift_bits}")
        for i, b in self.taps:
            if i >= params.taps_n:
                raise TapError(f"tap index {i} >= taps_n {params.taps_n}")
            if b > params.coeff_max:
                raise TapError(f"coefficient {b} exceeds {params.coeff_max}")
        if len(self.taps) > params.taps_n:
            raise TapError("more taps than the delay line holds")

    def arrays(self):
        """Active taps (nonzero coefficients) as int64 index and coefficient arrays."""
        active = [(i, b) for i, b in self.taps if b != 0]
        idx = np.array([i for i, _ in active], dtype=np.int64)
        coeff = np.array([b for _, b in active], dtype=np.int64)
        return idx, coeff

    def coeff_sum(self) -> int:
        return sum(b for _, b in self.taps)


def passthrough_taps(params: EngineParams) -> TapSet:
    return TapSet(0, ((0, params.coeff_max),))


@dataclass
class ProcessStats:
    samples_processed: int = 0
    clipped: int = 0

    def __iadd__(self, other: ProcessStats):
        self.samples_processed += other.samples_processed
        self.clipped += other.clipped
        return self


def initial_state(params: EngineParams) -> np.ndarray:
    return np.zeros((params.taps_n - 1, 2), dtype=np.int64)


def process_block(block, taps: TapSet, params: EngineParams, state=None,
                  mode: str = "combined"):
    """Run one block through the channel.

    ``state`` is the delay line contents (the last ``N - 1`` samples that
    entered the FIR, oldest first); ``None`` means a quiescent all-zero line.
    Returns ``(output, stats, new_state)``; output is ``int16`` of shape
    ``(L, 2)``.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    taps.validate(params)
    x = as_iq(block).astype(np.int64)
    if state is None:
        state = initial_state(params)
    state = np.asarray(state, dtype=np.int64)
    if state.shape != (params.taps_n - 1, 2):
        raise ValueError(f"state must have shape ({params.taps_n - 1}, 2), got {state.shape}")

    if mode == "combined":
        divisor = params.divisor(taps.shift)
    else:
        x = x >> taps.shift
        divisor = params.coeff_max
    ext = np.concatenate([state, x])
    out = np.empty((x.shape[0], 2), dtype=np.int64)
    idx, coeff = taps.arrays()
    clipped = _kernels.fir(ext, idx, coeff, np.int64(divisor), params.taps_n, out)
    new_state = ext[ext.shape[0] - (params.taps_n - 1):].copy()
    return out.astype(np.int16), ProcessStats(x.shape[0], int(clipped)), new_state


@dataclass
class Channel:
    """Stateful engine instance.

    Holds the current TapSet, the delay line and a sample counter. With a
    schedule (``(sample_index, TapSet)`` entries, first at 0), the TapSet
    switches exactly at each scheduled input-sample boundary; the delay
    line is carried across switches.
    """

    params: EngineParams = field(default_factory=EngineParams)
    taps: TapSet | None = None
    mode: str = "combined"
    updates: Sequence[tuple[int, TapSet]] = ()
    position: int = 0
    stats: ProcessStats = field(default_factory=ProcessStats)
    state: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        self.updates = list(self.updates)
        for _, t in self.updates:
            t.validate(self.params)
        if self.taps is None:
            self.taps = passthrough_taps(self.params)
        self.taps.validate(self.params)
        if self.state is None:
            self.state = initial_state(self.params)
        self._next = 0
        self._apply_due()

    @classmethod
    def from_schedule(cls, schedule, mode: str = "combined") -> Channel:
        return cls(params=schedule.params, mode=mode, updates=schedule.entries)

    def _apply_due(self):
        while self._next < len(self.updates) and self.updates[self._next][0] <= self.position:
            self.taps = self.updates[self._next][1]
            self._next += 1

    def next_boundary(self) -> int | None:
        if self._next < len(self.updates):
            return self.updates[self._next][0]
        return None

    def process(self, block) -> np.ndarray:
        x = as_iq(block)
        pieces = []
        start = 0
        while start < x.shape[0]:
            self._apply_due()
            stop = x.shape[0]
            nb = self.next_boundary()
            if nb is not None:
                stop = min(stop, start + nb - self.position)
            y, st, self.state = process_block(x[start:stop], self.taps, self.params,
                                              self.state, self.mode)
            pieces.append(y)
            self.stats += st
            self.position += stop - start
            start = stop
        self._apply_due()
        if not pieces:
            return np.zeros((0, 2), dtype=np.int16)
        return np.concatenate(pieces)

    def set_taps(self, taps: TapSet) -> None:
        taps.validate(self.params)
        self.taps = taps
