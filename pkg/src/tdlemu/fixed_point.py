"""ADC/DAC quantization boundary between complex floats and 16-bit IQ codes.

Sample blocks in the integer domain are ``int16`` arrays of shape ``(L, 2)``
holding (I, Q) pairs. Real-valued blocks are 1-D ``complex128`` arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CODE_MIN = -32768
CODE_MAX = 32767
FULL_SCALE_CODE = 32767


@dataclass(frozen=True)
class QuantizerConfig:
    full_scale: float = 1.0
    bits: int = 16
    sample_period: float | None = None  # metadata only

    def __post_init__(self):
        if not (1 <= int(self.bits) <= 16):
            raise ValueError(f"bits must be in 1..16, got {self.bits}")
        if not (np.isfinite(self.full_scale) and self.full_scale > 0):
            raise ValueError(f"full_scale must be positive, got {self.full_scale}")

    @property
    def step(self) -> float:
        """Quantization step, full_scale / 2**(bits - 1)."""
        return self.full_scale / 2.0 ** (self.bits - 1)


def round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def as_iq(samples) -> np.ndarray:
    """Coerce a sequence of (i, q) pairs to an ``int16`` array of shape (L, 2)."""
    arr = np.asarray(samples)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=np.int16)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected shape (L, 2), got {arr.shape}")
    if arr.dtype != np.int16:
        if np.any(arr < CODE_MIN) or np.any(arr > CODE_MAX):
            raise ValueError("IQ codes out of 16-bit range")
        arr = arr.astype(np.int16)
    return arr


def quantize(block, cfg: QuantizerConfig = QuantizerConfig()) -> np.ndarray:
    """Map complex samples to IQ codes.

    Each component is rounded to the nearest multiple of ``cfg.step`` (ties
    away from zero), saturated to the ``bits``-wide signed range, and then
    left-aligned into 16 bits.
    """
    x = np.asarray(block, dtype=np.complex128).reshape(-1)
    bad = ~np.isfinite(x)
    if bad.any():
        idx = int(np.flatnonzero(bad)[0])
        raise ValueError(f"non-finite sample at index {idx}: {x[idx]}")
    lo = -(1 << (cfg.bits - 1))
    hi = (1 << (cfg.bits - 1)) - 1
    out = np.empty((x.size, 2), dtype=np.int64)
    out[:, 0] = np.clip(round_half_away(x.real / cfg.step), lo, hi)
    out[:, 1] = np.clip(round_half_away(x.imag / cfg.step), lo, hi)
    out <<= 16 - cfg.bits
    return out.astype(np.int16)


def dequantize(block, cfg: QuantizerConfig = QuantizerConfig()) -> np.ndarray:
    """Inverse of :func:`quantize`: code ``c`` maps to ``c * step * 2**(bits - 16)``."""
    codes = as_iq(block).astype(np.float64)
    scale = cfg.step * 2.0 ** (cfg.bits - 16)
    return (codes[:, 0] + 1j * codes[:, 1]) * scale
