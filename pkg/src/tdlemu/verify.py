"""Measurement side: delay by cross-correlation, power and attenuation, RSSI."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .fixed_point import FULL_SCALE_CODE

RELIABLE_CORR = 0.2
CC2538_RSSI_OFFSET_DB = 73.0


class MeasurementError(ValueError):
    pass


def to_complex(samples) -> np.ndarray:
    arr = np.asarray(samples)
    if np.iscomplexobj(arr):
        return arr.astype(np.complex128).reshape(-1)
    if arr.ndim == 2 and arr.shape[1] == 2:
        a = arr.astype(np.float64)
        return a[:, 0] + 1j * a[:, 1]
    if arr.ndim == 1:
        return arr.astype(np.complex128)
    raise ValueError(f"cannot interpret array of shape {arr.shape} as IQ samples")


@dataclass(frozen=True)
class DelayEstimate:
    lag_samples: int
    delay_s: float
    peak_corr: float

    @property
    def reliable(self) -> bool:
        return self.peak_corr >= RELIABLE_CORR


def normalized_xcorr(reference, test, min_overlap: int | None = None):
    """Cross-correlation normalized by the energy of the overlapping segments.

    For lag ``k`` (``z[k] = sum_n ref[n + k] * conj(test[n])``)::

        rho[k] = |z[k]| / sqrt(E_ref(overlap_k) * E_test(overlap_k))

    Lags whose overlap is shorter than ``min_overlap`` samples (default: half
    the shorter input) are set to 0, since a few-sample overlap trivially
    correlates near 1. Returns ``(lags, rho)``.
    """
    x = to_complex(reference)
    y = to_complex(test)
    lr, lt = x.size, y.size
    if lr == 0 or lt == 0:
        raise MeasurementError("reference and test must be non-empty")
    if min_overlap is None:
        min_overlap = max(1, min(lr, lt) // 2)
    z = signal.correlate(x, y, mode="full")
    lags = signal.correlation_lags(lr, lt, mode="full")
    cx = np.concatenate([[0.0], np.cumsum(np.abs(x) ** 2)])
    cy = np.concatenate([[0.0], np.cumsum(np.abs(y) ** 2)])
    n_lo = np.maximum(0, -lags)
    n_hi = np.minimum(lt, lr - lags)
    overlap = n_hi - n_lo
    e_test = cy[n_hi] - cy[n_lo]
    e_ref = cx[n_hi + lags] - cx[n_lo + lags]
    denom = np.sqrt(e_ref * e_test)
    rho = np.zeros(lags.size)
    ok = (denom > 0) & (overlap >= min_overlap)
    rho[ok] = np.abs(z[ok]) / denom[ok]
    return lags, np.clip(rho, 0.0, 1.0)


def estimate_delay(reference, test, sample_rate_hz: float,
                   min_overlap: int | None = None) -> DelayEstimate:
    """Delay of ``test`` relative to ``reference``: minus the lag of the
    largest normalized correlation magnitude. Ties prefer the smaller |lag|.

    A result with ``peak_corr`` below 0.2 is flagged unreliable, not rejected.
    """
    if not sample_rate_hz > 0:
        raise ValueError("sample rate must be positive")
    if not np.any(to_complex(reference)):
        raise MeasurementError("reference has zero energy")
    lags, rho = normalized_xcorr(reference, test, min_overlap)
    peak = rho.max()
    near = np.flatnonzero(rho >= peak - 1e-12)
    best = near[np.lexsort((lags[near], np.abs(lags[near])))[0]]
    lag = int(lags[best])
    return DelayEstimate(lag, -lag / sample_rate_hz, float(rho[best]))


def measure_power_dbfs(samples) -> float:
    """Mean ``i**2 + q**2`` in dB relative to a full-scale (32767) complex tone.

    An all-zero block gives ``-inf``.
    """
    z = to_complex(samples)
    if z.size == 0:
        raise MeasurementError("cannot measure power of an empty block")
    p = float(np.mean(z.real**2 + z.imag**2))
    if p == 0.0:
        return -math.inf
    return 10.0 * math.log10(p / FULL_SCALE_CODE**2)


def measure_attenuation_db(reference, test) -> float:
    p_ref = measure_power_dbfs(reference)
    if p_ref == -math.inf:
        raise MeasurementError("reference has zero power")
    return p_ref - measure_power_dbfs(test)


def rssi_to_power_dbm(rssi: float, offset: float = CC2538_RSSI_OFFSET_DB) -> float:
    return rssi - offset


@dataclass
class VerificationReport:
    measured_delay_s: float | None = None
    measured_atten_db: float | None = None
    requested_delay_s: float | None = None
    requested_atten_db: float | None = None
    delay_tol_s: float = 0.0
    atten_tol_db: float = 0.01
    peak_corr: float | None = None

    @property
    def delay_pass(self) -> bool | None:
        if self.requested_delay_s is None or self.measured_delay_s is None:
            return None
        return _within(self.measured_delay_s, self.requested_delay_s, self.delay_tol_s)

    @property
    def atten_pass(self) -> bool | None:
        if self.requested_atten_db is None or self.measured_atten_db is None:
            return None
        return _within(self.measured_atten_db, self.requested_atten_db, self.atten_tol_db)

    @property
    def passed(self) -> bool:
        checks = [c for c in (self.delay_pass, self.atten_pass) if c is not None]
        return bool(checks) and all(checks)

    def as_dict(self) -> dict:
        d = {
            "measured_delay_s": self.measured_delay_s,
            "measured_atten_db": self.measured_atten_db,
            "requested_delay_s": self.requested_delay_s,
            "requested_atten_db": self.requested_atten_db,
            "peak_corr": self.peak_corr,
            "delay_pass": self.delay_pass,
            "atten_pass": self.atten_pass,
        }
        if self.delay_pass is not None or self.atten_pass is not None:
            d["pass"] = self.passed
        return {k: v for k, v in d.items() if v is not None}

    def to_text(self) -> str:
        return "".join(f"{k}={_fmt(v)}\n" for k, v in self.as_dict().items())

    def to_csv(self) -> str:
        d = self.as_dict()
        return ",".join(d) + "\n" + ",".join(_fmt(v) for v in d.values()) + "\n"


def _within(measured: float, requested: float, tol: float) -> bool:
    # unit conversions (lag / Fs vs ns * 1e-9) differ in the last ulp
    return abs(measured - requested) <= tol or math.isclose(measured, requested, rel_tol=1e-12)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def passthrough_check(inp, out, sample_rate_hz: float = 1.0) -> VerificationReport:
    """Pass-through calibration check: zero delay and |attenuation| <= 0.01 dB.

    With the default rate of 1 Hz the delay fields read in samples.
    """
    a, b = to_complex(inp), to_complex(out)
    if a.size != b.size:
        raise MeasurementError(f"length mismatch: {a.size} vs {b.size}")
    est = estimate_delay(a, b, sample_rate_hz)
    return VerificationReport(
        measured_delay_s=est.delay_s + 0.0,
        measured_atten_db=measure_attenuation_db(a, b),
        requested_delay_s=0.0,
        requested_atten_db=0.0,
        delay_tol_s=0.0,
        atten_tol_db=0.01,
        peak_corr=est.peak_corr,
    )
