"""IQ files (sc16 / cf32, little-endian interleaved) and the UDP sample bridge.

UDP frame layout, all little-endian::

    seq    u64
    count  u32
    payload count * (i16 I, i16 Q)
"""

from __future__ import annotations

import logging
import socket
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fixed_point import QuantizerConfig, as_iq, dequantize, quantize

log = logging.getLogger(__name__)

FORMATS = {"sc16": 4, "cf32": 8}
HEADER = struct.Struct("<QI")
HEADER_SIZE = HEADER.size  # 12
CF32_CFG = QuantizerConfig(full_scale=1.0, bits=16)
# keeps datagrams under a typical 64 KiB limit
MAX_FRAME_SAMPLES = (65507 - HEADER_SIZE) // 4


class FrameError(ValueError):
    pass


@dataclass
class IqFileMeta:
    format: str
    sample_rate_hz: float
    sample_count: int


def _check_format(fmt: str) -> None:
    if fmt not in FORMATS:
        raise ValueError(f"unknown IQ format {fmt!r}; expected one of {sorted(FORMATS)}")


def format_from_path(path, default: str = "sc16") -> str:
    suffix = Path(path).suffix.lower().lstrip(".")
    return suffix if suffix in FORMATS else default


def inspect_iq(path, fmt: str, sample_rate_hz: float = 0.0) -> IqFileMeta:
    _check_format(fmt)
    size = Path(path).stat().st_size
    if size % FORMATS[fmt]:
        raise ValueError(f"{path}: {size} bytes is not a whole number of {fmt} samples")
    return IqFileMeta(fmt, sample_rate_hz, size // FORMATS[fmt])


def decode_iq(raw: bytes, fmt: str) -> np.ndarray:
    _check_format(fmt)
    if len(raw) % FORMATS[fmt]:
        raise ValueError(
            f"truncated {fmt} data: {len(raw)} bytes leaves {len(raw) % FORMATS[fmt]} trailing bytes")
    if fmt == "sc16":
        return np.frombuffer(raw, dtype="<i2").reshape(-1, 2).astype(np.int16)
    pairs = np.frombuffer(raw, dtype="<f4").reshape(-1, 2).astype(np.float64)
    return quantize(pairs[:, 0] + 1j * pairs[:, 1], CF32_CFG)


def encode_iq(samples, fmt: str) -> bytes:
    _check_format(fmt)
    x = as_iq(samples)
    if fmt == "sc16":
        return x.astype("<i2").tobytes()
    z = dequantize(x, CF32_CFG)
    return np.column_stack([z.real, z.imag]).astype("<f4").tobytes()


def read_iq(path, fmt: str = "sc16") -> np.ndarray:
    """Read a whole IQ file as an int16 ``(L, 2)`` array."""
    with open(path, "rb") as fh:
        raw = fh.read()
    return decode_iq(raw, fmt)


def write_iq(samples, path, fmt: str = "sc16") -> None:
    data = encode_iq(samples, fmt)
    with open(path, "wb") as fh:
        fh.write(data)


def iter_iq(path, fmt: str = "sc16", block_size: int = 65536):
    """Yield blocks of at most ``block_size`` samples from an IQ file."""
    inspect_iq(path, fmt)
    step = FORMATS[fmt] * block_size
    with open(path, "rb") as fh:
        while chunk := fh.read(step):
            yield decode_iq(chunk, fmt)


@dataclass(frozen=True)
class UdpFrame:
    seq: int
    samples: np.ndarray

    @property
    def count(self) -> int:
        return int(self.samples.shape[0])

    def __eq__(self, other):
        if not isinstance(other, UdpFrame):
            return NotImplemented
        return self.seq == other.seq and np.array_equal(self.samples, other.samples)


def encode_frame(frame: UdpFrame) -> bytes:
    samples = as_iq(frame.samples)
    if samples.shape[0] < 1:
        raise FrameError("frame must carry at least one sample")
    if not 0 <= frame.seq < 2**64:
        raise FrameError(f"sequence number {frame.seq} out of u64 range")
    return HEADER.pack(frame.seq, samples.shape[0]) + samples.astype("<i2").tobytes()


def decode_frame(buf: bytes) -> UdpFrame:
    if len(buf) < HEADER_SIZE:
        raise FrameError(f"frame of {len(buf)} bytes is shorter than the {HEADER_SIZE}-byte header")
    seq, count = HEADER.unpack_from(buf)
    if count < 1:
        raise FrameError("frame declares zero samples")
    if len(buf) - HEADER_SIZE != 4 * count:
        raise FrameError(f"frame declares {count} samples but carries {len(buf) - HEADER_SIZE} payload bytes")
    payload = np.frombuffer(buf, dtype="<i2", offset=HEADER_SIZE).reshape(-1, 2).astype(np.int16)
    return UdpFrame(seq, payload)


@dataclass
class FrameDecoder:
    """Decodes a frame stream and counts frames lost to sequence gaps."""

    last_seq: int | None = None
    frames: int = 0
    lost: int = 0
    gaps: list[tuple[int, int]] = field(default_factory=list)  # (expected, received)

    def decode(self, buf: bytes) -> UdpFrame:
        frame = decode_frame(buf)
        if self.last_seq is not None and frame.seq > self.last_seq + 1:
            self.lost += frame.seq - self.last_seq - 1
            self.gaps.append((self.last_seq + 1, frame.seq))
        self.last_seq = frame.seq if self.last_seq is None else max(self.last_seq, frame.seq)
        self.frames += 1
        return frame


def parse_hostport(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise ValueError(f"expected HOST:PORT, got {text!r}")
    return host.strip("[]"), int(port)


@dataclass
class BridgeStats:
    frames_in: int = 0
    frames_out: int = 0
    samples: int = 0
    lost_frames: int = 0


def run_bridge(channel, udp_in: tuple[str, int], udp_out: tuple[str, int], *,
               idle_timeout: float = 5.0, max_frames: int | None = None,
               wall_clock: bool = False, sample_rate_hz: float | None = None,
               ready=None) -> BridgeStats:
    """Relay frames from ``udp_in`` through ``channel`` to ``udp_out``.

    Frames are processed one at a time in arrival order, so sample order is
    preserved and nothing is buffered beyond one datagram. In the default
    deterministic mode the channel's schedule advances with the cumulative
    received-sample count. ``wall_clock=True`` instead switches TapSets by
    elapsed time since the first frame (not reproducible). Returns when no
    frame arrives for ``idle_timeout`` seconds or after ``max_frames``.
    """
    updates = list(channel.updates)
    if wall_clock:
        if not sample_rate_hz:
            raise ValueError("wall-clock mode needs sample_rate_hz")
        # the channel sees no schedule; TapSets are applied here by elapsed time
        channel.updates = []
        channel.set_taps(updates[0][1] if updates else channel.taps)
    decoder = FrameDecoder()
    stats = BridgeStats()
    rx = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    tx = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    try:
        rx.bind(udp_in)
        rx.settimeout(idle_timeout)
        if ready is not None:
            ready(rx.getsockname())
        t0 = None
        out_seq = 0
        while max_frames is None or stats.frames_in < max_frames:
            try:
                buf, _ = rx.recvfrom(65535)
            except socket.timeout:
                break
            try:
                frame = decoder.decode(buf)
            except FrameError as exc:
                log.warning("dropping malformed frame: %s", exc)
                continue
            stats.frames_in += 1
            if wall_clock:
                now = time.monotonic()
                t0 = now if t0 is None else t0
                pos = (now - t0) * sample_rate_hz
                due = [t for idx, t in updates if idx <= pos]
                if due:
                    channel.set_taps(due[-1])
            y = channel.process(frame.samples)
            for start in range(0, y.shape[0], MAX_FRAME_SAMPLES):
                tx.sendto(encode_frame(UdpFrame(out_seq, y[start:start + MAX_FRAME_SAMPLES])), udp_out)
                out_seq += 1
                stats.frames_out += 1
            stats.samples += y.shape[0]
    finally:
        rx.close()
        tx.close()
    stats.lost_frames = decoder.lost
    return stats
