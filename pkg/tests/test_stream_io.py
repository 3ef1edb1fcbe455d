import socket
import threading

import numpy as np
import pytest

from tdlemu.engine import Channel, EngineParams, TapSet
from tdlemu.selfcheck import random_block
from tdlemu.stream_io import (FrameDecoder, FrameError, UdpFrame, decode_frame, encode_frame,
                              inspect_iq, iter_iq, read_iq, run_bridge, write_iq)


def test_read_sc16_layout(tmp_path):
    p = tmp_path / "a.sc16"
    p.write_bytes(bytes.fromhex("0100020003000400"))
    assert read_iq(p, "sc16").tolist() == [[1, 2], [3, 4]]


def test_read_cf32_quantizes(tmp_path):
    p = tmp_path / "a.cf32"
    p.write_bytes(np.array([0.5, 0.0], "<f4").tobytes())
    assert read_iq(p, "cf32").tolist() == [[16384, 0]]


def test_truncated(tmp_path):
    p = tmp_path / "a.sc16"
    p.write_bytes(b"\x00" * 6)
    with pytest.raises(ValueError, match="truncated"):
        read_iq(p, "sc16")
    with pytest.raises(ValueError):
        inspect_iq(p, "sc16")
    with pytest.raises(OSError):
        read_iq(tmp_path / "missing.sc16", "sc16")


def test_write_layout(tmp_path):
    p = tmp_path / "b.sc16"
    write_iq([[1, 2]], p, "sc16")
    assert p.read_bytes() == bytes.fromhex("01000200")
    write_iq(np.zeros((0, 2), np.int16), p, "sc16")
    assert p.read_bytes() == b""


@pytest.mark.parametrize("fmt", ["sc16", "cf32"])
def test_round_trip(tmp_path, fmt):
    x = random_block(np.random.default_rng(9), 10_000)
    x[:2] = [[-32768, 32767], [32767, -32768]]
    p = tmp_path / f"c.{fmt}"
    write_iq(x, p, fmt)
    assert np.array_equal(read_iq(p, fmt), x)
    meta = inspect_iq(p, fmt, 1e6)
    assert meta.sample_count == 10_000
    assert np.array_equal(np.concatenate(list(iter_iq(p, fmt, 777))), x)


def test_frame_layout():
    buf = encode_frame(UdpFrame(0, np.array([[1, 2]], np.int16)))
    assert buf == bytes(8) + bytes.fromhex("01000000") + bytes.fromhex("01000200")


def test_frame_round_trip():
    rng = np.random.default_rng(3)
    for _ in range(20):
        f = UdpFrame(int(rng.integers(0, 2**63)), random_block(rng, int(rng.integers(1, 500))))
        assert decode_frame(encode_frame(f)) == f


def test_frame_errors():
    with pytest.raises(FrameError):
        decode_frame(b"\x00" * 11)
    good = encode_frame(UdpFrame(1, np.array([[1, 2], [3, 4]], np.int16)))
    with pytest.raises(FrameError):
        decode_frame(good[:-4])
    with pytest.raises(FrameError):
        encode_frame(UdpFrame(0, np.zeros((0, 2), np.int16)))


def test_gap_report():
    dec = FrameDecoder()
    one = np.array([[1, 1]], np.int16)
    dec.decode(encode_frame(UdpFrame(0, one)))
    dec.decode(encode_frame(UdpFrame(2, one)))
    assert dec.lost == 1 and dec.gaps == [(1, 2)]


def _free_port():
    with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_udp_bridge_order_and_schedule():
    params = EngineParams()
    rng = np.random.default_rng(11)
    x = random_block(rng, 1200)
    updates = [(0, TapSet(0, ((0, 32767),))), (500, TapSet(0, ((3, 32767),)))]
    expected = Channel(params=params, updates=updates).process(x)

    sink = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    sink.bind(("127.0.0.1", 0))
    sink.settimeout(5)
    in_port = _free_port()
    ready = threading.Event()
    result = {}

    def bridge():
        ch = Channel(params=params, updates=updates)
        result["stats"] = run_bridge(ch, ("127.0.0.1", in_port), sink.getsockname(),
                                     idle_timeout=2.0, max_frames=12, ready=lambda _: ready.set())

    t = threading.Thread(target=bridge)
    t.start()
    assert ready.wait(5)
    tx = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    for k in range(12):
        tx.sendto(encode_frame(UdpFrame(k, x[k * 100:(k + 1) * 100])), ("127.0.0.1", in_port))
    out, seqs = [], []
    while sum(f.shape[0] for f in out) < 1200:
        f = decode_frame(sink.recvfrom(65535)[0])
        seqs.append(f.seq)
        out.append(f.samples)
    t.join(10)
    tx.close()
    sink.close()
    assert seqs == list(range(12))
    assert np.array_equal(np.concatenate(out), expected)
    assert result["stats"].samples == 1200 and result["stats"].lost_frames == 0
