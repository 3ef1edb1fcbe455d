import numpy as np
import pytest

from tdlemu.engine import Channel, EngineParams, TapSet, passthrough_taps, process_block
from tdlemu.planner import PathCollision, max_velocity_mps
from tdlemu.scenario import (ScenarioError, compile_schedule, parse_scenario, parse_schedule)
from tdlemu.selfcheck import random_block

HEADER = "t_ms,delay_ns_1,atten_db_1,delay_ns_2,atten_db_2,delay_ns_3,atten_db_3\n"


def test_single_row():
    sc = parse_scenario(HEADER + "0,0,0\n")
    assert len(sc.rows) == 1
    assert [(p.delay_ns, p.atten_db) for p in sc.rows[0].paths] == [(0.0, 0.0)]
    assert sc.update_rate_hz == 0.0


def test_three_rows_crlf_and_disabled_pairs():
    text = HEADER.replace("\n", "\r\n") + "0,0,0,,,\r\n1,5,3,,,20,10\r\n2,10,6,15,12,,\r\n"
    sc = parse_scenario(text)
    assert [r.t_ms for r in sc.rows] == [0, 1, 2]
    assert [len(r.paths) for r in sc.rows] == [1, 2, 2]
    assert sc.update_rate_hz == pytest.approx(1000.0)


def test_non_monotone_names_row():
    with pytest.raises(ScenarioError) as e:
        parse_scenario(HEADER + "0,0,0\n2,0,1\n1,0,2\n")
    assert e.value.row == 3 and "row 3" in str(e.value)


@pytest.mark.parametrize("body,row", [
    ("0,0,0,1,1,2,2,3,3\n", 1),
    ("0,abc,0\n", 1),
    ("0,0,0\n1,5,\n", 2),
    ("1,0,0\n", 1),
    ("0,,\n", 1),
])
def test_validation_errors(body, row):
    with pytest.raises(ScenarioError) as e:
        parse_scenario(HEADER + body)
    assert e.value.row == row


def test_bad_header():
    with pytest.raises(ScenarioError):
        parse_scenario("time,delay\n0,0\n")


def test_compile_sample_index():
    sc = parse_scenario(HEADER + "0,0,0\n1,5,6\n")
    sched = compile_schedule(sc, EngineParams(), 1e6)
    assert [i for i, _ in sched.entries] == [0, 1000]


def test_compile_counts_u_plus_one():
    u = 1000
    body = "".join(f"{k},0,{k % 40}\n" for k in range(u + 1))
    sched = compile_schedule(parse_scenario(HEADER + body), EngineParams(), 200e6)
    assert len(sched.entries) == u + 1
    assert sched.entries[-1][0] == 200_000_000


def test_row_spacing_gives_velocity():
    sc = parse_scenario(HEADER + "0,0,0\n1,5,0\n")
    assert sc.update_rate_hz == pytest.approx(1000.0)
    assert max_velocity_mps(sc.update_rate_hz, 200e6) == pytest.approx(1500, rel=5e-3)
    # one delay step per row at u=1000
    sched = compile_schedule(sc, EngineParams(), 200e6)
    assert [t.taps[0][0] for _, t in sched.entries] == [0, 1]


def test_compile_errors():
    with pytest.raises(PathCollision, match="row 2"):
        compile_schedule(parse_scenario(HEADER + "0,0,0\n1,0,0,1,3\n"), EngineParams(), 1e6)
    with pytest.raises(ScenarioError, match="row 2"):
        compile_schedule(parse_scenario(HEADER + "0,0,0\n0.0001,5,0\n"), EngineParams(), 1e6)


def test_deterministic_compile():
    text = HEADER + "0,0,0\n0.5,10,3.3,30,9\n1.25,200,50\n"
    a = compile_schedule(parse_scenario(text), EngineParams(), 2e6)
    b = compile_schedule(parse_scenario(text), EngineParams(), 2e6)
    assert a.to_csv() == b.to_csv()


def test_schedule_csv_round_trip():
    params = EngineParams()
    sched = compile_schedule(parse_scenario(HEADER + "0,0,0\n1,5,6.5,100,30\n"), params, 1e6)
    text = sched.to_csv()
    assert text.splitlines()[0] == "sample_index,shift_j,taps"
    back = parse_schedule(text, params)
    assert back.entries == sched.entries


def test_schedule_parse_errors():
    params = EngineParams()
    with pytest.raises(ScenarioError):
        parse_schedule("sample_index,shift_j,taps\n5,0,0:1\n", params)
    with pytest.raises(ScenarioError):
        parse_schedule("sample_index,shift_j,taps\n0,0,50:1\n", params)
    with pytest.raises(ScenarioError):
        parse_schedule("sample_index,shift_j,taps\n0,0,0:1\n0,0,0:1\n", params)


def test_update_atomic_at_boundary():
    # step change: pass-through then a 1-shift attenuation at sample 500
    params = EngineParams()
    rng = np.random.default_rng(5)
    x = random_block(rng, 1000)
    t1 = TapSet(1, ((0, 32767),))
    for block in (1, 7, 64, 333, 1000):
        ch = Channel(params=params, updates=[(0, passthrough_taps(params)), (500, t1)])
        y = np.concatenate([ch.process(x[i:i + block]) for i in range(0, 1000, block)])
        assert np.array_equal(y[:500], x[:500])
        assert np.array_equal(y[500:], process_block(x, t1, params)[0][500:])
