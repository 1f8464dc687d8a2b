import json
import os

import numpy as np
import pytest

from mimolink import harness
from mimolink.harness import (Curve, LinkSetup, RequiredEbn0, Scenario,
                              SimPoint, StopRule, required_ebn0,
                              resolve_scenario, run_point, sweep,
                              wilson_interval)
from mimolink.stcodes import Scheme

# small frames keep the Monte-Carlo tests fast
FAST = dict(frame_info_bits=600)


def test_resolve_scenario_table():
    sc = resolve_scenario("alamouti", 6)
    assert (sc.modulation_order, sc.code_rate) == (256, "3/4")
    sc = resolve_scenario("golden", 4)
    assert (sc.modulation_order, sc.code_rate) == (16, "1/2")
    sc = resolve_scenario("vblast", 2)
    assert (sc.modulation_order, sc.code_rate) == (4, "1/2")


def test_resolve_scenario_eta_consistency():
    # information bits per channel use must equal eta for every table entry
    from mimolink import stcodes
    from mimolink.fec import RATE_VALUES
    for (scheme, eta), (order, rate) in harness.SCENARIO_TABLE.items():
        b = np.log2(order)
        l = stcodes.dispersion_set(scheme).rate
        assert b * l * RATE_VALUES[rate] == pytest.approx(eta)


def test_resolve_scenario_invalid_pair():
    with pytest.raises(ValueError, match="valid pairs"):
        resolve_scenario("vblast", 3)


def test_resolve_scenario_alpha_count():
    with pytest.raises(ValueError):
        resolve_scenario("golden", 4, m_r=3, alpha_db=(0.0, 0.0))


def test_resolve_scenario_rx_range():
    with pytest.raises(ValueError):
        resolve_scenario("golden", 4, m_r=4, alpha_db=(0.0,) * 4)


def test_link_setup_sizes():
    sc = resolve_scenario("golden", 4)
    setup = LinkSetup(sc)
    assert setup.n_coded == 2 * (9600 + 6)
    assert setup.n_uses == 1201
    assert setup.n_pad == 4


def test_wilson_interval():
    lo, hi = wilson_interval(0, 0)
    assert (lo, hi) == (0.0, 1.0)
    lo, hi = wilson_interval(50, 1000)
    assert lo < 0.05 < hi
    assert hi - lo < 0.03
    lo, hi = wilson_interval(0, 1000)
    assert lo < 1e-12 and hi < 0.005


def test_run_point_deterministic():
    sc = resolve_scenario("golden", 4, seed=11, **FAST)
    stop = StopRule(min_frame_errors=5, max_bits=100_000)
    p1 = run_point(sc, 4.0, stop)
    p2 = run_point(sc, 4.0, stop)
    assert (p1.bits, p1.bit_errors, p1.frames, p1.frame_errors) == \
           (p2.bits, p2.bit_errors, p2.frames, p2.frame_errors)


def test_run_point_worker_independence():
    sc = resolve_scenario("golden", 4, seed=12, **FAST)
    stop = StopRule(min_frame_errors=5, max_bits=100_000)
    saved = os.environ.get(harness.WORKERS_ENV)
    try:
        os.environ[harness.WORKERS_ENV] = "1"
        p1 = run_point(sc, 4.0, stop)
        os.environ[harness.WORKERS_ENV] = "4"
        p4 = run_point(sc, 4.0, stop)
    finally:
        if saved is None:
            os.environ.pop(harness.WORKERS_ENV, None)
        else:
            os.environ[harness.WORKERS_ENV] = saved
    assert (p1.bits, p1.bit_errors) == (p4.bits, p4.bit_errors)


def test_run_point_low_snr_half():
    sc = resolve_scenario("golden", 4, seed=0, **FAST)
    p = run_point(sc, -20.0, StopRule(min_frame_errors=10, max_bits=30_000))
    assert p.ber == pytest.approx(0.5, abs=0.05)


def test_run_point_accounting():
    sc = resolve_scenario("golden", 4, seed=1, **FAST)
    p = run_point(sc, 0.0, StopRule(min_frame_errors=3, max_bits=60_000))
    assert p.bits == p.frames * sc.frame_info_bits
    assert p.frame_errors <= p.frames
    assert p.bit_errors <= p.bits
    assert not p.upper_bound  # at 0 dB errors are certain


def test_run_point_zero_error_flags_upper_bound():
    sc = resolve_scenario("alamouti", 2, seed=2, **FAST)
    p = run_point(sc, 20.0, StopRule(min_frame_errors=1, max_bits=6_000))
    assert p.bit_errors == 0
    assert p.upper_bound


def test_run_point_tracks_iterations():
    sc = resolve_scenario("golden", 4, seed=3, iterations=3, **FAST)
    p = run_point(sc, 2.0, StopRule(min_frame_errors=5, max_bits=60_000),
                  track_iterations=True)
    assert len(p.iter_bit_errors) == 3
    # final-iteration tally must equal the headline error count
    assert p.iter_bit_errors[-1] == p.bit_errors


def test_sweep_grid_validation():
    sc = resolve_scenario("golden", 4, **FAST)
    stop = StopRule(min_frame_errors=1, max_bits=600)
    with pytest.raises(ValueError):
        sweep(sc, [], stop)
    with pytest.raises(ValueError):
        sweep(sc, [1.0, 1.0], stop)
    with pytest.raises(ValueError):
        sweep(sc, [2.0, 1.0], stop)


def test_sweep_composes_run_point():
    sc = resolve_scenario("golden", 4, seed=4, **FAST)
    stop = StopRule(min_frame_errors=2, max_bits=30_000)
    curve = sweep(sc, [0.0, 2.0], stop)
    assert [p.ebn0_db for p in curve.points] == [0.0, 2.0]
    single = run_point(sc, 2.0, stop)
    p = curve.points[1]
    assert (p.bits, p.bit_errors) == (single.bits, single.bit_errors)


def mk_point(db, ber, bits=1_000_000):
    errs = int(round(ber * bits))
    return SimPoint(ebn0_db=db, bits=bits, bit_errors=errs, frames=bits // 100,
                    frame_errors=min(errs, bits // 100))


def test_required_ebn0_interpolation():
    # log-linear between (6, 1e-3) and (8, 1e-5) crosses 1e-4 at 7.0
    res = required_ebn0([mk_point(6.0, 1e-3), mk_point(8.0, 1e-5)], 1e-4)
    assert res.reached
    assert res.ebn0_db == pytest.approx(7.0, abs=1e-6)
    assert res.ci_db > 0


def test_required_ebn0_exact_hit():
    res = required_ebn0([mk_point(5.0, 1e-4), mk_point(6.0, 1e-6)], 1e-4)
    assert res.reached
    assert res.ebn0_db == pytest.approx(5.0, abs=1e-9)


def test_required_ebn0_not_bracketed():
    res = required_ebn0([mk_point(0.0, 0.4), mk_point(1.0, 0.3)], 1e-4)
    assert not res.reached
    assert res.ebn0_db is None


def test_required_ebn0_zero_error_endpoint():
    pts = [mk_point(6.0, 1e-3),
           SimPoint(ebn0_db=8.0, bits=10_000_000, bit_errors=0,
                    frames=1000, frame_errors=0, upper_bound=True)]
    res = required_ebn0(pts, 1e-4)
    assert res.reached
    assert 6.0 < res.ebn0_db < 8.0


def test_required_ebn0_ci_shrinks_with_bits():
    narrow = required_ebn0([mk_point(6.0, 1e-3, bits=10_000_000),
                            mk_point(8.0, 1e-5, bits=10_000_000)], 1e-4)
    wide = required_ebn0([mk_point(6.0, 1e-3, bits=100_000),
                          mk_point(8.0, 1e-5, bits=100_000)], 1e-4)
    assert narrow.ci_db < wide.ci_db


def test_jsonl_round_trip(tmp_path):
    sc = resolve_scenario("golden", 4, seed=5, **FAST)
    curve = Curve(scenario=sc, points=[mk_point(3.0, 1e-2),
                                       mk_point(4.0, 1e-3)])
    path = tmp_path / "pts.jsonl"
    harness.append_jsonl(str(path), curve)
    pts = harness.load_points_jsonl(str(path))
    assert [p.ebn0_db for p in pts] == [3.0, 4.0]
    assert pts[0].bit_errors == curve.points[0].bit_errors
    rec = json.loads(path.read_text().splitlines()[0])
    assert rec["schema_version"] == harness.SCHEMA_VERSION
    assert rec["scheme"] == "golden"


def test_csv_output(tmp_path):
    sc = resolve_scenario("golden", 4, alpha_db=(0.0, -6.0), seed=6, **FAST)
    curve = Curve(scenario=sc, points=[mk_point(3.0, 1e-2)])
    path = tmp_path / "pts.csv"
    harness.write_csv(str(path), [curve])
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == harness.CSV_COLUMNS
    row = lines[1].split(",")
    assert row[0] == "golden"
    assert float(row[3]) == -6.0


def test_stop_rule_validation():
    with pytest.raises(ValueError):
        StopRule(min_frame_errors=0)


def test_simulate_frame_noiseless():
    for name in ("golden", "vblast", "ld", "alamouti"):
        sc = resolve_scenario(name, 4, seed=7, **FAST)
        setup = LinkSetup(sc)
        rng = np.random.default_rng(0)
        assert setup.simulate_frame(1e-8, rng) == 0
