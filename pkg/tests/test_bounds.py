import math

import pytest

from eonsim.bounds import (
    CrossingNotBracketedError,
    OUTCOME_BLOCKED,
    OUTCOME_DEFRAG,
    OUTCOME_DIRECT,
    bound_sweep,
    crossing_load,
    defrag_bound_trial,
    dominance_gap,
    sort_by_resource,
    write_bound_trials_csv,
    write_gain_report,
    write_outcomes_csv,
)
from eonsim.heuristics import HeuristicKind
from eonsim.presets import get_preset
from eonsim.simulator import (
    LoadPoint,
    SimConfig,
    SimConfigError,
    TrialResult,
    run_stream,
    sweep,
)
from eonsim.topology import PathOrdering, Topology
from eonsim.traffic import ServiceRequest, TrafficConfig

ORDER = PathOrdering.HOPS_THEN_KM


def req(rid, arrival, holding=10.0, slots=1, src="A", dst="B"):
    return ServiceRequest(
        id=rid, src=src, dst=dst, arrival_time=arrival, holding_time=holding, slots=slots
    )


def wire(slots=4):
    return Topology("wire", ["A", "B"], [("A", "B", 100)], slots_per_fiber=slots,
                    fiber_mode="single")


def wire_config(topology, n_measured, **kw):
    base = dict(
        topology=topology,
        heuristic=HeuristicKind.KSP_FF,
        k=1,
        ordering=ORDER,
        traffic=TrafficConfig.from_load(
            1.0, rate_gbps_range=None, fixed_slot_choices=(1,)
        ),
        warmup_requests=0,
        measured_requests=n_measured,
    )
    base.update(kw)
    return SimConfig(**base)


# --- sort_by_resource ---------------------------------------------------------

def test_sort_descending_by_product():
    a = req(0, 0.0)  # 4 slots x 3 hops = 12
    b = req(1, 1.0)  # 2 slots x 2 hops = 4
    resources = {0: (4, 3), 1: (2, 2)}
    out = sort_by_resource([b, a], lambda r: resources[r.id])
    assert [r.id for r in out] == [0, 1]


def test_sort_tie_breaks_on_arrival():
    a = req(0, 5.0)
    b = req(1, 2.0)
    out = sort_by_resource([a, b], lambda r: (2, 3))
    assert [r.id for r in out] == [1, 0]


def test_sort_empty():
    assert sort_by_resource([], lambda r: (1, 1)) == []


# --- defrag trial semantics ------------------------------------------------------

def test_hand_traced_defrag_on_four_slots():
    """Fragmented single link: defrag repacks and admits the big request."""
    topo = wire(4)
    cfg = wire_config(topo, n_measured=3)
    stream = [
        req(0, arrival=1.0, holding=1.5, slots=1),  # expires at 2.5
        req(1, arrival=2.0, holding=50.0, slots=1),  # takes slot 1, long lived
        req(2, arrival=3.0, holding=50.0, slots=3),  # needs 3 contiguous
    ]
    from unittest import mock

    with mock.patch("eonsim.bounds.generate_stream", return_value=stream):
        result = defrag_bound_trial(cfg, seed=0, record_outcomes=True)
    assert result.outcomes == (OUTCOME_DIRECT, OUTCOME_DIRECT, OUTCOME_DEFRAG)
    assert result.blocked_count == 0
    assert result.defrag_count == 1


def test_defrag_rebuild_actually_repacks():
    """After adoption the rebuilt placements hold: big request first, gap filled."""
    topo = wire(4)
    cfg = wire_config(topo, n_measured=3)
    stream = [
        req(0, arrival=1.0, holding=1.5, slots=1),
        req(1, arrival=2.0, holding=50.0, slots=1),
        req(2, arrival=3.0, holding=50.0, slots=3),
    ]
    from unittest import mock

    # replicate by running the plain loop first: direct allocation must fail
    plain = run_stream(cfg, stream)
    assert plain.blocked_count == 1  # without defrag the 3-slot request blocks

    with mock.patch("eonsim.bounds.generate_stream", return_value=stream):
        result = defrag_bound_trial(cfg, seed=0)
    assert result.blocked_count == 0
    assert result.peak_active == 2


def test_pigeonhole_block_survives_defrag():
    """Demand exceeding link capacity blocks even with reconfiguration."""
    topo = wire(4)
    cfg = wire_config(topo, n_measured=3)
    stream = [
        req(0, arrival=1.0, holding=50.0, slots=2),
        req(1, arrival=2.0, holding=50.0, slots=2),
        req(2, arrival=3.0, holding=50.0, slots=2),  # 6 slots total > 4
    ]
    from unittest import mock

    with mock.patch("eonsim.bounds.generate_stream", return_value=stream):
        result = defrag_bound_trial(cfg, seed=0, record_outcomes=True)
    assert result.outcomes == (OUTCOME_DIRECT, OUTCOME_DIRECT, OUTCOME_BLOCKED)
    assert result.blocked_count == 1


def test_first_request_on_empty_network_is_direct():
    topo = wire(4)
    cfg = wire_config(topo, n_measured=1)
    from unittest import mock

    with mock.patch("eonsim.bounds.generate_stream", return_value=[req(0, 1.0)]):
        result = defrag_bound_trial(cfg, seed=0, record_outcomes=True)
    assert result.outcomes == (OUTCOME_DIRECT,)
    assert result.defrag_count == 0


def test_oversized_request_blocks_without_rebuild():
    """A request larger than the whole grid cannot trigger useless rebuilds."""
    topo = wire(4)
    cfg = wire_config(topo, n_measured=2)
    stream = [req(0, 1.0, slots=1), req(1, 2.0, slots=5)]
    from unittest import mock

    with mock.patch("eonsim.bounds.generate_stream", return_value=stream):
        result = defrag_bound_trial(cfg, seed=0, record_outcomes=True)
    assert result.outcomes == (OUTCOME_DIRECT, OUTCOME_BLOCKED)


def test_inner_heuristic_restricted():
    cfg = wire_config(wire(4), n_measured=1, heuristic=HeuristicKind.KME_FF)
    with pytest.raises(SimConfigError, match="inner heuristic"):
        defrag_bound_trial(cfg, seed=0)


def test_defrag_counts_partition_measured_window():
    preset = get_preset("deeprmsa")
    topo = preset.load_topology("nsfnet")
    cfg = preset.sim_config(
        topo, HeuristicKind.KSP_FF, 5, ORDER, 380.0,
        warmup_requests=500, measured_requests=2000,
    )
    result = defrag_bound_trial(cfg, seed=3, record_outcomes=True)
    assert result.direct_count + result.defrag_count + result.blocked_count == 2000
    assert len(result.outcomes) == 2500
    assert result.defrag_count > 0


def test_no_blocking_means_bound_equals_heuristic():
    preset = get_preset("deeprmsa")
    topo = preset.load_topology("nsfnet")
    cfg = preset.sim_config(
        topo, HeuristicKind.KSP_FF, 5, ORDER, 120.0,
        warmup_requests=200, measured_requests=1500,
    )
    heur = sweep(cfg, [120.0], trials=2, min_blocking_events=0)
    bound = sweep(cfg, [120.0], trials=2, min_blocking_events=0,
                  trial_runner=defrag_bound_trial)
    for h, b in zip(heur.points[0].results, bound.points[0].results):
        assert h.blocked_count == b.blocked_count == 0
        assert h.peak_active == b.peak_active
        assert h.sbp == b.sbp


def test_bound_dominates_heuristic_small_scale():
    preset = get_preset("deeprmsa")
    topo = preset.load_topology("nsfnet")
    cfg = preset.sim_config(
        topo, HeuristicKind.KSP_FF, 5, ORDER, 380.0,
        warmup_requests=500, measured_requests=2500,
    )
    heur = sweep(cfg, [380.0], trials=3, min_blocking_events=0)
    bound = sweep(cfg, [380.0], trials=3, min_blocking_events=0,
                  trial_runner=defrag_bound_trial)
    mean_diff, se = dominance_gap(heur.points[0], bound.points[0])
    assert mean_diff <= max(2 * se, 0.0) + 1e-12
    assert bound.points[0].mean_sbp < heur.points[0].mean_sbp


# --- crossing interpolation ---------------------------------------------------------

def point(load, sbp, trials=4, measured=10_000):
    results = tuple(
        TrialResult(seed=s, blocked_count=int(round(sbp * measured)),
                    total_measured=measured, sbp=sbp, peak_active=1)
        for s in range(trials)
    )
    return LoadPoint(load_erlangs=load, mean_sbp=sbp, std_sbp=0.0, results=results)


def test_crossing_log_linear_interpolation():
    pts = [point(100, 4e-4), point(120, 2e-3)]
    expected = 100 + 20 * (math.log(1e-3) - math.log(4e-4)) / (
        math.log(2e-3) - math.log(4e-4)
    )
    assert crossing_load(pts, 1e-3) == pytest.approx(expected)


def test_crossing_exact_hit_on_grid_point():
    pts = [point(100, 1e-4), point(150, 1e-3), point(200, 1e-2)]
    assert crossing_load(pts, 1e-3) == pytest.approx(150.0)


def test_crossing_uses_last_bracket():
    # noisy low-load wobble: 2e-3, then dip, then the real crossing
    pts = [point(80, 2e-4), point(100, 8e-4), point(120, 6e-4), point(140, 4e-3)]
    got = crossing_load(pts, 1e-3)
    assert 120 < got < 140


def test_crossing_not_bracketed_raises_diagnostic():
    pts = [point(100, 2e-3), point(120, 5e-3)]
    with pytest.raises(CrossingNotBracketedError, match="heur-curve"):
        crossing_load(pts, 1e-4, label="heur-curve")


def test_crossing_handles_zero_sbp_floor():
    pts = [point(100, 0.0), point(140, 4e-3)]
    got = crossing_load(pts, 1e-3)
    assert 100 < got < 140


def test_gain_report_math(tmp_path):
    from eonsim.bounds import CapacityGainReport

    report = CapacityGainReport(target_sbp=1e-3, heuristic_load=250.0, bound_load=300.0)
    assert report.relative_gain == pytest.approx(0.2)
    out = tmp_path / "gain.json"
    write_gain_report(report, out)
    import json

    doc = json.loads(out.read_text())
    assert doc["relative_gain"] == pytest.approx(0.2)


# --- CSV output -----------------------------------------------------------------------

def test_bound_csv_writers(tmp_path):
    topo = wire(8)
    cfg = wire_config(
        topo, n_measured=200,
        traffic=TrafficConfig.from_load(4.0, rate_gbps_range=None,
                                        fixed_slot_choices=(1, 2, 3)),
    )
    result = sweep(cfg, [4.0], trials=2, min_blocking_events=0,
                   trial_runner=defrag_bound_trial)
    path = tmp_path / "bound_trials.csv"
    write_bound_trials_csv(result, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "load_erlangs,trial,seed,blocked,total,sbp,direct,defrag"
    assert len(lines) == 3

    full = defrag_bound_trial(cfg, seed=0, record_outcomes=True)
    opath = tmp_path / "outcomes.csv"
    write_outcomes_csv(4.0, 0, full, opath)
    olines = opath.read_text().strip().splitlines()
    assert olines[0] == "load_erlangs,trial,seed,request,outcome"
    assert len(olines) == 201
    outcomes = {line.split(",")[-1] for line in olines[1:]}
    assert outcomes <= {OUTCOME_DIRECT, OUTCOME_DEFRAG, OUTCOME_BLOCKED}


def test_bound_sweep_end_to_end_tiny():
    """bound_sweep brackets a 10% target on a deliberately tiny system."""
    topo = wire(8)
    cfg = wire_config(
        topo, n_measured=600,
        traffic=TrafficConfig.from_load(3.0, rate_gbps_range=None,
                                        fixed_slot_choices=(1, 2, 3)),
        trials=3,
    )
    import warnings as w

    with w.catch_warnings():
        w.simplefilter("ignore")
        result = bound_sweep(cfg, [1.0, 1.5, 2.0], trials=3, target_sbp=0.1)
    assert result.gain.bound_load >= result.gain.heuristic_load
    assert result.gain.relative_gain >= 0.0
    for hp, bp in zip(result.heuristic.points, result.bound.points):
        assert bp.mean_sbp <= hp.mean_sbp + 1e-12
