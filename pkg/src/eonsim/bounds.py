"""Lower-bound SBP estimation by replay-based defragmentation.

The bound trial runs the ordinary event loop, but whenever direct
allocation fails it is allowed one full reconfiguration: rebuild an
empty network and re-place every active request, plus the newly blocked
one, in descending order of resource footprint (slot demand times
shortest-path hop count).  If the rebuild hosts everything, the trial
adopts the rebuilt state and the request is admitted; otherwise the
request counts as blocked and the pre-rebuild state is kept.

Relaxing only the no-reconfiguration constraint keeps every adopted
state physically realizable (continuity and contiguity still hold),
and gives the estimator strictly more freedom than any online policy,
so its SBP lower-bounds theirs.  The reallocation heuristic must be a
strong one for the bound to be tight; ksp-ff and ff-ksp are accepted.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .heuristics import HeuristicKind, decide
from .service import demand_for_path, slots_required
from .simulator import (
    ActiveLightpaths,
    LoadPoint,
    LoadSweepResult,
    SimConfig,
    SimConfigError,
    TrialResult,
    sweep,
)
from .spectrum import SlotBlock, SpectrumState
from .traffic import ServiceRequest, generate_stream

INNER_HEURISTICS = (HeuristicKind.KSP_FF, HeuristicKind.FF_KSP)

OUTCOME_DIRECT = "direct"
OUTCOME_DEFRAG = "defrag"
OUTCOME_BLOCKED = "blocked"


class CrossingNotBracketedError(RuntimeError):
    """The swept loads do not bracket the target SBP for a curve."""


@dataclass(frozen=True)
class DefragTrialResult(TrialResult):
    direct_count: int = 0
    defrag_count: int = 0
    outcomes: tuple[str, ...] | None = None


def sort_by_resource(
    requests: Sequence[ServiceRequest],
    resource_of: Callable[[ServiceRequest], tuple[int, int]],
) -> list[ServiceRequest]:
    """Order requests descending by slots x shortest-path hops.

    ``resource_of`` maps a request to its (slot demand, hop count)
    pair.  Equal products resolve to the earlier arrival.
    """

    def key(r: ServiceRequest):
        slots, hops = resource_of(r)
        return (-slots * hops, r.arrival_time, r.id)

    return sorted(requests, key=key)


def _resource_of_factory(config: SimConfig) -> Callable[[ServiceRequest], tuple[int, int]]:
    """Resource footprint of a request, from its rank-0 candidate path.

    The demand of a rate request is path dependent; for sorting we pin
    it to the modulation of the rank-0 path.  When even that path is
    beyond every reach, the lowest-order format stands in so the sort
    key stays defined.
    """
    cache: dict[tuple[str, str, float | int | None], tuple[int, int]] = {}
    table = config.modulation

    def resource_of(request: ServiceRequest) -> tuple[int, int]:
        ck = (request.src, request.dst, request.slots or request.rate_gbps)
        got = cache.get(ck)
        if got is not None:
            return got
        path0 = config.topology.candidate_paths(
            request.src, request.dst, config.k, config.ordering
        )[0]
        if request.slots is not None:
            slots = request.slots + config.guard_slots
        else:
            fmt = table.select(path0.length_km) or table.lowest_order
            slots = (
                slots_required(
                    request.rate_gbps, fmt.bits_per_symbol, config.slot_width_ghz, config.overhead
                )
                + config.guard_slots
            )
        got = (slots, path0.hop_count)
        cache[ck] = got
        return got

    return resource_of


def defrag_bound_trial(
    config: SimConfig, seed: int, *, record_outcomes: bool = False
) -> DefragTrialResult:
    """One seeded bound trial; same stream semantics as a plain trial."""
    if config.heuristic not in INNER_HEURISTICS:
        raise SimConfigError(
            f"bound trials require an inner heuristic in "
            f"{[k.value for k in INNER_HEURISTICS]}, got {config.heuristic.value}"
        )
    stream = generate_stream(
        config.traffic, config.total_requests, config.topology.nodes, seed
    )
    topo = config.topology
    state = SpectrumState.for_topology(topo)
    active = ActiveLightpaths(state)
    paths_of = topo.candidate_paths
    k, ordering, kind = config.k, config.ordering, config.heuristic
    resource_of = _resource_of_factory(config)
    decide_kwargs = dict(
        slot_width_ghz=config.slot_width_ghz,
        overhead=config.overhead,
        guard_slots=config.guard_slots,
    )
    warmup = config.warmup_requests

    blocked = direct = defrag = 0
    peak_active = 0
    outcomes: list[str] | None = [] if record_outcomes else None

    for i, request in enumerate(stream):
        active.release_due(request.arrival_time)
        candidates = paths_of(request.src, request.dst, k, ordering)
        decision = decide(kind, request, candidates, state, config.modulation, **decide_kwargs)
        measured = i >= warmup
        if decision is not None:
            active.add(request, decision)
            outcome = OUTCOME_DIRECT
            if measured:
                direct += 1
        elif not _ever_feasible(config, request, candidates):
            # no rebuild can host a request that fails on an empty network
            outcome = OUTCOME_BLOCKED
            if measured:
                blocked += 1
        else:
            placements = _rebuild(config, active.active_requests() + [request], resource_of)
            if placements is None:
                outcome = OUTCOME_BLOCKED
                if measured:
                    blocked += 1
            else:
                temp_state, placed = placements
                new_fibers, new_block = placed.pop(request.id)
                active.replace_placements(temp_state, placed)
                active.insert_allocated(request, new_fibers, new_block)
                outcome = OUTCOME_DEFRAG
                if measured:
                    defrag += 1
        if len(active) > peak_active:
            peak_active = len(active)
        if outcomes is not None:
            outcomes.append(outcome)

    total_measured = config.measured_requests
    return DefragTrialResult(
        seed=seed,
        blocked_count=blocked,
        total_measured=total_measured,
        sbp=blocked / total_measured,
        peak_active=peak_active,
        direct_count=direct,
        defrag_count=defrag,
        outcomes=tuple(outcomes) if outcomes is not None else None,
    )


def _ever_feasible(config: SimConfig, request: ServiceRequest, candidates) -> bool:
    for path in candidates:
        demand = demand_for_path(
            request, path, config.modulation, config.slot_width_ghz,
            config.overhead, config.guard_slots,
        )
        if demand is not None and demand.slots <= config.topology.slots_per_fiber:
            return True
    return False


def _rebuild(
    config: SimConfig,
    requests: list[ServiceRequest],
    resource_of,
) -> tuple[SpectrumState, dict[int, tuple[tuple[int, ...], SlotBlock]]] | None:
    """Re-place every request on an empty network, largest first.

    Returns the rebuilt state and per-request placements, or None as
    soon as any request cannot be hosted.
    """
    temp = SpectrumState.for_topology(config.topology)
    placements: dict[int, tuple[tuple[int, ...], SlotBlock]] = {}
    for r in sort_by_resource(requests, resource_of):
        candidates = config.topology.candidate_paths(r.src, r.dst, config.k, config.ordering)
        decision = decide(
            config.heuristic, r, candidates, temp, config.modulation,
            slot_width_ghz=config.slot_width_ghz,
            overhead=config.overhead,
            guard_slots=config.guard_slots,
        )
        if decision is None:
            return None
        temp.allocate(decision.path.fiber_ids, decision.block)
        placements[r.id] = (decision.path.fiber_ids, decision.block)
    return temp, placements


@dataclass(frozen=True)
class CapacityGainReport:
    target_sbp: float
    heuristic_load: float
    bound_load: float

    @property
    def relative_gain(self) -> float:
        return (self.bound_load - self.heuristic_load) / self.heuristic_load


@dataclass(frozen=True)
class BoundSweepResult:
    heuristic: LoadSweepResult
    bound: LoadSweepResult
    gain: CapacityGainReport


def crossing_load(
    points: Sequence[LoadPoint], target_sbp: float, *, label: str = "curve"
) -> float:
    """Load at which the mean-SBP curve crosses ``target_sbp``.

    Piecewise-linear interpolation of log(SBP) against load, using the
    last upward bracket.  Zero means (no blocking observed) are clamped
    to a tenth of one pooled blocking event before taking logs.
    """
    if len(points) < 2:
        raise CrossingNotBracketedError(f"{label}: need at least two swept loads")
    loads = [p.load_erlangs for p in points]
    floor_candidates = [
        0.1 / (p.trials * p.results[0].total_measured) for p in points
    ]
    means = [
        max(p.mean_sbp, f) for p, f in zip(points, floor_candidates)
    ]
    bracket = None
    for i in range(len(points) - 1):
        if means[i] <= target_sbp <= means[i + 1] and means[i] < means[i + 1]:
            bracket = i
    if bracket is None:
        raise CrossingNotBracketedError(
            f"{label}: no swept interval brackets SBP {target_sbp:g}; "
            f"mean SBP by load: "
            + ", ".join(f"{l:g}->{m:.3g}" for l, m in zip(loads, means))
        )
    i = bracket
    t = (math.log(target_sbp) - math.log(means[i])) / (
        math.log(means[i + 1]) - math.log(means[i])
    )
    return loads[i] + t * (loads[i + 1] - loads[i])


def bound_sweep(
    config: SimConfig,
    loads: Sequence[float],
    trials: int | None = None,
    *,
    jobs: int = 1,
    target_sbp: float = 1e-3,
) -> BoundSweepResult:
    """Paired-seed sweeps of the inner heuristic and the bound estimator.

    Reports the relative extra load the bound supports at the target
    SBP (default 0.1%).  The swept loads must bracket the crossing for
    both curves or an explicit diagnostic is raised.
    """
    heuristic_result = sweep(config, loads, trials, jobs=jobs)
    bound_result = sweep(config, loads, trials, jobs=jobs, trial_runner=defrag_bound_trial)
    report = CapacityGainReport(
        target_sbp=target_sbp,
        heuristic_load=crossing_load(heuristic_result.points, target_sbp, label="heuristic"),
        bound_load=crossing_load(bound_result.points, target_sbp, label="bound"),
    )
    return BoundSweepResult(heuristic_result, bound_result, report)


def dominance_gap(heuristic_point: LoadPoint, bound_point: LoadPoint) -> tuple[float, float]:
    """Mean and standard error of paired per-seed SBP differences.

    Positive mean says the bound blocked more than the heuristic; the
    bound property requires mean <= 2 standard errors (and <= 0 when
    the paired differences are all identical).
    """
    heur = {r.seed: r.sbp for r in heuristic_point.results}
    bound = {r.seed: r.sbp for r in bound_point.results}
    if set(heur) != set(bound):
        raise ValueError("dominance check requires paired seeds")
    diffs = np.array([bound[s] - heur[s] for s in sorted(heur)])
    se = float(np.std(diffs, ddof=1) / math.sqrt(len(diffs))) if len(diffs) >= 2 else 0.0
    return float(diffs.mean()), se


def write_bound_trials_csv(result: LoadSweepResult, path) -> None:
    """Sweep schema plus per-trial direct/defrag counts."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["load_erlangs", "trial", "seed", "blocked", "total", "sbp", "direct", "defrag"]
        )
        for point in result.points:
            for trial, r in enumerate(point.results):
                writer.writerow(
                    [
                        f"{point.load_erlangs:.12g}",
                        trial,
                        r.seed,
                        r.blocked_count,
                        r.total_measured,
                        f"{r.sbp:.12g}",
                        getattr(r, "direct_count", ""),
                        getattr(r, "defrag_count", ""),
                    ]
                )


def write_outcomes_csv(
    load: float, trial: int, result: DefragTrialResult, path, *, append: bool = False
) -> None:
    """Row-per-request outcome dump: outcome in {direct, defrag, blocked}."""
    if result.outcomes is None:
        raise ValueError("trial was run without record_outcomes=True")
    mode = "a" if append else "w"
    with open(path, mode, newline="") as fh:
        writer = csv.writer(fh)
        if not append:
            writer.writerow(["load_erlangs", "trial", "seed", "request", "outcome"])
        for req_idx, outcome in enumerate(result.outcomes):
            writer.writerow([f"{load:.12g}", trial, result.seed, req_idx, outcome])


def write_gain_report(report: CapacityGainReport, path) -> None:
    """Small structured-text (JSON) capacity-gain summary."""
    import json

    with open(path, "w") as fh:
        json.dump(
            {
                "target_sbp": report.target_sbp,
                "heuristic_load_erlangs": round(report.heuristic_load, 6),
                "bound_load_erlangs": round(report.bound_load, 6),
                "relative_gain": round(report.relative_gain, 6),
            },
            fh,
            indent=2,
        )
        fh.write("\n")
