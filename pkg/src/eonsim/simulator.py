"""Discrete-event loop producing service blocking probability.

A trial processes warm-up plus measured requests in arrival order.
Before each arrival, every lightpath whose expiry time is strictly
earlier than the arrival is released; the heuristic then either admits
the request (allocating its block on every path fiber) or blocks it.
Blocked requests consume nothing and are not retried.  Only blocks
inside the measured window count toward SBP; network state persists
across the warm-up boundary.

The warm-up estimator simulates a non-blocking network and applies
MSER-5 (marginal standard error rule, batch size 5) to the series of
active-connection counts sampled at arrivals.
"""
from __future__ import annotations

import csv
import heapq
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .heuristics import Decision, HeuristicKind, decide
from .service import DEFAULT_SLOT_WIDTH_GHZ, ModulationTable
from .spectrum import SlotBlock, SpectrumState
from .topology import PathOrdering, Topology
from .traffic import ServiceRequest, TrafficConfig, generate_stream


class SimConfigError(ValueError):
    """Invalid simulation configuration."""


@dataclass(frozen=True, eq=False)
class SimConfig:
    topology: Topology
    heuristic: HeuristicKind
    k: int
    ordering: PathOrdering
    traffic: TrafficConfig
    warmup_requests: int = 3000
    measured_requests: int = 10000
    trials: int = 10
    base_seed: int = 0
    modulation: ModulationTable | None = None
    slot_width_ghz: float = DEFAULT_SLOT_WIDTH_GHZ
    overhead: float = 1.0
    guard_slots: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise SimConfigError(f"k must be >= 1, got {self.k}")
        if self.warmup_requests < 0:
            raise SimConfigError(f"warmup_requests must be >= 0, got {self.warmup_requests}")
        if self.measured_requests < 1:
            raise SimConfigError(
                f"measured_requests must be >= 1, got {self.measured_requests}"
            )
        if self.trials < 1:
            raise SimConfigError(f"trials must be >= 1, got {self.trials}")
        if self.guard_slots < 0:
            raise SimConfigError(f"guard_slots must be >= 0, got {self.guard_slots}")
        if self.traffic.rate_gbps_range is not None and self.modulation is None:
            raise SimConfigError("rate-based traffic requires a modulation table")

    @property
    def total_requests(self) -> int:
        return self.warmup_requests + self.measured_requests

    def with_load(self, load_erlangs: float) -> "SimConfig":
        return replace(self, traffic=self.traffic.with_load(load_erlangs))


@dataclass(frozen=True)
class TrialResult:
    seed: int
    blocked_count: int
    total_measured: int
    sbp: float
    peak_active: int

    def __post_init__(self):
        if not 0 <= self.blocked_count <= self.total_measured:
            raise ValueError("blocked_count out of range")
        if not 0.0 <= self.sbp <= 1.0:
            raise ValueError(f"sbp out of range: {self.sbp}")


class ActiveLightpaths:
    """Expiry-ordered set of admitted lightpaths plus their placements."""

    __slots__ = ("_state", "_heap", "records", "occupied_slot_links")

    def __init__(self, state: SpectrumState):
        self._state = state
        self._heap: list[tuple[float, int]] = []
        # request id -> (request, fiber_ids, block)
        self.records: dict[int, tuple[ServiceRequest, tuple[int, ...], SlotBlock]] = {}
        self.occupied_slot_links = 0

    def __len__(self) -> int:
        return len(self.records)

    def add(self, request: ServiceRequest, decision: Decision) -> None:
        self._state.allocate(decision.path.fiber_ids, decision.block)
        self.insert_allocated(request, decision.path.fiber_ids, decision.block)

    def insert_allocated(
        self, request: ServiceRequest, fiber_ids: tuple[int, ...], block: SlotBlock
    ) -> None:
        """Record a lightpath whose slots are already held in the state."""
        self.records[request.id] = (request, fiber_ids, block)
        heapq.heappush(self._heap, (request.expiry_time, request.id))
        self.occupied_slot_links += len(fiber_ids) * block.size

    def release_due(self, now: float) -> int:
        """Release every lightpath with expiry strictly before ``now``."""
        released = 0
        heap = self._heap
        while heap and heap[0][0] < now:
            _expiry, req_id = heapq.heappop(heap)
            request, fiber_ids, block = self.records.pop(req_id)
            self._state.release(fiber_ids, block)
            self.occupied_slot_links -= len(fiber_ids) * block.size
            released += 1
        return released

    def active_requests(self) -> list[ServiceRequest]:
        return [rec[0] for rec in self.records.values()]

    def replace_placements(
        self, state: SpectrumState, placements: dict[int, tuple[tuple[int, ...], SlotBlock]]
    ) -> None:
        """Adopt a rebuilt network state with new placements for the same set.

        Expiry bookkeeping is untouched: the heap references request
        ids, and the rebuilt placements cover exactly the active ids.
        """
        if set(placements) != set(self.records):
            raise ValueError("rebuilt placements do not cover the active set")
        self._state.occ = state.occ
        total = 0
        for req_id, (fiber_ids, block) in placements.items():
            request = self.records[req_id][0]
            self.records[req_id] = (request, fiber_ids, block)
            total += len(fiber_ids) * block.size
        self.occupied_slot_links = total

    @property
    def state(self) -> SpectrumState:
        return self._state


def run_stream(
    config: SimConfig,
    stream: Sequence[ServiceRequest],
    *,
    on_event: Callable[[SpectrumState, ActiveLightpaths], None] | None = None,
) -> TrialResult:
    """Run the event loop over an explicit request stream.

    ``on_event`` is called after each arrival is resolved; tests use it
    to assert conservation invariants at every event.
    """
    measured = len(stream) - config.warmup_requests
    if measured < 1:
        raise SimConfigError("stream shorter than the warm-up period")
    state = SpectrumState.for_topology(config.topology)
    active = ActiveLightpaths(state)
    paths_of = config.topology.candidate_paths
    k, ordering, kind = config.k, config.ordering, config.heuristic
    warmup = config.warmup_requests

    blocked = 0
    peak_active = 0
    for i, request in enumerate(stream):
        active.release_due(request.arrival_time)
        candidates = paths_of(request.src, request.dst, k, ordering)
        decision = decide(
            kind,
            request,
            candidates,
            state,
            config.modulation,
            slot_width_ghz=config.slot_width_ghz,
            overhead=config.overhead,
            guard_slots=config.guard_slots,
        )
        if decision is None:
            if i >= warmup:
                blocked += 1
        else:
            active.add(request, decision)
            if len(active) > peak_active:
                peak_active = len(active)
        if on_event is not None:
            on_event(state, active)

    return TrialResult(
        seed=-1,
        blocked_count=blocked,
        total_measured=measured,
        sbp=blocked / measured,
        peak_active=peak_active,
    )


def run_trial(config: SimConfig, seed: int) -> TrialResult:
    """One seeded trial: generate the stream, run it, report SBP."""
    stream = generate_stream(
        config.traffic, config.total_requests, config.topology.nodes, seed
    )
    result = run_stream(config, stream)
    return replace(result, seed=seed)


@dataclass(frozen=True)
class LoadPoint:
    load_erlangs: float
    mean_sbp: float
    std_sbp: float
    results: tuple[TrialResult, ...]

    @property
    def trials(self) -> int:
        return len(self.results)

    @property
    def blocked_total(self) -> int:
        return sum(r.blocked_count for r in self.results)


@dataclass(frozen=True)
class LoadSweepResult:
    points: tuple[LoadPoint, ...]

    def point(self, load: float) -> LoadPoint:
        for p in self.points:
            if p.load_erlangs == load:
                return p
        raise KeyError(f"no point at load {load}")


def summarize_trials(load: float, results: Sequence[TrialResult]) -> LoadPoint:
    sbps = [r.sbp for r in results]
    mean = float(np.mean(sbps))
    std = float(np.std(sbps, ddof=1)) if len(sbps) >= 2 else math.nan
    return LoadPoint(load, mean, std, tuple(results))


_WORKER_CONFIG: SimConfig | None = None
_WORKER_RUNNER: Callable[[SimConfig, int], TrialResult] | None = None


def _init_worker(config: SimConfig, runner) -> None:
    global _WORKER_CONFIG, _WORKER_RUNNER
    _WORKER_CONFIG = config
    _WORKER_RUNNER = runner


def _sweep_task(args: tuple[float, int]) -> tuple[float, int, TrialResult]:
    load, seed = args
    cfg = _WORKER_CONFIG.with_load(load)
    return load, seed, _WORKER_RUNNER(cfg, seed)


def sweep(
    config: SimConfig,
    loads: Sequence[float],
    trials: int | None = None,
    *,
    jobs: int = 1,
    min_blocking_events: int = 100,
    trial_runner: Callable[[SimConfig, int], TrialResult] = run_trial,
) -> LoadSweepResult:
    """Paired-seed trials across traffic loads.

    Every load runs the same seed set (base_seed + trial index), so
    curves at different loads or k values are directly comparable.
    Loads must be strictly increasing.  A warning is emitted for any
    load whose pooled blocking-event count is too small for a stable
    SBP estimate.

    With ``jobs > 1`` trials run in worker processes; ``trial_runner``
    must then be a module-level function (picklable by reference).
    """
    if not loads:
        raise SimConfigError("need at least one load")
    if any(b <= a for a, b in zip(loads, loads[1:])):
        raise SimConfigError(f"loads must be strictly increasing, got {list(loads)}")
    n_trials = trials if trials is not None else config.trials
    seeds = [config.base_seed + t for t in range(n_trials)]

    by_load: dict[float, list[TrialResult]] = {load: [] for load in loads}
    if jobs > 1:
        config.topology.warm_path_cache(config.k, config.ordering)
        tasks = [(load, seed) for load in loads for seed in seeds]
        with ProcessPoolExecutor(
            max_workers=jobs, initializer=_init_worker, initargs=(config, trial_runner)
        ) as pool:
            for load, seed, result in pool.map(_sweep_task, tasks, chunksize=1):
                by_load[load].append(result)
    else:
        for load in loads:
            cfg = config.with_load(load)
            for seed in seeds:
                by_load[load].append(trial_runner(cfg, seed))

    points = []
    for load in loads:
        point = summarize_trials(load, by_load[load])
        if point.blocked_total < min_blocking_events:
            warnings.warn(
                f"load {load}: only {point.blocked_total} blocking events across "
                f"{point.trials} trials; SBP estimate is noisy",
                stacklevel=2,
            )
        points.append(point)
    return LoadSweepResult(tuple(points))


def write_trials_csv(result: LoadSweepResult, path) -> None:
    """One row per (load, trial): load_erlangs, trial, seed, blocked, total, sbp."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["load_erlangs", "trial", "seed", "blocked", "total", "sbp"])
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
                    ]
                )


def write_summary_csv(result: LoadSweepResult, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["load_erlangs", "trials", "mean_sbp", "std_sbp", "blocked_total"])
        for p in result.points:
            writer.writerow(
                [
                    f"{p.load_erlangs:.12g}",
                    p.trials,
                    f"{p.mean_sbp:.12g}",
                    f"{p.std_sbp:.12g}",
                    p.blocked_total,
                ]
            )


# --- warm-up estimation -------------------------------------------------

#: Simulated horizon per trial, as a multiple of the target load.  The
#: transient spans roughly 5x the load in requests; 16x leaves the
#: truncation-point search a long stationary tail to compare against,
#: and calibrates the whisker-max fit to about 7 requests per Erlang.
WARMUP_HORIZON_FACTOR = 16.0


def nonblocking_active_series(
    load_erlangs: float,
    n_requests: int,
    rng: np.random.Generator,
    holding_time_mean: float = 10.0,
) -> np.ndarray:
    """Active-connection count after each arrival when nothing blocks."""
    lam = load_erlangs / holding_time_mean
    arrivals = np.cumsum(rng.exponential(1.0 / lam, n_requests))
    expiries = arrivals + rng.exponential(holding_time_mean, n_requests)
    departed = np.searchsorted(np.sort(expiries), arrivals, side="left")
    return np.arange(1, n_requests + 1) - departed


def mser5_truncation(series: Sequence[float], batch: int = 5) -> int:
    """MSER truncation point, in observations, on batch-of-``batch`` means.

    Minimizes sse(d) / (m - d)^2 over truncation points d in the first
    half of the batch series (the standard guard against the statistic
    degenerating in the tail); ties resolve to the smallest d.
    """
    x = np.asarray(series, dtype=float)
    m = len(x) // batch
    if m < 2:
        return 0
    z = x[: m * batch].reshape(m, batch).mean(axis=1)
    s1 = np.cumsum(z[::-1])[::-1]  # s1[d] = sum z[d:]
    s2 = np.cumsum((z * z)[::-1])[::-1]
    n_d = m - np.arange(m)
    sse = np.maximum(s2 - s1 * s1 / n_d, 0.0)
    g = sse / (n_d * n_d)
    limit = m // 2 + 1
    return batch * int(np.argmin(g[:limit]))


@dataclass(frozen=True)
class WarmupEstimate:
    load_erlangs: float
    truncation_points: tuple[int, ...]
    q1: float
    median: float
    q3: float
    whisker_max: float


def estimate_warmup(
    load_erlangs: float,
    trials: int,
    *,
    holding_time_mean: float = 10.0,
    seed: int = 0,
    horizon_factor: float = WARMUP_HORIZON_FACTOR,
) -> WarmupEstimate:
    """Distribution of MSER-5 truncation points for one target load.

    Simulates ``trials`` non-blocking trials and reports quartiles plus
    the upper whisker (largest point within 1.5 IQR above the third
    quartile), the statistic the warm-up rule-of-thumb fit uses.
    """
    if load_erlangs <= 0:
        raise SimConfigError(f"load must be > 0, got {load_erlangs}")
    n = max(1000, int(math.ceil(horizon_factor * load_erlangs)))
    n += (-n) % 5
    children = np.random.SeedSequence([seed, int(load_erlangs * 1000)]).spawn(trials)
    points = []
    for child in children:
        series = nonblocking_active_series(
            load_erlangs, n, np.random.default_rng(child), holding_time_mean
        )
        points.append(mser5_truncation(series))
    arr = np.asarray(points, dtype=float)
    q1, median, q3 = (float(q) for q in np.percentile(arr, [25, 50, 75]))
    fence = q3 + 1.5 * (q3 - q1)
    whisker_max = float(arr[arr <= fence].max()) if (arr <= fence).any() else q3
    return WarmupEstimate(
        load_erlangs=load_erlangs,
        truncation_points=tuple(int(p) for p in points),
        q1=q1,
        median=median,
        q3=q3,
        whisker_max=whisker_max,
    )


def warmup_slope(estimates: Iterable[WarmupEstimate]) -> tuple[float, float]:
    """Least-squares slope and intercept of whisker max against load."""
    pts = sorted(estimates, key=lambda e: e.load_erlangs)
    loads = np.array([e.load_erlangs for e in pts])
    tops = np.array([e.whisker_max for e in pts])
    slope, intercept = np.polyfit(loads, tops, 1)
    return float(slope), float(intercept)
