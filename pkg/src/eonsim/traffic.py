"""Seeded stochastic request streams.

Arrivals are Poisson (exponential inter-arrival times at rate lambda),
holding times exponential with mean tau, endpoints uniform over ordered
node pairs, and demands either uniform integer data rates or a fixed
slot-count set.  Offered load in Erlangs is lambda * tau.

Some traffic models resample any holding time exceeding twice the mean
("holding-time truncation").  Resampling, not clamping: clamping would
pile probability mass at exactly 2*tau.  Truncation shrinks the mean
holding time to (1 - 3e^-2) / (1 - e^-2) of tau, about 0.687, so runs
with truncation enabled experience ~31% less load than nominal.

Each trial owns one RNG seed, split into four independent substreams
(arrivals, holding times, demands, endpoints) so changing one
distribution never perturbs draws from the others.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

TRUNCATED_MEAN_RATIO = (1.0 - 3.0 * math.exp(-2.0)) / (1.0 - math.exp(-2.0))


class TrafficConfigError(ValueError):
    """Inconsistent or incomplete traffic model parameters."""


@dataclass(frozen=True)
class TrafficConfig:
    """Traffic model parameters; offered load is the lambda*tau product."""

    arrival_rate: float
    holding_time_mean: float = 10.0
    rate_gbps_range: tuple[int, int] | None = (25, 100)
    fixed_slot_choices: tuple[int, ...] | None = None
    truncate_holding: bool = False
    ordered_pairs: bool = True
    seed: int | None = None

    def __post_init__(self):
        if self.arrival_rate <= 0:
            raise TrafficConfigError(f"arrival_rate must be > 0, got {self.arrival_rate}")
        if self.holding_time_mean <= 0:
            raise TrafficConfigError(
                f"holding_time_mean must be > 0, got {self.holding_time_mean}"
            )
        if (self.rate_gbps_range is None) == (self.fixed_slot_choices is None):
            raise TrafficConfigError(
                "exactly one of rate_gbps_range / fixed_slot_choices must be set"
            )
        if self.rate_gbps_range is not None:
            lo, hi = self.rate_gbps_range
            if lo < 1 or hi < lo:
                raise TrafficConfigError(f"bad rate range {self.rate_gbps_range}")
        if self.fixed_slot_choices is not None:
            if not self.fixed_slot_choices or min(self.fixed_slot_choices) < 1:
                raise TrafficConfigError(f"bad slot choices {self.fixed_slot_choices}")

    @property
    def load_erlangs(self) -> float:
        return self.arrival_rate * self.holding_time_mean

    @classmethod
    def from_load(cls, load_erlangs: float, holding_time_mean: float = 10.0, **kwargs):
        """Build a config from offered load, deriving the arrival rate."""
        if load_erlangs <= 0:
            raise TrafficConfigError(f"load must be > 0, got {load_erlangs}")
        cfg = cls(
            arrival_rate=load_erlangs / holding_time_mean,
            holding_time_mean=holding_time_mean,
            **kwargs,
        )
        assert abs(cfg.load_erlangs - load_erlangs) < 1e-9
        return cfg

    def with_load(self, load_erlangs: float) -> "TrafficConfig":
        return replace(self, arrival_rate=load_erlangs / self.holding_time_mean)


@dataclass(frozen=True, slots=True)
class ServiceRequest:
    """One connection request; exactly one of rate_gbps / slots is set."""

    id: int
    src: str
    dst: str
    arrival_time: float
    holding_time: float
    rate_gbps: float | None = None
    slots: int | None = None

    @property
    def expiry_time(self) -> float:
        return self.arrival_time + self.holding_time


def _substreams(seed: int) -> tuple[np.random.Generator, ...]:
    # fixed spawn order: arrivals, holdings, demands, endpoints
    children = np.random.SeedSequence(seed).spawn(4)
    return tuple(np.random.default_rng(c) for c in children)


def sample_holding_time(mean: float, truncate: bool, rng: np.random.Generator) -> float:
    """One exponential holding time, resampled above 2*mean if truncating."""
    if mean <= 0:
        raise ValueError(f"mean must be > 0, got {mean}")
    value = rng.exponential(mean)
    if truncate:
        while value > 2.0 * mean:
            value = rng.exponential(mean)
    return float(value)


def sample_holding_times(
    mean: float, truncate: bool, rng: np.random.Generator, n: int
) -> np.ndarray:
    """Vectorized equivalent of :func:`sample_holding_time`."""
    if mean <= 0:
        raise ValueError(f"mean must be > 0, got {mean}")
    values = rng.exponential(mean, n)
    if truncate:
        bad = values > 2.0 * mean
        while bad.any():
            values[bad] = rng.exponential(mean, int(bad.sum()))
            bad = values > 2.0 * mean
    return values


def generate_stream(
    config: TrafficConfig,
    n_requests: int,
    nodes: Sequence[str],
    seed: int | None = None,
) -> list[ServiceRequest]:
    """Generate ``n_requests`` requests, fully determined by the seed."""
    if n_requests < 1:
        raise TrafficConfigError(f"n_requests must be >= 1, got {n_requests}")
    if len(nodes) < 2:
        raise TrafficConfigError("need at least 2 nodes to draw src/dst pairs")
    if seed is None:
        seed = config.seed
    if seed is None:
        raise TrafficConfigError("no seed given (config.seed unset and seed=None)")

    arr_rng, hold_rng, demand_rng, pair_rng = _substreams(seed)
    arrivals = np.cumsum(arr_rng.exponential(1.0 / config.arrival_rate, n_requests))
    holdings = sample_holding_times(
        config.holding_time_mean, config.truncate_holding, hold_rng, n_requests
    )

    if config.rate_gbps_range is not None:
        lo, hi = config.rate_gbps_range
        rates = demand_rng.integers(lo, hi + 1, n_requests)
        slot_counts = None
    else:
        choices = np.asarray(config.fixed_slot_choices)
        slot_counts = choices[demand_rng.integers(0, len(choices), n_requests)]
        rates = None

    n = len(nodes)
    src_idx = pair_rng.integers(0, n, n_requests)
    other = pair_rng.integers(0, n - 1, n_requests)
    dst_idx = other + (other >= src_idx)
    if not config.ordered_pairs:
        # unordered uniform: canonical orientation from lower to higher index
        src_idx, dst_idx = (
            np.minimum(src_idx, dst_idx),
            np.maximum(src_idx, dst_idx),
        )

    out = []
    for i in range(n_requests):
        out.append(
            ServiceRequest(
                id=i,
                src=nodes[src_idx[i]],
                dst=nodes[dst_idx[i]],
                arrival_time=float(arrivals[i]),
                holding_time=float(holdings[i]),
                rate_gbps=float(rates[i]) if rates is not None else None,
                slots=int(slot_counts[i]) if slot_counts is not None else None,
            )
        )
    return out


def dump_stream(requests: Sequence[ServiceRequest], path) -> None:
    """Write a row-per-request CSV table for stream audits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["id", "src", "dst", "arrival_time", "holding_time", "rate_gbps", "slots"]
        )
        for r in requests:
            writer.writerow(
                [
                    r.id,
                    r.src,
                    r.dst,
                    f"{r.arrival_time:.12g}",
                    f"{r.holding_time:.12g}",
                    "" if r.rate_gbps is None else f"{r.rate_gbps:.12g}",
                    "" if r.slots is None else r.slots,
                ]
            )
