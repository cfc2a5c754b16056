"""Distance-adaptive modulation and slot-demand computation.

A request's slot demand depends on the candidate path: the longest
usable modulation reach determines bits per symbol, which with the
slot width fixes the per-slot capacity.  Fixed-width request models
bypass the modulation table entirely and demand a literal slot count.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .spectrum import (
    SlotBlock,
    SpectrumState,
    best_fit,
    first_fit,
    fragmentation_entropy,
    path_congestion,
)
from .topology import CandidatePath

DEFAULT_SLOT_WIDTH_GHZ = 12.5


@dataclass(frozen=True)
class ModulationFormat:
    name: str
    bits_per_symbol: int
    max_reach_km: float


class ModulationTable:
    """Ordered modulation formats with distance-dependent selection."""

    def __init__(self, formats: Sequence[ModulationFormat]):
        rows = sorted(formats, key=lambda f: f.bits_per_symbol, reverse=True)
        for hi, lo in zip(rows, rows[1:]):
            if hi.bits_per_symbol == lo.bits_per_symbol:
                raise ValueError(f"duplicate bits_per_symbol {hi.bits_per_symbol}")
            if hi.max_reach_km >= lo.max_reach_km:
                raise ValueError(
                    "reach must strictly decrease as bits per symbol increase"
                )
        if any(f.max_reach_km <= 0 for f in rows):
            raise ValueError("reaches must be positive")
        self.formats: tuple[ModulationFormat, ...] = tuple(rows)

    def select(self, length_km: float) -> ModulationFormat | None:
        """Highest-order format whose reach covers ``length_km`` (inclusive).

        None when the path exceeds every reach, i.e. the path is
        infeasible at any modulation.
        """
        if length_km <= 0:
            raise ValueError(f"length_km must be positive, got {length_km}")
        for fmt in self.formats:  # descending bits per symbol
            if fmt.max_reach_km >= length_km:
                return fmt
        return None

    @property
    def lowest_order(self) -> ModulationFormat:
        return self.formats[-1]

    @classmethod
    def default(cls) -> "ModulationTable":
        return cls(
            [
                ModulationFormat("BPSK", 1, 10_000.0),
                ModulationFormat("QPSK", 2, 2_500.0),
                ModulationFormat("8QAM", 3, 1_250.0),
                ModulationFormat("16QAM", 4, 625.0),
            ]
        )

    @classmethod
    def from_json(cls, source: str | Path) -> "ModulationTable":
        doc = json.loads(Path(source).read_text())
        return cls(
            [
                ModulationFormat(r["name"], int(r["bits_per_symbol"]), float(r["max_reach_km"]))
                for r in doc["formats"]
            ]
        )


def slots_required(
    rate_gbps: float,
    bits_per_symbol: int,
    slot_width_ghz: float = DEFAULT_SLOT_WIDTH_GHZ,
    overhead: float = 1.0,
) -> int:
    """Slot count for a data rate under the Nyquist convention.

    One slot of width w GHz at m bits per symbol carries w*m Gbps, so
    the demand is ceil(rate * overhead / (w * m)).  ``overhead`` > 1
    models framing or FEC surcharges; the default carries payload only.
    """
    if rate_gbps <= 0 or slot_width_ghz <= 0 or overhead <= 0 or bits_per_symbol < 1:
        raise ValueError("rate, slot width, overhead and bits per symbol must be positive")
    quotient = rate_gbps * overhead / (slot_width_ghz * bits_per_symbol)
    nearest = round(quotient)
    if nearest >= 1 and abs(quotient - nearest) < 1e-9:
        return nearest
    return max(1, math.ceil(quotient))


@dataclass(frozen=True)
class SlotDemand:
    """Resolved demand: contiguous slots to allocate, and how they arose.

    ``modulation`` is None in fixed-width mode, where the request
    already states its slot count and no reach check applies.
    """

    slots: int
    modulation: ModulationFormat | None

    def __post_init__(self):
        if self.slots < 1:
            raise ValueError(f"demand must be >= 1 slot, got {self.slots}")


def demand_for_path(
    request,
    path: CandidatePath,
    table: ModulationTable | None,
    slot_width_ghz: float = DEFAULT_SLOT_WIDTH_GHZ,
    overhead: float = 1.0,
    guard_slots: int = 0,
) -> SlotDemand | None:
    """Demand of ``request`` on ``path``, or None when infeasible.

    Fixed-width requests (``request.slots`` set) skip the table.  For
    rate requests the path length selects the modulation; paths beyond
    the longest reach are infeasible.  ``guard_slots`` extra slots are
    added to the allocated block.
    """
    if request.slots is not None:
        return SlotDemand(request.slots + guard_slots, None)
    if table is None:
        raise ValueError("rate-based request requires a modulation table")
    fmt = table.select(path.length_km)
    if fmt is None:
        return None
    n = slots_required(request.rate_gbps, fmt.bits_per_symbol, slot_width_ghz, overhead)
    return SlotDemand(n + guard_slots, fmt)


@dataclass(frozen=True)
class CandidateEvaluation:
    """All per-path quantities the allocation policies score on."""

    path: CandidatePath
    demand: SlotDemand | None
    first_fit: SlotBlock | None
    best_fit: SlotBlock | None
    entropy_after_first_fit: float | None
    congestion: float

    @property
    def feasible(self) -> bool:
        return self.demand is not None and self.first_fit is not None


def evaluate_candidate(
    path: CandidatePath,
    request,
    state: SpectrumState,
    table: ModulationTable | None,
    slot_width_ghz: float = DEFAULT_SLOT_WIDTH_GHZ,
    overhead: float = 1.0,
    guard_slots: int = 0,
    congestion_metric=path_congestion,
) -> CandidateEvaluation:
    """Pure feasibility record for one candidate path; mutates nothing."""
    congestion = congestion_metric(state, path.fiber_ids)
    demand = demand_for_path(request, path, table, slot_width_ghz, overhead, guard_slots)
    if demand is None:
        return CandidateEvaluation(path, None, None, None, None, congestion)
    free = state.path_free(path.fiber_ids)
    ff = first_fit(free, demand.slots)
    bf = best_fit(free, state.n_slots, demand.slots)
    entropy = None
    if ff is not None:
        entropy = entropy_after_placement(state, path.fiber_ids, ff)
    return CandidateEvaluation(path, demand, ff, bf, entropy, congestion)


def entropy_after_placement(
    state: SpectrumState, fiber_ids: Sequence[int], block: SlotBlock
) -> float:
    """Summed per-link fragmentation entropy after a hypothetical placement."""
    mask = block.mask
    n = state.n_slots
    full = state.full_mask
    total = 0.0
    for f in fiber_ids:
        total += fragmentation_entropy(~(state.occ[f] | mask) & full, n)
    return total
