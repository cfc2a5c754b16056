"""The six benchmark allocation policies over a candidate-path list.

Every policy consumes the same pre-computed, pre-ordered candidate
list and returns either a (path, slot block) decision or None when no
candidate can host the request.  Policies differ in how they compose
path order with spectrum search:

* ksp-ff / ksp-bf: first candidate (by rank) with any fit; place
  first-fit / best-fit on that path.
* ff-ksp: spectrum-first; over all candidates, the feasible block with
  the lowest start index wins (ties to earlier rank).
* bf-ksp: over all candidates, the best-fit block sitting in the
  smallest free run wins (ties: lower start, then earlier rank).
* kme-ff: candidate minimizing summed per-link fragmentation entropy
  after a hypothetical first-fit placement (ties to earlier rank).
* kca-ff: candidate minimizing path congestion (ties to earlier rank),
  placed first-fit.

Decisions are pure functions of the borrowed state: no mutation, and
identical inputs always produce identical outputs.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence

from .service import (
    DEFAULT_SLOT_WIDTH_GHZ,
    ModulationTable,
    SlotDemand,
    demand_for_path,
    entropy_after_placement,
)
from .spectrum import (
    SlotBlock,
    SpectrumState,
    best_fit_run,
    first_fit,
    path_congestion,
)
from .topology import CandidatePath


class HeuristicKind(enum.Enum):
    KSP_FF = "ksp-ff"
    FF_KSP = "ff-ksp"
    KSP_BF = "ksp-bf"
    BF_KSP = "bf-ksp"
    KME_FF = "kme-ff"
    KCA_FF = "kca-ff"

    @classmethod
    def from_name(cls, name: str) -> "HeuristicKind":
        try:
            return cls(name)
        except ValueError:
            raise ValueError(
                f"unknown heuristic {name!r}; expected one of "
                f"{[k.value for k in cls]}"
            ) from None


@dataclass(frozen=True)
class Decision:
    path: CandidatePath
    block: SlotBlock
    demand: SlotDemand


def decide(
    kind: HeuristicKind,
    request,
    candidates: Sequence[CandidatePath],
    state: SpectrumState,
    table: ModulationTable | None = None,
    *,
    slot_width_ghz: float = DEFAULT_SLOT_WIDTH_GHZ,
    overhead: float = 1.0,
    guard_slots: int = 0,
    congestion_metric: Callable[[SpectrumState, Sequence[int]], float] = path_congestion,
) -> Decision | None:
    """Apply one policy to a request; None means blocked."""
    if not candidates:
        return None

    def demand_of(path):
        return demand_for_path(request, path, table, slot_width_ghz, overhead, guard_slots)

    if kind is HeuristicKind.KSP_FF:
        for path in candidates:
            demand = demand_of(path)
            if demand is None:
                continue
            block = first_fit(state.path_free(path.fiber_ids), demand.slots)
            if block is not None:
                return Decision(path, block, demand)
        return None

    if kind is HeuristicKind.KSP_BF:
        for path in candidates:
            demand = demand_of(path)
            if demand is None:
                continue
            fit = best_fit_run(state.path_free(path.fiber_ids), state.n_slots, demand.slots)
            if fit is not None:
                return Decision(path, fit[0], demand)
        return None

    if kind is HeuristicKind.FF_KSP:
        best: tuple[int, Decision] | None = None
        for path in candidates:  # rank order, so first strict improvement wins ties
            demand = demand_of(path)
            if demand is None:
                continue
            block = first_fit(state.path_free(path.fiber_ids), demand.slots)
            if block is None:
                continue
            if best is None or block.start < best[0]:
                best = (block.start, Decision(path, block, demand))
                if block.start == 0:
                    break
        return best[1] if best else None

    if kind is HeuristicKind.BF_KSP:
        best_key: tuple[int, int] | None = None
        best_dec: Decision | None = None
        for path in candidates:
            demand = demand_of(path)
            if demand is None:
                continue
            fit = best_fit_run(state.path_free(path.fiber_ids), state.n_slots, demand.slots)
            if fit is None:
                continue
            block, run_len = fit
            key = (run_len, block.start)
            if best_key is None or key < best_key:
                best_key = key
                best_dec = Decision(path, block, demand)
        return best_dec

    if kind is HeuristicKind.KME_FF:
        best_score: float | None = None
        best_dec = None
        for path in candidates:
            demand = demand_of(path)
            if demand is None:
                continue
            block = first_fit(state.path_free(path.fiber_ids), demand.slots)
            if block is None:
                continue
            score = entropy_after_placement(state, path.fiber_ids, block)
            if best_score is None or score < best_score:
                best_score = score
                best_dec = Decision(path, block, demand)
        return best_dec

    if kind is HeuristicKind.KCA_FF:
        best_cong: float | None = None
        best_dec = None
        for path in candidates:
            demand = demand_of(path)
            if demand is None:
                continue
            block = first_fit(state.path_free(path.fiber_ids), demand.slots)
            if block is None:
                continue
            cong = congestion_metric(state, path.fiber_ids)
            if best_cong is None or cong < best_cong:
                best_cong = cong
                best_dec = Decision(path, block, demand)
        return best_dec

    raise ValueError(f"unhandled heuristic kind {kind}")
