"""Per-fiber spectrum occupancy and contiguous-block search primitives.

Occupancy is stored packed: one arbitrary-precision integer per fiber,
bit ``i`` set meaning slot ``i`` is occupied.  All operations are
defined purely in terms of the equivalent boolean vectors; the packed
form only buys speed.  ``pack_bits``/``unpack_bits`` convert between
the two views.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence


class SpectrumAssignmentError(ValueError):
    """Allocation over occupied slots, or release of slots not held."""


@dataclass(frozen=True)
class SlotBlock:
    """A contiguous run of slots starting at a 0-based index."""

    start: int
    size: int

    def __post_init__(self):
        if self.start < 0 or self.size < 1:
            raise ValueError(f"invalid slot block ({self.start}, {self.size})")

    @property
    def mask(self) -> int:
        return ((1 << self.size) - 1) << self.start


def pack_bits(bits: Sequence[bool | int]) -> int:
    """Pack a boolean vector into an integer mask (bit i = element i)."""
    mask = 0
    for i, b in enumerate(bits):
        if b:
            mask |= 1 << i
    return mask


def unpack_bits(mask: int, n_slots: int) -> list[bool]:
    return [bool(mask >> i & 1) for i in range(n_slots)]


def path_free_mask(occupancies: Iterable[int], n_slots: int) -> int:
    """Slots free on every fiber of a path (bit set = free on all links)."""
    occ = 0
    for o in occupancies:
        occ |= o
    return ~occ & ((1 << n_slots) - 1)


def path_free_bits(grids: Sequence[Sequence[bool | int]]) -> list[bool]:
    """Boolean-vector variant of :func:`path_free_mask` for grid dumps.

    ``grids`` holds one occupancy vector per link; slot i is free iff
    free on every link.  Mismatched grid lengths are rejected.
    """
    if not grids:
        raise ValueError("path has no links")
    n = len(grids[0])
    if any(len(g) != n for g in grids):
        raise ValueError("mismatched grid lengths along path")
    return unpack_bits(path_free_mask((pack_bits(g) for g in grids), n), n)


def first_fit(free: int, size: int) -> SlotBlock | None:
    """Lowest-index contiguous free run of at least ``size`` slots."""
    if size < 1:
        raise ValueError(f"size must be >= 1, got {size}")
    r = free
    for _ in range(size - 1):
        r &= r >> 1
        if not r:
            return None
    if not r:
        return None
    start = (r & -r).bit_length() - 1
    return SlotBlock(start, size)


def free_runs(free: int, n_slots: int) -> list[tuple[int, int]]:
    """Maximal free runs as (start, length), ascending by start."""
    runs = []
    occ_beyond = ~free  # bits >= n_slots read as occupied
    pos = 0
    while True:
        rest = free >> pos
        if not rest:
            return runs
        start = pos + ((rest & -rest).bit_length() - 1)
        after = occ_beyond >> start
        length = (after & -after).bit_length() - 1
        if start + length > n_slots:
            length = n_slots - start
        runs.append((start, length))
        pos = start + length


def best_fit(free: int, n_slots: int, size: int) -> SlotBlock | None:
    """Start of the smallest maximal free run that fits ``size``.

    Ties between equal-sized runs go to the lowest start index.
    """
    if size < 1:
        raise ValueError(f"size must be >= 1, got {size}")
    best_run = None
    for start, length in free_runs(free, n_slots):
        if length >= size and (best_run is None or length < best_run[1]):
            best_run = (start, length)
            if length == size:
                break
    if best_run is None:
        return None
    return SlotBlock(best_run[0], size)


def best_fit_run(free: int, n_slots: int, size: int) -> tuple[SlotBlock, int] | None:
    """Best-fit block plus the length of its containing run."""
    if size < 1:
        raise ValueError(f"size must be >= 1, got {size}")
    best_run = None
    for start, length in free_runs(free, n_slots):
        if length >= size and (best_run is None or length < best_run[1]):
            best_run = (start, length)
            if length == size:
                break
    if best_run is None:
        return None
    return SlotBlock(best_run[0], size), best_run[1]


def fragmentation_entropy(free: int, n_slots: int) -> float:
    """Shannon entropy of the maximal free-block partition.

    H = -sum_i (D_i/D) ln(D_i/D), D_i the free block sizes and D the
    total grid size (natural log, total-grid normalization).  A fully
    occupied grid scores 0 (empty sum); a fully free grid scores 0
    (single block covering the grid).
    """
    h = 0.0
    for _start, length in free_runs(free, n_slots):
        p = length / n_slots
        h -= p * math.log(p)
    return h


class SpectrumState:
    """Mutable occupancy for every fiber of one simulation trial.

    Owned by a single trial's event loop; trials never share state.
    """

    __slots__ = ("n_fibers", "n_slots", "full_mask", "occ")

    def __init__(self, n_fibers: int, n_slots: int):
        self.n_fibers = n_fibers
        self.n_slots = n_slots
        self.full_mask = (1 << n_slots) - 1
        self.occ = [0] * n_fibers

    @classmethod
    def for_topology(cls, topology) -> "SpectrumState":
        return cls(topology.num_fibers, topology.slots_per_fiber)

    def copy(self) -> "SpectrumState":
        dup = SpectrumState.__new__(SpectrumState)
        dup.n_fibers = self.n_fibers
        dup.n_slots = self.n_slots
        dup.full_mask = self.full_mask
        dup.occ = list(self.occ)
        return dup

    def clear(self) -> None:
        self.occ = [0] * self.n_fibers

    def path_free(self, fiber_ids: Sequence[int]) -> int:
        occ = 0
        for f in fiber_ids:
            occ |= self.occ[f]
        return ~occ & self.full_mask

    def allocate(self, fiber_ids: Sequence[int], block: SlotBlock) -> None:
        """Occupy ``block`` on every fiber of the path (continuity)."""
        mask = block.mask
        if block.start + block.size > self.n_slots:
            raise SpectrumAssignmentError(
                f"block {block} exceeds grid of {self.n_slots} slots"
            )
        occ = self.occ
        for f in fiber_ids:
            if occ[f] & mask:
                raise SpectrumAssignmentError(
                    f"allocate over occupied slots on fiber {f}: {block}"
                )
        for f in fiber_ids:
            occ[f] |= mask

    def release(self, fiber_ids: Sequence[int], block: SlotBlock) -> None:
        mask = block.mask
        occ = self.occ
        for f in fiber_ids:
            if occ[f] & mask != mask:
                raise SpectrumAssignmentError(
                    f"release of slots not occupied on fiber {f}: {block}"
                )
        for f in fiber_ids:
            occ[f] &= ~mask

    def occupied_slot_count(self) -> int:
        return sum(o.bit_count() for o in self.occ)

    def occupied_fraction(self, fiber_id: int) -> float:
        return self.occ[fiber_id].bit_count() / self.n_slots

    def occupancy_bits(self, fiber_id: int) -> list[bool]:
        return unpack_bits(self.occ[fiber_id], self.n_slots)


def path_congestion(state: SpectrumState, fiber_ids: Sequence[int]) -> float:
    """Maximum occupied-slot fraction over the path's fibers.

    This is the default congestion score; heuristics accept any
    callable with the same signature, e.g. :func:`path_congestion_sum`.
    """
    if not fiber_ids:
        raise ValueError("path has no links")
    return max(state.occ[f].bit_count() for f in fiber_ids) / state.n_slots


def path_congestion_sum(state: SpectrumState, fiber_ids: Sequence[int]) -> float:
    """Alternate congestion score: summed occupied fractions."""
    if not fiber_ids:
        raise ValueError("path has no links")
    return sum(state.occ[f].bit_count() for f in fiber_ids) / state.n_slots
