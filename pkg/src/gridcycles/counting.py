"""Exact Hamiltonian-cycle counting oracles.

Two independent counters: a brute-force sweep over every bulk
configuration (vectorized over packed 64-bit words, capped at 24 bulk
bits) and a frontier transfer matrix over connectivity states (capped at
frontier width 12).  They share no code beyond the lattice geometry, so
their agreement is a meaningful cross-check.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from gridcycles.errors import ResourceLimitError
from gridcycles.lattice import (
    DualConfig,
    LatticeShape,
    classify,
    config_from_index,
)

BRUTE_FORCE_BIT_CAP = 24
TRANSFER_WIDTH_CAP = 12


@dataclass(frozen=True)
class CountResult:
    shape: LatticeShape
    count: int
    method: str


# ---------------------------------------------------------------------------
# Brute force: vectorized two-factor filter, then per-survivor loop count
# ---------------------------------------------------------------------------

def _bit_plane(p: int, nwords: int) -> np.ndarray:
    """Packed indicator of bit p over config indices 0..64*nwords-1.

    Word w holds configs 64*w..64*w+63, config x at bit x%64 (requires a
    little-endian host, which the survivor unpacking below asserts).
    """
    if p < 6:
        word = np.uint64(0)
        for b in range(64):
            if (b >> p) & 1:
                word |= np.uint64(1) << np.uint64(b)
        return np.full(nwords, word, dtype=np.uint64)
    half = 1 << (p - 6)            # words per half-period of bit p
    pattern = np.concatenate([
        np.zeros(half, dtype=np.uint64),
        np.full(half, ~np.uint64(0), dtype=np.uint64),
    ])
    if nwords <= pattern.size:
        return pattern[:nwords]
    return np.tile(pattern, nwords // pattern.size)


def _check_brute_cap(shape: LatticeShape) -> None:
    if shape.num_bulk > BRUTE_FORCE_BIT_CAP:
        raise ResourceLimitError(
            f"{shape} has {shape.num_bulk} bulk bits; brute force is capped "
            f"at {BRUTE_FORCE_BIT_CAP}"
        )


@lru_cache(maxsize=8)
def enumerate_two_factors(shape: LatticeShape) -> tuple[int, ...]:
    """Bulk indices of every configuration with zero vertex violations."""
    _check_brute_cap(shape)
    nb = shape.num_bulk
    nwords = max(1, (1 << nb) // 64)
    bc = shape.bulk_cols

    planes: dict[int, np.ndarray] = {}
    zero = np.zeros(nwords, dtype=np.uint64)

    def plane(r: int, c: int) -> np.ndarray:
        # Frame plaquettes are identically 0.
        if r == 0 or r == shape.m or c == 0 or c == shape.n:
            return zero
        p = (r - 1) * bc + (c - 1)
        if p not in planes:
            planes[p] = _bit_plane(p, nwords)
        return planes[p]

    viol = np.zeros(nwords, dtype=np.uint64)
    for i in range(shape.m):
        for j in range(shape.n):
            a = plane(i, j)
            b = plane(i, j + 1)
            c = plane(i + 1, j)
            d = plane(i + 1, j + 1)
            na, nbb, nc, nd = ~a, ~b, ~c, ~d
            viol |= na & nbb & nc & nd       # all four unset
            viol |= a & b & c & d            # all four set
            viol |= na & b & c & nd          # checkerboard
            viol |= a & nbb & nc & d         # checkerboard, other color
    good = np.unpackbits((~viol).view(np.uint8), bitorder="little")
    return tuple(int(x) for x in np.flatnonzero(good[: 1 << nb]))


@lru_cache(maxsize=8)
def enumerate_cycles(shape: LatticeShape) -> tuple[int, ...]:
    """Bulk indices of every Hamiltonian-cycle configuration."""
    result = []
    for idx in enumerate_two_factors(shape):
        if classify(config_from_index(shape, idx)).num_loops == 1:
            result.append(idx)
    return tuple(result)


def brute_force_count(shape: LatticeShape) -> CountResult:
    """Count Hamiltonian cycles by exhaustive classification."""
    return CountResult(shape, len(enumerate_cycles(shape)), "brute")


# ---------------------------------------------------------------------------
# Transfer matrix: frontier sweep over bracket-matching connectivity states
# ---------------------------------------------------------------------------
#
# Vertices are processed in row-major order over a grid of R rows and
# W = min(m, n) columns.  The profile crosses W+1 edges: the down edges of
# the columns already processed in the current row, the edge entering the
# current cell from the left, and the top edges of the columns still
# pending.  Slot values: 0 = no path end, 1 = '(' , 2 = ')' of a balanced
# non-crossing matching of path ends (planarity forbids crossings).
# Processing cell (r, c) consumes slots c (left) and c+1 (top) and refills
# them with the cell's down and right edges, so slots stay aligned.

_EMPTY, _OPEN, _CLOSE = 0, 1, 2


def _close_partner_right(prof: list[int], start: int) -> None:
    depth = 0
    for q in range(start, len(prof)):
        if prof[q] == _OPEN:
            depth += 1
        elif prof[q] == _CLOSE:
            if depth == 0:
                prof[q] = _OPEN
                return
            depth -= 1
    raise AssertionError("unbalanced profile")


def _close_partner_left(prof: list[int], start: int) -> None:
    depth = 0
    for q in range(start, -1, -1):
        if prof[q] == _CLOSE:
            depth += 1
        elif prof[q] == _OPEN:
            if depth == 0:
                prof[q] = _CLOSE
                return
            depth -= 1
    raise AssertionError("unbalanced profile")


def transfer_matrix_count(shape: LatticeShape) -> CountResult:
    """Count Hamiltonian cycles with a frontier dynamic program.

    Sweeps along the longer lattice dimension so the frontier is the
    shorter one; every vertex must be entered and left exactly once, and
    the single loop-closure is accepted only at the final vertex with an
    otherwise empty frontier.  Counts are exact Python integers.
    """
    w, r_rows = min(shape.m, shape.n), max(shape.m, shape.n)
    if w > TRANSFER_WIDTH_CAP:
        raise ResourceLimitError(
            f"frontier width {w} exceeds the cap {TRANSFER_WIDTH_CAP}"
        )

    states: dict[tuple[int, ...], int] = {tuple([_EMPTY] * (w + 1)): 1}
    total = 0
    for r in range(r_rows):
        for c in range(w):
            can_down = r < r_rows - 1
            can_right = c < w - 1
            last_cell = not can_down and not can_right
            new: dict[tuple[int, ...], int] = defaultdict(int)
            for prof, cnt in states.items():
                left, top = prof[c], prof[c + 1]
                if left == _EMPTY and top == _EMPTY:
                    if can_down and can_right:
                        nb = list(prof)
                        nb[c], nb[c + 1] = _OPEN, _CLOSE
                        new[tuple(nb)] += cnt
                elif left == _EMPTY or top == _EMPTY:
                    plug = left or top
                    if can_down:
                        nb = list(prof)
                        nb[c], nb[c + 1] = plug, _EMPTY
                        new[tuple(nb)] += cnt
                    if can_right:
                        nb = list(prof)
                        nb[c], nb[c + 1] = _EMPTY, plug
                        new[tuple(nb)] += cnt
                else:
                    nb = list(prof)
                    nb[c], nb[c + 1] = _EMPTY, _EMPTY
                    if left == _OPEN and top == _CLOSE:
                        # Necessarily partners: closing a loop.
                        if last_cell and not any(nb):
                            total += cnt
                    elif left == _OPEN and top == _OPEN:
                        _close_partner_right(nb, c + 2)
                        new[tuple(nb)] += cnt
                    elif left == _CLOSE and top == _CLOSE:
                        _close_partner_left(nb, c - 1)
                        new[tuple(nb)] += cnt
                    else:
                        # ')(' joins two distinct pairs; partners persist.
                        new[tuple(nb)] += cnt
            states = new
        shifted: dict[tuple[int, ...], int] = defaultdict(int)
        for prof, cnt in states.items():
            if prof[w] == _EMPTY:
                shifted[(_EMPTY,) + prof[:w]] += cnt
        states = shifted
    return CountResult(shape, total, "transfer")


def count_cycles(shape: LatticeShape, method: str = "auto") -> CountResult:
    """Dispatch to a counter; 'auto' prefers the cheaper applicable one."""
    if method == "brute":
        return brute_force_count(shape)
    if method == "transfer":
        return transfer_matrix_count(shape)
    if method == "auto":
        if min(shape.m, shape.n) <= TRANSFER_WIDTH_CAP:
            return transfer_matrix_count(shape)
        return brute_force_count(shape)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# Boltzmann sums over the enumerated cycle set
# ---------------------------------------------------------------------------

def boltzmann_brute_force(
    shape: LatticeShape,
    energy: Callable[[DualConfig], float],
    beta: float,
) -> tuple[float, dict[int, float]]:
    """Z(beta) = sum over Hamiltonian cycles of exp(-beta * E).

    Returns the partition value and the per-cycle weights keyed by bulk
    index.  The energy callable sees the full configuration, so any
    diagonal model works.
    """
    weights: dict[int, float] = {}
    for idx in enumerate_cycles(shape):
        config = config_from_index(shape, idx)
        weights[idx] = math.exp(-beta * energy(config))
    return sum(weights.values()), weights
