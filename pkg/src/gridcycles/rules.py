"""The local deformation rules and their exhaustive graph analysis.

Twelve rules act on small plaquette blocks: each moves one set plaquette
to an adjacent cell while a ring of fixed plaquettes guarantees the move
preserves the loop structure.  Four base rules are written out and the
rest are quarter-turn rotations of them.  A rule plus a block placement
is an instance; instances applied forward and backward generate a graph
over all configurations whose connected components are the topological
sectors: Hamiltonian cycles form one class, and every other class holds
either topologically equivalent multiloops or constraint violators.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from gridcycles.errors import ResourceLimitError
from gridcycles.lattice import (
    DualConfig,
    LatticeShape,
    classify,
    config_from_index,
)

SECTOR_BIT_CAP = 24

Offset = tuple[int, int]


@dataclass(frozen=True)
class RuleDef:
    """One local rewrite rule.

    match lists (offset, required bit) pairs that must hold and are left
    unchanged; swap = (source, target) moves the set bit from source
    (1 -> 0) to target (0 -> 1).  Offsets are (row, col) within a block
    of footprint (width, height) = (columns, rows); unlisted offsets are
    wildcards.  An inverted def undoes its parent rule.
    """

    k: int
    footprint: tuple[int, int]
    match: tuple[tuple[Offset, int], ...]
    swap: tuple[Offset, Offset]
    inverted: bool = False

    @property
    def width(self) -> int:
        return self.footprint[0]

    @property
    def height(self) -> int:
        return self.footprint[1]

    @property
    def source(self) -> Offset:
        return self.swap[0]

    @property
    def target(self) -> Offset:
        return self.swap[1]

    def inverse(self) -> "RuleDef":
        return RuleDef(self.k, self.footprint, self.match,
                       (self.swap[1], self.swap[0]), not self.inverted)

    def before_bits(self) -> dict[Offset, int]:
        """All constrained offsets with their pre-application values."""
        bits = {off: v for off, v in self.match}
        bits[self.source] = 1
        bits[self.target] = 0
        return bits

    def after_bits(self) -> dict[Offset, int]:
        bits = {off: v for off, v in self.match}
        bits[self.source] = 0
        bits[self.target] = 1
        return bits


def _rotated(rule: RuleDef) -> RuleDef:
    # Quarter turn counterclockwise: (r, c) -> (w-1-c, r); the block's
    # width and height exchange.
    w, h = rule.footprint

    def rot(off: Offset) -> Offset:
        r, c = off
        return (w - 1 - c, r)

    return RuleDef(
        k=rule.k,
        footprint=(h, w),
        match=tuple(sorted((rot(off), v) for off, v in rule.match)),
        swap=(rot(rule.swap[0]), rot(rule.swap[1])),
        inverted=rule.inverted,
    )


def _base(k: int, footprint: tuple[int, int],
          match: list[tuple[Offset, int]],
          source: Offset, target: Offset) -> RuleDef:
    return RuleDef(k, footprint, tuple(sorted(match)), (source, target))


# The four written-out rules.  E1 moves the set plaquette one step left
# inside a corridor of set plaquettes; E3 is its complemented-projector
# twin; E5/E9 act on 4x4 blocks where the moving plaquette also changes
# row.  The swap positions always land in the bulk for any placement
# that keeps the block on the dual grid.
_E1 = _base(
    1, (4, 3),
    [((0, 1), 1), ((0, 2), 1), ((1, 0), 0), ((1, 3), 0), ((2, 1), 1), ((2, 2), 1)],
    source=(1, 2), target=(1, 1),
)
_E3 = _base(
    3, (4, 3),
    [((0, 1), 0), ((0, 2), 0), ((1, 0), 1), ((1, 3), 1), ((2, 1), 0), ((2, 2), 0)],
    source=(1, 2), target=(1, 1),
)
_E5 = _base(
    5, (4, 4),
    [((0, 1), 0), ((1, 0), 1), ((1, 2), 1), ((2, 0), 1), ((2, 1), 0),
     ((2, 3), 0), ((3, 1), 1), ((3, 2), 1)],
    source=(2, 2), target=(1, 1),
)
_E9 = _base(
    9, (4, 4),
    [((0, 1), 1), ((1, 0), 0), ((1, 2), 0), ((2, 0), 0), ((2, 1), 1),
     ((2, 3), 1), ((3, 1), 0), ((3, 2), 0)],
    source=(2, 2), target=(1, 1),
)


def _with_k(rule: RuleDef, k: int) -> RuleDef:
    return RuleDef(k, rule.footprint, rule.match, rule.swap, rule.inverted)


@lru_cache(maxsize=1)
def generate_rule_set() -> tuple[RuleDef, ...]:
    """The twelve rule definitions, in conventional order."""
    r5 = _rotated(_E5)
    r55 = _rotated(r5)
    r9 = _rotated(_E9)
    r99 = _rotated(r9)
    rules = [
        _E1,
        _with_k(_rotated(_E1), 2),
        _E3,
        _with_k(_rotated(_E3), 4),
        _E5,
        _with_k(r5, 6),
        _with_k(r55, 7),
        _with_k(_rotated(r55), 8),
        _E9,
        _with_k(r9, 10),
        _with_k(r99, 11),
        _with_k(_rotated(r99), 12),
    ]
    return tuple(rules)


def rotate_rule(rule: RuleDef) -> RuleDef:
    """Public quarter-turn, for orbit checks."""
    return _rotated(rule)


# ---------------------------------------------------------------------------
# Instances: a rule anchored at a block position on a given dual grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RuleInstance:
    rule: RuleDef
    row: int
    col: int


@dataclass(frozen=True)
class _Compiled:
    """Bulk-bit masks of one instance: applicable(x) iff x & m1 == m1 and
    x & m0 == 0; the move is x ^ flip.  Inverse masks swap the two swap
    bits' roles."""

    k: int
    row: int
    col: int
    m1: int
    m0: int
    m1_inv: int
    m0_inv: int
    flip: int


def _bulk_bit(shape: LatticeShape, r: int, c: int) -> int | None:
    """Bulk bit position of dual cell (r, c); None when on the frame."""
    if 1 <= r <= shape.m - 1 and 1 <= c <= shape.n - 1:
        return (r - 1) * shape.bulk_cols + (c - 1)
    return None


def _compile_instance(shape: LatticeShape, inst: RuleInstance) -> _Compiled | None:
    rule = inst.rule
    m1 = m0 = 0
    for (dr, dc), v in rule.match:
        p = _bulk_bit(shape, inst.row + dr, inst.col + dc)
        if p is None:
            if v == 1:
                return None        # frame cell can never hold a 1
            continue               # frame 0 requirement holds identically
        if v == 1:
            m1 |= 1 << p
        else:
            m0 |= 1 << p
    src = _bulk_bit(shape, inst.row + rule.source[0], inst.col + rule.source[1])
    tgt = _bulk_bit(shape, inst.row + rule.target[0], inst.col + rule.target[1])
    # In-grid placements keep both swap cells off the frame for every
    # rule in the set; a violation here means a malformed custom rule.
    if src is None or tgt is None:
        return None
    flip = (1 << src) | (1 << tgt)
    return _Compiled(
        k=rule.k, row=inst.row, col=inst.col,
        m1=m1 | (1 << src), m0=m0 | (1 << tgt),
        m1_inv=m1 | (1 << tgt), m0_inv=m0 | (1 << src),
        flip=flip,
    )


def in_grid(shape: LatticeShape, inst: RuleInstance) -> bool:
    return (0 <= inst.row <= shape.dual_rows - inst.rule.height
            and 0 <= inst.col <= shape.dual_cols - inst.rule.width)


def enumerate_instances(shape: LatticeShape) -> tuple[RuleInstance, ...]:
    """All (rule, placement) pairs whose block fits on the dual grid."""
    out = []
    for rule in generate_rule_set():
        for r in range(shape.dual_rows - rule.height + 1):
            for c in range(shape.dual_cols - rule.width + 1):
                out.append(RuleInstance(rule, r, c))
    return tuple(out)


@lru_cache(maxsize=16)
def compiled_instances(shape: LatticeShape) -> tuple[_Compiled, ...]:
    """Instances that can act at all (frame-blocked ones dropped)."""
    out = []
    for inst in enumerate_instances(shape):
        comp = _compile_instance(shape, inst)
        if comp is not None:
            out.append(comp)
    return tuple(out)


def apply_rule(config: DualConfig, inst: RuleInstance) -> DualConfig | None:
    """Apply one instance; None when the block does not match.

    Raises if the block does not fit on the grid at this placement.
    """
    shape = config.shape
    if not in_grid(shape, inst):
        raise ValueError(
            f"rule E{inst.rule.k} block {inst.rule.width}x{inst.rule.height} "
            f"does not fit at ({inst.row}, {inst.col}) on {shape}"
        )
    comp = _compile_instance(shape, inst)
    if comp is None:
        return None
    # The compile reads source/target from the rule itself, so an inverted
    # rule already carries its swapped pattern in m1/m0.
    x = config.bulk_index
    if (x & comp.m1) != comp.m1 or (x & comp.m0) != 0:
        return None
    return config_from_index(shape, x ^ comp.flip)


def rule_graph_degree(config: DualConfig) -> int:
    """Applicable forward plus inverse moves at this configuration.

    Counts (rule, placement, direction) triples, i.e. with multiplicity,
    matching the diagonal of the rule-graph Laplacian.
    """
    x = config.bulk_index
    deg = 0
    for comp in compiled_instances(config.shape):
        if (x & comp.m1) == comp.m1 and (x & comp.m0) == 0:
            deg += 1
        if (x & comp.m1_inv) == comp.m1_inv and (x & comp.m0_inv) == 0:
            deg += 1
    return deg


# ---------------------------------------------------------------------------
# Exhaustive sector analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassLabel:
    """HC, multiloop(loops, nesting), or non-2-factor(violations)."""

    kind: str                      # "HC" | "multiloop" | "non-2-factor"
    loops: int | None = None
    nesting: str | None = None
    violations: int | None = None

    def __str__(self) -> str:
        if self.kind == "HC":
            return "HC"
        if self.kind == "multiloop":
            return f"multiloop(loops={self.loops}, nesting={self.nesting})"
        return f"non-2-factor(violations={self.violations})"


@dataclass(frozen=True)
class SectorPartition:
    shape: LatticeShape
    classes: tuple[np.ndarray, ...]          # sorted bulk indices per class
    labels: tuple[ClassLabel, ...]

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def hc_class(self) -> np.ndarray:
        for cls, label in zip(self.classes, self.labels):
            if label.kind == "HC":
                return cls
        raise LookupError(f"no Hamiltonian-cycle class on {self.shape}")

    def class_of(self, idx: int) -> int:
        for pos, cls in enumerate(self.classes):
            if idx in cls:
                return pos
        raise LookupError(f"index {idx} not in any class")

    def to_json(self) -> str:
        payload = {
            "shape": str(self.shape),
            "num_classes": self.num_classes,
            "classes": [
                {
                    "size": int(cls.size),
                    "label": str(label),
                    "representative": int(cls[0]),
                }
                for cls, label in zip(self.classes, self.labels)
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _check_sector_cap(shape: LatticeShape) -> None:
    if shape.num_bulk > SECTOR_BIT_CAP:
        raise ResourceLimitError(
            f"{shape} has {shape.num_bulk} bulk bits; exhaustive sector "
            f"analysis is capped at {SECTOR_BIT_CAP}"
        )


def _move_endpoints(shape: LatticeShape) -> tuple[np.ndarray, np.ndarray]:
    """Endpoints (x, x^flip) of every applicable forward move, stacked."""
    n = shape.num_configs
    x = np.arange(n, dtype=np.int64)
    rows = []
    cols = []
    for comp in compiled_instances(shape):
        sel = x[((x & comp.m1) == comp.m1) & ((x & comp.m0) == 0)]
        rows.append(sel)
        cols.append(sel ^ comp.flip)
    if rows:
        return np.concatenate(rows), np.concatenate(cols)
    return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)


@lru_cache(maxsize=8)
def sector_partition(shape: LatticeShape) -> SectorPartition:
    """Connected components of the rule graph over all configurations."""
    _check_sector_cap(shape)
    n = shape.num_configs
    rows, cols = _move_endpoints(shape)
    graph = sp.coo_matrix(
        (np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(n, n)
    ).tocsr()
    _, comp = connected_components(graph, directed=False)

    order = np.argsort(comp, kind="stable")
    sorted_comp = comp[order]
    boundaries = np.flatnonzero(np.diff(sorted_comp)) + 1
    raw_classes = np.split(order, boundaries)
    # Deterministic class order: by smallest member.
    raw_classes.sort(key=lambda cls: int(cls[0]))

    classes = []
    labels = []
    for cls in raw_classes:
        cls = np.sort(cls)
        rep = classify(config_from_index(shape, int(cls[0])))
        if not rep.is_two_factor:
            label = ClassLabel("non-2-factor", violations=rep.c_violations)
        elif rep.num_loops == 1:
            label = ClassLabel("HC")
        else:
            label = ClassLabel("multiloop", loops=rep.num_loops,
                               nesting=rep.nesting)
        classes.append(cls)
        labels.append(label)
    return SectorPartition(shape, tuple(classes), tuple(labels))


def edge_multiplicity_report(shape: LatticeShape) -> dict:
    """Whether distinct instances ever realize the same config pair.

    The Laplacian weights edges by instance multiplicity; the partition
    ignores it.  This reports the maximum multiplicity observed and how
    many unordered pairs exceed one, settling the question empirically
    per shape.
    """
    _check_sector_cap(shape)
    rows, cols = _move_endpoints(shape)
    pairs = Counter(
        (int(a), int(b)) if a < b else (int(b), int(a))
        for a, b in zip(rows, cols)
    )
    multi = {pair: m for pair, m in pairs.items() if m > 1}
    return {
        "shape": str(shape),
        "num_moves": int(rows.size),
        "num_edges": len(pairs),
        "max_multiplicity": max(pairs.values(), default=0),
        "multi_edges": len(multi),
    }
