"""Dual-lattice geometry and classical configuration analysis.

Closed loops on an m x n rectangular vertex grid are encoded on the dual
grid of (m+1) x (n+1) plaquettes: a plaquette holds 1 when it lies inside
a loop and 0 outside.  The outermost plaquette ring (the frame) is frozen
to 0, so the free degrees of freedom are the (m-1) x (n-1) bulk
plaquettes.  The boundary between unequal neighboring plaquettes traces
the encoded loops on the vertex grid; a configuration whose boundary
visits every vertex exactly twice (degree 2) is a 2-factor, and a
2-factor with a single loop is a Hamiltonian cycle.

Coordinates are 0-based throughout: vertex (i, j) with 0 <= i < m,
0 <= j < n sits between the four plaquettes (i, j), (i, j+1), (i+1, j),
(i+1, j+1) of the dual grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

Vertex = tuple[int, int]
Edge = tuple[Vertex, Vertex]
Plaquette = tuple[int, int]


@dataclass(frozen=True, order=True)
class LatticeShape:
    """Vertex-grid dimensions m (rows) x n (columns), both >= 2."""

    m: int
    n: int

    def __post_init__(self) -> None:
        if not (isinstance(self.m, int) and isinstance(self.n, int)):
            raise TypeError("lattice dimensions must be integers")
        if self.m < 2 or self.n < 2:
            raise ValueError(f"lattice must be at least 2x2, got {self.m}x{self.n}")

    @classmethod
    def parse(cls, text: str) -> "LatticeShape":
        """Parse 'MxN' (e.g. '6x8')."""
        parts = text.lower().split("x")
        if len(parts) != 2:
            raise ValueError(f"expected 'MxN', got {text!r}")
        return cls(int(parts[0]), int(parts[1]))

    def __str__(self) -> str:
        return f"{self.m}x{self.n}"

    @property
    def dual_rows(self) -> int:
        return self.m + 1

    @property
    def dual_cols(self) -> int:
        return self.n + 1

    @property
    def bulk_rows(self) -> int:
        return self.m - 1

    @property
    def bulk_cols(self) -> int:
        return self.n - 1

    @property
    def num_bulk(self) -> int:
        """Free plaquettes; the qubit count of the encoded problem."""
        return self.bulk_rows * self.bulk_cols

    @property
    def num_configs(self) -> int:
        return 1 << self.num_bulk

    @property
    def num_vertices(self) -> int:
        return self.m * self.n

    @property
    def num_plaquettes(self) -> int:
        """All dual plaquettes, frame included."""
        return self.dual_rows * self.dual_cols

    def transposed(self) -> "LatticeShape":
        return LatticeShape(self.n, self.m)

    def require_parent_ok(self) -> None:
        """Reject shapes where the parent-Hamiltonian construction degenerates.

        On 2x2 the unique Hamiltonian cycle encloses a single plaquette,
        which the local-loop penalty punishes, so the cycle state cannot
        be a zero mode there.
        """
        if self.m == 2 and self.n == 2:
            raise ValueError(
                "2x2 is excluded: its only Hamiltonian cycle encloses one "
                "plaquette and collides with the local-loop penalty"
            )

    def bulk_plaquettes(self) -> Iterator[Plaquette]:
        """Bulk plaquettes in row-major order (the bit order of indices)."""
        for a in range(1, self.m):
            for b in range(1, self.n):
                yield (a, b)

    def vertices(self) -> Iterator[Vertex]:
        for i in range(self.m):
            for j in range(self.n):
                yield (i, j)


class DualConfig:
    """An immutable 0/1 assignment over the dual grid with a zero frame."""

    __slots__ = ("shape", "bits", "_index")

    def __init__(self, shape: LatticeShape, bits: np.ndarray):
        bits = np.asarray(bits, dtype=bool)
        if bits.shape != (shape.dual_rows, shape.dual_cols):
            raise ValueError(
                f"bits must be {shape.dual_rows}x{shape.dual_cols} for {shape}"
            )
        if bits[0, :].any() or bits[-1, :].any() or bits[:, 0].any() or bits[:, -1].any():
            raise ValueError("frame plaquettes must be 0")
        bits = bits.copy()
        bits.flags.writeable = False
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "_index", None)

    def __setattr__(self, name, value):
        raise AttributeError("DualConfig is immutable")

    @property
    def bulk_index(self) -> int:
        """Row-major bulk bits packed into an integer (bit 0 = plaquette (1,1))."""
        if self._index is None:
            idx = 0
            flat = self.bits[1:-1, 1:-1].ravel()
            for t in range(flat.size - 1, -1, -1):
                idx = (idx << 1) | int(flat[t])
            object.__setattr__(self, "_index", idx)
        return self._index

    def bulk_bits(self) -> np.ndarray:
        return self.bits[1:-1, 1:-1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, DualConfig):
            return NotImplemented
        return self.shape == other.shape and self.bulk_index == other.bulk_index

    def __hash__(self) -> int:
        return hash((self.shape, self.bulk_index))

    def __repr__(self) -> str:
        return f"DualConfig({self.shape}, index={self.bulk_index})"


def config_from_index(shape: LatticeShape, idx: int) -> DualConfig:
    """Build the configuration whose bulk bits are the binary digits of idx.

    Bit t of idx (t = 0 is the least significant) lands on the t-th bulk
    plaquette in row-major order.  Inverse of DualConfig.bulk_index.
    """
    idx = int(idx)
    if idx < 0 or idx >= shape.num_configs:
        raise ValueError(f"index {idx} out of range for {shape} "
                         f"(must be < 2^{shape.num_bulk})")
    bits = np.zeros((shape.dual_rows, shape.dual_cols), dtype=bool)
    # Python-int shifts: bulk counts beyond 63 bits must not overflow.
    flat = [(idx >> t) & 1 for t in range(shape.num_bulk)]
    bits[1:-1, 1:-1] = np.array(flat, dtype=bool).reshape(
        shape.bulk_rows, shape.bulk_cols
    )
    return DualConfig(shape, bits)


# ---------------------------------------------------------------------------
# Edge extraction and vertex windows
# ---------------------------------------------------------------------------

def extract_edges(config: DualConfig) -> frozenset[Edge]:
    """Grid edges where the two plaquettes across the edge differ in color."""
    m, n = config.shape.m, config.shape.n
    bits = config.bits
    edges = set()
    for i in range(m):                      # horizontal edges (i,j)-(i,j+1)
        for j in range(n - 1):
            if bits[i, j + 1] != bits[i + 1, j + 1]:
                edges.add(((i, j), (i, j + 1)))
    for i in range(m - 1):                  # vertical edges (i,j)-(i+1,j)
        for j in range(n):
            if bits[i + 1, j] != bits[i + 1, j + 1]:
                edges.add(((i, j), (i + 1, j)))
    return frozenset(edges)


def vertex_window(config: DualConfig, i: int, j: int) -> tuple[int, int, int, int]:
    """The four plaquette bits (a, b, c, d) around vertex (i, j).

    a = up-left, b = up-right, c = down-left, d = down-right.
    """
    bits = config.bits
    return (int(bits[i, j]), int(bits[i, j + 1]),
            int(bits[i + 1, j]), int(bits[i + 1, j + 1]))


def window_is_violation(w: tuple[int, int, int, int]) -> bool:
    """True for the four windows forbidden in 2-factors.

    All-equal windows leave the vertex unvisited (degree 0); the two
    checkerboard windows would force degree 4 (a path crossing).
    """
    a, b, c, d = w
    pop = a + b + c + d
    return pop == 0 or pop == 4 or (a == d and b == c and a != b)


def window_degree(w: tuple[int, int, int, int]) -> int:
    a, b, c, d = w
    return int(a != b) + int(c != d) + int(a != c) + int(b != d)


def window_is_bend(w: tuple[int, int, int, int]) -> bool:
    """Corner vertices: exactly one or three of the four plaquettes set."""
    pop = sum(w)
    return pop == 1 or pop == 3


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassifyReport:
    """Purely classical summary of one configuration."""

    c_violations: int
    is_two_factor: bool
    num_loops: int
    local_loops: int
    nesting: str
    bends: int


def _region_nesting(config: DualConfig) -> str:
    """Canonical parenthesization of loop containment.

    Constant-color regions of the dual grid (4-connected) form a tree
    rooted at the outer frame region; each parent-child adjacency is one
    closed curve.  The signature of a curve is '(' + sorted child
    signatures + ')'; the full signature concatenates the root's children
    in sorted order, so it is invariant under loop relabeling.
    """
    bits = config.bits
    rows, cols = bits.shape
    label = -np.ones((rows, cols), dtype=int)
    regions = 0
    for r in range(rows):
        for c in range(cols):
            if label[r, c] >= 0:
                continue
            color = bits[r, c]
            stack = [(r, c)]
            label[r, c] = regions
            while stack:
                y, x = stack.pop()
                for yy, xx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
                    if 0 <= yy < rows and 0 <= xx < cols \
                            and label[yy, xx] < 0 and bits[yy, xx] == color:
                        label[yy, xx] = regions
                        stack.append((yy, xx))
            regions += 1

    adj: list[set[int]] = [set() for _ in range(regions)]
    for r in range(rows):
        for c in range(cols):
            for rr, cc in ((r + 1, c), (r, c + 1)):
                if rr < rows and cc < cols and label[r, c] != label[rr, cc]:
                    adj[label[r, c]].add(label[rr, cc])
                    adj[label[rr, cc]].add(label[r, c])

    root = label[0, 0]
    children: dict[int, list[int]] = {root: []}
    order = [root]
    seen = {root}
    for node in order:                      # BFS; deterministic by region id
        for nxt in sorted(adj[node]):
            if nxt not in seen:
                seen.add(nxt)
                children[node] = children.get(node, [])
                children[node].append(nxt)
                children.setdefault(nxt, [])
                order.append(nxt)

    def sig(node: int) -> str:
        return "(" + "".join(sorted(sig(ch) for ch in children[node])) + ")"

    return "".join(sorted(sig(ch) for ch in children[root]))


def _edge_components(edges: frozenset[Edge]) -> int:
    if not edges:
        return 0
    neighbors: dict[Vertex, list[Vertex]] = {}
    for u, v in edges:
        neighbors.setdefault(u, []).append(v)
        neighbors.setdefault(v, []).append(u)
    seen: set[Vertex] = set()
    comps = 0
    for start in neighbors:
        if start in seen:
            continue
        comps += 1
        stack = [start]
        seen.add(start)
        while stack:
            u = stack.pop()
            for v in neighbors[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
    return comps


def count_local_loops(config: DualConfig) -> int:
    """Plus-shaped matches: a plaquette differing from all four neighbors.

    A set plaquette with four unset orthogonal neighbors is a minimal
    loop; an unset plaquette with four set neighbors is a minimal hole.
    Centers range over the bulk, where all four neighbors exist.
    """
    bits = config.bits
    m, n = config.shape.m, config.shape.n
    count = 0
    for a in range(1, m):
        for b in range(1, n):
            center = bits[a, b]
            ring = (bits[a - 1, b], bits[a + 1, b], bits[a, b - 1], bits[a, b + 1])
            if center and not any(ring):
                count += 1
            elif not center and all(ring):
                count += 1
    return count


def classify(config: DualConfig) -> ClassifyReport:
    """Vertex-constraint, loop, and bend analysis of one configuration."""
    shape = config.shape
    violations = 0
    bends = 0
    for i, j in shape.vertices():
        w = vertex_window(config, i, j)
        if window_is_violation(w):
            violations += 1
        if window_is_bend(w):
            bends += 1
    edges = extract_edges(config)
    return ClassifyReport(
        c_violations=violations,
        is_two_factor=(violations == 0),
        num_loops=_edge_components(edges),
        local_loops=count_local_loops(config),
        nesting=_region_nesting(config),
        bends=bends,
    )


def trace_loops(config: DualConfig) -> list[list[Vertex]]:
    """Ordered vertex lists of each loop of a 2-factor.

    Each loop starts at its lexicographically smallest vertex and turns
    toward the smaller of its two neighbors, so the output is canonical.
    Raises on configurations with vertices of degree other than 0 or 2.
    """
    edges = extract_edges(config)
    neighbors: dict[Vertex, list[Vertex]] = {}
    for u, v in edges:
        neighbors.setdefault(u, []).append(v)
        neighbors.setdefault(v, []).append(u)
    for u, nbrs in neighbors.items():
        if len(nbrs) != 2:
            raise ValueError(f"vertex {u} has degree {len(nbrs)}; not a 2-factor")
    loops = []
    visited: set[Vertex] = set()
    for start in sorted(neighbors):
        if start in visited:
            continue
        loop = [start]
        visited.add(start)
        prev, cur = start, min(neighbors[start])
        while cur != start:
            loop.append(cur)
            visited.add(cur)
            a, b = neighbors[cur]
            prev, cur = cur, (b if a == prev else a)
        loops.append(loop)
    return loops


def count_bends_by_walk(config: DualConfig) -> int:
    """Direction changes along each loop; must agree with the window count."""
    total = 0
    for loop in trace_loops(config):
        k = len(loop)
        for t in range(k):
            u, v, w = loop[t - 1], loop[t], loop[(t + 1) % k]
            d1 = (v[0] - u[0], v[1] - u[1])
            d2 = (w[0] - v[0], w[1] - v[1])
            if d1 != d2:
                total += 1
    return total


# ---------------------------------------------------------------------------
# Snake (boustrophedon) chain order for the tensor-network boundary
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def snake_order(shape: LatticeShape) -> tuple[Plaquette, ...]:
    """Bulk plaquettes in chain order.

    The snake starts at the top-left bulk corner and runs first along the
    shorter lattice side, so consecutive chain positions are always
    lattice-adjacent and the chain cross-section is the short dimension.
    """
    order: list[Plaquette] = []
    if shape.m <= shape.n:
        for c in range(1, shape.n):
            col = range(1, shape.m) if (c - 1) % 2 == 0 else range(shape.m - 1, 0, -1)
            order.extend((a, c) for a in col)
    else:
        for r in range(1, shape.m):
            row = range(1, shape.n) if (r - 1) % 2 == 0 else range(shape.n - 1, 0, -1)
            order.extend((r, b) for b in row)
    return tuple(order)


@lru_cache(maxsize=None)
def _snake_lookup(shape: LatticeShape) -> dict[Plaquette, int]:
    return {p: t for t, p in enumerate(snake_order(shape))}


def snake_index(shape: LatticeShape, plaquette: Plaquette) -> int:
    """Chain position of a bulk plaquette."""
    try:
        return _snake_lookup(shape)[tuple(plaquette)]
    except KeyError:
        raise ValueError(f"{plaquette} is not a bulk plaquette of {shape}") from None


def snake_site(shape: LatticeShape, position: int) -> Plaquette:
    """Bulk plaquette at a chain position (inverse of snake_index)."""
    order = snake_order(shape)
    if not (0 <= position < len(order)):
        raise ValueError(f"chain position {position} out of range for {shape}")
    return order[position]


# ---------------------------------------------------------------------------
# Reference Hamiltonian cycle (serpentine comb)
# ---------------------------------------------------------------------------

def _serpentine_path(m: int, n: int) -> list[Vertex]:
    # Requires n even: across the top row, down the last column, then
    # boustrophedon through rows 1..m-1 back to close at (0, 0).
    path = [(0, j) for j in range(n)]
    path.extend((i, n - 1) for i in range(1, m))
    for j in range(n - 2, -1, -1):
        up = (n - 2 - j) % 2 == 0
        rows = range(1, m) if not up else range(m - 1, 0, -1)
        path.extend((i, j) for i in rows)
    return path


def reference_cycle(shape: LatticeShape) -> DualConfig:
    """A deterministic Hamiltonian cycle of the given shape.

    Exists iff m*n is even.  Used to seed searches with a valid cycle.
    """
    m, n = shape.m, shape.n
    if m % 2 == 1 and n % 2 == 1:
        raise ValueError(f"{shape} has no Hamiltonian cycle (odd number of vertices)")
    transpose = n % 2 == 1
    if transpose:
        path = [(j, i) for (i, j) in _serpentine_path(n, m)]
    else:
        path = _serpentine_path(m, n)

    horiz = set()
    for t in range(len(path)):
        u, v = path[t], path[(t + 1) % len(path)]
        if u[0] == v[0]:
            horiz.add((u[0], min(u[1], v[1])))

    bits = np.zeros((shape.dual_rows, shape.dual_cols), dtype=bool)
    for b in range(1, n):
        for a in range(1, m):
            crossed = (a - 1, b - 1) in horiz
            bits[a, b] = bits[a - 1, b] ^ crossed
    config = DualConfig(shape, bits)
    report = classify(config)
    assert report.is_two_factor and report.num_loops == 1
    return config


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def config_to_text(config: DualConfig) -> str:
    """Text grid of 0/1 characters, one dual-lattice row per line."""
    return "\n".join(
        "".join("1" if b else "0" for b in row) for row in config.bits
    )


def config_from_text(shape: LatticeShape, text: str) -> DualConfig:
    rows = [line.strip() for line in text.strip().splitlines()]
    if len(rows) != shape.dual_rows or any(len(r) != shape.dual_cols for r in rows):
        raise ValueError(f"text grid does not match the {shape} dual grid")
    if set("".join(rows)) - {"0", "1"}:
        raise ValueError("text grid may contain only 0 and 1")
    bits = np.array([[ch == "1" for ch in row] for row in rows], dtype=bool)
    return DualConfig(shape, bits)


def config_to_record(config: DualConfig) -> dict:
    """Compact JSON-able record; the index is decimal to survive any size."""
    return {
        "m": config.shape.m,
        "n": config.shape.n,
        "bulk_index": str(config.bulk_index),
    }


def config_from_record(record: dict) -> DualConfig:
    shape = LatticeShape(int(record["m"]), int(record["n"]))
    return config_from_index(shape, int(record["bulk_index"]))


def config_to_json(config: DualConfig) -> str:
    return json.dumps(config_to_record(config), sort_keys=True)


def config_from_json(text: str) -> DualConfig:
    return config_from_record(json.loads(text))
