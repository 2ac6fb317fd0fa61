"""Protocols built on the cycle superposition.

Three demonstrations on top of the exact encoder and the tensor-network
state: Boltzmann-weighted coherent samples through imaginary-time window
gates, dressing cycles with a monomer sequence (a sparse simulation of
the preparation circuit), and Grover-style amplified counting on a dense
statevector.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .counting import enumerate_cycles
from .errors import ResourceLimitError
from .lattice import (
    DualConfig,
    LatticeShape,
    Vertex,
    classify,
    config_from_index,
    snake_index,
    trace_loops,
)
from .tn.mps import DENSE_STATE_CAP, Mps, encode_cycle_set
from .tn.mpo import Mpo
from .tn.quality import count_from_mps

EMPTY_SYMBOL = "ε"     # placeholder on vertices not yet written
TERMINAL_SYMBOL = "t"       # growth-front marker consumed by the last layer

_RESERVED = frozenset({EMPTY_SYMBOL, TERMINAL_SYMBOL})


# ---------------------------------------------------------------------------
# Diagonal energy models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyModel:
    """A diagonal (classical) energy over dual configurations.

    window_energy, when present, gives the per-vertex contribution from
    the four plaquettes around a vertex; the total must equal evaluate.
    Models without a window decomposition cannot be applied as gates.
    """

    kind: str
    evaluate: Callable[[DualConfig], float]
    window_energy: Callable[[tuple[int, int, int, int]], float] | None = None

    @classmethod
    def bend(cls, eps_b: float = 1.0) -> "EnergyModel":
        """eps_b per corner vertex (window with one or three plaquettes set)."""
        def window(w: tuple[int, int, int, int]) -> float:
            pop = sum(w)
            return eps_b if pop == 1 or pop == 3 else 0.0

        def total(config: DualConfig) -> float:
            return eps_b * classify(config).bends

        return cls("bend", total, window)

    @classmethod
    def custom(cls, evaluate, window_energy=None) -> "EnergyModel":
        return cls("custom", evaluate, window_energy)


def _window_cells(shape: LatticeShape, i: int, j: int):
    """The four plaquettes around vertex (i, j), window slot order."""
    return ((i, j), (i, j + 1), (i + 1, j), (i + 1, j + 1))


def _window_gate(shape: LatticeShape, vertex: Vertex, window_energy,
                 beta: float):
    """exp(-beta/2 * E_window) as a diagonal MPO, or a scalar if the
    window holds no bulk plaquettes."""
    slots = []
    for slot, (r, c) in enumerate(_window_cells(shape, *vertex)):
        if 1 <= r <= shape.m - 1 and 1 <= c <= shape.n - 1:
            site = snake_index(shape, (r, c))
            slots.append((site, slot))
    if not slots:
        return math.exp(-0.5 * beta * window_energy((0, 0, 0, 0)))
    slots.sort()
    sites = [s for s, _ in slots]
    k = len(sites)
    table = np.empty((2,) * k)
    for bits in np.ndindex(*table.shape):
        pattern = [0, 0, 0, 0]
        for (_, slot), b in zip(slots, bits):
            pattern[slot] = b
        table[bits] = math.exp(-0.5 * beta * window_energy(tuple(pattern)))
    flat = table.reshape(-1)

    tensors = []
    seen = 0
    for s in range(shape.num_bulk):
        if s < sites[0] or s > sites[-1]:
            tensors.append(np.eye(2).reshape(1, 2, 2, 1))
            continue
        dl = 2 ** seen
        if s == sites[-1]:
            w = np.zeros((dl, 2, 2, 1))
            for l in range(dl):
                for p in (0, 1):
                    w[l, p, p, 0] = flat[l * 2 + p]
        elif s in sites:
            w = np.zeros((dl, 2, 2, dl * 2))
            for l in range(dl):
                for p in (0, 1):
                    w[l, p, p, l * 2 + p] = 1.0
            seen += 1
        else:
            w = np.zeros((dl, 2, 2, dl))
            for l in range(dl):
                w[l, 0, 0, l] = w[l, 1, 1, l] = 1.0
        tensors.append(w)
    return Mpo(shape, tensors)


def boltzmann_mps(mps_xhc: Mps, model: EnergyModel, beta: float, *,
                  exact_count: float | None = None,
                  tolerance: float = 1e-12,
                  max_chi: int | None = None) -> tuple[Mps, float]:
    """Boltzmann-weighted coherent sample and its partition estimate.

    Applies exp(-beta/2 * E) as an exact product of commuting diagonal
    per-vertex window gates (compressing between gates), then normalizes.
    For a uniform cycle superposition on input, the pre-normalization
    squared norm is Z(beta)/|count|, so Z = count * rho.  The count comes
    from exact_count when given, else from the input state itself.
    """
    if model.window_energy is None:
        raise ValueError(
            "model has no per-vertex window decomposition; cannot be "
            "applied as a gate product")
    shape = mps_xhc.shape
    count = float(exact_count) if exact_count is not None \
        else count_from_mps(mps_xhc)
    psi = mps_xhc.copy()
    scalar = 1.0
    if beta != 0.0:
        for vertex in shape.vertices():
            gate = _window_gate(shape, vertex, model.window_energy, beta)
            if isinstance(gate, float):
                scalar *= gate
                continue
            psi = gate.apply(psi, max_chi=max_chi, cutoff=tolerance)
        psi.tensors[0] = psi.tensors[0] * scalar
    rho = psi.norm() ** 2
    psi.canonicalize(0)
    psi.normalize()
    return psi, count * rho


# ---------------------------------------------------------------------------
# Sequence dressing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChemicalSequence:
    """Monomer symbols c_1..c_{mn}; the placeholder and growth-front
    markers are reserved and rejected."""

    symbols: tuple[str, ...]

    def __post_init__(self):
        if not self.symbols:
            raise ValueError("sequence must be nonempty")
        for s in self.symbols:
            if not isinstance(s, str) or not s:
                raise ValueError("symbols must be nonempty strings")
            if s in _RESERVED:
                raise ValueError(f"symbol {s!r} is reserved")

    @classmethod
    def from_string(cls, text: str) -> "ChemicalSequence":
        return cls(tuple(text))

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class DressedTriple:
    """One fully-written placement: a cycle, the vertex carrying the first
    symbol, the walk direction, and the resulting per-vertex symbols."""

    cycle_index: int
    start: Vertex
    orientation: int
    vertex_symbols: tuple[str, ...]    # row-major over lattice vertices
    amplitude: float


@dataclass(frozen=True)
class DressedEnsemble:
    """Uniform superposition of sequence placements along cycles.

    triples lists every (cycle, start, orientation) path; terms is the
    basis-state view keyed by (cycle index, per-vertex symbols), merging
    colliding paths by root-sum-square so the total squared amplitude
    stays 1.
    """

    shape: LatticeShape
    sequence: tuple[str, ...]
    triples: tuple[DressedTriple, ...]
    terms: dict

    @property
    def num_paths(self) -> int:
        return len(self.triples)

    @property
    def path_amplitude(self) -> float:
        return self.triples[0].amplitude

    def report(self) -> dict:
        """Measured counts and both normalization readings (one term per
        orientation versus orientations folded together)."""
        mn = self.shape.m * self.shape.n
        cycles = len({t.cycle_index for t in self.triples})
        return {
            "shape": str(self.shape),
            "cycles": cycles,
            "paths": self.num_paths,
            "distinct_terms": len(self.terms),
            "path_amplitude": self.path_amplitude,
            "amplitude_if_orientations_merged": 1.0 / math.sqrt(mn * cycles),
            "total_squared_amplitude": float(
                sum(a * a for a in self.terms.values())),
        }


def _vertex_id(shape: LatticeShape, v: Vertex) -> int:
    return v[0] * shape.n + v[1]


def _cycle_loop(shape: LatticeShape, index: int) -> list[Vertex]:
    loops = trace_loops(config_from_index(shape, index))
    if len(loops) != 1 or len(loops[0]) != shape.m * shape.n:
        raise ValueError(f"config {index} is not a single full cycle")
    return loops[0]


def dress(shape: LatticeShape, seq: ChemicalSequence) -> DressedEnsemble:
    """Write the sequence along every cycle from every start and direction.

    Sparse simulation of the preparation pipeline: a W state places the
    first symbol on each vertex, the fork layer splits the growth front
    both ways (factor 1/sqrt(2) each), extension layers write one symbol
    per layer and advance the front along the only open neighbor, and the
    final layer replaces the front marker with the last symbol.  Every
    layer checks applicability; a term with no applicable move raises,
    which signals a transcription bug rather than valid input.
    """
    mn = shape.m * shape.n
    if len(seq) != mn:
        raise ValueError(f"sequence length {len(seq)} != {mn} vertices")
    cycles = enumerate_cycles(shape)
    if not cycles:
        raise ValueError(f"no cycles on {shape}")
    loops = {idx: _cycle_loop(shape, idx) for idx in cycles}

    # W-state initialization: first symbol on each vertex of each cycle
    amp = 1.0 / math.sqrt(mn * len(cycles))
    records = []       # [cycle, loop, start_pos, assignment, front_pos, orient]
    for idx in cycles:
        loop = loops[idx]
        for pos in range(mn):
            assignment = [EMPTY_SYMBOL] * mn
            assignment[_vertex_id(shape, loop[pos])] = seq.symbols[0]
            records.append([idx, loop, pos, assignment, None, 0])

    # fork layer: the two neighbors of the written vertex must be open;
    # the front marker goes each way with weight 1/sqrt(2)
    amp /= math.sqrt(2.0)
    forked = []
    for idx, loop, pos, assignment, _, _ in records:
        for orient in (1, -1):
            nxt = (pos + orient) % mn
            if assignment[_vertex_id(shape, loop[nxt])] != EMPTY_SYMBOL:
                raise RuntimeError(
                    f"fork layer stuck: neighbor of start {loop[pos]} "
                    f"already written on cycle {idx}")
            branch = list(assignment)
            branch[_vertex_id(shape, loop[nxt])] = TERMINAL_SYMBOL
            forked.append([idx, loop, pos, branch, nxt, orient])
    records = forked

    # extension layers for symbols 2..mn-1: write at the front, advance
    # the front to the single open neighbor
    for sym in seq.symbols[1:-1]:
        for rec in records:
            idx, loop, pos, assignment, front, orient = rec
            u = _vertex_id(shape, loop[front])
            if assignment[u] != TERMINAL_SYMBOL:
                raise RuntimeError(f"extension layer stuck on cycle {idx}: "
                                   f"front marker missing at {loop[front]}")
            ahead = (front + orient) % mn
            a = _vertex_id(shape, loop[ahead])
            if assignment[a] != EMPTY_SYMBOL:
                raise RuntimeError(f"extension layer stuck on cycle {idx}: "
                                   f"no open vertex ahead of {loop[front]}")
            assignment[u] = sym
            assignment[a] = TERMINAL_SYMBOL
            rec[4] = ahead

    # closing layer: the front must be the only open slot left
    triples = []
    for idx, loop, pos, assignment, front, orient in records:
        u = _vertex_id(shape, loop[front])
        if assignment[u] != TERMINAL_SYMBOL or assignment.count(EMPTY_SYMBOL):
            raise RuntimeError(f"closing layer stuck on cycle {idx}")
        assignment[u] = seq.symbols[-1]
        triples.append(DressedTriple(
            cycle_index=idx, start=loop[pos], orientation=orient,
            vertex_symbols=tuple(assignment), amplitude=amp))

    terms: dict = {}
    for t in triples:
        key = (t.cycle_index, t.vertex_symbols)
        terms[key] = terms.get(key, 0.0) + t.amplitude ** 2
    terms = {k: math.sqrt(v) for k, v in terms.items()}
    total = sum(a * a for a in terms.values())
    if abs(total - 1.0) > 1e-10:
        raise RuntimeError(f"dressing lost normalization: {total!r}")
    return DressedEnsemble(shape=shape, sequence=seq.symbols,
                           triples=tuple(triples), terms=terms)


# ---------------------------------------------------------------------------
# Heteropolymer partition function
# ---------------------------------------------------------------------------

def hp_contact_model() -> dict:
    """Hydrophobic pairing: -1 for an H-H contact, 0 otherwise."""
    return {("H", "H"): -1.0, ("H", "P"): 0.0,
            ("P", "H"): 0.0, ("P", "P"): 0.0}


def _contact_alphabet(table: dict) -> frozenset:
    out = set()
    for a, b in table:
        out.add(a)
        out.add(b)
    return frozenset(out)


def heteropolymer_partition(ensemble: DressedEnsemble,
                            contact_energy: dict | None = None,
                            beta: float = 1.0) -> float:
    """Z over the dressed ensemble with lattice-contact energies.

    A contact is a lattice-adjacent vertex pair whose monomers are not
    consecutive along the written chain; the first and last monomers sit
    on adjacent vertices but are chain ends, so their contact counts.
    Each path contributes amplitude^2 * exp(-beta * E).
    """
    shape = ensemble.shape
    mn = shape.m * shape.n
    if contact_energy is None:
        contact_energy = hp_contact_model()
    alphabet = _contact_alphabet(contact_energy)
    for s in ensemble.sequence:
        if s not in alphabet:
            raise ValueError(f"symbol {s!r} missing from the contact table")

    pairs = []
    for i in range(shape.m):
        for j in range(shape.n):
            if i + 1 < shape.m:
                pairs.append(((i, j), (i + 1, j)))
            if j + 1 < shape.n:
                pairs.append(((i, j), (i, j + 1)))

    loops: dict[int, list[Vertex]] = {}
    z = 0.0
    for t in ensemble.triples:
        loop = loops.get(t.cycle_index)
        if loop is None:
            loop = loops[t.cycle_index] = _cycle_loop(shape, t.cycle_index)
        start_pos = loop.index(t.start)
        chain_pos = {}
        for k in range(mn):
            v = loop[(start_pos + t.orientation * k) % mn]
            chain_pos[v] = k
        energy = 0.0
        for u, v in pairs:
            if abs(chain_pos[u] - chain_pos[v]) == 1:
                continue
            pair_e = contact_energy.get(
                (t.vertex_symbols[_vertex_id(shape, u)],
                 t.vertex_symbols[_vertex_id(shape, v)]))
            if pair_e:
                energy += pair_e
        z += t.amplitude ** 2 * math.exp(-beta * energy)
    return z


# ---------------------------------------------------------------------------
# Amplified counting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AmplificationRun:
    """Success probability trace of the two-reflection iteration."""

    shape: str
    r: float
    trace: tuple[tuple[int, float], ...]
    k_opt: int

    def to_json(self) -> str:
        return json.dumps({
            "shape": self.shape, "r": self.r, "k_opt": self.k_opt,
            "trace": [{"k": k, "p": p} for k, p in self.trace],
        }, indent=2)


def _hadamard_transform(vec: np.ndarray) -> np.ndarray:
    v = vec.astype(np.float64).copy()
    n = v.size
    h = 1
    while h < n:
        v = v.reshape(-1, 2, h)
        a = v[:, 0, :].copy()
        b = v[:, 1, :].copy()
        v[:, 0, :] = a + b
        v[:, 1, :] = a - b
        v = v.reshape(n)
        h *= 2
    return v / math.sqrt(n)


def amplify_count(shape: LatticeShape, max_iterations: int = 20
                  ) -> AmplificationRun:
    """Grover-style boost of the all-ones overlap of the transformed
    cycle state; the success probability follows the closed form
    sin^2((2k+1) arcsin sqrt(r)) with r = count / 2^N.

    Statevector simulation; the trace is checked against the closed form
    to 1e-8 as a self-test before returning.
    """
    nb = shape.num_bulk
    if nb > DENSE_STATE_CAP:
        raise ResourceLimitError(
            f"{shape} needs {nb} bits; statevector cap is {DENSE_STATE_CAP}")
    count = len(enumerate_cycles(shape))
    if count == 0:
        raise ValueError(f"no cycles on {shape}")
    r = count / 2 ** nb
    base = encode_cycle_set(shape).to_dense()
    psi0 = _hadamard_transform(base)
    target = 2 ** nb - 1

    theta = math.asin(math.sqrt(r))
    psi = psi0.copy()
    trace = []
    for k in range(max_iterations + 1):
        p = float(psi[target] ** 2)
        expected = math.sin((2 * k + 1) * theta) ** 2
        if abs(p - expected) > 1e-8:
            raise RuntimeError(
                f"iteration {k}: measured {p!r} vs closed form {expected!r}")
        trace.append((k, p))
        psi[target] = -psi[target]
        psi = 2.0 * np.dot(psi0, psi) * psi0 - psi
    # first peak of the oscillation, i.e. the optimal stopping iteration;
    # a plain window argmax could land on a later revival instead
    k_opt = trace[-1][0]
    for k in range(len(trace) - 1):
        if trace[k][1] >= trace[k + 1][1]:
            k_opt = k
            break
    return AmplificationRun(shape=str(shape), r=r, trace=tuple(trace),
                            k_opt=k_opt)
