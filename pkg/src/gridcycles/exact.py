"""Exact operator assembly and spectral analysis in the exhaustive regime.

The full Hamiltonian is a sum of three positive semidefinite pieces, all
acting on the 2**num_bulk configuration space of a lattice shape:

* a vertex penalty counting constraint violations (diagonal),
* a local-loop penalty counting single-plaquette cycles (diagonal),
* a hop Laplacian assembled from every placed rewrite-rule instance.

Because every operator is materialized over the whole configuration space,
shapes are capped at EXACT_BIT_CAP bulk bits.  Within that cap the module
offers eigensolvers and per-sector restricted spectra, including the
two-subspaces (Halmos) lower bound on each sector's smallest eigenvalue and
the closed-form worst-case variant that needs only the sector's Laplacian
gap and the plaquette budget.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, ResourceLimitError
from .lattice import LatticeShape
from .rules import ClassLabel, compiled_instances, sector_partition

EXACT_BIT_CAP = 24          # largest bulk-bit count we will materialize
DENSE_EIG_CAP = 2048        # dimension at or below which dense eigh is used
DEGENERACY_TOL = 1e-8       # eigenvalues this close to e0 count as degenerate

# Single-site building blocks in the (|0>, |1>) basis.
P0 = np.array([[1.0, 0.0], [0.0, 0.0]])
P1 = np.array([[0.0, 0.0], [0.0, 1.0]])
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]])     # |1><0|
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]])    # |0><1|
PX = np.array([[0.5, 0.5], [0.5, 0.5]])             # projector onto |+>


def _check_cap(shape: LatticeShape) -> None:
    if shape.num_bulk > EXACT_BIT_CAP:
        raise ResourceLimitError(
            f"{shape} has {shape.num_bulk} bulk bits; exhaustive operator "
            f"assembly is capped at {EXACT_BIT_CAP}")


class SparseOperator:
    """Hermitian operator over bulk-bit configurations.

    Thin CSR wrapper.  Instances are immutable after assembly and safe to
    share between threads; builders guarantee hermiticity.
    """

    __slots__ = ("dim", "matrix")

    def __init__(self, dim: int, matrix) -> None:
        mat = sp.csr_matrix(matrix, dtype=np.float64)
        if mat.shape != (dim, dim):
            raise ValueError(f"matrix shape {mat.shape} does not match dim {dim}")
        self.dim = dim
        self.matrix = mat

    @classmethod
    def from_diagonal(cls, diag: np.ndarray) -> "SparseOperator":
        diag = np.asarray(diag, dtype=np.float64)
        return cls(diag.size, sp.diags(diag).tocsr())

    @property
    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        if not isinstance(other, SparseOperator):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return SparseOperator(self.dim, self.matrix + other.matrix)

    def infinity_norm(self) -> float:
        if self.matrix.nnz == 0:
            return 0.0
        return float(np.abs(self.matrix).sum(axis=1).max())

    def hermiticity_defect(self) -> float:
        delta = self.matrix - self.matrix.T
        return 0.0 if delta.nnz == 0 else float(np.abs(delta).max())

    def to_coo_text(self) -> str:
        """Coordinate triplets, one ``row col value`` line each, row-major."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = [f"{coo.row[i]} {coo.col[i]} {coo.data[i]:.17g}" for i in order]
        return "\n".join(lines) + ("\n" if lines else "")


def _plane(shape: LatticeShape, idx: np.ndarray, r: int, c: int) -> np.ndarray:
    """Value of dual cell (r, c) across all configs; frame cells are zero."""
    if 1 <= r <= shape.m - 1 and 1 <= c <= shape.n - 1:
        bit = (r - 1) * shape.bulk_cols + (c - 1)
        return ((idx >> bit) & 1).astype(np.uint8)
    return np.zeros(idx.size, dtype=np.uint8)


def _violation_plane(a, b, c, d) -> np.ndarray:
    pop = a + b + c + d
    diag_pair = (a == d) & (b == c) & (a != b)
    return (pop == 0) | (pop == 4) | diag_pair


def build_hc_penalty(shape: LatticeShape) -> SparseOperator:
    """Diagonal operator counting violated vertices per configuration."""
    _check_cap(shape)
    idx = np.arange(shape.num_configs, dtype=np.int64)
    diag = np.zeros(shape.num_configs, dtype=np.float64)
    lower = [_plane(shape, idx, 0, c) for c in range(shape.dual_cols)]
    for i in range(shape.m):
        upper = [_plane(shape, idx, i + 1, c) for c in range(shape.dual_cols)]
        for j in range(shape.n):
            diag += _violation_plane(lower[j], lower[j + 1], upper[j], upper[j + 1])
        lower = upper
    return SparseOperator.from_diagonal(diag)


def build_local_loop_penalty(shape: LatticeShape) -> SparseOperator:
    """Diagonal operator counting single-plaquette loops per configuration."""
    _check_cap(shape)
    idx = np.arange(shape.num_configs, dtype=np.int64)
    diag = np.zeros(shape.num_configs, dtype=np.float64)
    for r, c in shape.bulk_plaquettes():
        center = _plane(shape, idx, r, c)
        ring_sum = np.zeros(shape.num_configs, dtype=np.uint8)
        ring_all = np.ones(shape.num_configs, dtype=bool)
        for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            p = _plane(shape, idx, rr, cc)
            ring_sum += p
            ring_all &= p == 1
        diag += (center == 1) & (ring_sum == 0)
        diag += (center == 0) & ring_all
    return SparseOperator.from_diagonal(diag)


def _forward_matched(idx: np.ndarray, inst) -> np.ndarray:
    return idx[((idx & inst.m1) == inst.m1) & ((idx & inst.m0) == 0)]


def build_laplacian(shape: LatticeShape) -> SparseOperator:
    """Hop Laplacian summed over all rule instances.

    Each instance contributes projectors onto its before- and after-patterns
    on the diagonal and -1 hops between the two, so parallel instances
    acting on the same configuration pair accumulate with multiplicity.
    """
    _check_cap(shape)
    dim = shape.num_configs
    idx = np.arange(dim, dtype=np.int64)
    diag = np.zeros(dim, dtype=np.float64)
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    for inst in compiled_instances(shape):
        x = _forward_matched(idx, inst)
        if x.size == 0:
            continue
        y = x ^ inst.flip
        diag[x] += 1.0
        diag[y] += 1.0
        rows.extend((y, x))
        cols.extend((x, y))
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        off = sp.coo_matrix((-np.ones(r.size), (r, c)), shape=(dim, dim))
        mat = (sp.diags(diag) + off).tocsr()
    else:
        mat = sp.diags(diag).tocsr()
    return SparseOperator(dim, mat)


def assemble_hhc(shape: LatticeShape) -> SparseOperator:
    """Full Hamiltonian: vertex penalty + loop penalty + hop Laplacian."""
    shape.require_parent_ok()
    return build_hc_penalty(shape) + build_local_loop_penalty(shape) + build_laplacian(shape)


def _instance_operator(dim: int, idx: np.ndarray, inst) -> SparseOperator:
    x = _forward_matched(idx, inst)
    if x.size == 0:
        return SparseOperator(dim, sp.csr_matrix((dim, dim)))
    y = x ^ inst.flip
    diag = np.zeros(dim, dtype=np.float64)
    diag[x] += 1.0
    diag[y] += 1.0
    r = np.concatenate((y, x))
    c = np.concatenate((x, y))
    off = sp.coo_matrix((-np.ones(r.size), (r, c)), shape=(dim, dim))
    return SparseOperator(dim, (sp.diags(diag) + off).tocsr())


def iter_local_terms(shape: LatticeShape):
    """Yield (name, SparseOperator) for every local summand of the full
    Hamiltonian: one per vertex, one per interior plaquette, one per placed
    rule instance.  Their sum equals assemble_hhc(shape)."""
    _check_cap(shape)
    dim = shape.num_configs
    idx = np.arange(dim, dtype=np.int64)
    for i, j in shape.vertices():
        viol = _violation_plane(
            _plane(shape, idx, i, j), _plane(shape, idx, i, j + 1),
            _plane(shape, idx, i + 1, j), _plane(shape, idx, i + 1, j + 1))
        yield f"C[{i},{j}]", SparseOperator.from_diagonal(viol.astype(np.float64))
    for r, c in shape.bulk_plaquettes():
        center = _plane(shape, idx, r, c)
        ring_sum = np.zeros(dim, dtype=np.uint8)
        ring_all = np.ones(dim, dtype=bool)
        for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            p = _plane(shape, idx, rr, cc)
            ring_sum += p
            ring_all &= p == 1
        diag = ((center == 1) & (ring_sum == 0)).astype(np.float64)
        diag += (center == 0) & ring_all
        yield f"L[{r},{c}]", SparseOperator.from_diagonal(diag)
    for inst in compiled_instances(shape):
        name = f"T[E{inst.k}@{inst.row},{inst.col}]"
        yield name, _instance_operator(dim, idx, inst)


def iter_move_matrices(shape: LatticeShape):
    """Yield (name, csr_matrix) raw hop matrices, one per rule instance.

    These are the non-Hermitian one-way hops |after><before|, exposed for
    algebra checks (nilpotency, commutation with the vertex penalty)."""
    _check_cap(shape)
    dim = shape.num_configs
    idx = np.arange(dim, dtype=np.int64)
    for inst in compiled_instances(shape):
        x = _forward_matched(idx, inst)
        y = x ^ inst.flip
        mat = sp.coo_matrix((np.ones(x.size), (y, x)), shape=(dim, dim)).tocsr()
        yield f"E{inst.k}@{inst.row},{inst.col}", mat


def ground_state(op: SparseOperator, k: int = 1, *, seed: int = 0):
    """k smallest eigenpairs of a Hermitian operator.

    Dense solve below DENSE_EIG_CAP, otherwise a seeded iterative solver.
    Every returned pair is residual-checked against 1e-9 times the operator
    norm; failure raises ConvergenceError with the offending residual.
    """
    if k < 1:
        raise ValueError("k must be positive")
    dim = op.dim
    k = min(k, dim)
    scale = max(op.infinity_norm(), 1.0)
    if dim <= DENSE_EIG_CAP or k >= dim - 1:
        evals, evecs = np.linalg.eigh(op.toarray())
        evals, evecs = evals[:k], evecs[:, :k]
    else:
        v0 = np.random.default_rng(seed).standard_normal(dim)
        try:
            evals, evecs = spla.eigsh(op.matrix, k=k, which="SA", v0=v0)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError("iterative eigensolver did not converge") from exc
        order = np.argsort(evals)
        evals, evecs = evals[order], evecs[:, order]
    for i in range(k):
        resid = float(np.linalg.norm(op.matvec(evecs[:, i]) - evals[i] * evecs[:, i]))
        if resid > 1e-9 * scale:
            raise ConvergenceError(
                f"eigenpair {i} residual {resid:.3e} exceeds {1e-9 * scale:.3e}",
                residual=resid)
    return evals, evecs


def _lowest_eigs(sub: np.ndarray | sp.csr_matrix, k: int, seed: int) -> np.ndarray:
    n = sub.shape[0]
    k = min(k, n)
    if n <= DENSE_EIG_CAP or k >= n - 1:
        dense = sub if isinstance(sub, np.ndarray) else sub.toarray()
        return np.linalg.eigvalsh(dense)[:k]
    v0 = np.random.default_rng(seed).standard_normal(n)
    vals = spla.eigsh(sp.csr_matrix(sub), k=k, which="SA", v0=v0,
                      return_eigenvectors=False)
    return np.sort(vals)[:k]


def _smallest_nonzero(eigs: np.ndarray, scale: float) -> float | None:
    cut = 1e-9 * max(scale, 1.0)
    above = eigs[eigs > cut]
    return float(above[0]) if above.size else None


def _two_subspace_bound(lap_gap: float | None, local_gap: float,
                        fraction: float) -> float:
    """Smallest eigenvalue of gap1*P + gap2*Q given the overlap norm.

    P projects off the hop-Laplacian kernel, Q off the loop-penalty kernel;
    ``fraction`` is the norm of the compression of Q onto the Laplacian
    kernel.  A class with no internal hops (lap_gap None) degenerates to
    the loop term alone.
    """
    if fraction <= 0.0:
        return 0.0
    if lap_gap is None:
        return local_gap * fraction
    s = 0.5 * (lap_gap + local_gap)
    rad = s * s - lap_gap * local_gap * fraction
    return s - math.sqrt(max(rad, 0.0))


def _worst_case_bound(lap_gap: float | None, plaquettes: int) -> float:
    """Closed-form sector bound from the 1/(4*plaquettes) fraction floor."""
    if lap_gap is None:
        return 1.0 / (4.0 * plaquettes)
    return lap_gap / (4.0 * plaquettes * (1.0 + lap_gap))


@dataclass(frozen=True)
class SectorSummary:
    label: str
    size: int
    representative: int
    min_eig: float
    laplacian_gap: float | None
    violations: int
    local_loop_fraction: float | None = None
    local_gap: float | None = None
    bound_measured: float | None = None
    bound_worst_case: float | None = None
    bound_worst_case_bulk: float | None = None


@dataclass(frozen=True)
class SpectralReport:
    shape: LatticeShape
    e0: float
    gap: float
    ground_degeneracy: int
    global_gap_bound: float
    fraction_floor: float
    fraction_floor_bulk: float
    sectors: tuple[SectorSummary, ...]

    def to_json(self) -> str:
        def clean(x):
            if x is None or (isinstance(x, float) and not math.isfinite(x)):
                return None
            return x
        payload = {
            "shape": str(self.shape),
            "e0": self.e0,
            "gap": clean(self.gap),
            "ground_degeneracy": self.ground_degeneracy,
            "global_gap_bound": self.global_gap_bound,
            "fraction_floor": self.fraction_floor,
            "fraction_floor_bulk": self.fraction_floor_bulk,
            "sectors": [
                {
                    "label": s.label,
                    "size": s.size,
                    "representative": s.representative,
                    "min_eig": s.min_eig,
                    "laplacian_gap": clean(s.laplacian_gap),
                    "violations": s.violations,
                    "local_loop_fraction": clean(s.local_loop_fraction),
                    "local_gap": clean(s.local_gap),
                    "bound_measured": clean(s.bound_measured),
                    "bound_worst_case": clean(s.bound_worst_case),
                    "bound_worst_case_bulk": clean(s.bound_worst_case_bulk),
                }
                for s in self.sectors
            ],
        }
        return json.dumps(payload, indent=2)


def sector_spectra(shape: LatticeShape, *, seed: int = 0) -> SpectralReport:
    """Restrict the full Hamiltonian to every move-connected class and verify
    the spectral guarantees sector by sector.

    Per class the report carries the smallest restricted eigenvalue and the
    restricted hop-Laplacian gap.  Multiloop classes additionally carry the
    fraction of members containing a local loop, the two-subspaces bound
    evaluated from the measured gaps and fraction, and the closed-form
    worst-case bound.  The worst-case fraction floor is 1/(4V) with V the
    full dual-plaquette count (m+1)(n+1); the tighter bulk-only variant is
    reported alongside.  The global gap bound combines the per-sector
    worst-case terms over the vertex count m*n with the unit floor from
    constraint-violating sectors.

    Raises RuntimeError as soon as a measured quantity undercuts one of the
    guarantees instead of returning a misleading report.
    """
    shape.require_parent_ok()
    _check_cap(shape)
    part = sector_partition(shape)
    h = assemble_hhc(shape)
    lap = build_laplacian(shape)
    loops_diag = build_local_loop_penalty(shape).diagonal
    lap_scale = max(lap.infinity_norm(), 1.0)

    v_full = (shape.m + 1) * (shape.n + 1)
    v_bulk = shape.num_bulk
    floor_full = 1.0 / (4.0 * v_full)
    floor_bulk = 1.0 / (4.0 * v_bulk)

    summaries = []
    hc_lap_gap: float | None = None
    bound_terms = [1.0]
    for members, label in zip(part.classes, part.labels):
        size = int(members.size)
        h_sub = h.matrix[members][:, members]
        lap_sub = lap.matrix[members][:, members]
        min_eig = float(_lowest_eigs(h_sub, 1, seed)[0])
        if size == 1:
            lap_gap = None
        else:
            lap_eigs = _lowest_eigs(lap_sub, min(size, 2), seed)
            lap_gap = _smallest_nonzero(lap_eigs, lap_scale)

        fraction = local_gap = b_meas = b_worst = b_worst_bulk = None
        if label.kind == "HC":
            if abs(min_eig) > 1e-8:
                raise RuntimeError(
                    f"cycle sector minimum {min_eig:.3e} is not zero on {shape}")
            hc_lap_gap = lap_gap
        elif label.kind == "multiloop":
            local_vals = loops_diag[members]
            positive = local_vals[local_vals > 0]
            fraction = positive.size / size
            if fraction + 1e-12 < floor_full:
                raise RuntimeError(
                    f"sector {label} fraction {fraction:.6f} undercuts the "
                    f"floor {floor_full:.6f} on {shape}")
            local_gap = float(positive.min())
            b_meas = _two_subspace_bound(lap_gap, local_gap, fraction)
            b_worst = _worst_case_bound(lap_gap, v_full)
            b_worst_bulk = _worst_case_bound(lap_gap, v_bulk)
            if min_eig < b_meas - 1e-9 or min_eig < b_worst - 1e-9:
                raise RuntimeError(
                    f"sector {label} minimum {min_eig:.6e} undercuts its "
                    f"bounds ({b_meas:.6e}, {b_worst:.6e}) on {shape}")
            bound_terms.append(_worst_case_bound(lap_gap, shape.m * shape.n))
        else:
            if min_eig < 1.0 - 1e-9:
                raise RuntimeError(
                    f"violating sector minimum {min_eig:.6e} is below 1 on {shape}")
        summaries.append(SectorSummary(
            label=str(label), size=size, representative=int(members[0]),
            min_eig=min_eig, laplacian_gap=lap_gap,
            violations=label.violations or 0,
            local_loop_fraction=fraction, local_gap=local_gap,
            bound_measured=b_meas, bound_worst_case=b_worst,
            bound_worst_case_bulk=b_worst_bulk))

    if hc_lap_gap is not None:
        bound_terms.append(hc_lap_gap)
    global_gap_bound = min(bound_terms)

    if h.dim <= DENSE_EIG_CAP:
        evals = np.linalg.eigvalsh(h.toarray())
    else:
        evals = _lowest_eigs(h.matrix, min(16, h.dim - 2), seed)
    e0 = float(evals[0])
    degenerate = evals[evals <= e0 + DEGENERACY_TOL]
    excited = evals[evals > e0 + DEGENERACY_TOL]
    gap = float(excited[0] - e0) if excited.size else math.inf
    if gap < global_gap_bound - 1e-12:
        raise RuntimeError(
            f"measured gap {gap:.6e} undercuts the bound {global_gap_bound:.6e}")

    return SpectralReport(
        shape=shape, e0=e0, gap=gap, ground_degeneracy=int(degenerate.size),
        global_gap_bound=global_gap_bound, fraction_floor=floor_full,
        fraction_floor_bulk=floor_bulk, sectors=tuple(summaries))
