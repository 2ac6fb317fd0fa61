"""Matrix-product operator for the cycle Hamiltonian on the snake chain.

Every local summand of the Hamiltonian is a product of single-site 2x2
operators at scattered snake positions: projector strings for the vertex
and loop penalties, projector-plus-raising/lowering strings for the hop
terms.  The full MPO is the compressed sum of those product strings,
merged pairwise after sorting by support so intermediate bonds stay small.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConvergenceError
from ..exact import P0, P1, SIGMA_MINUS, SIGMA_PLUS
from ..lattice import LatticeShape
from ..rules import compiled_instances
from .mps import DENSE_STATE_CAP, Mps, _axis_perms, _kept_rank, _site_bits

_ID2 = np.eye(2)

# Violating vertex windows as (bits[i,j], bits[i,j+1], bits[i+1,j], bits[i+1,j+1]).
_VIOLATION_WINDOWS = ((0, 0, 0, 0), (1, 1, 1, 1), (0, 1, 1, 0), (1, 0, 0, 1))


class Mpo:
    """Snake-ordered matrix-product operator, tensor axes (left, out, in, right)."""

    __slots__ = ("shape", "tensors")

    def __init__(self, shape: LatticeShape, tensors: list[np.ndarray]) -> None:
        if len(tensors) != shape.num_bulk:
            raise ValueError(f"{shape} needs {shape.num_bulk} site tensors")
        if tensors[0].shape[0] != 1 or tensors[-1].shape[3] != 1:
            raise ValueError("outer bonds must have dimension 1")
        for k in range(len(tensors) - 1):
            if tensors[k].shape[3] != tensors[k + 1].shape[0]:
                raise ValueError(f"bond mismatch between sites {k} and {k + 1}")
        self.shape = shape
        self.tensors = tensors

    @property
    def num_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[3] for t in self.tensors[:-1])

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    def compress(self, max_chi: int | None = None, cutoff: float = 0.0) -> float:
        """SVD-truncate bonds; returns the relative Frobenius error bound."""
        n = self.num_sites
        for k in range(n - 1):
            t = self.tensors[k]
            dl, _, _, dr = t.shape
            q, r = np.linalg.qr(t.reshape(dl * 4, dr))
            self.tensors[k] = q.reshape(dl, 2, 2, -1)
            self.tensors[k + 1] = np.tensordot(r, self.tensors[k + 1], axes=(1, 0))
        total = float(np.linalg.norm(self.tensors[-1]))
        if total == 0.0:
            return 0.0
        discarded = 0.0
        for k in range(n - 1, 0, -1):
            t = self.tensors[k]
            dl, _, _, dr = t.shape
            u, s, vt = np.linalg.svd(t.reshape(dl, 4 * dr), full_matrices=False)
            keep = _kept_rank(s, max_chi, cutoff)
            discarded += float(np.sum(s[keep:] ** 2))
            u, s, vt = u[:, :keep], s[:keep], vt[:keep]
            self.tensors[k] = vt.reshape(keep, 2, 2, dr)
            self.tensors[k - 1] = np.tensordot(
                self.tensors[k - 1], u * s, axes=(3, 0))
        return float(np.sqrt(discarded) / total)

    def expectation(self, mps: Mps) -> float:
        """<psi|H|psi> / <psi|psi>."""
        if mps.shape != self.shape:
            raise ValueError("state shape does not match the operator")
        env = np.ones((1, 1, 1))
        den = np.ones((1, 1))
        for t, w in zip(mps.tensors, self.tensors):
            # env (x,w,y), t (x,p,r), w (w,p,q,v) -> (r,v,s) via tensordot
            # so the heavy contractions run in BLAS
            tmp = np.tensordot(env, t, axes=(0, 0))            # w y p r
            tmp = np.tensordot(tmp, w, axes=((0, 2), (0, 1)))  # y r q v
            env = np.tensordot(tmp, t, axes=((0, 2), (0, 1)))  # r v s
            den = np.tensordot(np.tensordot(den, t, axes=(0, 0)),
                               t, axes=((0, 1), (0, 1)))
        return float(env[0, 0, 0] / den[0, 0])

    def apply(self, mps: Mps, max_chi: int | None = None,
              cutoff: float = 0.0) -> Mps:
        """H|psi> as a new MPS (bond product, then optional truncation)."""
        if mps.shape != self.shape:
            raise ValueError("state shape does not match the operator")
        tensors = []
        for t, w in zip(mps.tensors, self.tensors):
            mixed = np.tensordot(w, t, axes=(2, 1))   # w p v a b
            mixed = mixed.transpose(0, 3, 1, 2, 4)    # w a p v b
            dl = w.shape[0] * t.shape[0]
            dr = w.shape[3] * t.shape[2]
            tensors.append(np.ascontiguousarray(mixed).reshape(dl, 2, dr))
        out = Mps(self.shape, tensors)
        if max_chi is not None or cutoff > 0.0:
            out.compress(max_chi=max_chi, cutoff=cutoff)
        return out

    def to_dense(self) -> np.ndarray:
        """Dense matrix in the packed bulk-integer basis."""
        nb = self.shape.num_bulk
        if nb > DENSE_STATE_CAP // 2 + 2:
            raise ValueError(f"dense MPO expansion is impractical for {self.shape}")
        theta = np.ones(1)
        for w in self.tensors:
            theta = np.tensordot(theta, w, axes=(-1, 0))
        theta = theta[..., 0]
        # axes are (out0, in0, out1, in1, ...); regroup and reorder to bits
        to_bits, _ = _axis_perms(self.shape)
        out_axes = [2 * to_bits[a] for a in range(nb)]
        in_axes = [2 * to_bits[a] + 1 for a in range(nb)]
        return theta.transpose(out_axes + in_axes).reshape(2 ** nb, 2 ** nb)


def _site_of_bit(shape: LatticeShape) -> dict[int, int]:
    return {p: s for s, p in enumerate(_site_bits(shape))}


def _mask_bits(mask: int) -> list[int]:
    out = []
    p = 0
    while mask:
        if mask & 1:
            out.append(p)
        mask >>= 1
        p += 1
    return out


def _bulk_cell(shape: LatticeShape, r: int, c: int) -> int | None:
    if 1 <= r <= shape.m - 1 and 1 <= c <= shape.n - 1:
        return (r - 1) * shape.bulk_cols + (c - 1)
    return None


def _vertex_terms(shape: LatticeShape, site_of):
    for i, j in shape.vertices():
        cells = ((i, j), (i, j + 1), (i + 1, j), (i + 1, j + 1))
        for pattern in _VIOLATION_WINDOWS:
            ops = {}
            consistent = True
            for (r, c), want in zip(cells, pattern):
                p = _bulk_cell(shape, r, c)
                if p is None:
                    if want == 1:
                        consistent = False
                        break
                else:
                    ops[site_of[p]] = P1 if want else P0
            if consistent:
                yield 1.0, ops


def _loop_terms(shape: LatticeShape, site_of):
    for r, c in shape.bulk_plaquettes():
        center = _bulk_cell(shape, r, c)
        ring = [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
        ring_cells = [_bulk_cell(shape, rr, cc) for rr, cc in ring]
        ops = {site_of[center]: P1}
        ops.update({site_of[p]: P0 for p in ring_cells if p is not None})
        yield 1.0, ops
        if all(p is not None for p in ring_cells):
            ops = {site_of[center]: P0}
            ops.update({site_of[p]: P1 for p in ring_cells})
            yield 1.0, ops


def _hop_terms(shape: LatticeShape, site_of):
    for inst in compiled_instances(shape):
        src = inst.m1 & inst.flip
        tgt = inst.m0 & inst.flip
        base = {site_of[p]: P1 for p in _mask_bits(inst.m1 & ~src)}
        base.update({site_of[p]: P0 for p in _mask_bits(inst.m0 & ~tgt)})
        s_src = site_of[_mask_bits(src)[0]]
        s_tgt = site_of[_mask_bits(tgt)[0]]
        yield 1.0, {**base, s_src: P1, s_tgt: P0}
        yield 1.0, {**base, s_src: P0, s_tgt: P1}
        yield -1.0, {**base, s_src: SIGMA_MINUS, s_tgt: SIGMA_PLUS}
        yield -1.0, {**base, s_src: SIGMA_PLUS, s_tgt: SIGMA_MINUS}


def _term_mpo(shape: LatticeShape, coeff: float, ops) -> Mpo:
    tensors = []
    for k in range(shape.num_bulk):
        op = ops.get(k, _ID2)
        if k == 0:
            op = coeff * op
        tensors.append(np.asarray(op, dtype=np.float64).reshape(1, 2, 2, 1))
    return Mpo(shape, tensors)


def _mpo_add(a: Mpo, b: Mpo) -> Mpo:
    n = a.num_sites
    tensors = []
    for k in range(n):
        wa, wb = a.tensors[k], b.tensors[k]
        la, ra = wa.shape[0], wa.shape[3]
        lb, rb = wb.shape[0], wb.shape[3]
        if n == 1:
            tensors.append(wa + wb)
        elif k == 0:
            tensors.append(np.concatenate([wa, wb], axis=3))
        elif k == n - 1:
            tensors.append(np.concatenate([wa, wb], axis=0))
        else:
            w = np.zeros((la + lb, 2, 2, ra + rb))
            w[:la, :, :, :ra] = wa
            w[la:, :, :, ra:] = wb
            tensors.append(w)
    return Mpo(a.shape, tensors)


def build_mpo_hhc(shape: LatticeShape, tolerance: float = 1e-13,
                  max_bond: int | None = None,
                  penalty_weight: float = 1.0) -> Mpo:
    """MPO of the full Hamiltonian, compressed to the given relative tolerance.

    Summand strings are sorted by support and merged pairwise (a balanced
    tree), compressing after every merge.  With max_bond set, a forced
    truncation above the tolerance raises ConvergenceError carrying the
    achieved residual.  penalty_weight scales the diagonal penalty terms
    (vertex violations and local loops) while leaving the hopping part
    alone; values above 1 steepen the separation between configuration
    sectors without moving the zero-energy ground space, which is how the
    warm-up stage of the ground-state search avoids low-lying traps.
    """
    shape.require_parent_ok()
    site_of = _site_of_bit(shape)
    terms = []
    terms.extend((penalty_weight * c, ops)
                 for c, ops in _vertex_terms(shape, site_of))
    terms.extend((penalty_weight * c, ops)
                 for c, ops in _loop_terms(shape, site_of))
    terms.extend(_hop_terms(shape, site_of))
    terms.sort(key=lambda t: (min(t[1]), max(t[1]), len(t[1])))
    queue = [_term_mpo(shape, coeff, ops) for coeff, ops in terms]
    worst = 0.0
    while len(queue) > 1:
        merged = []
        for i in range(0, len(queue) - 1, 2):
            acc = _mpo_add(queue[i], queue[i + 1])
            worst = max(worst, acc.compress(max_chi=max_bond, cutoff=tolerance))
            merged.append(acc)
        if len(queue) % 2:
            merged.append(queue[-1])
        queue = merged
    out = queue[0]
    if max_bond is not None and worst > tolerance:
        raise ConvergenceError(
            f"operator compression reached residual {worst:.3e} above the "
            f"tolerance {tolerance:.3e}", residual=worst)
    return out
