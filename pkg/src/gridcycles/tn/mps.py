"""Matrix-product states over the snake ordering of bulk plaquettes.

One rank-3 tensor per bulk plaquette, axes (left bond, physical bit, right
bond), sites laid out along the boustrophedon chain from snake_order.  All
tensors are real float64.  The class is a mutable workhorse: a DMRG run owns
its state exclusively, while finished states answer read-only queries
(amplitude, expectations, sampling, entropies) without being modified.
"""

from __future__ import annotations

import os
import tempfile
from functools import lru_cache

import numpy as np

from ..counting import enumerate_cycles
from ..errors import ResourceLimitError
from ..lattice import DualConfig, LatticeShape, config_from_index, snake_order

DENSE_STATE_CAP = 20    # largest bit count for dense-vector conversions
ISOMETRY_TOL = 1e-12


@lru_cache(maxsize=None)
def _site_bits(shape: LatticeShape) -> tuple[int, ...]:
    """Row-major bulk bit position held by each snake site."""
    return tuple((r - 1) * shape.bulk_cols + (c - 1) for r, c in snake_order(shape))


@lru_cache(maxsize=None)
def _axis_perms(shape: LatticeShape) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """(snake axes -> bit axes, bit axes -> snake axes) permutations.

    A dense vector is indexed by the packed bulk integer, so its reshaped
    axis a carries bit L-1-a; tensor-network axes carry snake sites.
    """
    bits = _site_bits(shape)
    nb = len(bits)
    site_of_bit = [0] * nb
    for s, p in enumerate(bits):
        site_of_bit[p] = s
    to_bits = tuple(site_of_bit[nb - 1 - a] for a in range(nb))
    to_snake = tuple(nb - 1 - bits[s] for s in range(nb))
    return to_bits, to_snake


def _transfer(env, bra, ket, op=None):
    """One transfer-matrix step: env (a,b) through bra (a,p,r) and ket
    (b,q,s), optionally sandwiching a single-site 2x2 operator (p,q).
    tensordot keeps the contractions in BLAS."""
    t = np.tensordot(env, bra, axes=(0, 0))      # b p r
    if op is not None:
        t = np.tensordot(t, np.asarray(op, dtype=np.float64), axes=(1, 0))
        return np.tensordot(t, ket, axes=((0, 2), (0, 1)))
    return np.tensordot(t, ket, axes=((0, 1), (0, 1)))


def config_site_bits(config: DualConfig) -> np.ndarray:
    """Config bits read off in snake order (uint8)."""
    flat = config.bits
    return np.array([flat[r, c] for r, c in snake_order(config.shape)], dtype=np.uint8)


class Mps:
    """Snake-ordered matrix-product state for one lattice shape."""

    __slots__ = ("shape", "tensors", "center", "normalized")

    def __init__(self, shape: LatticeShape, tensors: list[np.ndarray],
                 center: int | None = None, normalized: bool = False) -> None:
        if len(tensors) != shape.num_bulk:
            raise ValueError(f"{shape} needs {shape.num_bulk} site tensors")
        if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
            raise ValueError("outer bonds must have dimension 1")
        for k in range(len(tensors) - 1):
            if tensors[k].shape[2] != tensors[k + 1].shape[0]:
                raise ValueError(f"bond mismatch between sites {k} and {k + 1}")
        self.shape = shape
        self.tensors = tensors
        self.center = center
        self.normalized = normalized

    # -- constructors ------------------------------------------------------

    @classmethod
    def product_state(cls, config: DualConfig) -> "Mps":
        bits = config_site_bits(config)
        tensors = []
        for b in bits:
            t = np.zeros((1, 2, 1))
            t[0, int(b), 0] = 1.0
            tensors.append(t)
        return cls(config.shape, tensors, center=0, normalized=True)

    @classmethod
    def from_dense(cls, shape: LatticeShape, vec: np.ndarray,
                   max_chi: int | None = None, cutoff: float = 0.0) -> "Mps":
        """Exact (or truncated) MPS of a dense vector in bulk-index basis."""
        nb = shape.num_bulk
        if nb > DENSE_STATE_CAP:
            raise ResourceLimitError(
                f"{shape} has {nb} bulk bits; dense conversion capped at "
                f"{DENSE_STATE_CAP}")
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != shape.num_configs:
            raise ValueError("vector length does not match the shape")
        _, to_snake = _axis_perms(shape)
        theta = vec.reshape((2,) * nb).transpose(to_snake)
        tensors = []
        left = 1
        rest = theta.reshape(left * 2, -1)
        for _ in range(nb - 1):
            u, s, vt = np.linalg.svd(rest, full_matrices=False)
            keep = _kept_rank(s, max_chi, cutoff)
            u, s, vt = u[:, :keep], s[:keep], vt[:keep]
            tensors.append(u.reshape(left, 2, keep))
            left = keep
            rest = (s[:, None] * vt).reshape(left * 2, -1)
        tensors.append(rest.reshape(left, 2, 1))
        return cls(shape, tensors, center=nb - 1, normalized=False)

    def copy(self) -> "Mps":
        return Mps(self.shape, [t.copy() for t in self.tensors],
                   center=self.center, normalized=self.normalized)

    # -- structure ---------------------------------------------------------

    @property
    def num_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        """Internal bond dimensions (length num_sites - 1)."""
        return tuple(t.shape[2] for t in self.tensors[:-1])

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    def norm(self) -> float:
        env = np.ones((1, 1))
        for t in self.tensors:
            env = _transfer(env, t, t)
        return float(np.sqrt(max(env[0, 0], 0.0)))

    def normalize(self) -> float:
        """Scale to unit norm; returns the original norm."""
        nrm = self.norm()
        if nrm == 0.0:
            raise ZeroDivisionError("cannot normalize the zero state")
        pos = self.center if self.center is not None else 0
        self.tensors[pos] = self.tensors[pos] / nrm
        self.normalized = True
        return nrm

    def canonicalize(self, center: int) -> None:
        """Bring to mixed-canonical form with the given orthogonality center."""
        n = self.num_sites
        if not 0 <= center < n:
            raise ValueError("center out of range")
        for k in range(center):
            t = self.tensors[k]
            dl, _, dr = t.shape
            q, r = np.linalg.qr(t.reshape(dl * 2, dr))
            self.tensors[k] = q.reshape(dl, 2, -1)
            self.tensors[k + 1] = np.tensordot(r, self.tensors[k + 1], axes=(1, 0))
        for k in range(n - 1, center, -1):
            t = self.tensors[k]
            dl, _, dr = t.shape
            q, r = np.linalg.qr(t.reshape(dl, 2 * dr).T)
            self.tensors[k] = q.T.reshape(-1, 2, dr)
            self.tensors[k - 1] = np.tensordot(self.tensors[k - 1], r.T, axes=(2, 0))
        self.center = center

    def isometry_defect(self) -> float:
        """Worst deviation from the canonical isometry conditions."""
        if self.center is None:
            raise ValueError("state has no orthogonality center")
        worst = 0.0
        for k, t in enumerate(self.tensors):
            if k == self.center:
                continue
            dl, _, dr = t.shape
            if k < self.center:
                mat = t.reshape(dl * 2, dr)
                gram = mat.T @ mat
            else:
                mat = t.reshape(dl, 2 * dr)
                gram = mat @ mat.T
            worst = max(worst, float(np.abs(gram - np.eye(gram.shape[0])).max()))
        return worst

    def compress(self, max_chi: int | None = None, cutoff: float = 0.0) -> float:
        """Truncate bonds by SVD; returns the relative 2-norm error bound."""
        self.canonicalize(self.num_sites - 1)
        total = self.norm()
        if total == 0.0:
            return 0.0
        discarded = 0.0
        for k in range(self.num_sites - 1, 0, -1):
            t = self.tensors[k]
            dl, _, dr = t.shape
            u, s, vt = np.linalg.svd(t.reshape(dl, 2 * dr), full_matrices=False)
            keep = _kept_rank(s, max_chi, cutoff)
            discarded += float(np.sum(s[keep:] ** 2))
            u, s, vt = u[:, :keep], s[:keep], vt[:keep]
            self.tensors[k] = vt.reshape(keep, 2, dr)
            self.tensors[k - 1] = np.tensordot(
                self.tensors[k - 1], u * s, axes=(2, 0))
        self.center = 0
        self.normalized = False
        return float(np.sqrt(discarded) / total)

    # -- queries -----------------------------------------------------------

    def amplitude(self, config: DualConfig) -> float:
        """<config|psi> read off by a single left-to-right pass."""
        if config.shape != self.shape:
            raise ValueError("config shape does not match the state")
        vec = np.ones(1)
        for t, b in zip(self.tensors, config_site_bits(config)):
            vec = vec @ t[:, int(b), :]
        return float(vec[0])

    def expect_product(self, site_operator_map: dict[int, np.ndarray]) -> float:
        """<psi| prod_s O_s |psi> / <psi|psi> with identities off the map."""
        for s, op in site_operator_map.items():
            if not 0 <= s < self.num_sites:
                raise ValueError(f"site {s} out of range")
            if np.shape(op) != (2, 2):
                raise ValueError("operators must be 2x2")
        num = np.ones((1, 1))
        den = np.ones((1, 1))
        for k, t in enumerate(self.tensors):
            op = site_operator_map.get(k)
            num = _transfer(num, t, t, op)
            den = _transfer(den, t, t)
        return float(num[0, 0] / den[0, 0])

    def sample(self, n_samples: int, seed: int = 0) -> list[DualConfig]:
        """Born-rule samples via sequential conditional measurement."""
        if not self.normalized:
            raise ValueError("normalize the state before sampling")
        work = self.copy()
        work.canonicalize(0)
        rng = np.random.default_rng(seed)
        order = snake_order(self.shape)
        out = []
        for _ in range(n_samples):
            left = np.ones(1)
            bits = np.zeros((self.shape.dual_rows, self.shape.dual_cols), dtype=bool)
            for k, t in enumerate(work.tensors):
                mat = np.tensordot(left, t, axes=(0, 0))     # (2, right)
                w0 = float(np.dot(mat[0], mat[0]))
                w1 = float(np.dot(mat[1], mat[1]))
                p1 = w1 / (w0 + w1)
                bit = 1 if rng.random() < p1 else 0
                prob = p1 if bit else 1.0 - p1
                left = mat[bit] / np.sqrt(max(prob * (w0 + w1), 1e-300))
                if bit:
                    bits[order[k]] = True
            out.append(DualConfig(self.shape, bits))
        return out

    def entropy_profile(self) -> np.ndarray:
        """Von Neumann entropy (natural log) at every internal bond."""
        work = self.copy()
        work.canonicalize(0)
        entropies = np.zeros(max(self.num_sites - 1, 0))
        for k in range(self.num_sites - 1):
            t = work.tensors[k]
            dl, _, dr = t.shape
            u, s, vt = np.linalg.svd(t.reshape(dl * 2, dr), full_matrices=False)
            work.tensors[k] = u.reshape(dl, 2, -1)
            work.tensors[k + 1] = np.tensordot(
                (s[:, None] * vt), work.tensors[k + 1], axes=(1, 0))
            p = s ** 2
            tot = p.sum()
            if tot > 0.0:
                p = p[p > 1e-300] / tot
                entropies[k] = float(-(p * np.log(p)).sum())
        return entropies

    def to_dense(self) -> np.ndarray:
        """Dense state vector indexed by the packed bulk integer."""
        nb = self.shape.num_bulk
        if nb > DENSE_STATE_CAP:
            raise ResourceLimitError(
                f"{self.shape} has {nb} bulk bits; dense conversion capped at "
                f"{DENSE_STATE_CAP}")
        theta = np.ones(1)
        for t in self.tensors:
            theta = np.tensordot(theta, t, axes=(-1, 0))
        theta = theta[..., 0]
        to_bits, _ = _axis_perms(self.shape)
        return theta.transpose(to_bits).reshape(-1)


def _kept_rank(s: np.ndarray, max_chi: int | None, cutoff: float) -> int:
    """Smallest rank whose discarded relative 2-norm stays below cutoff."""
    keep = s.size
    if cutoff > 0.0 and s.size:
        total = float(np.sum(s ** 2))
        if total > 0.0:
            tail = np.sqrt(np.cumsum((s ** 2)[::-1]))[::-1] / np.sqrt(total)
            above = np.nonzero(tail > cutoff)[0]
            keep = int(above[-1]) + 1 if above.size else 1
    if max_chi is not None:
        keep = min(keep, max_chi)
    return max(keep, 1)


def superpose_product_states(shape: LatticeShape, configs,
                             weights=None, cutoff: float = 1e-13) -> Mps:
    """Weighted sum of computational basis states as a compressed MPS.

    Built with one bond index per config (a diagonal construction), then
    SVD-compressed; exact up to the cutoff.  Not normalized.
    """
    configs = list(configs)
    if not configs:
        raise ValueError("need at least one config")
    rows = np.stack([config_site_bits(c) for c in configs])
    count = rows.shape[0]
    if weights is None:
        weights = np.ones(count)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (count,):
        raise ValueError("one weight per config required")
    nb = shape.num_bulk
    tensors = []
    for k in range(nb):
        dl = 1 if k == 0 else count
        dr = 1 if k == nb - 1 else count
        t = np.zeros((dl, 2, dr))
        for i in range(count):
            amp = weights[i] if k == 0 else 1.0
            t[min(i, dl - 1), rows[i, k], min(i, dr - 1)] += amp
        tensors.append(t)
    state = Mps(shape, tensors)
    state.compress(cutoff=cutoff)
    return state


def encode_cycle_set(shape: LatticeShape, cutoff: float = 1e-13) -> Mps:
    """Exact equal-weight superposition over all single-cycle configs.

    Built directly from the enumerated cycle set, so it serves as an oracle
    state independent of any variational machinery.  Exhaustive-regime
    shapes only.
    """
    cycles = enumerate_cycles(shape)
    if not cycles:
        raise ValueError(f"no single-cycle configurations on {shape}")
    state = superpose_product_states(
        shape, (config_from_index(shape, i) for i in cycles), cutoff=cutoff)
    state.normalize()
    state.canonicalize(0)
    return state


# -- checkpoint files --------------------------------------------------------

CHECKPOINT_MAGIC = "gridcycles-mps"
CHECKPOINT_VERSION = 1
SNAKE_MAP_VERSION = 1


def save_mps(path, state: Mps) -> None:
    """Write a self-describing text dump of an MPS.

    The header records the lattice shape, the snake-map version used to
    order the sites, the largest bond dimension, and the normalization
    flag, so a checkpoint can be validated without external context.
    Writes are atomic: the dump goes to a temporary file in the target
    directory and is renamed into place.
    """
    lines = [
        f"# {CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}",
        f"shape {state.shape.m}x{state.shape.n}",
        f"snake {SNAKE_MAP_VERSION}",
        f"chi {state.max_bond}",
        f"normalized {1 if state.normalized else 0}",
        f"center {-1 if state.center is None else state.center}",
        f"sites {len(state.tensors)}",
    ]
    for k, t in enumerate(state.tensors):
        lines.append(f"tensor {k} {t.shape[0]} {t.shape[1]} {t.shape[2]}")
        lines.append(" ".join(repr(float(x)) for x in t.ravel()))
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_mps(path) -> Mps:
    """Read a checkpoint written by save_mps.

    Raises ValueError on any structural problem (bad magic line, version
    mismatch, truncated tensor data, inconsistent bonds).
    """
    with open(path) as fh:
        raw = [line.rstrip("\n") for line in fh]
    lines = [line for line in raw if line.strip()]

    def fail(why: str):
        raise ValueError(f"corrupt MPS checkpoint {path!r}: {why}")

    if not lines:
        fail("empty file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "#" or head[1] != CHECKPOINT_MAGIC:
        fail("missing magic header")
    if head[2] != str(CHECKPOINT_VERSION):
        fail(f"unsupported format version {head[2]}")

    fields = {}
    idx = 1
    while idx < len(lines) and not lines[idx].startswith("tensor "):
        parts = lines[idx].split(None, 1)
        if len(parts) != 2:
            fail(f"malformed header line {lines[idx]!r}")
        fields[parts[0]] = parts[1]
        idx += 1
    for key in ("shape", "snake", "chi", "normalized", "center", "sites"):
        if key not in fields:
            fail(f"missing header field {key!r}")
    if fields["snake"] != str(SNAKE_MAP_VERSION):
        fail(f"unsupported snake map version {fields['snake']}")
    try:
        shape = LatticeShape.parse(fields["shape"])
        n_sites = int(fields["sites"])
        center = int(fields["center"])
        normalized = bool(int(fields["normalized"]))
    except (ValueError, TypeError) as exc:
        raise ValueError(
            f"corrupt MPS checkpoint {path!r}: bad header value ({exc})"
        ) from None

    tensors = []
    for k in range(n_sites):
        if idx >= len(lines):
            fail(f"truncated before tensor {k}")
        meta = lines[idx].split()
        if len(meta) != 5 or meta[0] != "tensor" or meta[1] != str(k):
            fail(f"bad tensor header at site {k}: {lines[idx]!r}")
        try:
            dl, p, dr = int(meta[2]), int(meta[3]), int(meta[4])
        except ValueError:
            fail(f"non-integer dimensions at site {k}")
        if idx + 1 >= len(lines):
            fail(f"missing data for tensor {k}")
        try:
            data = np.array(lines[idx + 1].split(), dtype=np.float64)
        except ValueError:
            fail(f"unreadable data for tensor {k}")
        if data.size != dl * p * dr:
            fail(f"tensor {k} has {data.size} values, expected {dl * p * dr}")
        tensors.append(data.reshape(dl, p, dr))
        idx += 2
    if idx != len(lines):
        fail("trailing content after last tensor")
    try:
        state = Mps(shape, tensors,
                    center=None if center < 0 else center,
                    normalized=normalized)
    except ValueError as exc:
        raise ValueError(f"corrupt MPS checkpoint {path!r}: {exc}") from None
    return state
