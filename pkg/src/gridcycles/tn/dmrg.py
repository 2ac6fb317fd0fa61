"""Two-site DMRG ground-state search against a snake-ordered MPO.

Two-site updates so the bond dimension can grow from a cheap low-bond
start; the bond cap follows a nondecreasing schedule, one value per sweep
(the last value repeats).  Each local problem is solved iteratively with
the current two-site tensor as the starting vector; a failed local solve
keeps the old tensor and is recorded in the sweep trace rather than
aborting the run.

The energy landscape has many near-degenerate sectors separated by moves
a two-site update cannot make, so a greedy sweep from a product state
stalls at whatever sector it starts in.  Two countermeasures: the default
start superposes the reference cycle with its lattice-symmetry images,
and early sweeps inject annealed noise into the two-site tensor before
the splitting SVD so bonds keep growing until the noise is switched off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..errors import ConvergenceError
from ..lattice import DualConfig, LatticeShape, reference_cycle
from .mps import Mps, _kept_rank, superpose_product_states
from .mpo import Mpo, build_mpo_hhc

_DENSE_LOCAL_CAP = 256      # local dimension at or below which eigh is used
_KRYLOV_DIM = 32            # Lanczos cap per local solve; warm starts keep
                            # actual iteration counts far below this

# noise amplitude per sweep (last entry repeats); must end at 0.0 so the
# final sweeps are pure variational descent
DEFAULT_NOISE = (1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 0.0)


def default_initial_state(shape: LatticeShape) -> Mps:
    """Equal superposition of the reference cycle and its dihedral images.

    Cheap (bond dimension at most 8) but already entangled, which gives
    the sweeps room to grow instead of sitting in one basis sector.
    """
    base = reference_cycle(shape).bits
    planes = [base, base[::-1, :], base[:, ::-1], base[::-1, ::-1]]
    if shape.m == shape.n:
        planes.extend([p.T for p in list(planes)])
    configs: dict[int, DualConfig] = {}
    for p in planes:
        cfg = DualConfig(shape, p)
        configs.setdefault(cfg.bulk_index, cfg)
    state = superpose_product_states(shape, configs.values())
    state.normalize()
    state.canonicalize(0)
    return state


@dataclass(frozen=True)
class SweepRecord:
    sweep: int
    chi: int
    energy: float
    max_bond: int
    truncation_error: float
    solver_failures: int


def _left_update(env, a, w):
    # env (x,w,y), a (x,p,a'), w (w,p,q,v) -> (a',v,b); tensordot keeps the
    # contractions in BLAS
    t = np.tensordot(env, a, axes=(0, 0))        # w y p a'
    t = np.tensordot(t, w, axes=((0, 2), (0, 1)))  # y a' q v
    return np.tensordot(t, a, axes=((0, 2), (0, 1)))  # a' v b


def _right_update(env, a, w):
    # env (a',v,b), a (x,p,a'), w (w,p,q,v) -> (x,w,y)
    t = np.tensordot(a, env, axes=(2, 0))        # x p v b
    t = np.tensordot(t, w, axes=((1, 2), (1, 3)))  # x b w q
    return np.tensordot(t, a, axes=((3, 1), (1, 2)))  # x w y


def _theta_matvec(lenv, w1, w2, renv, theta):
    # lenv (x,w,y) theta (y,q1,q2,r) -> out (x,p1,p2,r')
    tmp = np.tensordot(lenv, theta, axes=(2, 0))          # x w q1 q2 r
    tmp = np.tensordot(tmp, w1, axes=((1, 2), (0, 2)))    # x q2 r p1 v
    tmp = np.tensordot(tmp, w2, axes=((1, 4), (2, 0)))    # x r p1 p2 u
    out = np.tensordot(tmp, renv, axes=((1, 4), (2, 1)))  # x p1 p2 r'
    return out


def _dense_local(lenv, w1, w2, renv):
    # full effective matrix, rows (x,p1,p2,r'), cols (y,q1,q2,r)
    h = np.einsum("xwy,wpqv,vabu,zur->xpazyqbr",
                  lenv, w1, w2, renv, optimize=True)
    d = lenv.shape[0] * 4 * renv.shape[2]
    return h.reshape(d, d)


def _lanczos_min(matvec, v0, max_iter, tol):
    """Smallest Ritz pair of a symmetric operator from a Krylov space.

    Full reorthogonalization (the basis stays small), with an early exit
    on the standard residual estimate |beta * last Ritz component|.
    Returns (ritz value, ritz vector) or None on a zero start vector.
    """
    nrm = np.linalg.norm(v0)
    if nrm == 0.0 or not np.isfinite(nrm):
        return None
    dim = v0.size
    max_iter = max(2, min(max_iter, dim))
    basis = np.empty((max_iter, dim))
    basis[0] = v0 / nrm
    alphas = np.empty(max_iter)
    betas = np.empty(max_iter)
    w = matvec(basis[0])
    k = 1
    evals = evecs = None
    for j in range(max_iter):
        alphas[j] = np.dot(basis[j], w)
        w = w - alphas[j] * basis[j]
        if j > 0:
            w = w - betas[j - 1] * basis[j - 1]
        w = w - basis[: j + 1].T @ (basis[: j + 1] @ w)
        k = j + 1
        evals, evecs = scipy.linalg.eigh_tridiagonal(alphas[:k], betas[: k - 1])
        beta = float(np.linalg.norm(w))
        residual = beta * abs(evecs[-1, 0])
        if (residual <= tol * max(1.0, abs(evals[0]))
                or beta < 1e-13 or k == max_iter):
            break
        betas[j] = beta
        basis[j + 1] = w / beta
        w = matvec(basis[j + 1])
    return float(evals[0]), evecs[:, 0] @ basis[:k]


def _solve_local(lenv, w1, w2, renv, theta, rng, tol):
    """Smallest eigenpair of the effective two-site problem.

    Returns (energy, new theta, failed flag); on solver failure the input
    tensor and its Rayleigh quotient are returned.
    """
    shape4 = theta.shape
    dim = theta.size
    flat = theta.reshape(-1)
    if dim <= _DENSE_LOCAL_CAP:
        hmat = _dense_local(lenv, w1, w2, renv)
        evals, evecs = np.linalg.eigh(0.5 * (hmat + hmat.T))
        vec = evecs[:, 0]
        if np.dot(vec, flat) < 0:
            vec = -vec
        return float(evals[0]), vec.reshape(shape4), False

    def matvec(v):
        return _theta_matvec(lenv, w1, w2, renv, v.reshape(shape4)).reshape(-1)

    v0 = flat + 1e-9 * np.linalg.norm(flat) * rng.standard_normal(dim)
    pair = _lanczos_min(matvec, v0, _KRYLOV_DIM, tol)
    if pair is None or not np.isfinite(pair[0]):
        hflat = matvec(flat)
        nrm = float(np.dot(flat, flat))
        energy = float(np.dot(flat, hflat) / nrm) if nrm > 0 else 0.0
        return energy, theta, True
    energy, vec = pair
    if np.dot(vec, flat) < 0:
        vec = -vec
    return energy, vec.reshape(shape4), False


def dmrg(mpo: Mpo, chi_schedule=(32, 64, 128), sweep_limit: int = 40,
         energy_tol: float = 1e-8, seed: int = 0, psi0: Mps | None = None,
         svd_cutoff: float = 1e-12, noise_schedule=DEFAULT_NOISE,
         progress=None):
    """Ground-state search; returns (normalized Mps, list of SweepRecord).

    chi_schedule must be nondecreasing; sweep s uses entry min(s, last),
    and noise_schedule is indexed the same way.  Stops early once the
    final cap is active, the noise is off, and the energy improves by
    less than energy_tol over a full sweep.  Raises ConvergenceError only
    if every local solve of every sweep failed.  progress, if given, is
    called with each SweepRecord as it is produced.
    """
    chi_schedule = tuple(int(c) for c in chi_schedule)
    if not chi_schedule or any(c < 1 for c in chi_schedule):
        raise ValueError("chi_schedule must hold positive bond caps")
    if list(chi_schedule) != sorted(chi_schedule):
        raise ValueError("chi_schedule must be nondecreasing")
    noise_schedule = tuple(float(a) for a in noise_schedule) or (0.0,)
    if any(a < 0 for a in noise_schedule) or noise_schedule[-1] != 0.0:
        raise ValueError("noise_schedule must be nonnegative and end at 0")
    shape = mpo.shape
    psi = psi0.copy() if psi0 is not None else default_initial_state(shape)
    if psi.shape != shape:
        raise ValueError("initial state shape does not match the operator")
    n = psi.num_sites
    if n < 2:
        raise ValueError("two-site sweeps need at least two sites")
    rng = np.random.default_rng(seed)
    psi.canonicalize(0)
    psi.normalize()

    lenv = [None] * (n + 1)
    renv = [None] * (n + 1)
    lenv[0] = np.ones((1, 1, 1))
    renv[n] = np.ones((1, 1, 1))
    for k in range(n - 1, 0, -1):
        renv[k] = _right_update(renv[k + 1], psi.tensors[k], mpo.tensors[k])

    trace: list[SweepRecord] = []
    total_ok = 0
    energy = np.inf
    for sweep in range(sweep_limit):
        chi = chi_schedule[min(sweep, len(chi_schedule) - 1)]
        noise = noise_schedule[min(sweep, len(noise_schedule) - 1)]
        # noisy sweeps get a loose iterative tolerance; the injected noise
        # would swamp any extra solver accuracy anyway
        local_tol = max(1e-11, 0.01 * noise)
        trunc = 0.0
        failures = 0

        def update(k: int, to_right: bool) -> float:
            nonlocal trunc, failures, total_ok
            theta = np.tensordot(psi.tensors[k], psi.tensors[k + 1], axes=(2, 0))
            e, theta, failed = _solve_local(
                lenv[k], mpo.tensors[k], mpo.tensors[k + 1], renv[k + 2],
                theta, rng, local_tol)
            if failed:
                failures += 1
            else:
                total_ok += 1
            if noise > 0.0:
                kick = rng.standard_normal(theta.shape)
                theta = theta + noise * np.linalg.norm(theta) * kick
            dl, _, _, dr = theta.shape
            u, s, vt = np.linalg.svd(theta.reshape(dl * 2, 2 * dr),
                                     full_matrices=False)
            keep = _kept_rank(s, chi, svd_cutoff)
            w = float(np.sum(s ** 2))
            if w > 0.0:
                trunc += float(np.sum(s[keep:] ** 2) / w)
            u, s, vt = u[:, :keep], s[:keep], vt[:keep]
            nrm = float(np.linalg.norm(s))
            if nrm > 0.0:
                s = s / nrm
            if to_right:
                psi.tensors[k] = u.reshape(dl, 2, keep)
                psi.tensors[k + 1] = (s[:, None] * vt).reshape(keep, 2, dr)
                psi.center = k + 1
                lenv[k + 1] = _left_update(lenv[k], psi.tensors[k], mpo.tensors[k])
            else:
                psi.tensors[k] = (u * s).reshape(dl, 2, keep)
                psi.tensors[k + 1] = vt.reshape(keep, 2, dr)
                psi.center = k
                renv[k + 1] = _right_update(
                    renv[k + 2], psi.tensors[k + 1], mpo.tensors[k + 1])
            return e

        for k in range(n - 1):
            e_sweep = update(k, to_right=True)
        for k in range(n - 2, -1, -1):
            e_sweep = update(k, to_right=False)

        trace.append(SweepRecord(
            sweep=sweep, chi=chi, energy=e_sweep, max_bond=psi.max_bond,
            truncation_error=trunc, solver_failures=failures))
        if progress is not None:
            progress(trace[-1])
        at_final_chi = sweep >= len(chi_schedule) - 1
        if at_final_chi and noise == 0.0 and abs(energy - e_sweep) < energy_tol:
            energy = e_sweep
            break
        energy = e_sweep

    if total_ok == 0:
        raise ConvergenceError("every local eigensolve failed; no progress made")
    psi.canonicalize(0)
    psi.normalize()
    return psi, trace


def ground_cycle_state(shape: LatticeShape, chi_schedule=(16, 32, 64),
                       sweep_limit: int = 40, energy_tol: float = 1e-8,
                       seed: int = 0, warm_penalty: float = 4.0,
                       tolerance: float = 1e-13, progress=None):
    """Two-stage search for the zero-energy cycle superposition.

    Sweeping directly on the bare Hamiltonian can settle on a low-lying
    sector eigenstate (a class-uniform state with a constant violation
    count), because such states need far less bond dimension than the
    cycle superposition.  Stage one explores with the diagonal penalties
    multiplied by warm_penalty, which pushes every violating sector up
    without moving the true ground space; its bond cap stays low (sector
    placement is cheap) and its tolerance is loose.  Stage two refines
    against the bare Hamiltonian from the stage-one state at the full
    schedule, noise off.  Returns (state, trace) with the two stage
    traces concatenated.
    """
    chi_schedule = tuple(int(c) for c in chi_schedule)
    warm_cap = min(32, chi_schedule[-1])
    warm_schedule = tuple(c for c in chi_schedule if c < warm_cap) + (warm_cap,)
    warm = build_mpo_hhc(shape, tolerance=tolerance,
                         penalty_weight=float(warm_penalty))
    psi, trace = dmrg(warm, chi_schedule=warm_schedule,
                      sweep_limit=sweep_limit,
                      energy_tol=max(energy_tol, 1e-6),
                      seed=seed, progress=progress)
    final_schedule = (warm_cap,) + tuple(c for c in chi_schedule if c > warm_cap)
    final = build_mpo_hhc(shape, tolerance=tolerance)
    psi, tail = dmrg(final, chi_schedule=final_schedule,
                     sweep_limit=sweep_limit, energy_tol=energy_tol,
                     seed=seed + 1, psi0=psi, noise_schedule=(0.0,),
                     progress=progress)
    return psi, trace + tail
