"""Quality metrics for an approximate cycle-ensemble state.

The cycle count is read off as the product expectation of 2*PX on every
site; sampling-based metrics classify drawn configurations to expose how
much weight sits outside the single-cycle sector.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..exact import PX
from ..lattice import classify
from .mpo import Mpo
from .mps import Mps

TWO_PX = 2 * PX


def count_from_mps(mps: Mps) -> float:
    """Cycle-count estimate: expectation of 2*PX on every site."""
    return mps.expect_product({k: TWO_PX for k in range(mps.num_sites)})


@dataclass(frozen=True)
class QualityReport:
    shape: str
    chi: int
    energy: float | None
    count_estimate: float
    rel_count_error: float | None
    multiloop_prob: float
    mean_cycles: float | None
    entropy_profile: tuple[float, ...]
    max_s_over_m: float
    n_samples: int
    seed: int

    def to_json(self) -> str:
        return json.dumps({
            "shape": self.shape,
            "chi": self.chi,
            "energy": self.energy,
            "count_estimate": self.count_estimate,
            "rel_count_error": self.rel_count_error,
            "multiloop_prob": self.multiloop_prob,
            "mean_cycles": self.mean_cycles,
            "entropy_profile": list(self.entropy_profile),
            "max_s_over_m": self.max_s_over_m,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }, indent=2)


def quality_report(mps: Mps, mpo: Mpo | None = None, *, n_samples: int = 1000,
                   seed: int = 0, exact_count: int | None = None) -> QualityReport:
    """Counting, sampling, and entanglement diagnostics for one state.

    Samples are classified exactly; multiloop_prob is the fraction that is
    not a single Hamiltonian cycle, and mean_cycles averages the loop count
    over the sampled two-factors only (violating samples excluded).
    """
    shape = mps.shape
    energy = mpo.expectation(mps) if mpo is not None else None
    count = count_from_mps(mps)
    eps = None
    if exact_count is not None and exact_count > 0:
        eps = abs(count - exact_count) / exact_count
    samples = mps.sample(n_samples, seed=seed)
    reports = [classify(c) for c in samples]
    loop_counts = [r.num_loops for r in reports if r.is_two_factor]
    hc_hits = sum(1 for r in reports if r.is_two_factor and r.num_loops == 1)
    multiloop_prob = 1.0 - hc_hits / n_samples
    mean_cycles = float(np.mean(loop_counts)) if loop_counts else None
    entropy = mps.entropy_profile()
    short_side = min(shape.m, shape.n)
    max_s_over_m = float(entropy.max() / short_side) if entropy.size else 0.0
    return QualityReport(
        shape=str(shape), chi=mps.max_bond, energy=energy,
        count_estimate=count, rel_count_error=eps,
        multiloop_prob=multiloop_prob, mean_cycles=mean_cycles,
        entropy_profile=tuple(float(x) for x in entropy),
        max_s_over_m=max_s_over_m, n_samples=n_samples, seed=seed)
