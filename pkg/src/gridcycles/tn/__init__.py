"""Tensor-network machinery on the snake ordering: MPS states, the MPO form
of the cycle Hamiltonian, DMRG ground-state search, and quality metrics."""

from .dmrg import (DEFAULT_NOISE, SweepRecord, default_initial_state, dmrg,
                   ground_cycle_state)
from .mpo import Mpo, build_mpo_hhc
from .mps import (Mps, config_site_bits, encode_cycle_set, load_mps, save_mps,
                  superpose_product_states)
from .quality import TWO_PX, QualityReport, count_from_mps, quality_report

__all__ = [
    "DEFAULT_NOISE",
    "Mpo",
    "Mps",
    "QualityReport",
    "SweepRecord",
    "TWO_PX",
    "build_mpo_hhc",
    "config_site_bits",
    "count_from_mps",
    "default_initial_state",
    "dmrg",
    "encode_cycle_set",
    "ground_cycle_state",
    "load_mps",
    "quality_report",
    "save_mps",
    "superpose_product_states",
]
