"""Hamiltonian-cycle ensembles on rectangular lattices.

Exact counting oracles, the local-rule parent Hamiltonian with its exact
spectral verification, a matrix-product-state pipeline (DMRG, counting,
sampling, entropy), finite-temperature polymer ensembles, and an
amplitude-amplification counting demonstration.
"""

import os as _os

# Honor GRIDCYCLES_THREADS before anything imports numpy; explicit
# *_NUM_THREADS settings in the environment still win.
_threads = _os.environ.get("GRIDCYCLES_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                 "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from gridcycles.counting import (
    CountResult,
    boltzmann_brute_force,
    brute_force_count,
    count_cycles,
    enumerate_cycles,
    enumerate_two_factors,
    transfer_matrix_count,
)
from gridcycles.errors import ConvergenceError, ResourceLimitError
from gridcycles.exact import (
    SpectralReport,
    assemble_hhc,
    build_hc_penalty,
    build_laplacian,
    build_local_loop_penalty,
    ground_state,
    sector_spectra,
)
from gridcycles.lattice import (
    ClassifyReport,
    DualConfig,
    LatticeShape,
    classify,
    config_from_index,
    config_from_json,
    config_from_text,
    config_to_json,
    config_to_text,
    extract_edges,
    reference_cycle,
    snake_index,
    snake_order,
    snake_site,
    trace_loops,
)
from gridcycles.protocols import (
    AmplificationRun,
    ChemicalSequence,
    DressedEnsemble,
    EnergyModel,
    amplify_count,
    boltzmann_mps,
    dress,
    heteropolymer_partition,
    hp_contact_model,
)
from gridcycles.rules import (
    RuleDef,
    RuleInstance,
    SectorPartition,
    apply_rule,
    enumerate_instances,
    generate_rule_set,
    sector_partition,
)
from gridcycles.tn import (
    Mpo,
    Mps,
    QualityReport,
    build_mpo_hhc,
    count_from_mps,
    dmrg,
    encode_cycle_set,
    ground_cycle_state,
    load_mps,
    quality_report,
    save_mps,
)

__all__ = [
    "AmplificationRun",
    "ChemicalSequence",
    "ClassifyReport",
    "ConvergenceError",
    "CountResult",
    "DressedEnsemble",
    "DualConfig",
    "EnergyModel",
    "LatticeShape",
    "Mpo",
    "Mps",
    "QualityReport",
    "ResourceLimitError",
    "RuleDef",
    "RuleInstance",
    "SectorPartition",
    "SpectralReport",
    "amplify_count",
    "apply_rule",
    "assemble_hhc",
    "boltzmann_brute_force",
    "boltzmann_mps",
    "brute_force_count",
    "build_hc_penalty",
    "build_laplacian",
    "build_local_loop_penalty",
    "build_mpo_hhc",
    "classify",
    "config_from_index",
    "config_from_json",
    "config_from_text",
    "config_to_json",
    "config_to_text",
    "count_cycles",
    "count_from_mps",
    "dmrg",
    "dress",
    "encode_cycle_set",
    "enumerate_cycles",
    "enumerate_instances",
    "enumerate_two_factors",
    "extract_edges",
    "generate_rule_set",
    "ground_cycle_state",
    "ground_state",
    "heteropolymer_partition",
    "hp_contact_model",
    "load_mps",
    "quality_report",
    "reference_cycle",
    "save_mps",
    "sector_partition",
    "sector_spectra",
    "snake_index",
    "snake_order",
    "snake_site",
    "trace_loops",
    "transfer_matrix_count",
]

__version__ = "0.1.0"
