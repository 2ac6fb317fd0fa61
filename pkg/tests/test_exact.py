"""Sparse-operator assembly and spectral facts on exhaustive shapes."""

import numpy as np
import pytest

from gridcycles import (
    LatticeShape,
    assemble_hhc,
    build_hc_penalty,
    build_laplacian,
    build_local_loop_penalty,
    classify,
    config_from_index,
    enumerate_cycles,
    enumerate_two_factors,
    ground_state,
    sector_spectra,
)
from gridcycles.errors import ResourceLimitError
from gridcycles.exact import iter_local_terms
from gridcycles.lattice import count_local_loops


def test_vertex_penalty_counts_violations():
    shape = LatticeShape(2, 4)
    diag = build_hc_penalty(shape).diagonal
    for idx in range(shape.num_configs):
        assert diag[idx] == classify(config_from_index(shape, idx)).c_violations


def test_vertex_penalty_kernel_is_two_factor_set():
    shape = LatticeShape(3, 4)
    diag = build_hc_penalty(shape).diagonal
    kernel = set(np.flatnonzero(diag == 0).tolist())
    assert kernel == set(enumerate_two_factors(shape))


def test_loop_penalty_counts_local_loops():
    shape = LatticeShape(3, 4)
    diag = build_local_loop_penalty(shape).diagonal
    for idx in range(0, shape.num_configs, 7):
        config = config_from_index(shape, idx)
        assert diag[idx] == count_local_loops(config)


def test_laplacian_is_a_graph_laplacian():
    shape = LatticeShape(2, 6)
    lap = build_laplacian(shape).matrix
    dense = lap.toarray()
    assert np.allclose(dense, dense.T)
    assert np.allclose(dense.sum(axis=1), 0.0, atol=1e-12)
    off = dense - np.diag(np.diag(dense))
    assert (off <= 1e-12).all()
    eigs = np.linalg.eigvalsh(dense)
    assert eigs[0] > -1e-9


def test_hamiltonian_is_sum_of_parts():
    shape = LatticeShape(2, 4)
    total = assemble_hhc(shape).toarray()
    parts = (build_hc_penalty(shape).toarray()
             + build_local_loop_penalty(shape).toarray()
             + build_laplacian(shape).toarray())
    assert np.allclose(total, parts, atol=1e-14)


def test_ground_space_is_uniform_cycle_state():
    shape = LatticeShape(4, 4)
    evals, evecs = ground_state(assemble_hhc(shape), k=2)
    assert abs(evals[0]) < 1e-10
    assert evals[1] > 1e-6          # nondegenerate
    vec = evecs[:, 0]
    vec = vec * np.sign(vec.sum())
    cycles = enumerate_cycles(shape)
    amp = 1.0 / np.sqrt(len(cycles))
    mask = np.zeros(shape.num_configs, dtype=bool)
    mask[list(cycles)] = True
    assert np.allclose(vec[mask], amp, atol=1e-8)
    assert np.allclose(vec[~mask], 0.0, atol=1e-8)


def test_every_local_term_annihilates_ground_state():
    shape = LatticeShape(2, 6)
    _, evecs = ground_state(assemble_hhc(shape), k=1)
    vec = evecs[:, 0]
    for name, term in iter_local_terms(shape):
        assert np.linalg.norm(term.matvec(vec)) < 1e-8, name


def test_local_terms_sum_to_hamiltonian():
    shape = LatticeShape(2, 4)
    acc = np.zeros((shape.num_configs, shape.num_configs))
    for _, term in iter_local_terms(shape):
        acc += term.toarray()
    assert np.allclose(acc, assemble_hhc(shape).toarray(), atol=1e-12)


def test_sector_report_self_checks():
    report = sector_spectra(LatticeShape(2, 6))
    assert abs(report.e0) < 1e-10
    assert report.ground_degeneracy == 1
    assert report.gap >= report.global_gap_bound - 1e-9
    kinds = {s.label.split("(")[0] for s in report.sectors}
    assert "HC" in kinds
    payload = report.to_json()
    assert '"sectors"' in payload


def test_exact_cap():
    with pytest.raises(ResourceLimitError):
        assemble_hhc(LatticeShape(6, 7))


def test_parent_guard_in_spectra():
    with pytest.raises(ValueError):
        sector_spectra(LatticeShape(2, 2))
