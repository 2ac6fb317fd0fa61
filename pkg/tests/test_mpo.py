"""MPO assembly against the dense operator, expectations, and application."""

import numpy as np
import pytest

from gridcycles import LatticeShape, assemble_hhc
from gridcycles.tn import Mps, build_mpo_hhc


@pytest.mark.parametrize("shape", [LatticeShape(2, 4), LatticeShape(2, 6),
                                   LatticeShape(3, 4)])
def test_mpo_matches_exact_operator(shape):
    # to_dense already lands in the packed bulk-integer basis
    dense = build_mpo_hhc(shape).to_dense()
    exact = assemble_hhc(shape).toarray()
    assert np.max(np.abs(dense - exact)) < 1e-10


def test_expectation_matches_dense_quadratic_form():
    shape = LatticeShape(2, 6)
    mpo = build_mpo_hhc(shape)
    rng = np.random.default_rng(4)
    vec = rng.standard_normal(shape.num_configs)
    vec /= np.linalg.norm(vec)
    psi = Mps.from_dense(shape, vec)
    exact = assemble_hhc(shape).toarray()
    want = float(vec @ exact @ vec)
    assert mpo.expectation(psi) == pytest.approx(want, abs=1e-10)


def test_apply_matches_dense_matvec():
    shape = LatticeShape(2, 4)
    mpo = build_mpo_hhc(shape)
    rng = np.random.default_rng(8)
    vec = rng.standard_normal(shape.num_configs)
    psi = Mps.from_dense(shape, vec)
    out = mpo.apply(psi)
    want = assemble_hhc(shape).toarray() @ vec
    assert np.allclose(out.to_dense(), want, atol=1e-10)


def test_penalty_weight_scales_only_diagonal_terms():
    shape = LatticeShape(2, 4)
    h1 = build_mpo_hhc(shape).to_dense()
    h4 = build_mpo_hhc(shape, penalty_weight=4.0).to_dense()
    diff = h4 - h1
    # the difference is 3x the diagonal penalty; hops cancel exactly
    assert np.max(np.abs(diff - np.diag(np.diag(diff)))) < 1e-10
    assert np.min(np.diag(diff)) > -1e-12


def test_ground_space_unchanged_by_penalty_weight():
    shape = LatticeShape(2, 6)
    h4 = build_mpo_hhc(shape, penalty_weight=4.0).to_dense()
    evals, evecs = np.linalg.eigh(h4)
    assert abs(evals[0]) < 1e-10
    # the zero mode is still the uniform cycle state
    vec = evecs[:, 0]
    psi = build_mpo_hhc(shape).to_dense() @ vec
    assert np.linalg.norm(psi) < 1e-9


def test_mpo_bond_dimension_stays_modest():
    mpo = build_mpo_hhc(LatticeShape(4, 4))
    assert mpo.max_bond <= 64


def test_mpo_compress_preserves_action():
    shape = LatticeShape(2, 4)
    mpo = build_mpo_hhc(shape)
    before = mpo.to_dense()
    mpo.compress(cutoff=1e-14)
    assert np.max(np.abs(mpo.to_dense() - before)) < 1e-9
