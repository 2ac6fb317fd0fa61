"""Variational ground-state search on small lattices."""

import numpy as np
import pytest

from gridcycles import (
    LatticeShape,
    enumerate_cycles,
    reference_cycle,
    transfer_matrix_count,
)
from gridcycles.tn import (
    DEFAULT_NOISE,
    build_mpo_hhc,
    count_from_mps,
    default_initial_state,
    dmrg,
    encode_cycle_set,
    ground_cycle_state,
)


def test_default_initial_state_is_normalized_cycle_mix():
    shape = LatticeShape(4, 4)
    psi = default_initial_state(shape)
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    # every contributing basis state is a valid cycle
    dense = psi.to_dense()
    support = set(np.flatnonzero(np.abs(dense) > 1e-12).tolist())
    assert support <= set(enumerate_cycles(shape))
    assert reference_cycle(shape).bulk_index in support
    assert len(support) > 1


def test_noise_schedule_validation():
    mpo = build_mpo_hhc(LatticeShape(2, 4))
    with pytest.raises(ValueError):
        dmrg(mpo, noise_schedule=(1e-2,))           # must end quiet
    with pytest.raises(ValueError):
        dmrg(mpo, noise_schedule=(-1e-3, 0.0))      # nonnegative
    assert DEFAULT_NOISE[-1] == 0.0


def test_dmrg_finds_singleton_cycle():
    shape = LatticeShape(2, 8)
    psi, trace = dmrg(build_mpo_hhc(shape), chi_schedule=(8,))
    assert trace[-1].energy < 1e-10
    assert count_from_mps(psi) == pytest.approx(1.0, abs=1e-8)


def test_dmrg_reaches_uniform_state_small():
    shape = LatticeShape(4, 4)
    psi, trace = ground_cycle_state(shape, chi_schedule=(8, 16))
    exact = encode_cycle_set(shape).to_dense()
    dense = psi.to_dense()
    overlap = abs(float(np.dot(dense, exact)))
    assert overlap > 1.0 - 1e-8
    assert count_from_mps(psi) == pytest.approx(6.0, rel=1e-6)


def test_dmrg_count_matches_transfer_6x4():
    shape = LatticeShape(6, 4)
    exact = transfer_matrix_count(shape).count
    psi, trace = ground_cycle_state(shape, chi_schedule=(16, 32))
    rel = abs(count_from_mps(psi) - exact) / exact
    assert rel < 1e-3
    assert trace[-1].energy < 1e-7


def test_trace_records_carry_run_metadata():
    shape = LatticeShape(2, 6)
    _, trace = dmrg(build_mpo_hhc(shape), chi_schedule=(4, 8),
                    noise_schedule=(1e-3, 0.0))
    assert trace[0].sweep == 0
    assert {r.chi for r in trace} <= {4, 8}
    for rec in trace:
        assert rec.max_bond <= rec.chi
        assert rec.truncation_error >= 0.0
        assert rec.solver_failures >= 0


def test_noise_free_sweeps_do_not_raise_energy():
    shape = LatticeShape(2, 6)
    _, trace = dmrg(build_mpo_hhc(shape), chi_schedule=(8,),
                    noise_schedule=(0.0,))
    energies = [r.energy for r in trace]
    for a, b in zip(energies, energies[1:]):
        assert b <= a + 1e-9


def test_same_seed_reproduces():
    shape = LatticeShape(4, 4)
    r1 = ground_cycle_state(shape, chi_schedule=(8, 16), seed=3)
    r2 = ground_cycle_state(shape, chi_schedule=(8, 16), seed=3)
    assert [rec.energy for rec in r1[1]] == [rec.energy for rec in r2[1]]
    assert count_from_mps(r1[0]) == count_from_mps(r2[0])


def test_progress_callback_sees_each_sweep():
    shape = LatticeShape(2, 6)
    seen = []
    dmrg(build_mpo_hhc(shape), chi_schedule=(8,), progress=seen.append)
    assert len(seen) >= 1
    assert all(hasattr(r, "energy") for r in seen)
