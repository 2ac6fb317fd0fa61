"""Lattice encoding, classification, and ordering tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridcycles import (
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
from gridcycles.lattice import (
    count_bends_by_walk,
    vertex_window,
    window_is_bend,
    window_is_violation,
)

SMALL_SHAPES = [LatticeShape(2, 4), LatticeShape(3, 3), LatticeShape(4, 4),
                LatticeShape(2, 6), LatticeShape(3, 5), LatticeShape(4, 5)]
# odd-by-odd lattices have no Hamiltonian cycle at all
EVEN_SHAPES = [s for s in SMALL_SHAPES if (s.m * s.n) % 2 == 0]

shape_strategy = st.sampled_from(SMALL_SHAPES)


# -- shape bookkeeping -------------------------------------------------------

def test_shape_parse_roundtrip():
    shape = LatticeShape.parse("6x10")
    assert (shape.m, shape.n) == (6, 10)
    assert str(shape) == "6x10"
    assert LatticeShape.parse("6X10") == shape


@pytest.mark.parametrize("bad", ["6", "0x4", "ax4", "4x-2", "4x4x4", ""])
def test_shape_parse_rejects(bad):
    with pytest.raises(ValueError):
        LatticeShape.parse(bad)


def test_shape_counts():
    shape = LatticeShape(4, 6)
    assert shape.num_bulk == 3 * 5
    assert shape.num_configs == 2 ** 15
    assert shape.num_vertices == 24
    assert shape.num_plaquettes == 5 * 7
    assert shape.transposed() == LatticeShape(6, 4)


def test_parent_guard_rejects_2x2():
    with pytest.raises(ValueError):
        LatticeShape(2, 2).require_parent_ok()
    LatticeShape(2, 4).require_parent_ok()


# -- configurations ----------------------------------------------------------

def test_config_rejects_nonzero_frame():
    shape = LatticeShape(2, 4)
    bits = np.zeros((3, 5), dtype=np.uint8)
    bits[0, 2] = 1
    with pytest.raises(ValueError):
        DualConfig(shape, bits)


def test_config_rejects_wrong_grid():
    shape = LatticeShape(2, 4)
    with pytest.raises(ValueError):
        DualConfig(shape, np.zeros((2, 4), dtype=np.uint8))


@given(shape_strategy, st.data())
@settings(max_examples=60, deadline=None)
def test_bulk_index_roundtrip(shape, data):
    idx = data.draw(st.integers(0, shape.num_configs - 1))
    config = config_from_index(shape, idx)
    assert config.bulk_index == idx
    again = config_from_index(shape, config.bulk_index)
    assert np.array_equal(again.bits, config.bits)


@given(shape_strategy, st.data())
@settings(max_examples=40, deadline=None)
def test_text_and_json_roundtrip(shape, data):
    idx = data.draw(st.integers(0, shape.num_configs - 1))
    config = config_from_index(shape, idx)
    assert config_from_text(shape, config_to_text(config)).bulk_index == idx
    assert config_from_json(config_to_json(config)).bulk_index == idx


# -- windows -----------------------------------------------------------------

def test_window_predicates():
    # violations: empty, full, and the two checkerboards
    assert window_is_violation((0, 0, 0, 0))
    assert window_is_violation((1, 1, 1, 1))
    assert window_is_violation((0, 1, 1, 0))
    assert window_is_violation((1, 0, 0, 1))
    assert not window_is_violation((1, 0, 0, 0))
    assert not window_is_violation((1, 1, 0, 0))
    # bends carry odd window population
    assert window_is_bend((1, 0, 0, 0))
    assert window_is_bend((1, 1, 1, 0))
    assert not window_is_bend((1, 1, 0, 0))
    assert not window_is_bend((0, 0, 0, 0))


def test_vertex_window_reads_plaquette_quad():
    shape = LatticeShape(2, 4)
    config = reference_cycle(shape)
    w = vertex_window(config, 0, 0)
    assert w == (int(config.bits[0, 0]), int(config.bits[0, 1]),
                 int(config.bits[1, 0]), int(config.bits[1, 1]))


# -- classification ----------------------------------------------------------

@pytest.mark.parametrize("shape", EVEN_SHAPES)
def test_reference_cycle_is_hamiltonian(shape):
    report = classify(reference_cycle(shape))
    assert report.is_two_factor
    assert report.c_violations == 0
    assert report.num_loops == 1
    assert report.local_loops == 0


def test_reference_cycle_rejects_odd_by_odd():
    with pytest.raises(ValueError):
        reference_cycle(LatticeShape(3, 5))


def test_empty_config_violates_everywhere():
    shape = LatticeShape(3, 3)
    report = classify(config_from_index(shape, 0))
    assert not report.is_two_factor
    assert report.c_violations == shape.num_vertices


def test_single_plaquette_is_local_loop():
    # a lone plaquette leaves most vertices uncovered, so it is not a
    # spanning 2-factor, but it is exactly what the local-loop penalty sees
    shape = LatticeShape(4, 4)
    bits = np.zeros((5, 5), dtype=np.uint8)
    bits[2, 2] = 1
    report = classify(DualConfig(shape, bits))
    assert not report.is_two_factor
    assert report.local_loops == 1


def test_two_band_config_is_a_two_loop_factor():
    # two 1x3 plaquette strips whose rings tile all 16 vertices
    shape = LatticeShape(4, 4)
    bits = np.zeros((5, 5), dtype=np.uint8)
    bits[1, 1:4] = 1
    bits[3, 1:4] = 1
    report = classify(DualConfig(shape, bits))
    assert report.is_two_factor
    assert report.num_loops == 2
    assert len(trace_loops(DualConfig(shape, bits))) == 2


def test_bend_count_matches_walk():
    for shape in EVEN_SHAPES:
        config = reference_cycle(shape)
        assert classify(config).bends == count_bends_by_walk(config)


# -- loop tracing ------------------------------------------------------------

def test_trace_reference_cycle():
    shape = LatticeShape(4, 4)
    loops = trace_loops(reference_cycle(shape))
    assert len(loops) == 1
    loop = loops[0]
    assert len(loop) == shape.num_vertices
    assert len(set(loop)) == shape.num_vertices
    assert loop[0] == min(loop)
    # canonical direction: second vertex is the smaller neighbor
    assert loop[1] < loop[-1]
    # consecutive vertices are lattice-adjacent, including the closure
    for a, b in zip(loop, loop[1:] + [loop[0]]):
        assert abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


def test_trace_accepts_empty_config():
    assert trace_loops(config_from_index(LatticeShape(3, 3), 0)) == []


def test_trace_rejects_degree_four_vertex():
    # two plaquettes touching at one corner give that vertex degree 4
    shape = LatticeShape(4, 4)
    bits = np.zeros((5, 5), dtype=np.uint8)
    bits[1, 1] = 1
    bits[2, 2] = 1
    with pytest.raises(ValueError):
        trace_loops(DualConfig(shape, bits))


def test_edges_form_degree_two_graph():
    config = reference_cycle(LatticeShape(4, 5))
    degree = {}
    for a, b in extract_edges(config):
        degree[a] = degree.get(a, 0) + 1
        degree[b] = degree.get(b, 0) + 1
    assert set(degree.values()) == {2}
    assert len(degree) == 20


# -- snake ordering ----------------------------------------------------------

@pytest.mark.parametrize("shape", SMALL_SHAPES + [LatticeShape(6, 4)])
def test_snake_is_adjacent_permutation(shape):
    order = snake_order(shape)
    assert len(order) == shape.num_bulk
    assert len(set(order)) == shape.num_bulk
    for (r1, c1), (r2, c2) in zip(order, order[1:]):
        assert abs(r1 - r2) + abs(c1 - c2) == 1


def test_snake_runs_along_short_side():
    # cross-section of the chain equals the short lattice dimension
    shape = LatticeShape(4, 6)
    order = snake_order(shape)
    first_leg = order[: shape.m - 1]
    assert {c for _, c in first_leg} == {1}
    tall = LatticeShape(6, 4)
    first_leg = snake_order(tall)[: tall.n - 1]
    assert {r for r, _ in first_leg} == {1}


def test_snake_index_site_inverse():
    shape = LatticeShape(4, 5)
    for t in range(shape.num_bulk):
        assert snake_index(shape, snake_site(shape, t)) == t
    with pytest.raises(ValueError):
        snake_index(shape, (0, 0))
    with pytest.raises(ValueError):
        snake_site(shape, shape.num_bulk)
