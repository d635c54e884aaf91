from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from plsim.numkit import InputError
from plsim.topology import (
    Graph,
    MixingMatrix,
    TopologyError,
    bfs_distances,
    branch_index,
    complete_graph,
    iota,
    is_connected,
    laplacian,
    laplacian_mixing,
    mixing_for_gap,
    parse_topology,
    path_graph,
    ring_graph,
    read_edge_list,
    validate_mixing,
)


def test_presets_and_neighbors():
    g = parse_topology("linear:4")
    assert g.n == 4 and g.neighbors(1) == [0, 2]
    assert len(parse_topology("complete:5").edges) == 10
    assert len(parse_topology("ring:6").edges) == 6
    with pytest.raises(InputError):
        parse_topology("linear:x")
    with pytest.raises(InputError):
        parse_topology("torus:3")


def test_edge_list_is_one_based_with_comments(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("# triangle\n1 2\n2 3 0.5\n\n3 1  # closing edge\n")
    g = read_edge_list(p)
    assert g.n == 3 and g.edges == frozenset({(0, 1), (1, 2), (0, 2)})
    assert g.weight(2, 1) == 0.5
    assert parse_topology(f"file:{p}").edges == g.edges
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\n")
    with pytest.raises(InputError, match="1-based"):
        read_edge_list(bad)


def test_bfs_and_connectivity():
    g = path_graph(5)
    assert bfs_distances(g, [0]).tolist() == [0, 1, 2, 3, 4]
    assert bfs_distances(g, [0, 4]).tolist() == [0, 1, 2, 1, 0]
    assert not is_connected(Graph.from_pairs(3, [(0, 1)]))


def test_laplacian_path3_spectrum():
    ev = np.linalg.eigvalsh(laplacian(path_graph(3)))
    assert np.allclose(ev, [0, 1, 3])


def test_mixing_small_examples():
    w2 = laplacian_mixing(path_graph(2))
    assert np.allclose(w2.W, [[0.5, 0.5], [0.5, 0.5]]) and w2.gap == pytest.approx(1.0)
    assert laplacian_mixing(complete_graph(3)).gap == pytest.approx(1.0)


def test_path32_gap_matches_closed_form():
    mm = laplacian_mixing(path_graph(32))
    ref = (1 - math.cos(math.pi / 32)) / (1 + math.cos(math.pi / 32))
    assert abs(mm.gap - ref) <= 1e-10
    assert round(mm.gap, 4) == 0.0024


def test_mixing_matrix_is_read_only():
    mm = laplacian_mixing(path_graph(3))
    with pytest.raises(ValueError):
        mm.W[0, 0] = 1.0


def test_disconnected_rejected():
    with pytest.raises(TopologyError):
        laplacian_mixing(Graph.from_pairs(4, [(0, 1), (2, 3)]))


def test_iota_values():
    assert iota(2) == pytest.approx(1.0)
    assert iota(3) == pytest.approx(1 / 3)
    assert iota(4) == pytest.approx((1 - math.sqrt(2) / 2) / (1 + math.sqrt(2) / 2))
    assert iota(4) == pytest.approx(0.17157, abs=1e-5)
    vals = [iota(m) for m in range(2, 60)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_branch_index_boundaries():
    assert branch_index(1 / 3) == 3
    assert branch_index(0.9) == 2
    assert branch_index(1.0) == 2
    assert branch_index(0.0024) == 32
    assert branch_index(iota(5)) == 5


def test_mixing_for_gap_bracket_edges():
    mm = mixing_for_gap(iota(5))
    assert mm.n == 5 and "l=0.0" in mm.note
    assert np.allclose(mm.W, laplacian_mixing(path_graph(5)).W)
    one = mixing_for_gap(1.0)
    assert one.n == 3 and np.allclose(one.W, np.full((3, 3), 1 / 3))


@given(st.floats(1e-3, 1.0))
def test_mixing_for_gap_hits_target(gamma):
    mm = mixing_for_gap(gamma)
    assert abs(mm.gap - gamma) <= 1e-8
    assert all(c.passed for c in validate_mixing(mm, mm.graph, gamma))


def test_validate_negative_controls():
    mm = laplacian_mixing(path_graph(4))
    W = np.array(mm.W)
    W[0, 1] = W[1, 0] = -W[0, 1]
    bad = {c.clause: c.passed for c in validate_mixing(W, path_graph(4))}
    assert not (bad["a"] and bad["b"])
    ident = {c.clause: c.passed for c in validate_mixing(np.eye(4), path_graph(4), gamma=0.1)}
    assert not ident["c"]
    assert all(c.passed for c in validate_mixing(laplacian_mixing(ring_graph(7))))


def test_from_matrix_single_node():
    mm = MixingMatrix.from_matrix(np.ones((1, 1)))
    assert mm.n == 1 and mm.gap == 1.0
