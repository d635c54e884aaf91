from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from plsim.gossip import (
    CompiledGossip,
    GossipConfig,
    acc_gossip,
    contraction_factor,
    default_round_count,
    momentum,
)
from plsim.numkit import InputError, RandomStream
from plsim.objectives import OracleMeter
from plsim.topology import complete_graph, laplacian_mixing, path_graph


@pytest.fixture(scope="module")
def path32():
    return laplacian_mixing(path_graph(32))


def test_round_count_examples():
    assert default_round_count(1, 1.0) == 14
    assert default_round_count(32, 0.0024) == 521


@given(st.integers(1, 10_000), st.floats(1e-4, 1.0), st.floats(1e-4, 1.0))
def test_round_count_monotone_in_gap(n, g1, g2):
    lo, hi = sorted((g1, g2))
    assert default_round_count(n, hi) <= default_round_count(n, lo)


def test_round_count_validation():
    with pytest.raises(InputError):
        default_round_count(4, 0.0)


def test_momentum_range():
    assert momentum(0.0) == pytest.approx(0.5)
    assert momentum(1.0) == pytest.approx(1.0)
    assert momentum(1.5) == pytest.approx(1.0)


def test_consensus_is_fixed_point(path32):
    Y = np.tile(RandomStream(0).normals(5), (32, 1))
    assert np.array_equal(acc_gossip(Y, path32, 25), Y) or np.allclose(acc_gossip(Y, path32, 25), Y, atol=1e-15)


def test_zero_rounds_is_identity(path32):
    Y = RandomStream(1).normals(64).reshape(32, 2)
    m = OracleMeter(32)
    assert np.array_equal(acc_gossip(Y, path32, 0, m), Y)
    assert m.comm_rounds == 0


def test_contraction_bound_k40(path32):
    Y = RandomStream(2).normals(32 * 3).reshape(32, 3)
    dev0 = np.linalg.norm(Y - Y.mean(axis=0))
    YK = acc_gossip(Y, path32, 40)
    assert np.linalg.norm(YK - Y.mean(axis=0)) <= contraction_factor(path32.lambda2, 40) * dev0
    assert np.linalg.norm(YK.mean(axis=0) - Y.mean(axis=0)) <= 1e-10 * np.linalg.norm(Y)


def test_meter_counts_rounds(path32):
    m = OracleMeter(32, tau=2.0)
    acc_gossip(np.zeros((32, 1)), path32, 7, m)
    CompiledGossip(path32, 3)(np.zeros((32, 1)), m)
    assert m.comm_rounds == 10 and m.time_units == 20.0


@pytest.mark.parametrize("K", [0, 1, 2, 17, 60])
def test_compiled_matches_recurrence(path32, K):
    Y = RandomStream(K).normals(32 * 4).reshape(32, 4)
    cg = CompiledGossip(path32, K)
    assert np.allclose(cg(Y), acc_gossip(Y, path32, K), atol=1e-12)
    assert np.abs(cg.M.sum(axis=0) - 1).max() <= 1e-14


def test_compiled_is_mean_preserving_over_many_rounds(path32):
    cg = CompiledGossip(path32, 521)
    assert np.abs(cg.M.sum(axis=0) - 1).max() <= 1e-14
    assert np.abs(cg.M - cg.M.T).max() <= 1e-14


def test_config_for_matrix():
    mm = laplacian_mixing(complete_graph(8))
    cfg = GossipConfig.for_matrix(mm, 5)
    assert cfg.K == 5 and cfg.eta_y == pytest.approx(momentum(mm.lambda2))
    assert cfg.rho == pytest.approx(math.sqrt(14) * (1 - (1 - 1 / math.sqrt(2)) * math.sqrt(1 - mm.lambda2)) ** 5)
    with pytest.raises(InputError):
        GossipConfig.for_matrix(mm, -1)


def test_shape_validation(path32):
    with pytest.raises(InputError):
        acc_gossip(np.zeros((3, 2)), path32, 1)
