from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from plsim.checks import (
    check_average_identity,
    check_chain_constants,
    check_far_from_optimum,
    check_gradients,
    check_psi_boundaries,
    check_span,
    check_split_identity,
    check_zero_chain,
    far_from_optimum_gap,
    half_support_delta,
    instance_suite,
    span_gaps,
)
from plsim.instances import (
    A_CONST,
    ChainSpec,
    InfeasibleConstruction,
    NetworkSplitSpec,
    block_embed,
    build_preset,
    chain_field,
    dfo_hard_instance,
    experiment_instance,
    g_grad,
    g_value,
    h_set,
    ifo_hard_instance,
    linear_span_instance,
    psi,
    psi_grad,
    q1_value,
    q2_value,
    r_value,
    scale_instance,
)
from plsim.numkit import InputError
from plsim.topology import branch_index, path_graph

G22_AT_ZERO = 2.210449218750


def test_psi_examples():
    assert psi(1.0, 0.0) == 0.0
    assert psi(1.0, 2.0) == pytest.approx(1.96875)
    assert psi_grad(1.0, 1.0) == 0.0
    with pytest.raises(InputError):
        psi(0.0, 1.0)


@given(st.floats(0.01, 10.0), st.floats(-20.0, 20.0))
def test_psi_bounds(theta, x):
    # the dip below x^2/2 never exceeds theta^2/32, and psi is at least 0 for x >= 0
    v = psi(theta, x)
    assert 0.5 * x * x - theta * theta / 32 - 1e-12 <= v <= 0.5 * x * x + 1e-12


def test_psi_boundaries_check():
    assert check_psi_boundaries().passed


def test_chain_examples():
    spec = ChainSpec(2, 2)
    assert g_value(spec, spec.b_vec) == 0.0
    assert g_value(spec, np.zeros(4)) == pytest.approx(G22_AT_ZERO, abs=1e-12)
    for T, t in [(1, 2), (2, 6), (3, 10), (4, 72)]:
        s = ChainSpec(T, t)
        assert g_value(s, np.zeros(s.dim)) <= 3 * T


def test_b_vec_ratios_are_exact():
    b = ChainSpec(3, 80).b_vec
    blocks = b[::3]
    assert np.array_equal(blocks[1:], blocks[:-1] * 7.0 / 8.0)


def test_split_pieces():
    spec = ChainSpec(2, 3)
    z = np.zeros(spec.dim)
    assert q1_value(spec, z) == 0.0 and q2_value(spec, z) == 0.0
    assert r_value(spec, spec.b_vec) == 0.0
    assert check_split_identity(spec).passed
    with pytest.raises(InputError):
        q1_value(ChainSpec(3, 2), np.zeros(6))


@pytest.mark.parametrize("T,t", [(1, 4), (2, 8), (4, 12)])
def test_zero_chain_per_block(T, t):
    spec = ChainSpec(T, t)
    assert check_zero_chain(spec).passed
    # explicit walk: support on k coordinates exposes at most coordinate k next
    for k in range(spec.dim):
        x = np.zeros(spec.dim)
        x[:k] = 0.3
        g = g_grad(spec, x)
        assert not np.any(g[k + 1:])


def test_chain_constants():
    assert all(r.passed for r in check_chain_constants(ChainSpec(2, 6), pairs=300))


def test_far_from_optimum_is_positive():
    res = check_far_from_optimum(ChainSpec(2, 12))
    assert res.passed and res.worst > 0


@pytest.mark.xfail(strict=True, reason="sampled gap is far below 3*T*delta; see notes on the half-support bound")
def test_far_from_optimum_meets_three_T_delta():
    spec = ChainSpec(2, 72)
    assert far_from_optimum_gap(spec) >= 3 * spec.T_blk * half_support_delta(spec.t_cnt)


def test_block_embed_examples():
    base = chain_field(ChainSpec(2, 2))
    objs = block_embed(base, 3)
    assert objs.full_value(np.zeros(objs.d)) - objs.f_star == pytest.approx(G22_AT_ZERO, abs=1e-12)
    one = block_embed(base, 1)
    x = np.linspace(-1, 1, 4)
    assert one.value(0, x) == base.value(x) and one.L == base.L and one.mu == base.mu
    assert objs.L == pytest.approx(base.L / math.sqrt(3)) and objs.mu == pytest.approx(base.mu / 3)


def test_scale_instance_examples():
    base = chain_field(ChainSpec(2, 2))
    same = scale_instance(base, 1.0, 1.0)
    x = np.linspace(0, 1, 4)
    assert same.value(x) == base.value(x)
    doubled = scale_instance(base, 2.0, 1.0)
    assert doubled.gap_at_zero() == pytest.approx(4.420898437500, abs=1e-12)
    s = scale_instance(base, 2.0, 3.0)
    assert (s.L, s.mu) == pytest.approx((18 * base.L, 18 * base.mu))
    with pytest.raises(InputError):
        scale_instance(base, -1.0, 1.0)


def test_ifo_hard_boundaries():
    L = 37 * A_CONST * 2.0
    objs = ifo_hard_instance(L, 1.0, 4, 1.0, 0.004)
    assert objs.metadata["T"] == 1
    assert objs.full_value(np.zeros(objs.d)) - objs.f_star <= 1.0
    with pytest.raises(InfeasibleConstruction):
        ifo_hard_instance(L, 1.0, 4, 1.0, 0.005)
    with pytest.raises(InfeasibleConstruction):
        ifo_hard_instance(L * 0.99, 1.0, 4, 1.0, 0.004)
    t = objs.metadata["t"]
    assert t == 2 * math.floor(math.log(1.0 / 0.012) / math.log(8 / 7))
    assert objs.d == 4 * 1 * t


def test_ifo_hard_suite_small():
    objs = ifo_hard_instance(37 * A_CONST * 2.0 * 3, 1.0, 4, 1.0, 0.004)
    assert objs.metadata["T"] == 3
    results = instance_suite(objs, pairs=200, grad_points=40)
    assert all(r.passed for r in results), [r for r in results if not r.passed]


def test_linear_span_examples():
    objs = linear_span_instance(1.0, 1.0, 2, 1.0)
    assert objs.d == 8 and objs.metadata["c"] == 1.0 and objs.f_star == pytest.approx(-1.0)
    assert objs.full_value(np.zeros(8)) - objs.f_star == pytest.approx(1.0)
    assert objs.full_value(objs.x_star) == pytest.approx(objs.f_star, abs=1e-12)
    assert np.all(objs.metadata["U"].sum(axis=1) == 4)


def test_linear_span_gap_per_revealed_block():
    objs = linear_span_instance(10.0, 1.0, 8, 1.0)
    gaps = {k: g for k, g, _ in span_gaps(objs)}
    assert gaps[4] == pytest.approx(0.5, abs=1e-12)
    assert check_span(objs).passed
    with pytest.raises(InfeasibleConstruction):
        linear_span_instance(1.0, 2.0, 2, 1.0)


def test_h_set_roles_and_identity():
    spec = ChainSpec(2, 4)
    split = NetworkSplitSpec(path_graph(8), (0,), 5)
    objs = h_set(split, spec)
    assert objs.metadata["C_sigma"] == (5, 6, 7)
    assert not np.any(objs.gradient(3, spec.b_vec))
    assert check_average_identity(objs).passed
    assert objs.full_value(np.zeros(spec.dim)) <= 3 * spec.T_blk / 8
    with pytest.raises(InfeasibleConstruction):
        h_set(NetworkSplitSpec(path_graph(4), (0,), 9), spec)


def test_experiment_instance_shape():
    objs, g = experiment_instance(32)
    assert objs.d == 144 and g.n == 32
    assert objs.metadata["C_sigma"] == (29, 30, 31)
    assert objs.L == pytest.approx(194 * A_CONST)
    assert objs.mu == pytest.approx(1.0)
    x_star = ChainSpec(2, 72).b_vec / math.sqrt(12 * A_CONST)
    assert objs.full_value(x_star) == pytest.approx(0.0, abs=1e-12)
    assert objs.full_value(np.zeros(144)) == pytest.approx(0.7722, abs=1e-4)
    with pytest.raises(InfeasibleConstruction):
        experiment_instance(20)


def test_dfo_hard_branches():
    kappa = 200 * A_CONST
    objs, mm = dfo_hard_instance(kappa, 1.0, 1 / 3, 1.0, 0.001)
    assert branch_index(1 / 3) == 3 and mm.n == 3
    objs9, mm9 = dfo_hard_instance(kappa, 1.0, 0.9, 1.0, 0.001)
    assert mm9.n == 3 and objs9.metadata["branch_m"] == 2
    for o in (objs, objs9):
        assert o.full_value(np.zeros(o.d)) - o.f_star <= 1.0
        assert o.metadata["actual_L"] <= o.L * (1 + 1e-12) and o.metadata["actual_mu"] >= o.mu * (1 - 1e-12)
    with pytest.raises(InfeasibleConstruction):
        dfo_hard_instance(100 * A_CONST, 1.0, 0.1, 1.0, 0.001)
    with pytest.raises(InfeasibleConstruction):
        dfo_hard_instance(kappa, 1.0, 0.1, 1.0, 0.01)


@pytest.mark.parametrize("preset", ["chain:2,6", "common-hessian:10,1,8,1", "hard-decentralized",
                                    "dfo-hard:4000000,1,0.1,1,0.001"])
def test_preset_suites_pass(preset):
    objs, _ = build_preset(preset)
    results = instance_suite(objs, pairs=150, grad_points=30)
    assert all(r.passed for r in results), [r for r in results if not r.passed]


def test_gradient_checks_on_every_family():
    for objs in (block_embed(chain_field(ChainSpec(2, 4)), 2), linear_span_instance(10, 1, 4, 1),
                 experiment_instance(32)[0]):
        assert check_gradients(objs, points=30).passed


def test_preset_alias_builds_same_instance():
    a, _ = build_preset("common-hessian:10,1,8,1")
    b, _ = build_preset("theorem2:10,1,8,1")
    x = np.linspace(-1.0, 1.0, a.d)
    assert a.full_value(x) == b.full_value(x) and a.L == b.L and a.mu == b.mu


def test_build_preset_errors():
    with pytest.raises(InputError):
        build_preset("nosuch:1")
    with pytest.raises(InputError):
        build_preset("common-hessian:1,2")


def test_chain_spec_minimum_sizes():
    with pytest.raises(InputError):
        ChainSpec(2, 1)
    with pytest.raises(InputError):
        ChainSpec(0, 4)
