"""GD, centralized GD, DGD with gradient tracking, and DRONE.

Every solver returns a :class:`RunRecord` with one row per iteration
(including iteration 0). Gradient-oracle calls go through the meter;
the per-row diagnostics do not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gossip import CompiledGossip, contraction_factor, default_round_count
from .numkit import InputError, RandomStream, draw_bernoulli, draw_multinomial
from .objectives import (
    LocalObjectiveSet,
    OracleMeter,
    UnsupportedDiagnostic,
    metered_gradients,
    record_comm_round,
    record_computation_step,
)
from .topology import MixingMatrix

COLUMNS = ["iter", "lfo_total", "comm_rounds", "time_units", "gap", "grad_norm",
           "consensus_err", "U", "V", "C", "Phi"]

DIVERGENCE_FACTOR = 1e12


class DivergenceError(ArithmeticError):
    def __init__(self, solver: str, iteration: int, detail: str):
        super().__init__(f"{solver} diverged at iteration {iteration}: {detail}")
        self.solver = solver
        self.iteration = iteration


@dataclass
class SolverParams:
    eta: float
    T_iters: int
    K: int = 1
    p: float = 1.0
    b: int = 1
    seed: int = 0

    def validate(self, n: int | None = None) -> None:
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise InputError(f"step size must be positive, got {self.eta}")
        if self.T_iters < 0 or self.K < 0:
            raise InputError("iteration and round counts must be non-negative")
        if not 0.0 < self.p <= 1.0:
            raise InputError(f"p must lie in (0, 1], got {self.p}")
        if self.b < 1 or (n is not None and self.b > n):
            raise InputError(f"b must be an integer in [1, n], got {self.b}")


@dataclass
class RunRecord:
    solver: str
    columns: dict = field(default_factory=lambda: {c: [] for c in COLUMNS})
    values: list = field(default_factory=list)
    x_bar: np.ndarray | None = None
    x_out: np.ndarray | None = None
    relative_gap: bool = False
    notes: list = field(default_factory=list)
    invariants: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.columns["iter"])

    def column(self, name: str) -> np.ndarray:
        return np.array(self.columns[name], dtype=float)

    def rows(self):
        for k in range(len(self)):
            yield [self.columns[c][k] for c in COLUMNS]

    def rebase_gap(self, f_ref: float) -> None:
        """Recompute ``gap`` as ``f(x_bar) - f_ref`` for objectives without a known optimum."""
        self.columns["gap"] = [v - f_ref for v in self.values]
        self.relative_gap = True

    def first_reaching(self, eps: float, axis: str = "iter") -> float | None:
        gap = self.column("gap")
        hit = np.flatnonzero(gap <= eps)
        return None if hit.size == 0 else float(self.columns[axis][hit[0]])


class _Recorder:
    def __init__(self, name: str, objs: LocalObjectiveSet, meter: OracleMeter, stop_at: float | None):
        self.rec = RunRecord(name, relative_gap=objs.f_star is None)
        self.objs = objs
        self.meter = meter
        self.stop_at = stop_at
        self.gap0 = None

    def add(self, t: int, xbar: np.ndarray, consensus: float = 0.0, lyap=None) -> bool:
        """Append a row; return True when the run should stop early."""
        objs = self.objs
        if not np.all(np.isfinite(xbar)):
            raise DivergenceError(self.rec.solver, t, "non-finite iterate")
        fval = objs.full_value(xbar)
        gap = fval - objs.f_star if objs.f_star is not None else fval
        if self.gap0 is None:
            self.gap0 = gap
        elif objs.f_star is not None and gap > DIVERGENCE_FACTOR * max(self.gap0, 1e-300):
            raise DivergenceError(self.rec.solver, t, f"gap {gap:.3e} exceeds 1e12 x initial gap {self.gap0:.3e}")
        if not math.isfinite(fval):
            raise DivergenceError(self.rec.solver, t, "non-finite objective value")
        lfo, rounds, time_units = self.meter.snapshot()
        c = self.rec.columns
        c["iter"].append(t)
        c["lfo_total"].append(lfo)
        c["comm_rounds"].append(rounds)
        c["time_units"].append(time_units)
        c["gap"].append(gap)
        c["grad_norm"].append(float(np.linalg.norm(objs.full_gradient(xbar))))
        c["consensus_err"].append(consensus)
        U, V, C, Phi = lyap if lyap is not None else (None, None, None, None)
        c["U"].append(U)
        c["V"].append(V)
        c["C"].append(C)
        c["Phi"].append(Phi)
        self.rec.values.append(fval)
        self.rec.x_bar = xbar
        return self.stop_at is not None and objs.f_star is not None and gap <= self.stop_at


def _all_gradients(objs, meter, X):
    return metered_gradients(objs, meter, np.arange(objs.n), X)


def _gd_core(name, objs, x0, eta, T_iters, meter, tau_round, stop_at):
    if not (eta > 0):
        raise InputError(f"step size must be positive, got {eta}")
    x = np.array(x0, dtype=float)
    if x.shape != (objs.d,):
        raise InputError(f"x0 must have shape ({objs.d},)")
    rec = _Recorder(name, objs, meter, stop_at)
    if rec.add(0, x):
        return rec.rec
    agents = np.arange(objs.n)
    for t in range(T_iters):
        G = metered_gradients(objs, meter, agents, np.broadcast_to(x, (objs.n, objs.d)))
        record_computation_step(meter)
        if tau_round:
            record_comm_round(meter)
        x = x - eta * G.mean(axis=0)
        if rec.add(t + 1, x):
            break
    rec.rec.x_out = x
    return rec.rec


def gd(objs: LocalObjectiveSet, x0, eta: float, T_iters: int, meter: OracleMeter | None = None,
       stop_at: float | None = None) -> RunRecord:
    """Full-gradient descent; each step costs ``n`` LFO calls and one time unit."""
    meter = meter or OracleMeter(objs.n)
    return _gd_core("gd", objs, x0, eta, T_iters, meter, False, stop_at)


def cgd(objs: LocalObjectiveSet, x0, eta: float, T_iters: int, tau: float = 0.0,
        meter: OracleMeter | None = None, stop_at: float | None = None) -> RunRecord:
    """GD run by agents around a server: same iterates as :func:`gd`, plus one
    aggregation round (cost ``tau``) per step."""
    meter = meter or OracleMeter(objs.n, tau)
    meter.tau = tau
    return _gd_core("cgd", objs, x0, eta, T_iters, meter, True, stop_at)


# ---------------------------------------------------------------------------
# decentralized methods


def lyapunov_components(objs: LocalObjectiveSet, X, S, G, eta: float, p: float, rho: float,
                        L: float | None = None, grads: np.ndarray | None = None):
    """``(U, V, C, Phi)`` of a single trajectory state; unmetered.

    ``Phi = gap + (2 eta / p) U + 8 L rho^2 n eta^2 V + L C``.
    """
    if objs.f_star is None:
        raise UnsupportedDiagnostic(f"{objs.name}: Lyapunov terms need a known optimal value")
    L = objs.L if L is None else L
    n = objs.n
    F = objs.local_gradients(X) if grads is None else grads
    D = G - F
    U = float(np.sum(D.mean(axis=0) ** 2))
    V = float(np.sum(D * D)) / n
    xbar = X.mean(axis=0)
    sbar = S.mean(axis=0)
    C = float(np.sum((X - xbar) ** 2)) + eta * eta * float(np.sum((S - sbar) ** 2))
    gap = objs.full_value(xbar) - objs.f_star
    Phi = gap + (2.0 * eta / p) * U + 8.0 * L * rho * rho * n * eta * eta * V + L * C
    return U, V, C, Phi


def _check_network(objs, W):
    if W.n != objs.n:
        raise InputError(f"mixing matrix has {W.n} nodes but the objective has {objs.n} agents")


def _decentralized(name, objs, W, xbar0, params, tau, meter, stop_at, lyapunov, estimator):
    params.validate(objs.n)
    _check_network(objs, W)
    n, d = objs.n, objs.d
    meter = meter or OracleMeter(n, tau)
    meter.tau = tau
    gossip = CompiledGossip(W, params.K)
    rho = contraction_factor(W.lambda2, params.K)
    use_lyap = lyapunov and objs.f_star is not None and objs.L is not None
    xbar0 = np.asarray(xbar0, dtype=float)
    if xbar0.shape != (d,):
        raise InputError(f"xbar0 must have shape ({d},)")
    X = np.tile(xbar0, (n, 1))
    G = _all_gradients(objs, meter, X)
    record_computation_step(meter)
    S = G.copy()
    rec = _Recorder(name, objs, meter, stop_at)
    if not use_lyap and lyapunov and objs.f_star is not None:
        rec.rec.notes.append("Lyapunov terms skipped: no declared L")

    def row(t, X, S, G, Fx):
        xbar = X.mean(axis=0)
        lyap = lyapunov_components(objs, X, S, G, params.eta, params.p, rho, grads=Fx) if use_lyap else None
        return rec.add(t, xbar, float(np.linalg.norm(X - xbar)), lyap)

    stop = row(0, X, S, G, G)
    rs = RandomStream(params.seed)
    step = estimator(objs, meter, rs, params)
    # residuals of the two mean identities, with the scales they are judged against
    inv = rec.rec.invariants
    inv.update(tracking=[], tracking_scale=[], mean_recursion=[], mean_scale=[])

    def audit(S, G):
        gbar = G.mean(axis=0)
        inv["tracking"].append(float(np.linalg.norm(S.mean(axis=0) - gbar)))
        inv["tracking_scale"].append(1.0 + float(np.linalg.norm(gbar)))

    audit(S, G)
    t = 0
    while not stop and t < params.T_iters:
        xbar = X.mean(axis=0)
        move = params.eta * S.mean(axis=0)
        X_new = gossip(X - params.eta * S, meter)
        G_new = step(t, X, X_new, G)
        record_computation_step(meter)
        S = gossip(S + G_new - G, meter)
        X, G = X_new, G_new
        audit(S, G)
        inv["mean_recursion"].append(float(np.linalg.norm(X.mean(axis=0) - (xbar - move))))
        inv["mean_scale"].append(1.0 + float(np.linalg.norm(xbar)) + float(np.linalg.norm(move)))
        t += 1
        Fx = objs.local_gradients(X) if use_lyap else None
        stop = row(t, X, S, G, Fx)
    pick = RandomStream(params.seed).fork(0x5EED).integer(n)
    rec.rec.x_out = X[pick].copy()
    rec.rec.notes.append(f"x_out taken from agent {pick}")
    return rec.rec


def _full_estimator(objs, meter, rs, params):
    agents = np.arange(objs.n)

    def step(t, X, X_new, G):
        return metered_gradients(objs, meter, agents, X_new)

    return step


def _drone_estimator(objs, meter, rs, params):
    n = objs.n
    agents = np.arange(n)
    # version of the iterate at which each agent last evaluated its gradient
    cache_version = np.zeros(n, dtype=np.int64)
    cache_grad = None

    def step(t, X, X_new, G):
        nonlocal cache_grad
        if cache_grad is None:
            cache_grad = G.copy()  # initialization evaluated every agent at version 0
        zeta = draw_bernoulli(rs, params.p)
        xi = draw_multinomial(rs, params.b, n)
        if zeta == 1:
            G_new = metered_gradients(objs, meter, agents, X_new)
            cache_grad[:] = G_new
            cache_version[:] = t + 1
            return G_new
        G_new = G.copy()
        active = np.flatnonzero(xi > 0)
        if active.size == 0:
            return G_new
        fresh = metered_gradients(objs, meter, active, X_new[active])
        old = cache_grad[active].copy()
        miss = active[cache_version[active] != t]
        if miss.size:
            old[cache_version[active] != t] = metered_gradients(objs, meter, miss, X[miss])
        G_new[active] += (xi[active] * n / params.b)[:, None] * (fresh - old)
        cache_grad[active] = fresh
        cache_version[active] = t + 1
        return G_new

    return step


def dgd_gt(objs: LocalObjectiveSet, W: MixingMatrix, xbar0, eta: float, K: int, T_iters: int,
           tau: float = 0.0, meter: OracleMeter | None = None, stop_at: float | None = None,
           lyapunov: bool = True) -> RunRecord:
    """Decentralized gradient descent with gradient tracking and accelerated gossip.

    Every iteration evaluates all ``n`` local gradients and gossips twice
    (``2K`` rounds).
    """
    params = SolverParams(eta=eta, T_iters=T_iters, K=K, p=1.0, b=1)
    return _decentralized("dgd_gt", objs, W, xbar0, params, tau, meter, stop_at, lyapunov, _full_estimator)


def drone(objs: LocalObjectiveSet, W: MixingMatrix, xbar0, params: SolverParams, tau: float = 0.0,
          meter: OracleMeter | None = None, stop_at: float | None = None, lyapunov: bool = True) -> RunRecord:
    """DRONE: gradient tracking with a loopless variance-reduced estimator.

    Each iteration draws ``zeta ~ Bernoulli(p)`` and then
    ``xi ~ Multinomial(b, 1/n)``. On ``zeta = 1`` every agent refreshes its
    gradient; otherwise agent ``i`` adds ``(xi_i n / b)`` times its gradient
    difference. The previous gradient comes from a per-agent cache and is
    recomputed (and metered) on a miss.
    """
    return _decentralized("drone", objs, W, xbar0, params, tau, meter, stop_at, lyapunov, _drone_estimator)


# ---------------------------------------------------------------------------
# parameter selection


@dataclass
class ParamReport:
    params: SolverParams
    adjustments: list


def drone_default_params(n: int, L: float, mu: float, gamma: float, Phi0: float, eps: float,
                         seed: int = 0) -> ParamReport:
    """Default DRONE parameters for an ``eps``-accurate Lyapunov value.

    ``p = 1/(min(sqrt(n), kappa) + 1)``, ``b = ceil((1-p)/p)``,
    ``eta = min(1/(20L), p/(2mu))``, the default gossip round count, and
    ``T = ceil(log(Phi0/eps) / (mu eta))``.
    """
    for name, v in [("n", n), ("L", L), ("mu", mu), ("Phi0", Phi0), ("eps", eps)]:
        if not v > 0:
            raise InputError(f"{name} must be positive, got {v}")
    if not 0.0 < gamma <= 1.0:
        raise InputError(f"gamma must lie in (0, 1], got {gamma}")
    kappa = L / mu
    adjustments = []
    p = 1.0 / (min(math.sqrt(n), kappa) + 1.0)
    lo, hi = 1.0 / (n + 1.0), 0.5
    if p < lo or p > hi:
        clamped = min(max(p, lo), hi)
        adjustments.append(f"p clamped from {p:.6g} to {clamped:.6g}")
        p = clamped
    b = math.ceil((1.0 - p) / p - 1e-12)
    b_lo = math.ceil((1.0 - p) / p - 1e-12)
    if b < max(1, b_lo) or b > n:
        clamped = min(max(b, 1, b_lo), n)
        adjustments.append(f"b clamped from {b} to {clamped}")
        b = clamped
    eta = min(1.0 / (20.0 * L), p / (2.0 * mu))
    K = default_round_count(n, gamma)
    T = max(0, math.ceil(math.log(Phi0 / eps) / (mu * eta))) if Phi0 > eps else 0
    return ParamReport(SolverParams(eta=eta, T_iters=T, K=K, p=p, b=b, seed=seed), adjustments)
