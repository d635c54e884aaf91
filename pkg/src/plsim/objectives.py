"""Finite-sum objectives, oracle metering and sampled constant checks.

Agents are indexed ``0 .. n-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numkit import InputError, RandomStream

ValueFn = Callable[[int, np.ndarray], float]
GradFn = Callable[[int, np.ndarray], np.ndarray]


class UnsupportedDiagnostic(RuntimeError):
    """A diagnostic needs information (usually ``f_star``) the objective lacks."""


class LocalObjectiveSet:
    """``n`` local functions over ``R^d`` with value and gradient oracles.

    ``L`` is the declared mean-squared smoothness constant, ``mu`` the declared
    PL constant of the average, ``f_star`` the optimal value of the average
    (``None`` when unknown). ``x_star`` is a known minimizer if any.

    ``mean_value`` / ``mean_gradient`` may be supplied as faster closed forms of
    the average; they are diagnostics and never touch a meter.
    """

    def __init__(
        self,
        n: int,
        d: int,
        value: ValueFn,
        gradient: GradFn,
        *,
        L: float | None = None,
        mu: float | None = None,
        f_star: float | None = None,
        x_star: np.ndarray | None = None,
        mean_value: Callable[[np.ndarray], float] | None = None,
        mean_gradient: Callable[[np.ndarray], np.ndarray] | None = None,
        batch_gradient: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
        name: str = "objective",
        metadata: dict | None = None,
    ):
        if n < 1 or d < 1:
            raise InputError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
        self.n = int(n)
        self.d = int(d)
        self._value = value
        self._gradient = gradient
        self.L = L
        self.mu = mu
        self.f_star = f_star
        self.x_star = x_star
        self._mean_value = mean_value
        self._mean_gradient = mean_gradient
        self._batch_gradient = batch_gradient
        self.name = name
        self.metadata = dict(metadata or {})

    def _check(self, i: int, x: np.ndarray) -> np.ndarray:
        if not 0 <= i < self.n:
            raise InputError(f"agent index {i} out of range for n={self.n}")
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise InputError(f"expected a point of shape ({self.d},), got {x.shape}")
        return x

    def value(self, i: int, x: np.ndarray) -> float:
        return float(self._value(i, self._check(i, x)))

    def gradient(self, i: int, x: np.ndarray) -> np.ndarray:
        return np.asarray(self._gradient(i, self._check(i, x)), dtype=float)

    def full_value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if self._mean_value is not None:
            return float(self._mean_value(x))
        return sum(self.value(i, x) for i in range(self.n)) / self.n

    def full_gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self._mean_gradient is not None:
            return np.asarray(self._mean_gradient(x), dtype=float)
        g = np.zeros(self.d)
        for i in range(self.n):
            g += self.gradient(i, x)
        return g / self.n

    def gradients_at(self, agents: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Row ``k`` is ``grad f_{agents[k]}(X[k])``; vectorized when the set allows it."""
        agents = np.asarray(agents, dtype=np.int64)
        X = np.asarray(X, dtype=float)
        if X.shape != (agents.size, self.d):
            raise InputError(f"expected points of shape ({agents.size}, {self.d}), got {X.shape}")
        if agents.size and (agents.min() < 0 or agents.max() >= self.n):
            raise InputError(f"agent index out of range for n={self.n}")
        if self._batch_gradient is not None:
            return np.asarray(self._batch_gradient(agents, X), dtype=float)
        if agents.size == 0:
            return np.zeros((0, self.d))
        return np.stack([self.gradient(int(i), x) for i, x in zip(agents, X)])

    def local_gradients(self, X: np.ndarray) -> np.ndarray:
        """Unmetered ``grad F(X)``: row ``i`` is ``grad f_i(X[i])``."""
        return self.gradients_at(np.arange(self.n), X)

    @property
    def kappa(self) -> float | None:
        if self.L is None or self.mu is None:
            return None
        return self.L / self.mu

    def with_declared(self, **changes) -> LocalObjectiveSet:
        """Copy with some declared constants replaced (used for negative controls)."""
        kw = dict(
            L=self.L, mu=self.mu, f_star=self.f_star, x_star=self.x_star,
            mean_value=self._mean_value, mean_gradient=self._mean_gradient,
            batch_gradient=self._batch_gradient, name=self.name, metadata=self.metadata,
        )
        kw.update(changes)
        return LocalObjectiveSet(self.n, self.d, self._value, self._gradient, **kw)

    def __repr__(self) -> str:
        return f"LocalObjectiveSet({self.name!r}, n={self.n}, d={self.d}, L={self.L}, mu={self.mu})"


@dataclass
class OracleMeter:
    """LFO counts per agent, communication rounds and simulated time.

    One computation step costs one time unit no matter how many agents compute
    in it; one communication round costs ``tau``.
    """

    n: int
    tau: float = 0.0
    lfo_per_agent: np.ndarray = field(init=False)
    comm_rounds: int = 0
    comp_steps: int = 0

    def __post_init__(self) -> None:
        self.lfo_per_agent = np.zeros(self.n, dtype=np.int64)

    @property
    def lfo_total(self) -> int:
        return int(self.lfo_per_agent.sum())

    @property
    def time_units(self) -> float:
        return self.comp_steps + self.comm_rounds * self.tau

    def snapshot(self) -> tuple[int, int, float]:
        return self.lfo_total, self.comm_rounds, self.time_units


def metered_gradient(objs: LocalObjectiveSet, meter: OracleMeter, i: int, x: np.ndarray) -> np.ndarray:
    g = objs.gradient(i, x)
    meter.lfo_per_agent[i] += 1
    return g


def metered_gradients(
    objs: LocalObjectiveSet, meter: OracleMeter, agents: np.ndarray, X: np.ndarray
) -> np.ndarray:
    """Batched :func:`metered_gradient`: one LFO call per listed agent."""
    agents = np.asarray(agents, dtype=np.int64)
    G = objs.gradients_at(agents, X)
    np.add.at(meter.lfo_per_agent, agents, 1)
    return G


def record_computation_step(meter: OracleMeter) -> None:
    meter.comp_steps += 1


def record_comm_round(meter: OracleMeter, rounds: int = 1) -> None:
    meter.comm_rounds += rounds


def mean_objective_gap(objs: LocalObjectiveSet, x: np.ndarray) -> float:
    """``f(x) - f_star``; unmetered."""
    if objs.f_star is None:
        raise UnsupportedDiagnostic(f"{objs.name}: optimal value is unknown")
    return objs.full_value(x) - objs.f_star


# ---------------------------------------------------------------------------
# sampled checks of declared constants


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    worst: float = float("nan")


def sample_box(rs: RandomStream, d: int, center: np.ndarray | None = None, radius: float = 2.0) -> np.ndarray:
    x = (2.0 * rs.uniforms(d) - 1.0) * radius
    return x if center is None else x + center


def check_mean_squared_smoothness(
    objs: LocalObjectiveSet, pairs: int = 1000, seed: int = 0, radius: float = 2.0, center=None
) -> CheckResult:
    """Sampled ``(1/n) sum ||grad f_i(x) - grad f_i(y)||^2 <= L^2 ||x - y||^2``."""
    if objs.L is None:
        return CheckResult("smoothness", True, "no L declared; skipped")
    rs = RandomStream(seed)
    worst = 0.0
    for _ in range(pairs):
        x = sample_box(rs, objs.d, center, radius)
        y = sample_box(rs, objs.d, center, radius)
        dx2 = float(np.dot(x - y, x - y))
        if dx2 == 0.0:
            continue
        q = sum(float(np.sum((objs.gradient(i, x) - objs.gradient(i, y)) ** 2)) for i in range(objs.n))
        worst = max(worst, float(np.sqrt(q / objs.n / dx2)))
    ok = bool(worst <= objs.L * (1 + 1e-9))
    return CheckResult("smoothness", ok, f"max sampled quotient {worst:.6g} vs declared L {objs.L:.6g}", worst)


def check_pl(
    objs: LocalObjectiveSet, points: int = 1000, seed: int = 1, radius: float = 2.0, center=None
) -> CheckResult:
    """Sampled ``||grad f(x)||^2 >= 2 mu (f(x) - f_star)``; ``worst`` is the smallest ratio."""
    if objs.mu is None or objs.f_star is None:
        return CheckResult("pl", True, "mu or f_star not declared; skipped")
    rs = RandomStream(seed)
    worst = np.inf
    for _ in range(points):
        x = sample_box(rs, objs.d, center, radius)
        gap = objs.full_value(x) - objs.f_star
        if gap <= 0:
            continue
        g = objs.full_gradient(x)
        g2 = float(np.dot(g, g))
        worst = min(worst, g2 / (2.0 * gap))
    ok = bool(worst >= objs.mu * (1 - 1e-9))
    return CheckResult("pl", ok, f"min sampled ||grad f||^2 / (2 gap) = {worst:.6g} vs declared mu {objs.mu:.6g}", worst)
