"""Hard PL instances built from the zero-chain function ``g_{T,t}``.

All scalar fields are vectorized over the last axis, so a ``(k, dim)`` array
of points evaluates ``k`` values or gradients at once. Coordinates are 0-based
in code; the block structure is ``[0, T), [T, 2T), ...``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numkit import InputError
from .objectives import LocalObjectiveSet
from .topology import Graph, MixingMatrix, bfs_distances, branch_index, complete_graph, mixing_for_gap, path_graph

A_CONST = 19708
RATIO = 7.0 / 8.0


class InfeasibleConstruction(ValueError):
    """Parameters violate a precondition of an instance construction."""


# ---------------------------------------------------------------------------
# the piecewise function psi_theta


def psi(theta, x):
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(theta <= 0):
        raise InputError("psi needs theta > 0")
    lo, hi = 31.0 / 32.0 * theta, 33.0 / 32.0 * theta
    half = 0.5 * x * x
    drop = theta * theta / 32.0
    out = np.where(
        x <= lo,
        half,
        np.where(
            x <= theta,
            half - 16.0 * (x - lo) ** 2,
            np.where(x <= hi, half - drop + 16.0 * (x - hi) ** 2, half - drop),
        ),
    )
    return out if out.ndim else float(out)


def psi_grad(theta, x):
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(theta <= 0):
        raise InputError("psi needs theta > 0")
    lo, hi = 31.0 / 32.0 * theta, 33.0 / 32.0 * theta
    out = np.where(
        x <= lo,
        x,
        # 31 (theta - x) and 33 (x - theta): exact zeros at x = theta
        np.where(x <= theta, 31.0 * (theta - x), np.where(x <= hi, 33.0 * (x - theta), x)),
    )
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# chain function and its split


@dataclass(frozen=True)
class ChainSpec:
    T_blk: int
    t_cnt: int
    a_const: float = A_CONST

    def __post_init__(self) -> None:
        if self.T_blk < 1 or self.t_cnt < 2:
            raise InputError(f"need T >= 1 and t >= 2, got T={self.T_blk}, t={self.t_cnt}")

    @property
    def dim(self) -> int:
        return self.T_blk * self.t_cnt

    @property
    def b_vec(self) -> np.ndarray:
        # sequential products, so 7/8 * b_k reproduces b_{k+1} bit for bit
        levels = np.cumprod(np.concatenate([[1.0], np.full(self.t_cnt - 1, RATIO)]))
        return np.repeat(levels, self.T_blk)

    @property
    def starts(self) -> np.ndarray:
        """First coordinate of every block."""
        return np.arange(self.t_cnt) * self.T_blk

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise InputError(f"expected last dimension {self.dim}, got shape {x.shape}")
        return x


def _coeffs(spec: ChainSpec) -> np.ndarray:
    c = np.ones(spec.dim)
    c[spec.starts] = RATIO
    return c


def _chain_residuals(spec: ChainSpec, y: np.ndarray) -> np.ndarray:
    prev = np.concatenate([np.zeros(y.shape[:-1] + (1,)), y[..., :-1]], axis=-1)
    return _coeffs(spec) * prev - y


def q_value(spec: ChainSpec, y) -> np.ndarray:
    """``q_{T,t}(y)`` with a virtual leading zero coordinate."""
    e = _chain_residuals(spec, spec.check(y))
    return 0.5 * np.sum(e * e, axis=-1)


def q_grad(spec: ChainSpec, y) -> np.ndarray:
    y = spec.check(y)
    e = _chain_residuals(spec, y)
    c = _coeffs(spec)
    g = -e
    g[..., :-1] += c[1:] * e[..., 1:]
    return g


def r_value(spec: ChainSpec, x) -> np.ndarray:
    b = spec.b_vec
    return np.sum(psi(b, b - spec.check(x)), axis=-1)


def r_grad(spec: ChainSpec, x) -> np.ndarray:
    b = spec.b_vec
    return -psi_grad(b, b - spec.check(x))


def g_value(spec: ChainSpec, x) -> np.ndarray:
    x = spec.check(x)
    return q_value(spec, spec.b_vec - x) + r_value(spec, x)


def g_grad(spec: ChainSpec, x) -> np.ndarray:
    x = spec.check(x)
    return -q_grad(spec, spec.b_vec - x) + r_grad(spec, x)


def _require_even(spec: ChainSpec) -> None:
    if spec.T_blk % 2:
        raise InputError(f"the q1/q2 split needs an even block length, got T={spec.T_blk}")


def _pair_terms(y: np.ndarray, left: np.ndarray, right: np.ndarray, cl: np.ndarray | float = 1.0):
    """Residuals ``cl * y[left] - y[right]``; ``left == -1`` reads a virtual zero."""
    yl = np.where(left >= 0, y[..., np.maximum(left, 0)], 0.0)
    return cl * yl - y[..., right]


def _q1_pairs(spec: ChainSpec):
    i = np.arange(spec.dim // 2)
    return 2 * i, 2 * i + 1


def _q2_pairs(spec: ChainSpec):
    T = spec.T_blk
    left, right, coef = [], [], []
    for i in range(spec.t_cnt):
        left.append(i * T - 1)  # y_{iT} in 1-based terms; -1 means the virtual zero
        right.append(i * T)
        coef.append(RATIO)
        for j in range(i * T // 2 + 1, (i + 1) * T // 2):
            left.append(2 * j - 1)
            right.append(2 * j)
            coef.append(1.0)
    return np.array(left), np.array(right), np.array(coef)


def _pair_value(y, left, right, coef=1.0):
    e = _pair_terms(y, left, right, coef)
    return 0.5 * np.sum(e * e, axis=-1)


def _pair_grad(y, left, right, coef=1.0):
    e = _pair_terms(y, left, right, coef)
    g = np.zeros_like(y)
    ok = left >= 0
    np.add.at(g.T, left[ok], (np.broadcast_to(coef, left.shape)[ok] * e[..., ok]).T)
    np.add.at(g.T, right, -e.T)
    return g


def q1_value(spec: ChainSpec, y):
    _require_even(spec)
    return _pair_value(spec.check(y), *_q1_pairs(spec))


def q1_grad(spec: ChainSpec, y):
    _require_even(spec)
    return _pair_grad(spec.check(y), *_q1_pairs(spec))


def q2_value(spec: ChainSpec, y):
    _require_even(spec)
    return _pair_value(spec.check(y), *_q2_pairs(spec))


def q2_grad(spec: ChainSpec, y):
    _require_even(spec)
    return _pair_grad(spec.check(y), *_q2_pairs(spec))


# ---------------------------------------------------------------------------
# scalar fields, scaling and block embedding


@dataclass
class ScalarField:
    """A function over ``R^dim`` with declared smoothness ``L`` and PL constant ``mu``."""

    dim: int
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    L: float
    mu: float
    f_star: float
    x_star: np.ndarray | None = None
    name: str = "field"
    metadata: dict = field(default_factory=dict)

    def gap_at_zero(self) -> float:
        return float(self.value(np.zeros(self.dim))) - self.f_star


def chain_field(spec: ChainSpec) -> ScalarField:
    """``g_{T,t}``: 37-smooth, ``1/(aT)``-PL, minimum 0 at ``b``."""
    return ScalarField(
        spec.dim,
        lambda x: g_value(spec, x),
        lambda x: g_grad(spec, x),
        L=37.0,
        mu=1.0 / (spec.a_const * spec.T_blk),
        f_star=0.0,
        x_star=spec.b_vec,
        name=f"g(T={spec.T_blk},t={spec.t_cnt})",
        metadata={"T": spec.T_blk, "t": spec.t_cnt, "a": spec.a_const, "Delta": 3.0 * spec.T_blk},
    )


@dataclass
class ScaledInstance(ScalarField):
    base: ScalarField | None = None
    alpha: float = 1.0
    beta: float = 1.0


def _scaled_meta(meta: dict, alpha: float) -> dict:
    out = dict(meta)
    if "Delta" in out:
        out["Delta"] = alpha * out["Delta"]
    return out


def scale_instance(base: ScalarField, alpha: float, beta: float) -> ScaledInstance:
    """``alpha * base(beta * x)``."""
    if not (alpha > 0 and beta > 0):
        raise InputError(f"scales must be positive, got alpha={alpha}, beta={beta}")
    k = alpha * beta * beta
    return ScaledInstance(
        base.dim,
        lambda x: alpha * base.value(beta * np.asarray(x, dtype=float)),
        lambda x: alpha * beta * base.gradient(beta * np.asarray(x, dtype=float)),
        L=k * base.L,
        mu=k * base.mu,
        f_star=alpha * base.f_star,
        x_star=None if base.x_star is None else base.x_star / beta,
        name=f"{alpha:g}*{base.name}({beta:g}x)",
        metadata=_scaled_meta(base.metadata, alpha),
        base=base,
        alpha=alpha,
        beta=beta,
    )


def block_embed(base: ScalarField, n: int) -> LocalObjectiveSet:
    """``f_i(x) = base(x[block i])`` over ``R^{n * base.dim}``."""
    if n < 1:
        raise InputError(f"need n >= 1, got {n}")
    m = base.dim

    def value(i, x):
        return float(base.value(x[i * m:(i + 1) * m]))

    def gradient(i, x):
        g = np.zeros(n * m)
        g[i * m:(i + 1) * m] = base.gradient(x[i * m:(i + 1) * m])
        return g

    def batch(agents, X):
        G = np.zeros_like(X)
        if agents.size:
            blocks = X.reshape(len(agents), n, m)[np.arange(len(agents)), agents]
            Gb = G.reshape(len(agents), n, m)
            Gb[np.arange(len(agents)), agents] = base.gradient(blocks)
        return G

    def mean_value(x):
        return float(np.sum(base.value(x.reshape(n, m)))) / n

    def mean_gradient(x):
        return base.gradient(x.reshape(n, m)).reshape(-1) / n

    return LocalObjectiveSet(
        n, n * m, value, gradient,
        L=base.L / math.sqrt(n),
        mu=base.mu / n,
        f_star=base.f_star,
        x_star=None if base.x_star is None else np.tile(base.x_star, n),
        mean_value=mean_value,
        mean_gradient=mean_gradient,
        batch_gradient=batch,
        name=f"blocks({base.name}, n={n})",
        metadata=dict(base.metadata, block_dim=m),
    )


def scale_set(objs: LocalObjectiveSet, alpha: float, beta: float, name: str | None = None) -> LocalObjectiveSet:
    """``f_i(x) = alpha * h_i(beta * x)`` with constants transformed accordingly."""
    if not (alpha > 0 and beta > 0):
        raise InputError(f"scales must be positive, got alpha={alpha}, beta={beta}")
    k = alpha * beta * beta
    return LocalObjectiveSet(
        objs.n, objs.d,
        lambda i, x: alpha * objs.value(i, beta * x),
        lambda i, x: alpha * beta * objs.gradient(i, beta * x),
        L=None if objs.L is None else k * objs.L,
        mu=None if objs.mu is None else k * objs.mu,
        f_star=None if objs.f_star is None else alpha * objs.f_star,
        x_star=None if objs.x_star is None else objs.x_star / beta,
        mean_value=lambda x: alpha * objs.full_value(beta * x),
        mean_gradient=lambda x: alpha * beta * objs.full_gradient(beta * x),
        batch_gradient=lambda agents, X: alpha * beta * objs.gradients_at(agents, beta * X),
        name=name or f"{alpha:g}*{objs.name}({beta:g}x)",
        metadata=dict(_scaled_meta(objs.metadata, alpha), alpha=alpha, beta=beta),
    )


# ---------------------------------------------------------------------------
# centralized constructions


def _log87_count(ratio: float) -> int:
    """``2 * floor(log_{8/7}(ratio))``."""
    return 2 * int(math.floor(math.log(ratio) / math.log(8.0 / 7.0) + 1e-12))


def ifo_hard_instance(L: float, mu: float, n: int, Delta: float, eps: float, a: float = A_CONST) -> LocalObjectiveSet:
    """Block-embedded scaled chain function that is hard for centralized IFO methods.

    The block length is ``floor(L / (37 a sqrt(n) mu))`` with no evenness
    adjustment, since this construction never splits the chain.
    """
    if not (L > 0 and mu > 0 and Delta > 0 and eps > 0 and n >= 1):
        raise InputError("L, mu, Delta, eps must be positive and n >= 1")
    if not eps < 0.005 * Delta:
        raise InfeasibleConstruction(f"need eps < 0.005*Delta, got eps={eps}, Delta={Delta}")
    bound = 37.0 * a * math.sqrt(n) * mu
    if L < bound * (1 - 1e-12):
        raise InfeasibleConstruction(f"need L >= 37*a*sqrt(n)*mu = {bound:.6g}, got L={L:.6g}")
    T = max(1, int(math.floor(L / bound * (1 + 1e-12))))
    t = _log87_count(Delta / (3.0 * eps))
    spec = ChainSpec(T, t, a)
    alpha = Delta / (3.0 * T)
    beta = math.sqrt(3.0 * math.sqrt(n) * L * T / (37.0 * Delta))
    objs = block_embed(scale_instance(chain_field(spec), alpha, beta), n)
    objs.name = f"ifo(L={L:g}, mu={mu:g}, n={n}, Delta={Delta:g}, eps={eps:g})"
    objs.metadata.update(T=T, t=t, alpha=alpha, beta=beta, target_L=L, target_mu=mu, Delta=Delta)
    return objs


def linear_span_instance(L: float, mu: float, n: int, Delta: float) -> LocalObjectiveSet:
    """``f_i(x) = c <u_i, x> + (L/2)||x||^2`` over ``R^{2n^2}``, ``u_i`` the indicator of block ``i``."""
    if not (L > 0 and mu > 0 and Delta > 0 and n >= 1):
        raise InputError("L, mu, Delta must be positive and n >= 1")
    if L < mu:
        raise InfeasibleConstruction(f"need L >= mu, got L={L}, mu={mu}")
    d = 2 * n * n
    c = math.sqrt(L * Delta)
    U = np.zeros((n, d))
    for i in range(n):
        U[i, 2 * n * i:2 * n * (i + 1)] = 1.0
    ubar = U.mean(axis=0)

    def batch(agents, X):
        return c * U[agents] + L * X

    return LocalObjectiveSet(
        n, d,
        lambda i, x: c * float(U[i] @ x) + 0.5 * L * float(x @ x),
        lambda i, x: c * U[i] + L * x,
        L=L,
        mu=mu,
        f_star=-c * c / L,
        x_star=np.full(d, -c / (L * n)),
        mean_value=lambda x: c * float(ubar @ x) + 0.5 * L * float(x @ x),
        mean_gradient=lambda x: c * ubar + L * x,
        batch_gradient=batch,
        name=f"linear-span(L={L:g}, n={n}, Delta={Delta:g})",
        metadata={"c": c, "U": U, "Delta": Delta, "curvature": L},
    )


# ---------------------------------------------------------------------------
# decentralized constructions


@dataclass(frozen=True)
class NetworkSplitSpec:
    graph: Graph
    C: tuple[int, ...]
    sigma: int

    def __post_init__(self) -> None:
        if not self.C:
            raise InfeasibleConstruction("the source set C is empty")
        if any(not 0 <= c < self.graph.n for c in self.C):
            raise InputError(f"C has nodes outside 0..{self.graph.n - 1}")

    @property
    def distances(self) -> np.ndarray:
        return bfs_distances(self.graph, self.C)

    @property
    def C_sigma(self) -> tuple[int, ...]:
        return tuple(int(v) for v in np.flatnonzero(self.distances >= self.sigma))


def h_set(split: NetworkSplitSpec, spec: ChainSpec) -> LocalObjectiveSet:
    """Local functions whose average is ``g_{T,t} / n`` but whose two halves of
    the chain sit on nodes at least ``sigma`` hops apart."""
    _require_even(spec)
    n = split.graph.n
    C = np.array(split.C, dtype=np.int64)
    Cs = np.array(split.C_sigma, dtype=np.int64)
    if Cs.size == 0:
        raise InfeasibleConstruction(f"no node lies at distance >= {split.sigma} from C")
    if np.intersect1d(C, Cs).size:
        raise InfeasibleConstruction("C and C_sigma overlap (sigma must be >= 1)")
    role = np.zeros(n, dtype=np.int64)
    role[C] = 1
    role[Cs] = 2
    b = spec.b_vec
    nC, nS = len(C), len(Cs)

    def value(i, x):
        v = r_value(spec, x) / n
        if role[i] == 1:
            v += q1_value(spec, b - x) / nC
        elif role[i] == 2:
            v += q2_value(spec, b - x) / nS
        return float(v)

    def gradient(i, x):
        return batch(np.array([i]), x[None, :])[0]

    def batch(agents, X):
        G = r_grad(spec, X) / n
        rl = role[agents]
        if np.any(rl == 1):
            G[rl == 1] -= q1_grad(spec, b - X[rl == 1]) / nC
        if np.any(rl == 2):
            G[rl == 2] -= q2_grad(spec, b - X[rl == 2]) / nS
        return G

    L = 33.0 / n + max(2.0 / nC, 2.0 / nS)
    return LocalObjectiveSet(
        n, spec.dim, value, gradient,
        L=L,
        mu=1.0 / (spec.a_const * n * spec.T_blk),
        f_star=0.0,
        x_star=b,
        mean_value=lambda x: float(g_value(spec, x)) / n,
        mean_gradient=lambda x: g_grad(spec, x) / n,
        batch_gradient=batch,
        name=f"h(T={spec.T_blk},t={spec.t_cnt},|C|={nC},sigma={split.sigma})",
        metadata={"T": spec.T_blk, "t": spec.t_cnt, "C": tuple(C.tolist()), "C_sigma": tuple(Cs.tolist()),
                  "sigma": split.sigma, "graph": split.graph.name, "Delta": 3.0 * spec.T_blk / n},
    )


def experiment_instance(n: int = 32, a: float = A_CONST) -> tuple[LocalObjectiveSet, Graph]:
    """The benchmark set on a path of ``n`` nodes: ``T=2, t=72, C={node 0}, sigma=29``."""
    g = path_graph(n)
    split = NetworkSplitSpec(g, (0,), 29)
    spec = ChainSpec(2, 72, a)
    objs = scale_set(h_set(split, spec), 16.0 / 3.0, math.sqrt(12.0 * a), name=f"experiment(n={n})")
    objs.metadata.update(Delta=1.0)
    return objs, g


def dfo_hard_instance(
    L: float, mu: float, gamma: float, Delta: float, eps: float, a: float = A_CONST
) -> tuple[LocalObjectiveSet, MixingMatrix]:
    """Hard instance for decentralized methods on a network with spectral gap ``gamma``.

    The declared ``L`` and ``mu`` are the requested targets; the (tighter)
    constants implied by the construction are kept in ``metadata``.
    """
    if not (L > 0 and mu > 0 and Delta > 0 and eps > 0):
        raise InputError("L, mu, Delta, eps must be positive")
    if not eps < 0.01 * Delta:
        raise InfeasibleConstruction(f"need eps < 0.01*Delta, got eps={eps}, Delta={Delta}")
    kappa = L / mu
    m = branch_index(gamma)
    if m >= 3:
        if kappa < 194 * a * (1 - 1e-12):
            raise InfeasibleConstruction(f"need L >= 194*a*mu, got kappa={kappa:.6g}")
        n = m
        graph = path_graph(n)
        C = tuple(range(math.ceil(n / 32)))
        sigma = math.ceil(15 * n / 16) - 1
        T = 2 * int(math.floor(kappa / (194 * a) * (1 + 1e-12)))
        beta = math.sqrt(3.0 * L * T / (97.0 * Delta))
    else:
        if kappa < 78 * a * (1 - 1e-12):
            raise InfeasibleConstruction(f"need L >= 78*a*mu, got kappa={kappa:.6g}")
        n = 3
        graph = complete_graph(3)
        C = (0,)
        sigma = 1
        T = 2 * int(math.floor(kappa / (78 * a) * (1 + 1e-12)))
        beta = math.sqrt(L * T / (13.0 * Delta))
    t = _log87_count(2.0 * Delta / (3.0 * eps))
    mixing = mixing_for_gap(gamma)
    split = NetworkSplitSpec(mixing.graph, C, sigma)
    alpha = n * Delta / (3.0 * T)
    objs = scale_set(h_set(split, ChainSpec(T, t, a)), alpha, beta,
                     name=f"dfo(L={L:g}, mu={mu:g}, gamma={gamma:g}, Delta={Delta:g}, eps={eps:g})")
    actual_L, actual_mu = objs.L, objs.mu
    if actual_L > L * (1 + 1e-9) or actual_mu < mu * (1 - 1e-9):
        raise InfeasibleConstruction(f"constructed constants L={actual_L:.6g}, mu={actual_mu:.6g} miss the targets")
    objs.L, objs.mu = L, mu
    objs.metadata.update(branch_m=m, T=T, t=t, alpha=alpha, beta=beta, actual_L=actual_L,
                         actual_mu=actual_mu, Delta=Delta, gamma=gamma)
    return objs, mixing


# ---------------------------------------------------------------------------
# named presets


def _floats(args: list[str], names: list[str]) -> list[float]:
    if len(args) != len(names):
        raise InputError(f"expected {len(names)} parameters ({', '.join(names)}), got {len(args)}")
    try:
        return [float(v) for v in args]
    except ValueError as exc:
        raise InputError(str(exc)) from None


PRESETS = {
    "chain": "chain:T,t",
    "ifo-hard": "ifo-hard:L,mu,n,Delta,eps",
    "common-hessian": "common-hessian:L,mu,n,Delta",
    "hard-decentralized": "hard-decentralized[:n]",
    "dfo-hard": "dfo-hard:L,mu,gamma,Delta,eps",
}
# alternative names accepted on input
ALIASES = {"theorem2": "common-hessian"}


def build_preset(spec: str) -> tuple[LocalObjectiveSet, Graph | MixingMatrix | None]:
    """Parse ``name:p1,p2,...`` into an objective set and its network, if any."""
    name, _, rest = spec.partition(":")
    name = ALIASES.get(name, name)
    args = [s for s in rest.split(",") if s.strip()] if rest else []
    if name == "chain":
        T, t = (int(v) for v in _floats(args, ["T", "t"]))
        return block_embed(chain_field(ChainSpec(T, t)), 1), None
    if name == "ifo-hard":
        L, mu, n, D, e = _floats(args, ["L", "mu", "n", "Delta", "eps"])
        return ifo_hard_instance(L, mu, int(n), D, e), None
    if name == "common-hessian":
        L, mu, n, D = _floats(args, ["L", "mu", "n", "Delta"])
        return linear_span_instance(L, mu, int(n), D), None
    if name == "hard-decentralized":
        n = int(_floats(args, ["n"])[0]) if args else 32
        return experiment_instance(n)
    if name == "dfo-hard":
        L, mu, g, D, e = _floats(args, ["L", "mu", "gamma", "Delta", "eps"])
        return dfo_hard_instance(L, mu, g, D, e)
    raise InputError(f"unknown instance preset {name!r}; known: {', '.join(PRESETS.values())}")
