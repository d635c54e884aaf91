"""Communication graphs, Laplacian mixing matrices and spectral gaps.

Nodes are ``0 .. n-1``. Edge-list files are 1-based, one ``u v [weight]`` per line.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .numkit import InputError, symmetric_eigenvalues


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset[tuple[int, int]]
    weights: dict = field(default_factory=dict, compare=False, hash=False)
    name: str = "graph"

    def __post_init__(self) -> None:
        for i, j in self.edges:
            if not (0 <= i < j < self.n):
                raise InputError(f"bad edge ({i}, {j}) for n={self.n}")

    @classmethod
    def from_pairs(cls, n: int, pairs, weights=None, name: str = "graph") -> Graph:
        edges = set()
        w = {}
        for k, (i, j) in enumerate(pairs):
            if i == j:
                continue
            e = (min(i, j), max(i, j))
            edges.add(e)
            if weights is not None:
                w[e] = float(weights[k])
        return cls(n, frozenset(edges), w, name)

    def neighbors(self, i: int) -> list[int]:
        return sorted([j for a, j in self.edges if a == i] + [a for a, j in self.edges if j == i])

    def weight(self, i: int, j: int) -> float:
        return self.weights.get((min(i, j), max(i, j)), 1.0)

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.edges:
            A[i, j] = A[j, i] = True
        return A


def path_graph(n: int) -> Graph:
    return Graph.from_pairs(n, [(i, i + 1) for i in range(n - 1)], name=f"linear:{n}")


def complete_graph(n: int) -> Graph:
    return Graph.from_pairs(n, [(i, j) for i in range(n) for j in range(i + 1, n)], name=f"complete:{n}")


def ring_graph(n: int) -> Graph:
    pairs = [(i, (i + 1) % n) for i in range(n)] if n > 2 else [(0, 1)][: n - 1]
    return Graph.from_pairs(n, pairs, name=f"ring:{n}")


_PRESETS = {"linear": path_graph, "complete": complete_graph, "ring": ring_graph}


def read_edge_list(path: str | Path) -> Graph:
    pairs, weights = [], []
    n = 0
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if len(tok) not in (2, 3):
            raise InputError(f"{path}:{lineno}: expected 'u v [weight]'")
        try:
            u, v = int(tok[0]), int(tok[1])
            w = float(tok[2]) if len(tok) == 3 else 1.0
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from None
        if u < 1 or v < 1:
            raise InputError(f"{path}:{lineno}: node labels are 1-based")
        pairs.append((u - 1, v - 1))
        weights.append(w)
        n = max(n, u, v)
    return Graph.from_pairs(n, pairs, weights, name=str(path))


def parse_topology(spec: str) -> Graph:
    """``linear:<n>``, ``complete:<n>``, ``ring:<n>`` or a path to an edge-list file."""
    kind, _, arg = spec.partition(":")
    if kind in _PRESETS:
        try:
            n = int(arg)
        except ValueError:
            raise InputError(f"topology preset {spec!r} needs an integer size") from None
        if n < 1:
            raise InputError(f"topology size must be positive in {spec!r}")
        return _PRESETS[kind](n)
    if kind == "file":
        return read_edge_list(arg)
    if Path(spec).exists():
        return read_edge_list(spec)
    raise InputError(f"unknown topology {spec!r}")


def bfs_distances(g: Graph, sources) -> np.ndarray:
    """Hop distance from the nearest source; ``-1`` for unreachable nodes."""
    adj = [[] for _ in range(g.n)]
    for i, j in g.edges:
        adj[i].append(j)
        adj[j].append(i)
    dist = np.full(g.n, -1, dtype=np.int64)
    queue = deque()
    for s in sources:
        if dist[s] < 0:
            dist[s] = 0
            queue.append(s)
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def is_connected(g: Graph) -> bool:
    return g.n > 0 and bool(np.all(bfs_distances(g, [0]) >= 0))


def laplacian(g: Graph, weights: dict | None = None) -> np.ndarray:
    R = np.zeros((g.n, g.n))
    for i, j in g.edges:
        w = (weights or {}).get((i, j), g.weight(i, j))
        if w < 0:
            raise InputError(f"negative weight on edge ({i}, {j})")
        R[i, j] -= w
        R[j, i] -= w
        R[i, i] += w
        R[j, j] += w
    return R


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    W: np.ndarray
    lambda2: float
    eigenvalues: np.ndarray
    graph: Graph | None = None
    note: str = ""

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def gap(self) -> float:
        return 1.0 - self.lambda2

    @classmethod
    def from_matrix(cls, W: np.ndarray, graph: Graph | None = None, note: str = "") -> MixingMatrix:
        W = np.array(W, dtype=float)
        W.setflags(write=False)
        ev = symmetric_eigenvalues(W)
        lam2 = float(ev[1]) if len(ev) > 1 else 0.0
        return cls(W, lam2, ev, graph, note)


def laplacian_mixing(g: Graph, weights: dict | None = None) -> MixingMatrix:
    """``W = I - R / lambda_1(R)`` with ``R`` the weighted Laplacian."""
    if g.n == 1:
        return MixingMatrix.from_matrix(np.ones((1, 1)), g)
    positive = Graph(g.n, frozenset(e for e in g.edges if (weights or {}).get(e, g.weight(*e)) > 0))
    if not is_connected(positive):
        raise TopologyError(f"{g.name}: weighted graph is disconnected")
    R = laplacian(g, weights)
    lam1 = float(symmetric_eigenvalues(R)[0])
    W = np.eye(g.n) - R / lam1
    return MixingMatrix.from_matrix(W, g)


def iota(m: int) -> float:
    if m < 2:
        raise InputError(f"iota needs m >= 2, got {m}")
    c = math.cos(math.pi / m)
    return (1.0 - c) / (1.0 + c)


def branch_index(gamma: float) -> int:
    """The ``m >= 2`` with ``iota(m+1) < gamma <= iota(m)``."""
    if not 0.0 < gamma <= 1.0:
        raise InputError(f"gamma must lie in (0, 1], got {gamma}")
    m = max(2, int(math.floor(math.pi / math.acos((1.0 - gamma) / (1.0 + gamma)))))
    rel = 1e-12
    while iota(m + 1) >= gamma * (1 - rel):
        m += 1
    while m > 2 and iota(m) < gamma * (1 - rel):
        m -= 1
    return m


def _ratio_gap(R: np.ndarray) -> float:
    ev = np.linalg.eigvalsh(R)  # ascending; fast inner evaluation for the search
    return float(ev[1] / ev[-1])


def _path_weights(n: int, l: float) -> dict:
    w = {(i, i + 1): 1.0 for i in range(n - 1)}
    w[(0, 1)] = 1.0 - l
    return w


def _k3_weights(l: float) -> dict:
    return {(0, 1): 1.0, (1, 2): 1.0, (0, 2): l}


def mixing_for_gap(gamma: float, tol: float = 1e-10, max_iter: int = 200) -> MixingMatrix:
    """Mixing matrix whose spectral gap equals ``gamma`` to within ``tol``.

    For ``m >= 3`` this is a path on ``m`` nodes whose first edge has weight
    ``1 - l``; for ``m = 2`` a triangle with edge ``(1, 3)`` weighted ``l``.
    ``l`` is found by bisection.
    """
    if tol <= 0:
        raise InputError("tol must be positive")
    m = branch_index(gamma)
    if m >= 3:
        g = path_graph(m)
        make = lambda l: _path_weights(m, l)  # noqa: E731
        lo, hi = 0.0, 1.0  # gap decreases in l; l = 1 excluded
        increasing = False
    else:
        g = complete_graph(3)
        make = _k3_weights
        lo, hi = 0.0, 1.0  # gap increases in l
        increasing = True

    def gap_at(l: float) -> float:
        return _ratio_gap(laplacian(g, make(l)))

    edge = hi if increasing else lo
    if abs(gap_at(edge) - gamma) <= tol:
        l = edge
    else:
        for _ in range(max_iter):
            l = 0.5 * (lo + hi)
            val = gap_at(l)
            if abs(val - gamma) <= tol:
                break
            if (val < gamma) == increasing:
                lo = l
            else:
                hi = l
        else:
            raise ArithmeticError(f"bisection for gamma={gamma} did not converge in {max_iter} steps")
    weights = make(l)
    R = laplacian(g, weights)
    lam1 = float(symmetric_eigenvalues(R)[0])
    wg = Graph(g.n, g.edges, {e: w for e, w in weights.items() if w > 0}, g.name)
    mm = MixingMatrix.from_matrix(np.eye(g.n) - R / lam1, wg, note=f"m={m}, l={l!r}")
    if abs(mm.gap - gamma) > max(tol, 1e-12) * 10:
        raise ArithmeticError(f"constructed gap {mm.gap} misses target {gamma}")
    return mm


@dataclass
class ClauseResult:
    clause: str
    passed: bool
    residual: float
    detail: str


def validate_mixing(W, g: Graph | None = None, gamma: float | None = None, tol: float = 1e-10) -> list[ClauseResult]:
    """Check symmetry/stochasticity/spectrum, sparsity pattern and spectral gap."""
    mm = W if isinstance(W, MixingMatrix) else MixingMatrix.from_matrix(W, g)
    M = mm.W
    n = M.shape[0]
    g = g or mm.graph
    sym = float(np.max(np.abs(M - M.T)))
    rows = float(np.max(np.abs(M.sum(axis=1) - 1.0)))
    lo = float(mm.eigenvalues[-1])
    hi = float(mm.eigenvalues[0])
    spec = max(0.0, -lo, hi - 1.0)
    a_ok = sym <= 1e-12 and rows <= 1e-12 and spec <= tol
    out = [ClauseResult("a", a_ok, max(sym, rows, spec),
                        f"symmetry {sym:.2e}, row sums {rows:.2e}, spectrum [{lo:.6g}, {hi:.6g}]")]
    if g is not None:
        A = g.adjacency() | np.eye(n, dtype=bool)
        outside = float(np.max(np.abs(M[~A]))) if np.any(~A) else 0.0
        nonpos = float(-np.min(M[A])) if np.any(A) else 0.0
        b_ok = outside == 0.0 and np.all(M[A] > 0)
        out.append(ClauseResult("b", bool(b_ok), max(outside, max(nonpos, 0.0)),
                                f"max |w| off pattern {outside:.2e}, min w on pattern {-nonpos:.6g}"))
    target = gamma if gamma is not None else 0.0
    c_ok = mm.gap >= target - tol and (gamma is None or mm.gap > 0)
    if gamma is None:
        c_ok = mm.gap > tol
    out.append(ClauseResult("c", bool(c_ok), mm.gap - target, f"gap {mm.gap:.12g} vs gamma {target:.12g}"))
    return out
