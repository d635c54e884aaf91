"""Dense linear algebra and seeded randomness used throughout the package.

Matrices are plain ``numpy.ndarray`` objects of dtype float64, row-major.

Random draws come from a counter-based SplitMix64 stream: draw ``k`` (0-based)
of a stream with seed ``s`` is ``mix64(s + (k + 1) * 0x9E3779B97F4A7C15 mod 2**64)``
where ``mix64`` is the SplitMix64 finalizer (Steele, Lea and Flood, 2014).
Uniform doubles use the top 53 bits. Sequences are therefore identical on
every platform and numpy version.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


class InputError(ValueError):
    """Raised when an operation receives arguments outside its contract."""


class EvaluationError(ArithmeticError):
    """Raised when a function evaluation produces a non-finite value."""


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * _M1) & _MASK64
    z = ((z ^ (z >> 27)) * _M2) & _MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


@dataclass
class RandomStream:
    """Counter-based SplitMix64 stream. ``counter`` is the number of draws made."""

    seed: int
    counter: int = 0

    def __post_init__(self) -> None:
        self.seed = int(self.seed) & _MASK64

    def next_u64(self) -> int:
        self.counter += 1
        return _mix64((self.seed + self.counter * _GOLDEN) & _MASK64)

    def uniform(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniforms(self, size: int) -> np.ndarray:
        """``size`` consecutive uniform draws, identical to calling :meth:`uniform` repeatedly."""
        if size <= 0:
            return np.zeros(0)
        k = np.arange(self.counter + 1, self.counter + size + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.seed) + k * np.uint64(_GOLDEN)
            out = _mix64_array(z)
        self.counter += size
        return (out >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))

    def normals(self, size: int) -> np.ndarray:
        """Standard normals by Box-Muller, consuming two uniforms per pair."""
        pairs = (size + 1) // 2
        u = self.uniforms(2 * pairs)
        u1 = 1.0 - u[0::2]  # (0, 1], keeps log finite
        u2 = u[1::2]
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(2.0 * math.pi * u2)
        z[1::2] = r * np.sin(2.0 * math.pi * u2)
        return z[:size]

    def integer(self, n: int) -> int:
        """Uniform integer in ``range(n)``."""
        return min(int(self.uniform() * n), n - 1)

    def fork(self, salt: int) -> RandomStream:
        return RandomStream(_mix64((self.seed ^ (salt * _M2)) & _MASK64))


def draw_bernoulli(rs: RandomStream, p: float) -> int:
    if not 0.0 <= p <= 1.0:
        raise InputError(f"probability must lie in [0, 1], got {p}")
    return 1 if rs.uniform() < p else 0


def draw_multinomial(rs: RandomStream, b: int, n: int) -> np.ndarray:
    """Counts of ``b`` independent uniform categorical draws over ``n`` categories."""
    if b < 1 or n < 1:
        raise InputError(f"multinomial needs b >= 1 and n >= 1, got b={b}, n={n}")
    idx = np.minimum((rs.uniforms(b) * n).astype(np.int64), n - 1)
    return np.bincount(idx, minlength=n)


# ---------------------------------------------------------------------------
# symmetric eigensolver


def _check_symmetric(M: np.ndarray, tol: float) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InputError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    asym = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asym > tol * scale:
        raise InputError(f"matrix is not symmetric (max |M - M^T| = {asym:.3e})")
    return 0.5 * (M + M.T)


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament schedule: n-1 rounds of n/2 disjoint index pairs (n even)."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        p = np.array(players[: n // 2])
        q = np.array(players[n // 2 :][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def symmetric_eigh(
    M: np.ndarray, tol: float = 1e-12, max_sweeps: int = 60
) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a symmetric matrix by cyclic Jacobi rotations.

    Rotations are applied in round-robin order, so each step annihilates
    ``n/2`` disjoint off-diagonal entries at once. Iteration stops when the
    off-diagonal Frobenius norm drops below ``tol * ||M||_F``.

    Returns eigenvalues sorted descending and the matching eigenvectors as
    columns.
    """
    A = _check_symmetric(M, tol=max(tol, 1e-14) * 1e3)
    n0 = A.shape[0]
    if n0 == 0:
        return np.zeros(0), np.zeros((0, 0))
    n = n0 + (n0 % 2)
    if n != n0:  # pad with an isolated zero row/column
        A = np.pad(A, ((0, 1), (0, 1)))
    V = np.eye(n)
    norm = float(np.linalg.norm(A))
    rounds = _round_robin(n)
    target = tol * norm
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(A - np.diag(np.diag(A))))
        if off <= target or norm == 0.0:
            break
        for p, q in rounds:
            apq = A[p, q]
            active = np.abs(apq) > 1e-300
            if not np.any(active):
                continue
            app = A[p, p]
            aqq = A[q, q]
            theta = np.where(active, (aqq - app) / (2.0 * np.where(active, apq, 1.0)), 0.0)
            t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(theta == 0.0, 1.0, t)
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # rows then columns: A <- J^T A J with J acting on (p, q) planes
            Ap = A[p, :].copy()
            Aq = A[q, :].copy()
            A[p, :] = c[:, None] * Ap - s[:, None] * Aq
            A[q, :] = s[:, None] * Ap + c[:, None] * Aq
            Ap = A[:, p].copy()
            Aq = A[:, q].copy()
            A[:, p] = Ap * c - Aq * s
            A[:, q] = Ap * s + Aq * c
            Vp = V[:, p].copy()
            Vq = V[:, q].copy()
            V[:, p] = Vp * c - Vq * s
            V[:, q] = Vp * s + Vq * c
    else:
        raise ArithmeticError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    w = np.diag(A).copy()
    if n != n0:
        # drop the padding: the eigenvector concentrated on the padded slot
        pad = int(np.argmax(np.abs(V[n0, :])))
        keep = [k for k in range(n) if k != pad]
        w = w[keep]
        V = V[:n0, keep]
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def symmetric_eigenvalues(M: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, sorted descending."""
    return symmetric_eigh(M, tol)[0]


# ---------------------------------------------------------------------------
# finite differences


def default_fd_step(x: np.ndarray) -> float:
    return 1e-6 * max(1.0, float(np.max(np.abs(x))) if np.size(x) else 1.0)


def central_difference_gradient(
    f: Callable[[np.ndarray], float], x: np.ndarray, h: float | None = None
) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if h is None:
        h = default_fd_step(x)
    if not h > 0:
        raise InputError(f"finite-difference step must be positive, got {h}")
    g = np.empty_like(x)
    e = np.zeros_like(x)
    for j in range(x.size):
        e[j] = h
        fp = f(x + e)
        fm = f(x - e)
        e[j] = 0.0
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise EvaluationError(f"non-finite function value near coordinate {j}")
        g[j] = (fp - fm) / (2.0 * h)
    return g


def relative_error(approx: np.ndarray, exact: np.ndarray) -> float:
    """``||approx - exact|| / max(1, ||exact||)``."""
    diff = float(np.linalg.norm(np.asarray(approx) - np.asarray(exact)))
    return diff / max(1.0, float(np.linalg.norm(exact)))
