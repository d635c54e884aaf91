"""Partitioned linear and logistic regression, LIBSVM ingestion and synthetic data."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.special import expit

from .numkit import InputError, RandomStream
from .objectives import LocalObjectiveSet


class ParseError(InputError):
    pass


@dataclass
class Dataset:
    A: sparse.csr_matrix
    labels: np.ndarray
    name: str = "dataset"
    metadata: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    def is_binary(self) -> bool:
        return bool(np.all(np.isin(self.labels, (-1.0, 1.0))))


def parse_libsvm(text: str, d: int | None = None, name: str = "libsvm") -> Dataset:
    """Parse ``label idx:val ...`` lines with 1-based, strictly increasing indices."""
    labels, indptr, indices, data = [], [0], [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            labels.append(float(tok[0]))
        except ValueError:
            raise ParseError(f"line {lineno}: bad label {tok[0]!r}") from None
        if not math.isfinite(labels[-1]):
            raise ParseError(f"line {lineno}: non-finite label")
        last = 0
        for item in tok[1:]:
            idx, sep, val = item.partition(":")
            if not sep:
                raise ParseError(f"line {lineno}: malformed token {item!r}")
            try:
                k, v = int(idx), float(val)
            except ValueError:
                raise ParseError(f"line {lineno}: malformed token {item!r}") from None
            if k < 1:
                raise ParseError(f"line {lineno}: feature indices are 1-based, got {k}")
            if k == last:
                raise ParseError(f"line {lineno}: duplicate index {k}")
            if k < last:
                raise ParseError(f"line {lineno}: indices must increase ({k} after {last})")
            if not math.isfinite(v):
                raise ParseError(f"line {lineno}: non-finite value at index {k}")
            last = k
            indices.append(k - 1)
            data.append(v)
        indptr.append(len(indices))
    width = max(indices) + 1 if indices else 0
    if d is not None:
        if d < width:
            raise ParseError(f"feature index {width} exceeds declared dimension {d}")
        width = d
    A = sparse.csr_matrix((np.array(data, dtype=float), np.array(indices, dtype=np.int64), np.array(indptr)),
                          shape=(len(labels), width))
    return Dataset(A, np.array(labels, dtype=float), name)


def read_libsvm(path: str | Path, d: int | None = None) -> Dataset:
    return parse_libsvm(Path(path).read_text(), d, name=Path(path).name)


def synth_regression(m: int, d: int, noise: float = 0.0, seed: int = 0, mode: str = "square") -> Dataset:
    """Gaussian features scaled by ``1/sqrt(d)`` and a Gaussian ground truth ``x_true``.

    Labels are ``a^T x_true + noise * g`` (square) or ``sign(a^T x_true)``
    (logistic, with zero mapped to +1).
    """
    if m < 1 or d < 1:
        raise InputError(f"need m >= 1 and d >= 1, got m={m}, d={d}")
    if mode not in ("square", "logistic"):
        raise InputError(f"unknown mode {mode!r}")
    rs = RandomStream(seed)
    A = rs.normals(m * d).reshape(m, d) / math.sqrt(d)
    x_true = rs.normals(d)
    z = A @ x_true
    if mode == "square":
        labels = z + noise * rs.normals(m)
    else:
        labels = np.where(z >= 0, 1.0, -1.0)
    return Dataset(sparse.csr_matrix(A), labels, f"synth-{mode}(m={m}, d={d})",
                   {"x_true": x_true, "noise": noise, "seed": seed, "mode": mode})


# shape-only analogue of a 606-sample face-pose regression set, at reduced dimension
DRIVFACE_SCALE = {"m": 606, "d": 200}


def drivface_scale(seed: int = 0, noise: float = 0.0) -> Dataset:
    ds = synth_regression(DRIVFACE_SCALE["m"], DRIVFACE_SCALE["d"], noise, seed, "square")
    ds.name = "drivface-scale"
    return ds


def _blocks(m: int, n: int) -> list[slice]:
    s = -(-m // n)
    return [slice(min(s * i, m), min(s * (i + 1), m)) for i in range(n)]


def _square_constants(blocks: list[np.ndarray], n: int, m: int, A: np.ndarray):
    d = A.shape[1]
    Q = np.zeros((d, d))
    for Ai in blocks:
        H = (2.0 * n / m) * (Ai.T @ Ai)
        Q += H @ H
    L = math.sqrt(max(float(np.linalg.eigvalsh(Q / n)[-1]), 0.0))
    ev = np.linalg.eigvalsh((2.0 / m) * (A.T @ A))
    pos = ev[ev > 1e-10 * max(ev[-1], 1e-300)]
    mu = float(pos[0]) if pos.size else None
    return L, mu


def _logistic_L(blocks: list[np.ndarray], n: int, m: int) -> float:
    tot = 0.0
    for Ai in blocks:
        s = float(np.linalg.norm(Ai, 2)) ** 2 if Ai.size else 0.0
        tot += (n / (4.0 * m) * s) ** 2
    return math.sqrt(tot / n)


def partitioned_regression_set(ds: Dataset, n: int, loss: str = "square",
                               dense_limit: int = 4000) -> LocalObjectiveSet:
    """Agent ``i`` holds a contiguous block of ``ceil(m/n)`` samples and
    ``f_i = (n/m) * sum of its sample losses``, so the average of the ``f_i``
    is the mean sample loss.

    ``L`` (and ``mu`` for the square loss) are computed exactly when
    ``d <= dense_limit``; the optimal value is left unknown.
    """
    if loss not in ("square", "logistic"):
        raise InputError(f"unknown loss {loss!r}")
    m, d = ds.m, ds.d
    if n < 1 or n > m:
        raise InputError(f"need 1 <= n <= m, got n={n}, m={m}")
    if loss == "logistic" and not ds.is_binary():
        raise InputError("logistic loss needs labels in {-1, +1}")
    A = ds.A.tocsr()
    y = ds.labels
    blocks = _blocks(m, n)
    Ab = [A[s] for s in blocks]
    yb = [y[s] for s in blocks]
    scale = n / m

    if loss == "square":
        def value(i, x):
            r = Ab[i] @ x - yb[i]
            return scale * float(r @ r)

        def gradient(i, x):
            return 2.0 * scale * (Ab[i].T @ (Ab[i] @ x - yb[i]))

        def mean_value(x):
            r = A @ x - y
            return float(r @ r) / m

        def mean_gradient(x):
            return 2.0 / m * (A.T @ (A @ x - y))
    else:
        def value(i, x):
            return scale * float(np.sum(np.logaddexp(0.0, -yb[i] * (Ab[i] @ x))))

        def gradient(i, x):
            return -scale * (Ab[i].T @ (yb[i] * expit(-yb[i] * (Ab[i] @ x))))

        def mean_value(x):
            return float(np.sum(np.logaddexp(0.0, -y * (A @ x)))) / m

        def mean_gradient(x):
            return -(A.T @ (y * expit(-y * (A @ x)))) / m

    L = mu = None
    if d <= dense_limit:
        dense = [B.toarray() for B in Ab]
        if loss == "square":
            L, mu = _square_constants(dense, n, m, A.toarray())
        else:
            L = _logistic_L(dense, n, m)
    return LocalObjectiveSet(
        n, d, value, gradient,
        L=L, mu=mu, f_star=None,
        mean_value=mean_value, mean_gradient=mean_gradient,
        name=f"{loss}:{ds.name}/n={n}",
        metadata={"loss": loss, "m": m, "block": -(-m // n),
                  "empty_agents": sum(1 for s in blocks if s.stop <= s.start)},
    )
