"""Whitening with dimension reduction.

Fits an affine map x -> (x - mu) W on an N x D sample so the transformed
sample has zero mean and identity covariance, keeping only the k
highest-variance whitened directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .ioutil import atomic_write, fmt_floats, parse_floats


@dataclass(frozen=True)
class WhiteningTransform:
    mu: np.ndarray
    W: np.ndarray
    source_dim: int
    target_dim: int
    sigma_eigvals: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.target_dim <= self.source_dim:
            raise ValueError(
                f"target_dim {self.target_dim} must be in [1, {self.source_dim}]"
            )
        if self.mu.shape != (self.source_dim,):
            raise ValueError(f"mu shape {self.mu.shape} does not match source_dim")
        if self.W.shape != (self.source_dim, self.target_dim):
            raise ValueError(f"W shape {self.W.shape} does not match declared dims")


def fit_whitening(X: np.ndarray, k: int, eps: float = 1e-12) -> WhiteningTransform:
    """Fit on an N x D sample (N >= 2, k <= D).

    mu is the column mean, Sigma the covariance with divisor N. The
    symmetric eigendecomposition of Sigma gives U and the eigenvalues,
    sorted descending; W = U diag(1/sqrt(max(lambda, eps))) truncated to
    its first k columns. Each eigenvector is oriented so its
    largest-magnitude entry is non-negative, fixing the sign ambiguity.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D sample, got shape {X.shape}")
    n, d = X.shape
    if n < 2:
        raise ValueError(f"need at least 2 rows to fit, got {n}")
    if not 1 <= k <= d:
        raise ValueError(f"target dimension k={k} must be in [1, {d}]")
    if not np.all(np.isfinite(X)):
        raise ValueError("sample contains non-finite values")

    mu = X.mean(axis=0)
    Xc = X - mu
    sigma = Xc.T @ Xc / n
    eigvals, U = np.linalg.eigh(sigma)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    U = U[:, order]
    # orient each eigenvector so its largest-magnitude entry is positive
    for j in range(d):
        i = int(np.argmax(np.abs(U[:, j])))
        if U[i, j] < 0:
            U[:, j] = -U[:, j]
    scales = 1.0 / np.sqrt(np.maximum(eigvals, eps))
    W = (U * scales)[:, :k]
    return WhiteningTransform(
        mu=mu,
        W=np.ascontiguousarray(W),
        source_dim=d,
        target_dim=k,
        sigma_eigvals=np.maximum(eigvals, 0.0),
    )


def apply_whitening(X: np.ndarray, transform: WhiteningTransform) -> np.ndarray:
    """Row-wise (x - mu) W. Accepts a single vector or an N x D batch."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != transform.source_dim:
        raise ValueError(
            f"input dimension {X.shape[-1]} does not match transform source_dim {transform.source_dim}"
        )
    return (X - transform.mu) @ transform.W


WHITEN_MAGIC = "whiten v1"


def save_transform(path, transform: WhiteningTransform) -> None:
    lines = [f"{WHITEN_MAGIC} {transform.source_dim} {transform.target_dim}"]
    lines.append(fmt_floats(transform.mu))
    for row in transform.W:
        lines.append(fmt_floats(row))
    atomic_write(path, "\n".join(lines) + "\n")


def load_transform(path) -> WhiteningTransform:
    """Read a transform file; eigenvalue diagnostics are not persisted."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        parts = header.split(" ")
        if len(parts) != 4 or " ".join(parts[:2]) != WHITEN_MAGIC:
            raise FormatError(f"{path}: bad transform header {header!r}")
        try:
            d, k = int(parts[2]), int(parts[3])
        except ValueError:
            raise FormatError(f"{path}: bad transform header {header!r}") from None
        mu = parse_floats(fh.readline(), d, path, 2)
        rows = []
        for i in range(d):
            rows.append(parse_floats(fh.readline(), k, path, 3 + i))
    return WhiteningTransform(mu=mu, W=np.vstack(rows), source_dim=d, target_dim=k)
