"""Tanimoto similarity on count fingerprints and the GP covariance built on it.

Both sums in the Tanimoto ratio are computed exactly as integers and divided
once, using ``sum(max) = sum(a) + sum(b) - sum(min)``. The bulk routine
:func:`tanimoto_matrix` gets the min-sums from the layer-cake identity

    sum_i min(a_i, b_i) = sum_{t >= 1} #{i : a_i >= t and b_i >= t}

which turns the whole matrix into a handful of 0/1 matrix products. Every
product is an integer well below 2**53, so float64 matmul is exact and the
matrix agrees bit-for-bit with pairwise :func:`tanimoto`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .fingerprints import DenseFingerprint, Fingerprint, SparseFingerprint

__all__ = [
    "GpHyperparams",
    "TanimotoIndex",
    "covariance",
    "fingerprint_kind",
    "tanimoto",
    "tanimoto_matrix",
]


@dataclass(frozen=True)
class GpHyperparams:
    amplitude_sq: float
    noise_sq: float
    mean_const: float = 0.0

    def __post_init__(self) -> None:
        if not (self.amplitude_sq > 0 and np.isfinite(self.amplitude_sq)):
            raise ValueError(f"amplitude_sq must be positive and finite, got {self.amplitude_sq}")
        if not (self.noise_sq >= 0 and np.isfinite(self.noise_sq)):
            raise ValueError(f"noise_sq must be non-negative and finite, got {self.noise_sq}")
        if not np.isfinite(self.mean_const):
            raise ValueError(f"mean_const must be finite, got {self.mean_const}")


def fingerprint_kind(fps: Sequence[Fingerprint]) -> tuple[str, int | None]:
    """``("sparse", None)`` or ``("dense", dim)``; raises on mixed inputs."""
    if len(fps) == 0:
        raise ValueError("empty fingerprint sequence")
    first = fps[0]
    if isinstance(first, SparseFingerprint):
        if not all(isinstance(fp, SparseFingerprint) for fp in fps):
            raise TypeError("mixed sparse and dense fingerprints")
        return "sparse", None
    if isinstance(first, DenseFingerprint):
        dim = first.dim
        for fp in fps:
            if not isinstance(fp, DenseFingerprint):
                raise TypeError("mixed sparse and dense fingerprints")
            if fp.dim != dim:
                raise ValueError(f"dense fingerprint dimension mismatch: {fp.dim} != {dim}")
        return "dense", dim
    raise TypeError(f"not a fingerprint: {type(first).__name__}")


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """Count Tanimoto similarity ``sum(min) / sum(max)``; 0 for two empty inputs."""
    if isinstance(a, SparseFingerprint) and isinstance(b, SparseFingerprint):
        small, large = (a.counts, b.counts) if len(a) <= len(b) else (b.counts, a.counts)
        min_sum = 0
        for k, v in small.items():
            w = large.get(k)
            if w is not None:
                min_sum += v if v < w else w
        max_sum = a.total + b.total - min_sum
    elif isinstance(a, DenseFingerprint) and isinstance(b, DenseFingerprint):
        if a.dim != b.dim:
            raise ValueError(f"dense fingerprint dimension mismatch: {a.dim} != {b.dim}")
        min_sum = int(np.minimum(a.counts, b.counts).sum())
        max_sum = a.total + b.total - min_sum
    else:
        raise TypeError("tanimoto needs two sparse or two dense fingerprints")
    if max_sum == 0:
        return 0.0
    return min_sum / max_sum


def _count_matrices(X: Sequence[Fingerprint], Y: Sequence[Fingerprint] | None):
    kind, dim = fingerprint_kind(X)
    if Y is not None:
        kind_y, dim_y = fingerprint_kind(Y)
        if kind_y != kind or dim_y != dim:
            raise ValueError(f"fingerprint encodings differ: {kind}/{dim} vs {kind_y}/{dim_y}")
    if kind == "dense":
        A = np.stack([fp.counts for fp in X])
        B = None if Y is None else np.stack([fp.counts for fp in Y])
        return A, B
    columns: dict[int, int] = {}

    def build(fps):
        indptr = [0]
        indices = []
        data = []
        for fp in fps:
            for ident, c in fp.counts.items():
                col = columns.get(ident)
                if col is None:
                    col = columns[ident] = len(columns)
                indices.append(col)
                data.append(c)
            indptr.append(len(indices))
        return indptr, indices, data

    parts_a = build(X)
    parts_b = None if Y is None else build(Y)
    ncol = max(len(columns), 1)

    def to_csr(parts, nrow):
        indptr, indices, data = parts
        return sp.csr_matrix(
            (np.asarray(data, dtype=np.int64), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
            shape=(nrow, ncol),
        )

    A = to_csr(parts_a, len(X))
    B = None if parts_b is None else to_csr(parts_b, len(Y))
    return A, B


def _layers(A) -> list:
    """Binary threshold layers ``[A >= 1, A >= 2, ...]`` as float64 matrices."""
    top = int(A.max()) if A.shape[0] and A.shape[1] else 0
    return [(A >= t).astype(np.float64) for t in range(1, top + 1)]


def _layer_products(layers_a: list, layers_b: list, rows=None) -> np.ndarray:
    out = None
    for La, Lb in zip(layers_a, layers_b):
        if rows is not None:
            La = La[rows]
        prod = La @ Lb.T
        if sp.issparse(prod):
            prod = prod.toarray()
        out = prod if out is None else out + prod
    return out


def _ratio(mins: np.ndarray, tot_a: np.ndarray, tot_b: np.ndarray) -> np.ndarray:
    maxs = tot_a[:, None] + tot_b[None, :] - mins
    out = np.zeros_like(mins)
    np.divide(mins, maxs, out=out, where=maxs > 0)
    return out


def _totals(A) -> np.ndarray:
    return np.asarray(A.sum(axis=1), dtype=np.float64).reshape(-1)


def tanimoto_matrix(X: Sequence[Fingerprint], Y: Sequence[Fingerprint] | None = None) -> np.ndarray:
    """All-pairs Tanimoto between ``X`` and ``Y`` (``Y=None`` means ``X``).

    Entries equal :func:`tanimoto` exactly; the self matrix is exactly symmetric.
    """
    A, B = _count_matrices(X, Y)
    layers_a = _layers(A)
    if B is None:
        mins = _layer_products(layers_a, layers_a)
        if mins is None:
            return np.zeros((len(X), len(X)))
        tot = _totals(A)
        out = _ratio(mins, tot, tot)
        # layer products are symmetric in exact arithmetic; keep them bitwise so
        return np.triu(out) + np.triu(out, 1).T
    mins = _layer_products(layers_a, _layers(B))
    if mins is None:
        return np.zeros((len(X), len(Y)))
    return _ratio(mins, _totals(A), _totals(B))


class TanimotoIndex:
    """Tanimoto rows against a fixed fingerprint set, computed on demand.

    The count matrix and its threshold layers are built once, so asking for a
    few rows costs one small sparse product per layer.
    """

    def __init__(self, fps: Sequence[Fingerprint]) -> None:
        self.kind = fingerprint_kind(fps)
        self.size = len(fps)
        A, _ = _count_matrices(fps, None)
        if sp.issparse(A):
            A = A.tocsr()
        self._layers = _layers(A)
        self._totals = _totals(A)

    def rows(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        mins = _layer_products(self._layers, self._layers, rows=idx)
        if mins is None:
            return np.zeros((idx.size, self.size))
        return _ratio(mins, self._totals[idx], self._totals)


def covariance(
    X: Sequence[Fingerprint],
    Y: Sequence[Fingerprint] | None,
    h: GpHyperparams,
    same_set: bool = False,
) -> np.ndarray:
    """``a^2 * tanimoto(X_i, Y_j) + noise^2 * [same_set and i == j]``.

    Pass ``Y=None`` for the self-Gram matrix. Noise is only ever added on the
    diagonal of a self-Gram matrix, never to a cross-covariance.
    """
    T = tanimoto_matrix(X, Y)
    K = h.amplitude_sq * T
    if same_set:
        if K.shape[0] != K.shape[1]:
            raise ValueError("same_set=True needs a square matrix")
        K[np.diag_indices_from(K)] += h.noise_sq
    return K
