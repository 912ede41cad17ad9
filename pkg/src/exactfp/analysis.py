"""Hash-collision statistics and regression metrics."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .fingerprints import SparseFingerprint, fold, morgan_sparse
from .kernel import tanimoto
from .smiles import MolGraph

__all__ = [
    "CollisionReport",
    "PairStats",
    "collision_study",
    "pair_statistics",
    "pairwise_collisions",
    "regression_metrics",
    "summarize_pairs",
]


@dataclass(frozen=True)
class CollisionReport:
    dim: int
    mean_pairwise_collisions: float
    mean_exact_tanimoto: float
    mean_folded_tanimoto: float
    mean_overestimation: float
    pair_count: int


@dataclass(frozen=True)
class PairStats:
    """One molecule pair at one fold dimension."""

    pair: int
    dim: int
    collisions: int
    exact_tanimoto: float
    folded_tanimoto: float

    @property
    def overestimation(self) -> float:
        return self.folded_tanimoto - self.exact_tanimoto


def pairwise_collisions(a: SparseFingerprint, b: SparseFingerprint, dim: int) -> int:
    """Unordered pairs of distinct identifiers (union of both supports) sharing a slot."""
    if dim < 1:
        raise ValueError(f"dim must be positive, got {dim}")
    slots = Counter(ident % dim for ident in set(a.counts) | set(b.counts))
    return sum(k * (k - 1) // 2 for k in slots.values())


def pair_statistics(
    fp_pairs: Sequence[tuple[SparseFingerprint, SparseFingerprint]], dims: Iterable[int]
) -> list[PairStats]:
    dims = list(dims)
    out = []
    for p, (a, b) in enumerate(fp_pairs):
        exact = tanimoto(a, b)
        for d in dims:
            out.append(PairStats(p, d, pairwise_collisions(a, b, d), exact, tanimoto(fold(a, d), fold(b, d))))
    return out


def summarize_pairs(stats: Sequence[PairStats]) -> list[CollisionReport]:
    """Average per-pair statistics into one report per dimension (input dim order)."""
    by_dim: dict[int, list[PairStats]] = {}
    for s in stats:
        by_dim.setdefault(s.dim, []).append(s)
    reports = []
    for d, rows in by_dim.items():
        exact = np.array([r.exact_tanimoto for r in rows])
        folded = np.array([r.folded_tanimoto for r in rows])
        reports.append(
            CollisionReport(
                dim=d,
                mean_pairwise_collisions=float(np.mean([r.collisions for r in rows])),
                mean_exact_tanimoto=float(exact.mean()),
                mean_folded_tanimoto=float(folded.mean()),
                mean_overestimation=float((folded - exact).mean()),
                pair_count=len(rows),
            )
        )
    return reports


def collision_study(
    pairs: Sequence[tuple[MolGraph, MolGraph]], dims: Iterable[int], radius: int = 2
) -> list[CollisionReport]:
    """Mean collisions and exact vs folded Tanimoto over molecule pairs, per dim."""
    if len(pairs) == 0:
        raise ValueError("no molecule pairs")
    cache: dict[int, SparseFingerprint] = {}

    def fp_of(mol: MolGraph) -> SparseFingerprint:
        key = id(mol)
        if key not in cache:
            cache[key] = morgan_sparse(mol, radius)
        return cache[key]

    fp_pairs = [(fp_of(a), fp_of(b)) for a, b in pairs]
    return summarize_pairs(pair_statistics(fp_pairs, dims))


def regression_metrics(y_true, y_pred) -> dict[str, float]:
    """R^2 (population variance convention), MSE and MAE."""
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ValueError(f"shape mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size < 2:
        raise ValueError("need at least 2 values")
    resid = y_true - y_pred
    mse = float(np.mean(resid * resid))
    mae = float(np.mean(np.abs(resid)))
    var = float(np.var(y_true))
    if var == 0:
        raise ValueError("R^2 is undefined for constant y_true")
    return {"r2": 1.0 - mse / var, "mse": mse, "mae": mae}
