"""Pool-based Bayesian optimization with expected improvement.

The objective values of the whole pool are known up front and revealed one
at a time, which simulates an expensive oracle. The surrogate is the Tanimoto
GP with fixed hyperparameters. Its posterior over the pool is updated by
extending the Cholesky factor one row per acquisition, so an iteration costs
O(n_observed * pool) instead of a full refit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import ndtr

from .data import bottom_fraction, normalize_direction, subsample
from .fingerprints import Fingerprint
from .gp import GpFitError, _cholesky, default_hyperparams
from .kernel import GpHyperparams, TanimotoIndex

__all__ = [
    "BoConfig",
    "BoTrajectory",
    "IncrementalGp",
    "auc_best_observed",
    "expected_improvement",
    "run_bo",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def expected_improvement(mean, variance, best: float, direction: str = "minimize"):
    """Closed-form EI of Gaussian predictions against the incumbent ``best``.

    For minimization with ``s = sqrt(variance)`` and ``z = (best - mean) / s``:
    ``EI = (best - mean) * Phi(z) + s * phi(z)``; ``s = 0`` gives
    ``max(best - mean, 0)``. Maximization mirrors it with ``mean - best``.
    Works elementwise on arrays; scalars in, float out.
    """
    mean_a = np.asarray(mean, dtype=np.float64)
    var_a = np.asarray(variance, dtype=np.float64)
    if np.any(var_a < 0):
        raise ValueError("negative predictive variance")
    if normalize_direction(direction) == "minimize":
        delta = best - mean_a
    else:
        delta = mean_a - best
    sigma = np.sqrt(var_a)
    safe = np.where(sigma > 0, sigma, 1.0)
    with np.errstate(over="ignore"):  # z*z overflows to inf for denormal sigma; exp gives 0
        z = delta / safe
        ei = delta * ndtr(z) + sigma * _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    ei = np.where(sigma > 0, ei, delta)
    ei = np.maximum(ei, 0.0)
    if ei.ndim == 0:
        return float(ei)
    return ei


def auc_best_observed(best_curve: Sequence[float], pool_best: float, pool_worst: float) -> float:
    """Mean of the best-so-far curve rescaled so ``pool_worst -> 0`` and ``pool_best -> 1``."""
    if pool_best == pool_worst:
        raise ValueError("degenerate pool: best and worst values are equal")
    curve = np.asarray(best_curve, dtype=np.float64)
    if curve.size == 0:
        raise ValueError("empty best-so-far curve")
    return float(np.mean((curve - pool_worst) / (pool_best - pool_worst)))


@dataclass(frozen=True)
class BoConfig:
    init_size: int = 1000
    budget: int = 1000
    init_percentile: float = 0.8
    direction: str = "minimize"
    refit_hyperparams: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "direction", normalize_direction(self.direction))
        if self.init_size < 1 or self.budget < 1:
            raise ValueError("init_size and budget must be positive")
        if not 0 < self.init_percentile <= 1:
            raise ValueError(f"init_percentile must be in (0, 1], got {self.init_percentile}")


@dataclass
class BoTrajectory:
    acquired: list[tuple[int, int, float]]
    best_curve: np.ndarray
    auc: float
    init_indices: list[int]
    hyper: GpHyperparams
    config: BoConfig
    pool_best: float = field(default=math.nan)
    pool_worst: float = field(default=math.nan)


class IncrementalGp:
    """GP posterior over a fixed pool, grown one observation at a time.

    Keeps ``V = L^-1 K(obs, pool)`` and ``z = L^-1 (y - c)``; the posterior
    mean over the pool is ``c + V^T z`` and the latent variance is
    ``a^2 - colsum(V^2)``. Adding point ``j`` reuses ``V[:, j]`` as the new
    row of ``L``.
    """

    def __init__(self, index: TanimotoIndex, h: GpHyperparams, observed: Sequence[int], values: Sequence[float]) -> None:
        self.index = index
        self.h = h
        self.observed: list[int] = list(observed)
        y = np.asarray(values, dtype=np.float64)
        T = index.rows(self.observed)
        K = h.amplitude_sq * T[:, self.observed]
        K[np.diag_indices_from(K)] += h.noise_sq
        L, self.jitter = _cholesky(K)
        self.V = solve_triangular(L, h.amplitude_sq * T, lower=True)
        self.z = solve_triangular(L, y - h.mean_const, lower=True)
        self.sq = np.einsum("ij,ij->j", self.V, self.V)

    def posterior(self) -> tuple[np.ndarray, np.ndarray]:
        mean = self.h.mean_const + self.V.T @ self.z
        var = np.maximum(self.h.amplitude_sq - self.sq, 0.0)
        return mean, var

    def add(self, j: int, value: float) -> None:
        h = self.h
        t = self.index.rows([j])[0]
        l = self.V[:, j]
        d2 = h.amplitude_sq * t[j] + h.noise_sq + self.jitter - l @ l
        if not d2 > 0:
            raise GpFitError(f"covariance lost positive definiteness when adding pool index {j}")
        d = math.sqrt(d2)
        new_row = (h.amplitude_sq * t - l @ self.V) / d
        self.V = np.vstack([self.V, new_row])
        self.z = np.append(self.z, (value - h.mean_const - l @ self.z) / d)
        self.sq = self.sq + new_row * new_row
        self.observed.append(j)


def run_bo(
    fps: Sequence[Fingerprint],
    values: Sequence[float],
    cfg: BoConfig,
    h: GpHyperparams | None = None,
    index: TanimotoIndex | None = None,
) -> BoTrajectory:
    """Simulated BO over a candidate pool.

    The initial design is ``cfg.init_size`` indices drawn (SplitMix64,
    ``cfg.seed``) from the worst ``cfg.init_percentile`` of the pool. Each
    iteration scores every unobserved candidate by EI against the best
    observed value and acquires the maximiser, lowest pool index on ties.
    With ``h=None`` the fixed heuristic hyperparameters are computed from the
    initial observations; ``refit_hyperparams`` recomputes them after every
    acquisition.
    """
    y_pool = np.asarray(values, dtype=np.float64)
    n_pool = y_pool.size
    if len(fps) != n_pool:
        raise ValueError(f"{len(fps)} fingerprints but {n_pool} objective values")
    if not np.all(np.isfinite(y_pool)):
        raise ValueError("pool contains non-finite objective values")
    if cfg.init_size + cfg.budget > n_pool:
        raise ValueError(f"pool of {n_pool} is too small for init_size={cfg.init_size} plus budget={cfg.budget}")
    minimize = cfg.direction == "minimize"

    eligible = bottom_fraction(y_pool, cfg.init_percentile, cfg.direction)
    if len(eligible) < cfg.init_size:
        raise ValueError(f"only {len(eligible)} candidates in the bottom {cfg.init_percentile:.0%}, need {cfg.init_size}")
    init = subsample(eligible, cfg.init_size, cfg.seed)

    if index is None:
        index = TanimotoIndex(fps)
    if h is None or cfg.refit_hyperparams:
        h = default_hyperparams(y_pool[init])
    gp = IncrementalGp(index, h, init, y_pool[init])

    observed = np.zeros(n_pool, dtype=bool)
    observed[init] = True
    best = float(y_pool[init].min() if minimize else y_pool[init].max())
    acquired: list[tuple[int, int, float]] = []
    curve = np.empty(cfg.budget)
    for it in range(cfg.budget):
        mean, var = gp.posterior()
        cand = np.flatnonzero(~observed)
        if cand.size == 0:
            raise ValueError("candidate pool exhausted")
        ei = expected_improvement(mean[cand], var[cand], best, cfg.direction)
        if not np.all(np.isfinite(ei)):
            raise GpFitError(f"non-finite expected improvement at iteration {it + 1}")
        j = int(cand[int(np.argmax(ei))])
        value = float(y_pool[j])
        observed[j] = True
        acquired.append((it + 1, j, value))
        best = min(best, value) if minimize else max(best, value)
        curve[it] = best
        if cfg.refit_hyperparams:
            obs = gp.observed + [j]
            h = default_hyperparams(y_pool[obs])
            gp = IncrementalGp(index, h, obs, y_pool[obs])
        else:
            gp.add(j, value)

    pool_best = float(y_pool.min() if minimize else y_pool.max())
    pool_worst = float(y_pool.max() if minimize else y_pool.min())
    auc = auc_best_observed(curve, pool_best, pool_worst)
    return BoTrajectory(acquired, curve, auc, list(init), h, cfg, pool_best, pool_worst)
