"""Exact GP regression with the Tanimoto covariance.

The model only ever sees fingerprints through their Tanimoto matrix ``T``, so
exact (variable-length) and fixed-length fingerprints go through identical
code. Hyperparameters enter as ``K = a^2 T + noise^2 I`` with a constant
mean ``c``.

Two routes compute the marginal likelihood:

* the Cholesky route (:func:`log_marginal_likelihood`, :func:`mll_gradient`)
  used by ``fit``/``predict`` and by callers that want one evaluation;
* a spectral route used inside :func:`optimize_hyperparams`. ``T`` is fixed
  while the hyperparameters move, so one eigendecomposition ``T = Q diag(l) Q^T``
  makes every later likelihood and gradient evaluation O(n).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .fingerprints import Fingerprint
from .kernel import GpHyperparams, fingerprint_kind, tanimoto_matrix

__all__ = [
    "GpFitError",
    "GpModel",
    "OptimizeReport",
    "OptimizerConfig",
    "default_hyperparams",
    "fit",
    "fit_gram",
    "log_marginal_likelihood",
    "mll_from_gram",
    "mll_gradient",
    "mll_gradient_from_gram",
    "optimize_hyperparams",
    "optimize_hyperparams_gram",
    "predict",
]

log = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
JITTER_RELATIVE = 1e-10
JITTER_RETRIES = 3


class GpFitError(RuntimeError):
    """Factorization failed or the likelihood became non-finite."""


def default_hyperparams(y) -> GpHyperparams:
    """Fixed heuristic: amplitude = var(y), noise = 0.01 * amplitude, mean = mean(y).

    Variance is the population variance.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.size < 2:
        raise ValueError("need at least 2 training targets")
    var = float(np.var(y))
    if not var > 0:
        raise ValueError("training targets are constant; amplitude would be zero")
    return GpHyperparams(amplitude_sq=var, noise_sq=0.01 * var, mean_const=float(np.mean(y)))


def _kernel(T: np.ndarray, h: GpHyperparams) -> np.ndarray:
    K = h.amplitude_sq * T
    K[np.diag_indices_from(K)] += h.noise_sq
    return K


def _cholesky(K: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor, retrying with escalating diagonal jitter."""
    try:
        return np.linalg.cholesky(K), 0.0
    except np.linalg.LinAlgError:
        pass
    n = K.shape[0]
    jitter = JITTER_RELATIVE * float(np.trace(K)) / n
    for _ in range(JITTER_RETRIES):
        try:
            L = np.linalg.cholesky(K + jitter * np.eye(n))
            log.warning("Cholesky needed diagonal jitter %.3g", jitter)
            return L, jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise GpFitError(f"Cholesky factorization failed even with diagonal jitter {jitter / 10.0:.3g}")


@dataclass(frozen=True, eq=False)
class GpModel:
    train_fps: tuple
    train_targets: np.ndarray
    hyper: GpHyperparams
    chol_factor: np.ndarray
    weights: np.ndarray
    jitter: float = 0.0
    gram: np.ndarray = field(repr=False, default=None)
    kind: tuple = ("", None)


def fit_gram(T: np.ndarray, y, h: GpHyperparams) -> tuple[np.ndarray, np.ndarray, float]:
    """Factorize ``K = a^2 T + noise^2 I`` and solve for ``alpha = K^-1 (y - c)``.

    Returns ``(L, alpha, jitter)``.
    """
    y = np.asarray(y, dtype=np.float64)
    if T.shape != (y.size, y.size):
        raise ValueError(f"Tanimoto matrix shape {T.shape} does not match {y.size} targets")
    L, jitter = _cholesky(_kernel(T, h))
    alpha = sla.cho_solve((L, True), y - h.mean_const)
    return L, alpha, jitter


def fit(fps: Sequence[Fingerprint], y, h: GpHyperparams) -> GpModel:
    y = np.asarray(y, dtype=np.float64)
    if len(fps) != y.size or y.size == 0:
        raise ValueError(f"need matching non-empty inputs, got {len(fps)} fingerprints and {y.size} targets")
    kind = fingerprint_kind(fps)
    T = tanimoto_matrix(fps)
    L, alpha, jitter = fit_gram(T, y, h)
    return GpModel(tuple(fps), y, h, L, alpha, jitter, T, kind)


def predict(model: GpModel, query_fps: Sequence[Fingerprint], observation_noise: bool = False):
    """Posterior mean and variance at ``query_fps``.

    Variance is the latent-function variance ``a^2 - k^T K^-1 k`` clamped at 0;
    with ``observation_noise=True`` the noise variance is added.
    """
    kind = fingerprint_kind(query_fps)
    if kind != model.kind:
        raise ValueError(f"query encoding {kind} does not match training encoding {model.kind}")
    Tq = tanimoto_matrix(query_fps, model.train_fps)
    return predict_gram(model.chol_factor, model.weights, model.hyper, Tq, observation_noise)


def predict_gram(L: np.ndarray, alpha: np.ndarray, h: GpHyperparams, T_query_train: np.ndarray, observation_noise: bool = False):
    Kq = h.amplitude_sq * T_query_train
    mean = h.mean_const + Kq @ alpha
    V = sla.solve_triangular(L, Kq.T, lower=True)
    var = h.amplitude_sq - np.einsum("ij,ij->j", V, V)
    var = np.maximum(var, 0.0)
    if observation_noise:
        var = var + h.noise_sq
    return mean, var


def mll_from_gram(T: np.ndarray, y, h: GpHyperparams) -> float:
    y = np.asarray(y, dtype=np.float64)
    L, alpha, _ = fit_gram(T, y, h)
    r = y - h.mean_const
    return float(-0.5 * r @ alpha - np.log(np.diag(L)).sum() - 0.5 * y.size * LOG_2PI)


def log_marginal_likelihood(fps: Sequence[Fingerprint], y, h: GpHyperparams) -> float:
    """``-1/2 r^T K^-1 r - 1/2 log det K - n/2 log 2pi`` with ``r = y - c``."""
    return mll_from_gram(tanimoto_matrix(fps), y, h)


def mll_gradient_from_gram(T: np.ndarray, y, h: GpHyperparams) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    L, alpha, _ = fit_gram(T, y, h)
    Kinv = sla.cho_solve((L, True), np.eye(y.size))
    g_amp = 0.5 * h.amplitude_sq * (alpha @ T @ alpha - np.sum(Kinv * T))
    g_noise = 0.5 * h.noise_sq * (alpha @ alpha - np.trace(Kinv))
    g_mean = alpha.sum()
    return np.array([g_amp, g_noise, g_mean])


def mll_gradient(fps: Sequence[Fingerprint], y, h: GpHyperparams) -> np.ndarray:
    """Gradient of the MLL w.r.t. ``(log a^2, log noise^2, c)``."""
    return mll_gradient_from_gram(tanimoto_matrix(fps), y, h)


# -- hyperparameter optimization ---------------------------------------------


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.01
    max_iters: int = 10_000
    grad_norm_tol: float = 1e-3
    noise_floor_factor: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    optimize_mean: bool = True

    def __post_init__(self) -> None:
        if not (self.learning_rate > 0 and self.max_iters >= 1 and self.grad_norm_tol > 0 and self.noise_floor_factor > 0):
            raise ValueError(f"invalid optimizer configuration: {self}")


@dataclass(frozen=True)
class OptimizeReport:
    iterations: int
    initial_mll: float
    final_mll: float
    grad_norm: float
    converged: bool
    fell_back_to_init: bool
    seed: int | None = None


class _Spectral:
    """MLL and gradient for ``K = a^2 T + s I`` via one eigendecomposition of T."""

    def __init__(self, T: np.ndarray, y: np.ndarray) -> None:
        lam, Q = np.linalg.eigh(T)
        self.lam = lam
        self.qy = Q.T @ y
        self.q1 = Q.T @ np.ones_like(y)
        self.n = y.size

    def evaluate(self, amp: float, noise: float, c: float) -> tuple[float, np.ndarray]:
        d = amp * self.lam + noise
        if not np.all(d > 0):
            return -math.inf, np.full(3, np.nan)
        rho = self.qy - c * self.q1
        w = rho / d  # alpha in the eigenbasis
        mll = -0.5 * rho @ w - 0.5 * np.log(d).sum() - 0.5 * self.n * LOG_2PI
        g_amp = 0.5 * amp * (self.lam @ (w * w) - np.sum(self.lam / d))
        g_noise = 0.5 * noise * (w @ w - np.sum(1.0 / d))
        g_mean = self.q1 @ w
        return float(mll), np.array([g_amp, g_noise, g_mean])


def optimize_hyperparams_gram(
    T: np.ndarray,
    y,
    init: GpHyperparams,
    cfg: OptimizerConfig = OptimizerConfig(),
    seed: int | None = None,
) -> tuple[GpHyperparams, OptimizeReport]:
    """Adam ascent on the MLL over ``(log a^2, log noise^2, c)``.

    The noise variance is clamped to ``noise_floor_factor * var(y)`` after
    every step. Convergence is tested on the projected gradient: a noise
    component pushing below an active floor does not count. If the end point
    is worse than ``init`` the initial hyperparameters are returned instead.

    Full-batch Adam is deterministic; ``seed`` is only echoed in the report.
    """
    y = np.asarray(y, dtype=np.float64)
    if T.shape != (y.size, y.size):
        raise ValueError(f"Tanimoto matrix shape {T.shape} does not match {y.size} targets")
    floor = cfg.noise_floor_factor * float(np.var(y))
    if not floor > 0:
        raise ValueError("training targets are constant; the noise floor would be zero")
    spec = _Spectral(T, y)

    start = GpHyperparams(init.amplitude_sq, max(init.noise_sq, floor), init.mean_const)
    amp, noise, c = start.amplitude_sq, start.noise_sq, start.mean_const
    theta = np.array([math.log(amp), math.log(noise), c])
    mll0, grad = spec.evaluate(amp, noise, c)
    if not math.isfinite(mll0):
        raise GpFitError(f"non-finite MLL at the initial point {start}")

    m = np.zeros(3)
    v = np.zeros(3)
    mll = mll0
    it = 0
    while True:
        g = grad.copy()
        if not cfg.optimize_mean:
            g[2] = 0.0
        g_eff = g.copy()
        if noise <= floor * (1 + 1e-12) and g_eff[1] < 0:
            g_eff[1] = 0.0
        gnorm = float(np.linalg.norm(g_eff))
        if gnorm < cfg.grad_norm_tol or it >= cfg.max_iters:
            break
        it += 1
        m = cfg.beta1 * m + (1 - cfg.beta1) * g
        v = cfg.beta2 * v + (1 - cfg.beta2) * g * g
        m_hat = m / (1 - cfg.beta1**it)
        v_hat = v / (1 - cfg.beta2**it)
        theta = theta + cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)
        amp = math.exp(theta[0])
        noise = math.exp(theta[1])
        if noise < floor:
            noise = floor
            theta[1] = math.log(floor)
        c = float(theta[2])
        mll, grad = spec.evaluate(amp, noise, c)
        if not math.isfinite(mll) or not np.all(np.isfinite(grad)):
            raise GpFitError(f"non-finite MLL at iteration {it}: amplitude_sq={amp}, noise_sq={noise}, mean={c}")
    converged = gnorm < cfg.grad_norm_tol

    result = GpHyperparams(amp, noise, c)
    fell_back = mll < mll0
    if fell_back:
        result, mll = start, mll0
    report = OptimizeReport(it, float(mll0), float(mll), gnorm, converged, fell_back, seed)
    return result, report


def optimize_hyperparams(
    fps: Sequence[Fingerprint],
    y,
    init: GpHyperparams | None = None,
    cfg: OptimizerConfig = OptimizerConfig(),
    seed: int | None = None,
) -> tuple[GpHyperparams, OptimizeReport]:
    """Maximize the MLL starting from ``init`` (default: :func:`default_hyperparams`)."""
    if init is None:
        init = default_hyperparams(y)
    return optimize_hyperparams_gram(tanimoto_matrix(fps), y, init, cfg, seed)
