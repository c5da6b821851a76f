"""FastICA with symmetric (parallel) extraction.

Whitening runs through the package SVD so that the whitened data has unit
sample covariance under the n-1 convention.  The fixed-point update uses
the logcosh contrast by default; symmetric decorrelation re-orthonormalizes
all rows of the unmixing matrix after every iteration.  A run that exhausts
its iteration budget is returned with ``converged=False`` rather than
raised: non-convergence is a reportable outcome, not a failure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    OutOfRange,
    RankDeficient,
    Singular,
    TooFewRows,
)
from .linalg import as_matrix, center_scale, svd, sym_eigen

# Singular values below this fraction of the largest do not count toward
# the usable rank when whitening.
_RANK_RTOL = 1e-10

# Floor applied to eigenvalues when taking an inverse square root.
_EIG_FLOOR = 1e-12


@dataclass(frozen=True)
class IcaConfig:
    """Extraction settings; the defaults match common practice for river
    records (200 iterations, 1e-4 tolerance, logcosh contrast)."""

    n_components: int
    max_iter: int = 200
    tol: float = 1e-4
    contrast: str = "logcosh"
    logcosh_alpha: float = 1.0
    seed: int = 0
    prescale: bool = False

    def __post_init__(self):
        if self.n_components < 1:
            raise OutOfRange("n_components must be at least 1")
        if self.max_iter < 1:
            raise OutOfRange("max_iter must be at least 1")
        if not self.tol > 0:
            raise OutOfRange("tol must be positive")
        if self.contrast not in ("logcosh", "cube"):
            raise OutOfRange(f"unknown contrast {self.contrast!r}")
        if not 1.0 <= self.logcosh_alpha <= 2.0:
            raise OutOfRange("logcosh_alpha must lie in [1, 2]")


@dataclass(frozen=True)
class IcaModel:
    """Fitted independent components.

    ``sources = xc @ whitening.T @ unmixing.T`` where ``xc`` is the
    centered input; ``mixing`` is the pseudo-inverse of
    ``unmixing @ whitening`` and reconstructs the data from the sources.
    ``delta_history`` holds the per-iteration convergence measure.
    """

    sources: np.ndarray
    mixing: np.ndarray
    unmixing: np.ndarray
    whitening: np.ndarray
    converged: bool
    iterations: int
    delta_history: tuple[float, ...]
    config: IcaConfig


def whiten(x, n_components: int) -> tuple[np.ndarray, np.ndarray]:
    """Center ``x`` and project it to ``n_components`` unit-variance,
    uncorrelated columns.

    Returns ``(z, k)`` with ``z = xc @ k.T`` and ``cov(z) = I`` under the
    n-1 convention.  Raises :class:`RankDeficient` when the request exceeds
    the numerical rank of the centered data.
    """
    m = as_matrix(x)
    if m.shape[0] < 2:
        raise TooFewRows(m.shape[0], 2)
    if n_components < 1:
        raise OutOfRange("n_components must be at least 1")
    xc = m - m.mean(axis=0)
    n = m.shape[0]
    _, sigma, v = svd(xc)
    effective_rank = int(np.sum(sigma > _RANK_RTOL * max(sigma[0], 1e-300)))
    if n_components > effective_rank:
        raise RankDeficient(effective_rank)
    top = sigma[:n_components]
    # scale so the n-1 sample covariance of z is exactly the identity
    k = np.sqrt(n - 1) * (v[:, :n_components] / top).T
    return xc @ k.T, k


def _contrast(u: np.ndarray, cfg: IcaConfig) -> tuple[np.ndarray, np.ndarray]:
    """Return (g(u), g'(u)) for the configured contrast."""
    if cfg.contrast == "logcosh":
        a = cfg.logcosh_alpha
        gu = np.tanh(a * u)
        return gu, a * (1.0 - gu**2)
    # cube
    return u**3, 3.0 * u**2


def _sym_decorrelate(w: np.ndarray) -> np.ndarray:
    """Return (w w^T)^(-1/2) w, the closest matrix with orthonormal rows."""
    wwt = w @ w.T
    values, vectors = sym_eigen((wwt + wwt.T) / 2.0)
    inv_sqrt = vectors @ np.diag(1.0 / np.sqrt(np.maximum(values, _EIG_FLOOR))) @ vectors.T
    return inv_sqrt @ w


def fast_ica(x, cfg: IcaConfig) -> IcaModel:
    """Extract independent components from ``x`` (rows are observations).

    The input is always centered; variance pre-scaling is off by default
    and available through ``cfg.prescale`` for records whose units differ
    wildly.  All components are estimated simultaneously from a seeded
    random orthonormal start, so the same data and seed give bit-identical
    models.
    """
    m = as_matrix(x)
    n, p = m.shape
    k = cfg.n_components
    if n < 10 * k:
        raise TooFewRows(n, 10 * k)

    pre = center_scale(m, center=True, scale=cfg.prescale)
    z, whitening = whiten(pre, k)

    rng = np.random.default_rng(cfg.seed)
    w = _sym_decorrelate(rng.standard_normal((k, k)))

    deltas: list[float] = []
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        u = z @ w.T
        gu, gprime = _contrast(u, cfg)
        w_new = (gu.T @ z) / n - np.diag(gprime.mean(axis=0)) @ w
        w_new = _sym_decorrelate(w_new)
        # rows stay orthonormal after decorrelation
        assert np.abs(w_new @ w_new.T - np.eye(k)).max() < 1e-8
        delta = float(np.max(np.abs(1.0 - np.abs(np.sum(w_new * w, axis=1)))))
        deltas.append(delta)
        w = w_new
        if delta < cfg.tol:
            converged = True
            break

    sources = z @ w.T
    mixing = np.linalg.pinv(w @ whitening)
    return IcaModel(
        sources=sources,
        mixing=mixing,
        unmixing=w,
        whitening=whitening,
        converged=converged,
        iterations=iterations,
        delta_history=tuple(deltas),
        config=cfg,
    )


def amari_index(w_est, a_true) -> float:
    """Permutation- and scale-invariant separation error in [0, 1].

    Zero when ``w_est @ a_true`` is a scaled permutation (perfect recovery
    up to ICA's inherent ambiguities); one when every row and column is
    maximally diffuse.
    """
    w = as_matrix(w_est, "w_est")
    a = as_matrix(a_true, "a_true")
    if w.shape[1] != a.shape[0]:
        raise OutOfRange(
            f"w_est has {w.shape[1]} columns, a_true has {a.shape[0]} rows"
        )
    p = np.abs(w @ a)
    n = p.shape[0]
    if p.shape[0] != p.shape[1]:
        raise OutOfRange("w_est @ a_true must be square")
    row_max = p.max(axis=1)
    col_max = p.max(axis=0)
    if np.any(row_max == 0.0) or np.any(col_max == 0.0):
        raise Singular("product matrix has an all-zero row or column")
    if n == 1:
        return 0.0
    row_term = np.sum(p.sum(axis=1) / row_max - 1.0)
    col_term = np.sum(p.sum(axis=0) / col_max - 1.0)
    return float((row_term + col_term) / (2.0 * n * (n - 1)))
