"""Dense matrix primitives shared by every model in the package.

All routines accept anything ``np.asarray`` turns into a 2-D float array and
are deterministic: two calls on the same input return bit-identical results.
The symmetric eigensolver is a cyclic Jacobi iteration and is the only
iterative kernel here; the SVD is derived from it by diagonalizing the Gram
matrix of the smaller dimension.

Sample statistics use the n-1 (unbiased) normalization throughout.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import (
    DidNotConverge,
    NotSymmetric,
    TooFewRows,
    ZeroVarianceColumn,
)

# Relative threshold under which a column counts as constant.  Measured
# against the column's own magnitude so that tiny-but-real variation in
# small-scale data is not destroyed.
_ZERO_VAR_REL = 1e-13

# Jacobi sweep parameters.
_JACOBI_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 100

# Singular values below this fraction of the largest are treated as zero.
_SVD_RTOL = 1e-12


class EigenDecomposition(NamedTuple):
    """Eigenvalues (descending) and matching orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray


class SvdDecomposition(NamedTuple):
    """Thin SVD ``x = u @ diag(sigma) @ v.T`` with sigma descending."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray


def as_matrix(x, name: str = "x") -> np.ndarray:
    """Coerce ``x`` to a 2-D float64 array and validate it.

    Raises
    ------
    ValueError
        If the input is not 2-D, is empty, or contains NaN/Inf.
    """
    m = np.asarray(x, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={m.ndim}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and one column")
    if not np.isfinite(m).all():
        raise ValueError(f"{name} contains non-finite entries")
    return m


def _column_sd(x: np.ndarray) -> np.ndarray:
    """Sample standard deviation (n-1) per column; requires >= 2 rows."""
    return x.std(axis=0, ddof=1)


def _check_zero_variance(x: np.ndarray, sd: np.ndarray) -> None:
    # Constant columns can leave a roundoff-sized sd; compare against the
    # column's own scale so the check is unit-free.
    scale = np.max(np.abs(x), axis=0)
    bad = sd <= _ZERO_VAR_REL * scale
    if bad.any():
        raise ZeroVarianceColumn(int(np.argmax(bad)))


def center_scale(x, center: bool = True, scale: bool = False) -> np.ndarray:
    """Return a copy of ``x`` with columns centered and/or scaled.

    Scaling divides by the sample (n-1) standard deviation.  A column whose
    sample deviation vanishes relative to its own magnitude raises
    :class:`ZeroVarianceColumn` when ``scale`` is requested.
    """
    m = as_matrix(x)
    out = m.copy()
    if center:
        out -= m.mean(axis=0)
    if scale:
        if m.shape[0] < 2:
            raise TooFewRows(m.shape[0], 2)
        sd = _column_sd(m)
        _check_zero_variance(m, sd)
        out /= sd
    return out


def covariance_matrix(x) -> np.ndarray:
    """Sample covariance (n-1 normalization) of the columns of ``x``."""
    m = as_matrix(x)
    if m.shape[0] < 2:
        raise TooFewRows(m.shape[0], 2)
    xc = m - m.mean(axis=0)
    c = xc.T @ xc / (m.shape[0] - 1)
    # Force exact symmetry so the result feeds straight into sym_eigen.
    return (c + c.T) / 2.0


def correlation_matrix(x) -> np.ndarray:
    """Sample correlation of the columns of ``x``; unit diagonal, entries in [-1, 1]."""
    m = as_matrix(x)
    if m.shape[0] < 2:
        raise TooFewRows(m.shape[0], 2)
    sd = _column_sd(m)
    _check_zero_variance(m, sd)
    c = covariance_matrix(m)
    r = c / np.outer(sd, sd)
    return np.clip(r, -1.0, 1.0)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip eigenvector columns so the largest-magnitude entry is positive.

    Ties go to the lowest index (np.argmax picks the first maximum), which
    makes the orientation deterministic.
    """
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eigen(s) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Eigenvalues are returned in descending order with orthonormal
    eigenvectors as columns.  Each eigenvector is oriented so its
    largest-magnitude entry is positive, which makes the output
    reproducible bit-for-bit.

    Raises
    ------
    NotSymmetric
        If ``max|s - s.T|`` exceeds 1e-10 (relative to the matrix scale).
    DidNotConverge
        If the off-diagonal mass has not dropped below the sweep threshold
        after 100 sweeps.
    """
    a = as_matrix(s, "s")
    n, m = a.shape
    if n != m:
        raise NotSymmetric(float("inf"))
    scale = max(1.0, float(np.max(np.abs(a))))
    asym = float(np.max(np.abs(a - a.T)))
    if asym > 1e-10 * scale:
        raise NotSymmetric(asym)
    # Work on the symmetrized copy so roundoff asymmetry cannot accumulate.
    a = (a + a.T) / 2.0

    v = np.eye(n)
    if n == 1:
        return EigenDecomposition(a[0].copy(), v)

    thresh = _JACOBI_TOL * scale
    converged = False
    for _sweep in range(_JACOBI_MAX_SWEEPS):
        off = np.abs(a - np.diag(np.diag(a))).max()
        if off <= thresh:
            converged = True
            break
        _jacobi_sweep(a, v, thresh)
    if not converged:
        off = np.abs(a - np.diag(np.diag(a))).max()
        if off > thresh:
            raise DidNotConverge(_JACOBI_MAX_SWEEPS)

    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    return EigenDecomposition(values[order], _fix_signs(v[:, order]))


def _jacobi_sweep(a: np.ndarray, v: np.ndarray, thresh: float) -> None:
    """One cyclic sweep of symmetric Schur rotations, in place."""
    n = a.shape[0]
    for p in range(n - 1):
        for q in range(p + 1, n):
            apq = a[p, q]
            if abs(apq) <= thresh:
                continue
            # Symmetric Schur rotation annihilating a[p, q].
            tau = (a[q, q] - a[p, p]) / (2.0 * apq)
            if tau >= 0.0:
                t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
            else:
                t = 1.0 / (tau - np.sqrt(1.0 + tau * tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            sn = t * c

            col_p = a[:, p].copy()
            col_q = a[:, q].copy()
            a[:, p] = c * col_p - sn * col_q
            a[:, q] = sn * col_p + c * col_q
            row_p = a[p, :].copy()
            row_q = a[q, :].copy()
            a[p, :] = c * row_p - sn * row_q
            a[q, :] = sn * row_p + c * row_q
            a[p, q] = 0.0
            a[q, p] = 0.0

            vcol_p = v[:, p].copy()
            vcol_q = v[:, q].copy()
            v[:, p] = c * vcol_p - sn * vcol_q
            v[:, q] = sn * vcol_p + c * vcol_q


def _complete_orthonormal(cols: np.ndarray, r: int) -> np.ndarray:
    """Extend orthonormal columns to ``r`` columns by Gram-Schmidt over the
    standard basis, scanned in index order (deterministic)."""
    n = cols.shape[0]
    have = [cols[:, j] for j in range(cols.shape[1])]
    for j in range(n):
        if len(have) >= r:
            break
        cand = np.zeros(n)
        cand[j] = 1.0
        for u in have:
            cand -= (u @ cand) * u
        norm = np.sqrt(cand @ cand)
        if norm > 1e-8:
            have.append(cand / norm)
    return np.column_stack(have[:r])


def _snap_gram_eigenvalues(values: np.ndarray, n: int, m: int) -> np.ndarray:
    """Zero out Gram eigenvalues indistinguishable from rounding noise."""
    floor = max(n, m) * np.finfo(float).eps * max(values[0], 0.0)
    return np.where(values > floor, values, 0.0)


def svd(x) -> SvdDecomposition:
    """Thin singular value decomposition built on :func:`sym_eigen`.

    The Gram matrix of the smaller dimension is diagonalized; singular
    values are the square roots of its (clipped) eigenvalues.  Columns of
    ``u`` and ``v`` paired with a numerically zero singular value are
    completed to an orthonormal set and contribute nothing to the product.

    Squaring halves the exponent range: a Gram eigenvalue at the rounding
    floor (``eps * lambda_1``) turns into a spurious singular value near
    ``sqrt(eps) * sigma_1``.  Eigenvalues below ``max(n, m) * eps *
    lambda_1`` are therefore snapped to exact zero — true singular values
    that small are unresolvable by this route, and rank decisions
    downstream must see a hard zero rather than rounding noise.
    """
    a = as_matrix(x)
    n, m = a.shape
    r = min(n, m)
    if m <= n:
        g = a.T @ a
        values, vecs = sym_eigen((g + g.T) / 2.0)
        values = _snap_gram_eigenvalues(values, n, m)
        sigma = np.sqrt(np.clip(values, 0.0, None))
        v = vecs
        nonzero = sigma > _SVD_RTOL * max(sigma[0], 1e-300)
        u_cols = a @ v[:, nonzero] / sigma[nonzero]
        u = _complete_orthonormal(u_cols, r)
        v = v[:, :r]
        sigma = sigma[:r]
    else:
        g = a @ a.T
        values, vecs = sym_eigen((g + g.T) / 2.0)
        values = _snap_gram_eigenvalues(values, n, m)
        sigma = np.sqrt(np.clip(values, 0.0, None))
        u = vecs
        nonzero = sigma > _SVD_RTOL * max(sigma[0], 1e-300)
        v_cols = a.T @ u[:, nonzero] / sigma[nonzero]
        v = _complete_orthonormal(v_cols, r)
        u = u[:, :r]
        sigma = sigma[:r]
    return SvdDecomposition(u, sigma, v)
