"""Principal component analysis over preprocessed annual tables.

Components come from the symmetric eigendecomposition of the sample
covariance matrix of the (optionally centered/scaled) input — not from an
SVD of the data — so the loadings inherit the eigensolver's deterministic
sign convention.  The model keeps all components; retention rules are views
on the spectrum, never refits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange, RuleInapplicable, TooFewRows
from .linalg import as_matrix, center_scale, covariance_matrix, sym_eigen


@dataclass(frozen=True)
class PcaModel:
    """Fitted principal components.

    ``loadings`` holds one orthonormal eigenvector per column (variables x
    components); ``stdevs`` are the component standard deviations, i.e. the
    square roots of the covariance eigenvalues, in descending order.
    Arrays are read-only by convention.
    """

    loadings: np.ndarray
    stdevs: np.ndarray
    centered: bool
    scaled: bool
    variable_labels: tuple[str, ...]

    @property
    def n_components(self) -> int:
        return len(self.stdevs)


def fit_pca(
    x,
    center: bool = True,
    scale: bool = True,
    variable_labels: tuple[str, ...] | None = None,
) -> PcaModel:
    """Fit a PCA with as many components as variables.

    With ``scale=True`` the decomposition runs on the correlation structure
    (every variable weighted equally); without it, on raw covariances.
    """
    m = as_matrix(x)
    n, p = m.shape
    if n < 3:
        raise TooFewRows(n, 3)
    if p < 2:
        raise OutOfRange("need at least two variables")
    if variable_labels is None:
        variable_labels = tuple(f"x{j}" for j in range(p))
    elif len(variable_labels) != p:
        raise OutOfRange(
            f"{len(variable_labels)} labels for {p} variables"
        )
    pre = center_scale(m, center=center, scale=scale)
    values, vectors = sym_eigen(covariance_matrix(pre))
    stdevs = np.sqrt(np.clip(values, 0.0, None))
    return PcaModel(
        loadings=vectors,
        stdevs=stdevs,
        centered=center,
        scaled=scale,
        variable_labels=tuple(variable_labels),
    )


def kaiser_retain(model: PcaModel) -> int:
    """Number of components with standard deviation strictly above 1.

    Only meaningful for scaled fits, where each input variable contributes
    unit variance; a component above 1 explains more than any single
    variable does.
    """
    if not model.scaled:
        raise RuleInapplicable("Kaiser rule requires a variance-scaled fit")
    return int(np.sum(model.stdevs > 1.0))


def explained_variance(model: PcaModel, k: int) -> float:
    """Fraction of total variance carried by the first ``k`` components."""
    if not 1 <= k <= model.n_components:
        raise OutOfRange(f"k={k} outside 1..{model.n_components}")
    var = model.stdevs**2
    return float(var[:k].sum() / var.sum())


def scores(model: PcaModel, x) -> np.ndarray:
    """Project ``x`` onto the components.

    The input is centered/scaled exactly as the model's fit was (using the
    column statistics of ``x`` itself), then rotated by the loadings.  On
    the training data the score columns are uncorrelated with variances
    equal to ``stdevs**2``.
    """
    m = as_matrix(x)
    if m.shape[1] != model.loadings.shape[0]:
        raise OutOfRange(
            f"{m.shape[1]} columns, model was fit with {model.loadings.shape[0]}"
        )
    pre = center_scale(m, center=model.centered, scale=model.scaled)
    return pre @ model.loadings
