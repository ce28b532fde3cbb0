"""Principal component analysis for exporting low-dimensional views of
spectrum fingerprints.

Implemented as an eigendecomposition of the m x m sample covariance; the
feature dimension here is at most a few hundred frequencies, so this is both
simpler and faster than an SVD of the data matrix. A deterministic sign
convention keeps output bit-stable across runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PcaModel:
    """Fitted projection: column means, orthonormal component rows, and the
    variance each component explains."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    explained_ratio: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def pca_fit(features, n_components: int) -> PcaModel:
    """Fit a PCA projection onto the top n_components directions.

    Columns are centered by their means; components are eigenvectors of the
    sample covariance (divisor n - 1) sorted by descending eigenvalue. Each
    component is flipped so its largest-magnitude entry is positive.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"features must be 2-D, got ndim={X.ndim}")
    n, m = X.shape
    if n < 2:
        raise ValueError(f"pca needs at least 2 rows, got {n}")
    limit = min(n - 1, m)
    if not 1 <= n_components <= limit:
        raise ValueError(f"n_components must be in [1, {limit}], got {n_components}")

    mean = X.mean(axis=0)
    centered = X - mean
    cov = (centered.T @ centered) / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:n_components]
    variances = np.maximum(eigvals[order], 0.0)
    components = eigvecs[:, order].T.copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0

    total = float(np.trace(cov))
    if total <= 0.0:
        raise ValueError("features have zero total variance; nothing to project")
    return PcaModel(
        mean=mean,
        components=components,
        explained_variance=variances,
        explained_ratio=variances / total,
    )


def pca_transform(model: PcaModel, features) -> np.ndarray:
    """Project rows onto the fitted components: (features - mean) @ components.T."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"features must be 2-D, got ndim={X.ndim}")
    if X.shape[1] != model.mean.size:
        raise ValueError(
            f"feature width {X.shape[1]} does not match the fitted width {model.mean.size}"
        )
    return (X - model.mean) @ model.components.T
