"""Finite-dimensional parameter vectors and the few geometric primitives
shared by the aggregation rules and the audit machinery."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .rng import RngStream


def as_vector(x) -> np.ndarray:
    """Validate a single parameter vector: 1-D, non-empty, all finite."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def as_matrix(xs: Sequence) -> np.ndarray:
    """Stack a non-empty family of same-dimension vectors into an (n, d) array."""
    if len(xs) == 0:
        raise ValueError("expected a non-empty family of vectors")
    if isinstance(xs, np.ndarray) and xs.ndim == 2 and xs.shape[1] > 0:
        m = np.asarray(xs, dtype=np.float64)
        if not np.all(np.isfinite(m)):
            raise ValueError("vector has non-finite entries")
        return m
    rows = [as_vector(x) for x in xs]
    dims = {r.size for r in rows}
    if len(dims) != 1:
        raise ValueError(f"vectors have mismatched dimensions: {sorted(dims)}")
    return np.stack(rows)


def vec_mean(xs: Sequence) -> np.ndarray:
    return as_matrix(xs).mean(axis=0)


def pairwise_distances(xs: np.ndarray) -> np.ndarray:
    """Euclidean distance matrix of the rows of an (n, d) array."""
    diff = xs[:, None, :] - xs[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


def diameter(xs: Sequence) -> float:
    """Largest pairwise Euclidean distance within the family."""
    m = as_matrix(xs)
    if m.shape[0] == 1:
        return 0.0
    return float(pairwise_distances(m).max())


def coord_median(values: np.ndarray) -> np.ndarray:
    """Coordinate-wise median of the rows of an (n, d) array.

    For an even number of rows each coordinate takes the midpoint of the
    two middle order statistics.
    """
    m = np.asarray(values, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] == 0:
        raise ValueError(f"expected a non-empty (n, d) array, got shape {m.shape}")
    return np.median(m, axis=0)


def gaussian_vector(rng: RngStream, d: int, variance_total: float) -> np.ndarray:
    """Isotropic Gaussian noise vector with E[norm^2] == variance_total.

    The total variance is spread evenly over the d coordinates.
    """
    if d <= 0:
        raise ValueError(f"dimension must be positive, got {d}")
    if variance_total < 0:
        raise ValueError(f"variance must be non-negative, got {variance_total}")
    scale = np.sqrt(variance_total / d)
    return rng.generator.standard_normal(d) * scale
