"""Multilinear interpolation on rectilinear grids."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np


def interpolation_weights(
    grid: np.ndarray, values: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Lower bracket index and upper weight for each value, clamped to the grid."""
    grid = np.asarray(grid, dtype=float)
    clamped = np.clip(np.asarray(values, dtype=float), grid[0], grid[-1])
    lower = np.clip(np.searchsorted(grid, clamped, side="right") - 1, 0, len(grid) - 2)
    weight = (clamped - grid[lower]) / (grid[lower + 1] - grid[lower])
    return lower, weight


def interpolation_stencil(
    grids: Sequence[Sequence[float]], points: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Multilinear stencil of ``points`` (m, d) on a row-major grid.

    Returns:
        Flat node indices and weights, each shaped (m, 2**d); weights of a
        row sum to 1
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    sizes = [len(g) for g in grids]
    brackets = [
        interpolation_weights(np.asarray(g), points[:, d]) for d, g in enumerate(grids)
    ]
    n_corners = 2 ** len(grids)
    indices = np.zeros((points.shape[0], n_corners), dtype=np.int64)
    weights = np.ones((points.shape[0], n_corners))
    for corner in range(n_corners):
        flat = np.zeros(points.shape[0], dtype=np.int64)
        for d, (lower, upper_weight) in enumerate(brackets):
            bit = (corner >> (len(grids) - 1 - d)) & 1
            flat = flat * sizes[d] + lower + bit
            weights[:, corner] *= upper_weight if bit else 1.0 - upper_weight
        indices[:, corner] = flat
    return indices, weights
