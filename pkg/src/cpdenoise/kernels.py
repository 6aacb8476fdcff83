"""Gaussian smoothing, finite-difference operators, diffusivity and edge source."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BoundaryRule, DimensionError, ParameterError, pad_one


@dataclass(frozen=True)
class GaussianKernel:
    xi: float
    radius: int
    weights: np.ndarray


def gaussian_kernel(xi: float) -> GaussianKernel:
    """Truncated 2-D Gaussian of standard deviation ``xi`` (pixels).

    The support is cut at ``ceil(3 * xi)`` and the weights renormalised to
    unit sum; the analytic prefactor is irrelevant after renormalisation.
    """
    if not xi > 0:
        raise ParameterError(f"xi must be positive, got {xi}")
    radius = max(1, math.ceil(3.0 * xi))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    sq = offsets[:, None] ** 2 + offsets[None, :] ** 2
    weights = np.exp(-sq / (2.0 * xi * xi))
    weights /= weights.sum()
    return GaussianKernel(xi=float(xi), radius=radius, weights=weights)


def convolve(field: np.ndarray, kernel: GaussianKernel) -> np.ndarray:
    """Direct-summation convolution with mirror (half-sample) extension."""
    r = kernel.radius
    h, w = field.shape
    padded = np.pad(field, r, mode="symmetric")
    out = np.zeros_like(field, dtype=np.float64)
    # Fixed offset order keeps each output pixel a single sequential sum.
    for di in range(2 * r + 1):
        for dj in range(2 * r + 1):
            out += kernel.weights[di, dj] * padded[di:di + h, dj:dj + w]
    return out


def central_differences(field: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central differences along rows (i) and columns (j), Neumann ghosts."""
    if min(field.shape) < 2:
        raise DimensionError(f"central differences need at least 2x2, got {field.shape}")
    p = pad_one(field, BoundaryRule.MIRROR_NEUMANN)
    d_i = (p[2:, 1:-1] - p[:-2, 1:-1]) / 2.0
    d_j = (p[1:-1, 2:] - p[1:-1, :-2]) / 2.0
    return d_i, d_j


def grad_mag_sq(field: np.ndarray) -> np.ndarray:
    d_i, d_j = central_differences(field)
    return d_i * d_i + d_j * d_j


def laplacian(field: np.ndarray, rule: BoundaryRule) -> np.ndarray:
    p = pad_one(field, rule)
    return p[2:, 1:-1] + p[:-2, 1:-1] + p[1:-1, 2:] + p[1:-1, :-2] - 4.0 * field


def diffusivity(u: np.ndarray, k: float, xi: float) -> np.ndarray:
    """Edge-stopping coefficient ``1 / (1 + |G_xi * u| / k^2)``, in (0, 1]."""
    if not k > 0:
        raise ParameterError(f"k must be positive, got {k}")
    smoothed = convolve(u, gaussian_kernel(xi))
    return 1.0 / (1.0 + np.abs(smoothed) / (k * k))


def edge_source(image: np.ndarray, xi: float, cap: float) -> np.ndarray:
    """Truncated squared gradient of the Gaussian-smoothed image.

    Smoothing comes first, then the gradient; the result is clipped to
    ``[0, cap]``.
    """
    if not cap > 0:
        raise ParameterError(f"cap must be positive, got {cap}")
    smoothed = convolve(image, gaussian_kernel(xi))
    return np.minimum(grad_mag_sq(smoothed), cap)
