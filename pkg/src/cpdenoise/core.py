"""Dense 2-D scalar fields and boundary-aware sampling.

Fields are plain ``float64`` numpy arrays of shape ``(height, width)``;
``field[i, j]`` is row ``i``, column ``j``. Every other module works on
this representation.
"""

from __future__ import annotations

import enum

import numpy as np


class CpdeError(Exception):
    """Base class for library errors."""


class DimensionError(CpdeError, ValueError):
    pass


class ParameterError(CpdeError, ValueError):
    pass


class BoundaryRule(enum.Enum):
    MIRROR_NEUMANN = "mirror_neumann"
    ZERO_DIRICHLET = "zero_dirichlet"


def as_field(data) -> np.ndarray:
    """Validate ``data`` as a 2-D finite field and return a float64 copy."""
    arr = np.array(data, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"field must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"field has a zero dimension: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("field contains NaN or Inf")
    return arr


def new_field(width: int, height: int, fill: float = 0.0) -> np.ndarray:
    if width < 1 or height < 1:
        raise DimensionError(f"invalid dimensions {width}x{height}")
    if not np.isfinite(fill):
        raise ParameterError("fill value must be finite")
    return np.full((height, width), float(fill))


def sample(field: np.ndarray, i: int, j: int, rule: BoundaryRule) -> float:
    """Read ``field[i, j]``, allowing one step outside the grid.

    Mirror-Neumann reflects the ghost onto the adjacent edge pixel, so the
    discrete normal derivative vanishes; zero-Dirichlet reads 0.
    """
    h, w = field.shape
    if not (-1 <= i <= h and -1 <= j <= w):
        raise IndexError(f"({i}, {j}) is more than one step outside a {h}x{w} grid")
    inside = 0 <= i < h and 0 <= j < w
    if inside:
        return float(field[i, j])
    if rule is BoundaryRule.ZERO_DIRICHLET:
        return 0.0
    return float(field[min(max(i, 0), h - 1), min(max(j, 0), w - 1)])


def pad_one(field: np.ndarray, rule: BoundaryRule) -> np.ndarray:
    """Pad by one ghost layer on every side according to ``rule``."""
    if rule is BoundaryRule.MIRROR_NEUMANN:
        return np.pad(field, 1, mode="edge")
    return np.pad(field, 1, mode="constant", constant_values=0.0)


def check_same_shape(*fields: np.ndarray) -> None:
    shapes = {np.shape(f) for f in fields}
    if len(shapes) != 1:
        raise DimensionError(f"dimension mismatch: {sorted(shapes)}")


def l2_norm(a: np.ndarray) -> float:
    # scaled so tiny or huge entries neither underflow nor overflow when squared
    scale = float(np.max(np.abs(a))) if np.size(a) else 0.0
    if scale == 0.0:
        return 0.0
    return scale * float(np.sqrt(np.sum(np.square(np.asarray(a) / scale))))


def linf_diff(a: np.ndarray, b: np.ndarray) -> float:
    check_same_shape(a, b)
    return float(np.max(np.abs(a - b)))


def axpy(alpha: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Return ``alpha * x + y`` as a new field."""
    check_same_shape(x, y)
    return alpha * x + y
