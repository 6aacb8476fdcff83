"""Sparse operators for the three implicit solves of one time step.

Unknowns are ordered lexicographically, row-major: pixel ``(i, j)`` of an
``h x w`` grid is unknown ``i * w + j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import DimensionError, ParameterError, check_same_shape


@dataclass(frozen=True)
class SparseOperator:
    matrix: sp.csr_matrix
    diag: np.ndarray

    @classmethod
    def from_matrix(cls, matrix) -> "SparseOperator":
        m = sp.csr_matrix(matrix, dtype=np.float64)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        return cls(matrix=m, diag=m.diagonal().copy())

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def row_offsets(self) -> np.ndarray:
        return self.matrix.indptr

    @property
    def col_indices(self) -> np.ndarray:
        return self.matrix.indices

    @property
    def values(self) -> np.ndarray:
        return self.matrix.data

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True)
class StencilWeights:
    center: float
    north: float
    south: float
    east: float
    west: float


def stencil_at(op: SparseOperator, shape: tuple[int, int], i: int, j: int) -> StencilWeights:
    """Read the 5-point stencil of pixel ``(i, j)`` back out of ``op``."""
    h, w = shape
    row = op.matrix.getrow(i * w + j)
    entries = dict(zip(row.indices.tolist(), row.data.tolist()))

    def at(ii, jj):
        if 0 <= ii < h and 0 <= jj < w:
            return entries.get(ii * w + jj, 0.0)
        return 0.0

    return StencilWeights(
        center=at(i, j), north=at(i - 1, j), south=at(i + 1, j),
        east=at(i, j + 1), west=at(i, j - 1),
    )


def _neighbor_pairs(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    """All ordered pairs (p, q) of in-grid 4-neighbours, both directions."""
    idx = np.arange(h * w).reshape(h, w)
    horiz = (idx[:, :-1].ravel(), idx[:, 1:].ravel())
    vert = (idx[:-1, :].ravel(), idx[1:, :].ravel())
    p = np.concatenate([horiz[0], horiz[1], vert[0], vert[1]])
    q = np.concatenate([horiz[1], horiz[0], vert[1], vert[0]])
    return p, q


def _build(n: int, diag: np.ndarray, p: np.ndarray, q: np.ndarray, off: np.ndarray) -> SparseOperator:
    rows = np.concatenate([np.arange(n), p])
    cols = np.concatenate([np.arange(n), q])
    vals = np.concatenate([diag, off])
    return SparseOperator.from_matrix(sp.coo_matrix((vals, (rows, cols)), shape=(n, n)))


def _neumann_counts(h: int, w: int) -> np.ndarray:
    """Number of in-grid 4-neighbours per pixel."""
    counts = np.full((h, w), 4.0)
    counts[0, :] -= 1
    counts[-1, :] -= 1
    counts[:, 0] -= 1
    counts[:, -1] -= 1
    return counts.ravel()


def assemble_image_operator(g: np.ndarray, tau: float) -> SparseOperator:
    """``Id - (tau/2) D_g`` with half-point diffusivities and Neumann closure."""
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    if np.any(g <= 0):
        raise ParameterError("diffusivity must be strictly positive")
    h, w = g.shape
    n = h * w
    gf = g.ravel()
    p, q = _neighbor_pairs(h, w)
    half = 0.5 * (gf[p] + gf[q])
    diag = 1.0 + 0.5 * tau * np.bincount(p, weights=half, minlength=n)
    return _build(n, diag, p, q, -0.5 * tau * half)


def divergence_term(image: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``div(g grad I)`` by half-point fluxes; boundary fluxes are zero."""
    check_same_shape(image, g)
    out = np.zeros_like(image, dtype=np.float64)
    gx = 0.5 * (g[:, 1:] + g[:, :-1])
    fx = gx * (image[:, 1:] - image[:, :-1])
    out[:, :-1] += fx
    out[:, 1:] -= fx
    gy = 0.5 * (g[1:, :] + g[:-1, :])
    fy = gy * (image[1:, :] - image[:-1, :])
    out[:-1, :] += fy
    out[1:, :] -= fy
    return out


def apply_image_explicit(image: np.ndarray, g: np.ndarray, v: np.ndarray,
                         tau: float, lam: float) -> np.ndarray:
    """Explicit Crank-Nicolson half: ``I + (tau/2)(D_g I - 2 lam v)``."""
    check_same_shape(image, g, v)
    return image + 0.5 * tau * (divergence_term(image, g) - 2.0 * lam * v)


def assemble_edge_operator(shape: tuple[int, int], tau: float, phi: float, psi: float) -> SparseOperator:
    """``(1 + tau phi) Id - tau phi (psi^2 / 2) Laplacian``, Neumann closure."""
    if not tau > 0 or not phi > 0:
        raise ParameterError(f"tau and phi must be positive, got tau={tau}, phi={phi}")
    if psi < 0:
        raise ParameterError(f"psi must be nonnegative, got {psi}")
    h, w = shape
    n = h * w
    c = tau * phi * psi * psi / 2.0
    p, q = _neighbor_pairs(h, w)
    diag = 1.0 + tau * phi + c * _neumann_counts(h, w)
    return _build(n, diag, p, q, np.full(p.shape, -c))


def assemble_fidelity_operator(shape: tuple[int, int], tau: float) -> SparseOperator:
    """``Id - tau Laplacian`` with zero-Dirichlet closure."""
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    h, w = shape
    n = h * w
    p, q = _neighbor_pairs(h, w)
    diag = np.full(n, 1.0 + 4.0 * tau)
    return _build(n, diag, p, q, np.full(p.shape, -tau))


def spmv(op: SparseOperator, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (op.n,):
        raise DimensionError(f"vector of shape {x.shape} does not match operator order {op.n}")
    return op.matrix @ x
