"""BiCGStab with optional Jacobi preconditioning, and a dense reference solve."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .assembly import SparseOperator
from .core import CpdeError, DimensionError, ParameterError

EPS = np.finfo(np.float64).eps
MAX_RESTARTS = 3
DENSE_LIMIT = 4096


class Preconditioner(enum.Enum):
    NONE = "none"
    JACOBI = "jacobi"


class SingularMatrixError(CpdeError, ArithmeticError):
    pass


class SizeError(CpdeError, ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8
    max_iter: int = 500
    precondition: Preconditioner = Preconditioner.JACOBI

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise ParameterError(f"tol must lie in (0, 1), got {self.tol}")
        if self.max_iter < 1:
            raise ParameterError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class SolverReport:
    iterations: int
    final_residual: float
    converged: bool
    breakdown: bool
    restarts: int = 0


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, b))


def _norm(a: np.ndarray) -> float:
    return float(np.sqrt(np.dot(a, a)))


def bicgstab(op: SparseOperator, b: np.ndarray, x0: np.ndarray | None = None,
             config: SolverConfig = SolverConfig()) -> tuple[np.ndarray, SolverReport]:
    """Solve ``op x = b`` by preconditioned BiCGStab.

    Convergence is ``||b - A x||_2 <= tol ||b||_2`` measured on the true
    residual. On a rho/omega breakdown the iteration restarts from the
    current iterate with a fresh shadow residual, at most ``MAX_RESTARTS``
    times; after that the best iterate seen is returned with
    ``breakdown=True``.
    """
    A = op.matrix
    n = op.n
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (n,):
        raise DimensionError(f"rhs of shape {b.shape} does not match operator order {n}")
    if x0 is None:
        x = np.zeros(n)
    else:
        x = np.array(x0, dtype=np.float64)
        if x.shape != (n,):
            raise DimensionError(f"x0 of shape {x.shape} does not match operator order {n}")

    bnorm = _norm(b)
    if bnorm == 0.0:
        return np.zeros(n), SolverReport(0, 0.0, True, False)

    if config.precondition is Preconditioner.JACOBI:
        if np.any(op.diag <= 0):
            raise ParameterError("Jacobi preconditioning needs a strictly positive diagonal")
        inv_diag = 1.0 / op.diag
        precond = lambda y: inv_diag * y  # noqa: E731
    else:
        precond = lambda y: y  # noqa: E731

    target = config.tol * bnorm
    r = b - A @ x
    rnorm = _norm(r)
    best_x, best_res = x.copy(), rnorm
    iterations = 0
    restarts = 0

    while True:
        if rnorm <= target:
            return x, SolverReport(iterations, rnorm / bnorm, True, False, restarts)

        r_hat = r.copy()
        rho = alpha = omega = 1.0
        p = np.zeros(n)
        v = np.zeros(n)
        broke = False
        while iterations < config.max_iter:
            rho_new = _dot(r_hat, r)
            if abs(rho_new) < EPS * _norm(r_hat) * _norm(r):
                broke = True
                break
            beta = (rho_new / rho) * (alpha / omega)
            p = r + beta * (p - omega * v)
            p_hat = precond(p)
            v = A @ p_hat
            denom = _dot(r_hat, v)
            if denom == 0.0:
                broke = True
                break
            alpha = rho_new / denom
            s = r - alpha * v
            iterations += 1
            if _norm(s) <= target:
                x = x + alpha * p_hat
                r = s
                break
            s_hat = precond(s)
            t = A @ s_hat
            tt = _dot(t, t)
            if tt == 0.0:
                x = x + alpha * p_hat
                r = s
                broke = True
                break
            omega = _dot(t, s) / tt
            x = x + alpha * p_hat + omega * s_hat
            r = s - omega * t
            if _norm(r) <= target:
                break
            if abs(omega) < EPS:
                broke = True
                break
            rho = rho_new

        # The recursive residual drifts; decide on the true one.
        r = b - A @ x
        rnorm = _norm(r)
        if rnorm < best_res:
            best_x, best_res = x.copy(), rnorm
        if rnorm <= target:
            return x, SolverReport(iterations, rnorm / bnorm, True, False, restarts)
        if iterations >= config.max_iter:
            return best_x, SolverReport(iterations, best_res / bnorm, False, False, restarts)
        if restarts >= MAX_RESTARTS:
            return best_x, SolverReport(iterations, best_res / bnorm, False, broke, restarts)
        restarts += 1


def dense_solve(op: SparseOperator, b: np.ndarray) -> np.ndarray:
    """Reference solve by LU with partial pivoting on the densified matrix."""
    if op.n > DENSE_LIMIT:
        raise SizeError(f"refusing dense factorisation of order {op.n} > {DENSE_LIMIT}")
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (op.n,):
        raise DimensionError(f"rhs of shape {b.shape} does not match operator order {op.n}")
    dense = op.to_dense()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(dense)
    pivots = np.abs(np.diag(lu))
    scale = np.max(np.abs(dense)) if dense.size else 0.0
    if scale == 0.0 or np.min(pivots) <= op.n * EPS * scale:
        raise SingularMatrixError("matrix is singular to working precision")
    return scipy.linalg.lu_solve((lu, piv), b)
