"""Coupled-PDE image denoising with space-time regularised diffusivity."""

from .core import BoundaryRule, CpdeError, DimensionError, ParameterError
from .cpde import CpdeParams, CpdeState, FidelitySign, RunHistory, denoise, init_state, step
from .quality import MetricsReport, NoiseSpec, add_gaussian_noise, evaluate, isnr, mssim, psnr, psnr_grad
from .solver import Preconditioner, SolverConfig, SolverReport, bicgstab, dense_solve

__all__ = [
    "BoundaryRule", "CpdeError", "DimensionError", "ParameterError",
    "CpdeParams", "CpdeState", "FidelitySign", "RunHistory", "denoise", "init_state", "step",
    "MetricsReport", "NoiseSpec", "add_gaussian_noise", "evaluate", "isnr", "mssim", "psnr", "psnr_grad",
    "Preconditioner", "SolverConfig", "SolverReport", "bicgstab", "dense_solve",
]
