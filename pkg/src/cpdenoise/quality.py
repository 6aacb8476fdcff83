"""Gaussian noise injection and the PSNR / PSNR_grad / MSSIM / ISNR metrics.

Metrics return ``math.inf`` / ``-math.inf`` when an error energy is exactly
zero; ``encode_metric`` turns those into the ``"inf"`` / ``"-inf"`` strings
used in reports.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import CpdeError, DimensionError, ParameterError, check_same_shape
from .kernels import central_differences

SSIM_WINDOW = 8
SSIM_C1 = (0.01 * 255.0) ** 2
SSIM_C2 = (0.03 * 255.0) ** 2


class RangeError(CpdeError, ValueError):
    pass


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if not self.sigma >= 0 or not math.isfinite(self.sigma):
            raise ParameterError(f"sigma must be finite and nonnegative, got {self.sigma}")


@dataclass(frozen=True)
class MetricsReport:
    psnr: float
    psnr_grad: float
    mssim: float
    isnr: float

    def encoded(self) -> dict[str, float | str]:
        return {k: encode_metric(v) for k, v in asdict(self).items()}


def encode_metric(value: float) -> float | str:
    if value == math.inf:
        return "inf"
    if value == -math.inf:
        return "-inf"
    return value


def standard_normal(shape: tuple[int, ...], seed: int) -> np.ndarray:
    """Standard normals from Philox-4x64 uniforms through Box-Muller.

    Both Box-Muller outputs are used: pair ``m`` fills flat positions
    ``2m`` (cosine branch) and ``2m + 1`` (sine branch).
    """
    size = int(np.prod(shape))
    pairs = (size + 1) // 2
    gen = np.random.Generator(np.random.Philox(seed))
    u = gen.random((pairs, 2))
    radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))  # 1 - u in (0, 1]
    angle = 2.0 * np.pi * u[:, 1]
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:size].reshape(shape)


def add_gaussian_noise(clean: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """Additive N(0, sigma^2) noise; the result is not clamped."""
    clean = np.asarray(clean, dtype=np.float64)
    if spec.sigma == 0:
        return clean.copy()
    return clean + spec.sigma * standard_normal(clean.shape, spec.seed)


def _ratio_db(num: float, den: float) -> float:
    if den == 0.0:
        return math.inf
    if num == 0.0:
        return -math.inf
    return 10.0 * math.log10(num / den)


def psnr(reference: np.ndarray, test: np.ndarray, peak: float | None = None) -> float:
    """``10 log10(MN (max - min)^2 / ||test - ref||^2)`` of the reference range.

    Pass ``peak=255`` for the fixed-range convention instead.
    """
    check_same_shape(reference, test)
    if peak is None:
        peak = float(np.max(reference) - np.min(reference))
        if peak == 0.0:
            raise RangeError("reference image is constant; PSNR range is zero")
    err = float(np.sum(np.square(np.asarray(test, dtype=np.float64) - reference)))
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(reference.size * peak * peak / err)


def psnr_grad(reference: np.ndarray, test: np.ndarray) -> float:
    """Mean of the PSNRs of the two central-difference derivative fields."""
    check_same_shape(reference, test)
    ref_i, ref_j = central_differences(np.asarray(reference, dtype=np.float64))
    test_i, test_j = central_differences(np.asarray(test, dtype=np.float64))
    return 0.5 * (psnr(ref_i, test_i) + psnr(ref_j, test_j))


def ssim_map(reference: np.ndarray, test: np.ndarray, window: int = SSIM_WINDOW) -> np.ndarray:
    """SSIM of every ``window x window`` patch at stride 1.

    Means, variances and covariance are plain (1/N) window averages.
    """
    check_same_shape(reference, test)
    if min(reference.shape) < window:
        raise DimensionError(f"image {reference.shape} is smaller than the {window}x{window} window")
    x = sliding_window_view(np.asarray(reference, dtype=np.float64), (window, window))
    y = sliding_window_view(np.asarray(test, dtype=np.float64), (window, window))
    mu_x = x.mean(axis=(-2, -1))
    mu_y = y.mean(axis=(-2, -1))
    dx = x - mu_x[..., None, None]
    dy = y - mu_y[..., None, None]
    var_x = np.mean(dx * dx, axis=(-2, -1))
    var_y = np.mean(dy * dy, axis=(-2, -1))
    cov = np.mean(dx * dy, axis=(-2, -1))
    num = (2 * mu_x * mu_y + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_x**2 + mu_y**2 + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return num / den


def mssim(reference: np.ndarray, test: np.ndarray) -> float:
    return float(np.mean(ssim_map(reference, test)))


def isnr(clean: np.ndarray, noisy: np.ndarray, denoised: np.ndarray) -> float:
    """``10 log10(sum (clean - noisy)^2 / sum (clean - denoised)^2)``.

    ``+inf`` when the denoised image equals the clean one, ``-inf`` when
    only the noisy one does.
    """
    check_same_shape(clean, noisy, denoised)
    before = float(np.sum(np.square(np.asarray(clean, dtype=np.float64) - noisy)))
    after = float(np.sum(np.square(np.asarray(clean, dtype=np.float64) - denoised)))
    return _ratio_db(before, after)


def evaluate(clean: np.ndarray, noisy: np.ndarray, denoised: np.ndarray) -> MetricsReport:
    return MetricsReport(
        psnr=psnr(clean, denoised),
        psnr_grad=psnr_grad(clean, denoised),
        mssim=mssim(clean, denoised),
        isnr=isnr(clean, noisy, denoised),
    )
