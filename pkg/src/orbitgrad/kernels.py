"""Invariant forward noising kernels: Gaussian on R^d, Wrapped Normal on T^d.

Both admit exact log densities, which is what makes the importance
weights of the orbit-target estimator tractable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpace
from .groups import EUCLIDEAN, TORUS, Point
from .schedule import NoiseSchedule
from .wrapped import truncation_order, wrap_unit, wrapped_normal_logpdf

GAUSSIAN = "gaussian"
WRAPPED_NORMAL_KERNEL = "wrapped_normal"


@dataclass(frozen=True)
class ForwardKernel:
    """Forward process q_t(x_t | x_0) with schedule-indexed noise levels.

    Gaussian: N(x_t; alpha_t x_0, sigma_t^2 I) on Euclidean space.
    WrappedNormal: sum of integer-shifted Gaussians on the torus; there is
    no alpha scaling (scaling is ill-defined mod 1), matching the
    wrapped-normal density which contains only sigma_t.
    """

    kind: str
    schedule: NoiseSchedule
    truncation: int | None = None  # wrapped sum order; None = automatic

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, WRAPPED_NORMAL_KERNEL):
            raise InvalidSpace(f"unknown kernel kind {self.kind!r}")

    @property
    def space(self) -> str:
        return EUCLIDEAN if self.kind == GAUSSIAN else TORUS

    def _check_space(self, *points: Point) -> None:
        for p in points:
            if p.space != self.space:
                raise InvalidSpace(f"{self.kind} kernel got a {p.space} point")


def sample_forward_values(
    kernel: ForwardKernel, x0: np.ndarray, t, rng: np.random.Generator
) -> np.ndarray:
    """Array core of sample_forward; x0 has shape (..., d), t broadcasts."""
    x0 = np.asarray(x0, dtype=float)
    sig = np.asarray(kernel.schedule.sigma_at(t))[..., None]
    eps = rng.standard_normal(x0.shape)
    if kernel.kind == GAUSSIAN:
        alpha = np.asarray(kernel.schedule.alpha_at(t))[..., None]
        return alpha * x0 + sig * eps
    return wrap_unit(x0 + sig * eps)


def sample_forward(kernel: ForwardKernel, x0: Point, t: int, rng: np.random.Generator) -> Point:
    """Draw x_t ~ q_t(. | x_0)."""
    kernel._check_space(x0)
    return Point(sample_forward_values(kernel, x0.values, t, rng), kernel.space)


def log_density_values(kernel: ForwardKernel, xt: np.ndarray, x0: np.ndarray, t) -> np.ndarray:
    """Array core of log_density; inputs broadcast over leading axes."""
    xt = np.asarray(xt, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    sig = np.asarray(kernel.schedule.sigma_at(t), dtype=float)
    if kernel.kind == GAUSSIAN:
        alpha = np.asarray(kernel.schedule.alpha_at(t), dtype=float)
        d = xt.shape[-1]
        sq = np.sum((xt - alpha[..., None] * x0) ** 2, axis=-1)
        return -0.5 * sq / sig**2 - 0.5 * d * np.log(2.0 * np.pi * sig**2)
    z = kernel.truncation if kernel.truncation is not None else truncation_order(float(sig.max()))
    return wrapped_normal_logpdf(xt - x0, sig, trunc=z)


def log_density(kernel: ForwardKernel, xt: Point, x0: Point, t: int) -> float:
    """Exact log q_t(x_t | x_0)."""
    kernel._check_space(xt, x0)
    return float(log_density_values(kernel, xt.values, x0.values, t))
