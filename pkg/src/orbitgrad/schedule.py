"""Time discretization: diffusion noise tables and flow-matching coefficients."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig, InvalidTime
from .groups import Point

BETA_MIN = 1e-4
BETA_MAX = 2e-2


@dataclass(frozen=True)
class NoiseSchedule:
    """Discrete-time (alpha_t, sigma_t) tables for t = 1..T.

    ``alpha`` is the cumulative scaling factor (alpha_t x_0 is the mean of
    the forward kernel) and ``sigma`` the noise level.  ``beta`` holds the
    per-step variances when the schedule comes from a DDPM construction;
    it is what the ancestral sampler needs.
    """

    T: int
    alpha: np.ndarray
    sigma: np.ndarray
    beta: np.ndarray | None = None

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        if self.T < 2 or alpha.shape != (self.T,) or sigma.shape != (self.T,):
            raise InvalidConfig("schedule tables must have length T >= 2")
        if np.any(alpha <= 0.0) or np.any(alpha > 1.0) or np.any(sigma < 0.0):
            raise InvalidConfig("need alpha_t in (0,1] and sigma_t >= 0")
        if np.any(np.diff(alpha) > 1e-12) or np.any(np.diff(sigma) < -1e-12):
            raise InvalidConfig("alpha must be non-increasing and sigma non-decreasing")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "sigma", sigma)

    def alpha_at(self, t) -> np.ndarray:
        """alpha_t for integer timesteps t in 1..T (scalar or array)."""
        return self.alpha[np.asarray(t) - 1]

    def sigma_at(self, t) -> np.ndarray:
        return self.sigma[np.asarray(t) - 1]


def make_vp_schedule(T: int) -> NoiseSchedule:
    """Variance-preserving DDPM schedule with linear per-step beta.

    beta_t spans [1e-4, 0.02]; alpha_t = sqrt(prod(1 - beta_s)) and
    sigma_t = sqrt(1 - alpha_t^2), so alpha_t^2 + sigma_t^2 = 1.
    """
    if T < 2:
        raise InvalidConfig(f"need T >= 2, got {T}")
    beta = np.linspace(BETA_MIN, BETA_MAX, T)
    alpha = np.sqrt(np.cumprod(1.0 - beta))
    sigma = np.sqrt(1.0 - alpha**2)
    return NoiseSchedule(T=T, alpha=alpha, sigma=sigma, beta=beta)


def make_torus_schedule(T: int, sigma_min: float = 0.01, sigma_max: float = 0.5) -> NoiseSchedule:
    """Geometric sigma ladder for the torus forward process (no scaling)."""
    if T < 2:
        raise InvalidConfig(f"need T >= 2, got {T}")
    sigma = np.geomspace(sigma_min, sigma_max, T)
    return NoiseSchedule(T=T, alpha=np.ones(T), sigma=sigma)


@dataclass(frozen=True)
class FlowCoefficients:
    """Coefficients of the stochastic-interpolant velocity decomposition.

    With x_t = (1-t) x0 + t x1 + sigma_fm sqrt(t(1-t)) eps, the
    conditional velocity equals h(t) x_t - g(t) x0 + f(t) x1.
    """

    sigma_fm: float
    t_min: float = 1e-3

    def __post_init__(self):
        if self.sigma_fm <= 0.0:
            raise InvalidConfig("sigma_fm must be positive")
        if not 0.0 < self.t_min < 0.5:
            raise InvalidConfig("t_min must lie in (0, 0.5)")

    def _check_t(self, t: float) -> float:
        t = float(t)
        if not self.t_min <= t <= 1.0 - self.t_min:
            raise InvalidTime(f"t={t} outside [{self.t_min}, {1.0 - self.t_min}]")
        return t

    def h(self, t: float) -> float:
        t = self._check_t(t)
        return (1.0 - 2.0 * t) / (2.0 * self.sigma_fm * t * (1.0 - t))

    def g(self, t: float) -> float:
        t = self._check_t(t)
        return 1.0 + (1.0 - 2.0 * t) / (2.0 * self.sigma_fm * t)

    def f(self, t: float) -> float:
        t = self._check_t(t)
        return 1.0 - (1.0 - 2.0 * t) / (2.0 * self.sigma_fm * (1.0 - t))


def flow_interpolate(
    x0: Point, x1: Point, t: float, eps: Point, coeffs: FlowCoefficients
) -> Point:
    """Noisy interpolant x_t between a prior draw x0 and a data point x1."""
    t = coeffs._check_t(t)
    if x0.values.shape != x1.values.shape or x0.values.shape != eps.values.shape:
        raise InvalidConfig("x0, x1 and eps must share a shape")
    vals = (1.0 - t) * x0.values + t * x1.values
    vals = vals + coeffs.sigma_fm * np.sqrt(t * (1.0 - t)) * eps.values
    return Point(vals, x0.space)


def direct_velocity(x0: Point, x1: Point, t: float, eps: Point, coeffs: FlowCoefficients) -> Point:
    """Conditional velocity x1 - x0 + (1-2t)/(2 sqrt(t(1-t))) eps."""
    t = coeffs._check_t(t)
    c = (1.0 - 2.0 * t) / (2.0 * np.sqrt(t * (1.0 - t)))
    return Point(x1.values - x0.values + c * eps.values, x0.space)
