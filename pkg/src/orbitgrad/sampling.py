"""Reverse-time generation: DDPM ancestral sampling and Euler flow integration."""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import net
from .errors import InvalidConfig, NumericalDivergence
from .schedule import FlowCoefficients, NoiseSchedule


def ancestral_sample(
    denoiser: net.Denoiser,
    schedule: NoiseSchedule,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Standard DDPM reverse chain with the x0-prediction parameterization.

    Starts from x_T ~ N(0, I); each step forms the posterior
    q(x_{t-1} | x_t, x0_hat) from the (alpha, sigma, beta) tables.  The
    last step returns the x0 prediction with no added noise.
    """
    if schedule.beta is None:
        raise InvalidConfig("ancestral sampling needs the per-step beta table")
    if n < 1:
        raise InvalidConfig("need n >= 1 samples")
    d = denoiser.dim
    T = schedule.T
    abar = schedule.alpha**2  # cumulative
    x = rng.standard_normal((n, d))
    for t in range(T, 0, -1):
        x0_hat = net.forward(denoiser, x, t / T)
        if t == 1:
            x = x0_hat
            break
        abar_prev = abar[t - 2]
        beta_t = schedule.beta[t - 1]
        denom = 1.0 - abar[t - 1]
        mean = (
            np.sqrt(abar_prev) * beta_t * x0_hat
            + np.sqrt(1.0 - beta_t) * (1.0 - abar_prev) * x
        ) / denom
        var = beta_t * (1.0 - abar_prev) / denom
        x = mean + np.sqrt(var) * rng.standard_normal((n, d))
        if not np.all(np.isfinite(x)):
            raise NumericalDivergence(f"non-finite state at reverse step t={t}")
    if not np.all(np.isfinite(x)):
        raise NumericalDivergence("non-finite final samples")
    return x


def flow_euler_sample(
    velocity: Callable[[np.ndarray, float], np.ndarray],
    coeffs: FlowCoefficients,
    steps: int,
    n: int,
    dim: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Euler integration x <- x + dt * v(x, t) from t_min to 1 - t_min,
    starting from a standard normal prior draw."""
    if steps < 1 or n < 1:
        raise InvalidConfig("need steps >= 1 and n >= 1")
    x = rng.standard_normal((n, dim))
    t = coeffs.t_min
    dt = (1.0 - 2.0 * coeffs.t_min) / steps
    for _ in range(steps):
        x = x + dt * np.asarray(velocity(x, t), dtype=float)
        t += dt
        if not np.all(np.isfinite(x)):
            raise NumericalDivergence(f"non-finite state at flow time t={t}")
    return x
