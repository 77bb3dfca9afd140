"""Orbit-weighted denoising targets.

The regression target is a kernel-weighted average of a data point's
group orbit: exact for finite groups, self-normalized importance sampling
(SNIS) otherwise.  A brute-force conditional-expectation oracle over the
full symmetrized support (dataset x group) is provided for verification.

On the torus the weighted mean is taken over displacements wrapped about
x_t, which makes the target a well-defined torus point (independent of
the coordinate representatives); in Euclidean space this reduces to the
plain weighted mean of the orbit points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from . import groups
from .errors import DegenerateWeights, InvalidSampler, NotAGroup
from .groups import ENUMERATE, TORUS, GroupElement, GroupSampler, Point
from .kernels import ForwardKernel, log_density_values
from .schedule import FlowCoefficients
from .wrapped import wrap_centered, wrap_unit, wrapped_normal_logpdf


@dataclass(frozen=True)
class OrbitTargetEstimate:
    """SNIS (or exact) estimate of the orbit-weighted target."""

    target: Point
    raw_weights: np.ndarray
    normalized_weights: np.ndarray
    ess: float
    n_samples: int


@dataclass(frozen=True)
class Dataset:
    """Finite point set with uniform weights 1/|D|."""

    points: tuple[Point, ...]

    def __post_init__(self):
        pts = tuple(self.points)
        if not pts:
            raise ValueError("dataset must be non-empty")
        space, dim = pts[0].space, pts[0].dim
        for p in pts:
            if p.space != space or p.dim != dim:
                raise ValueError("all dataset points must share one space and dimension")
        object.__setattr__(self, "points", pts)

    @property
    def space(self) -> str:
        return self.points[0].space

    def values(self) -> np.ndarray:
        return np.stack([p.values for p in self.points])


def _normalize_log_weights(log_w: np.ndarray) -> np.ndarray:
    """exp-normalize along the last axis; raises when everything underflows."""
    m = np.max(log_w, axis=-1, keepdims=True)
    if not np.all(np.isfinite(m)):
        raise DegenerateWeights("all importance weights vanished; x_t is too far from the orbit")
    w = np.exp(log_w - m)
    return w / np.sum(w, axis=-1, keepdims=True)


def weighted_orbit_mean(
    xt: np.ndarray, orbit: np.ndarray, log_w: np.ndarray, space: str
) -> np.ndarray:
    """Normalized-weight mean of orbit points.

    ``orbit`` has shape (..., N, d), ``log_w`` shape (..., N) and ``xt``
    shape (..., d).  Torus points are averaged through displacements
    wrapped about x_t and the result is wrapped back into [0, 1)^d.
    """
    nw = _normalize_log_weights(log_w)
    if space == TORUS:
        disp = wrap_centered(orbit - xt[..., None, :])
        return wrap_unit(xt + np.sum(nw[..., None] * disp, axis=-2))
    return np.sum(nw[..., None] * orbit, axis=-2)


def _estimate_from_log_weights(
    xt: Point, orbit: np.ndarray, log_w: np.ndarray
) -> OrbitTargetEstimate:
    target = weighted_orbit_mean(xt.values, orbit, log_w, xt.space)
    nw = _normalize_log_weights(log_w)
    ess = float(np.exp(2.0 * logsumexp(log_w) - logsumexp(2.0 * log_w)))
    return OrbitTargetEstimate(
        target=Point(target, xt.space),
        raw_weights=np.exp(log_w),
        normalized_weights=nw,
        ess=ess,
        n_samples=log_w.shape[-1],
    )


# ---------------------------------------------------------------------------
# Finite-group closure check


def check_group_closure(elements: Sequence[GroupElement], tol: float = 1e-10) -> None:
    """Verify a finite element list is a group (identity, closure)."""
    elems = list(elements)
    if not elems:
        raise NotAGroup("empty element list")
    if not any(groups.is_identity(e, tol) for e in elems):
        raise NotAGroup("identity missing from element list")
    for a in elems:
        for b in elems:
            ab = groups.compose(a, b)
            if not any(groups.elements_close(ab, c, tol) for c in elems):
                raise NotAGroup(f"composition {a!r} * {b!r} escapes the element list")


# ---------------------------------------------------------------------------
# Exact finite-group target


def exact_orbit_targets_values(
    x0: np.ndarray,
    xt: np.ndarray,
    t,
    kernel: ForwardKernel,
    elements: Sequence[GroupElement],
) -> tuple[np.ndarray, np.ndarray]:
    """Batched exact target; x0, xt have shape (..., d).

    Returns (targets, log_weights) with log_weights of shape (..., N).
    The Haar measure on a finite group is uniform, so the kernel log
    densities are the (unnormalized) log weights.
    """
    orbit = np.stack([groups.act_values(g, x0) for g in elements], axis=-2)  # (..., N, d)
    t_arr = np.asarray(t)
    t_b = t_arr[..., None] if t_arr.ndim > 0 else t_arr
    log_w = log_density_values(kernel, np.asarray(xt, dtype=float)[..., None, :], orbit, t_b)
    return weighted_orbit_mean(np.asarray(xt, dtype=float), orbit, log_w, kernel.space), log_w


def exact_orbit_target(
    x0: Point,
    xt: Point,
    t: int,
    kernel: ForwardKernel,
    elements: Sequence[GroupElement],
    check_closure: bool = True,
) -> OrbitTargetEstimate:
    """Exact orbit-weighted target over an enumerated finite group."""
    kernel._check_space(x0, xt)
    if check_closure and len(elements) <= 24:
        check_group_closure(elements)
    orbit = np.stack([groups.act_values(g, x0.values) for g in elements])
    log_w = log_density_values(kernel, xt.values[None, :], orbit, t)
    return _estimate_from_log_weights(xt, orbit, log_w)


# ---------------------------------------------------------------------------
# SNIS target (Algorithm: sample g ~ nu_t, weight by kernel / proposal)


def _draw_elements(
    sampler: GroupSampler, t, N: int, rng: np.random.Generator
) -> list[GroupElement]:
    if N < 1:
        raise InvalidSampler("need N >= 1 group samples")
    if sampler.mode == ENUMERATE:
        # deterministic cyclic sweep: with N a multiple of the group order
        # this reproduces the exact weighted mean with zero variance
        elems = [sampler.elements[i % len(sampler.elements)] for i in range(N)]
    else:
        elems = [groups.sample(sampler, t, rng) for _ in range(N)]
        if sampler.include_identity:
            elems[0] = sampler.identity()
    return elems


def snis_orbit_target(
    x0: Point,
    xt: Point,
    t: int,
    kernel: ForwardKernel,
    sampler: GroupSampler,
    N: int,
    rng: np.random.Generator,
) -> OrbitTargetEstimate:
    """Self-normalized importance-sampling estimate of the orbit target.

    Draws g^(1..N) ~ nu_t (the identity replaces the first draw when the
    sampler requests it, keeping the sample budget fixed), forms orbit
    samples g^(i) o x_0 and weights them by kernel density over proposal
    density.  All weight arithmetic happens in log space.
    """
    kernel._check_space(x0, xt)
    elems = _draw_elements(sampler, t, N, rng)
    orbit = np.stack([groups.act_values(g, x0.values) for g in elems])
    log_q = log_density_values(kernel, xt.values[None, :], orbit, t)
    log_nu = np.array([groups.log_density(sampler, g, t) for g in elems])
    return _estimate_from_log_weights(xt, orbit, log_q - log_nu)


def snis_orbit_targets_values(
    x0: np.ndarray,
    xt: np.ndarray,
    t,
    kernel: ForwardKernel,
    sampler: GroupSampler,
    N: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Batched SNIS targets for (B, d) inputs; vectorized fast paths for
    enumerated groups, reflections, and torus translations."""
    x0 = np.asarray(x0, dtype=float)
    xt = np.asarray(xt, dtype=float)
    B, d = x0.shape
    t_arr = np.broadcast_to(np.asarray(t), (B,))

    if sampler.mode == ENUMERATE:
        elems = [sampler.elements[i % len(sampler.elements)] for i in range(N)]
        orbit = np.stack([groups.act_values(g, x0) for g in elems], axis=1)  # (B,N,d)
        log_w = log_density_values(kernel, xt[:, None, :], orbit, t_arr[:, None])
        return weighted_orbit_mean(xt, orbit, log_w, kernel.space)

    if sampler.kind == groups.REFLECTION and sampler.mode == groups.UNIFORM:
        signs = np.where(rng.random((B, N)) < 0.5, 1.0, -1.0)
        if sampler.include_identity:
            signs[:, 0] = 1.0
        orbit = signs[:, :, None] * x0[:, None, :]
        log_w = log_density_values(kernel, xt[:, None, :], orbit, t_arr[:, None])
        return weighted_orbit_mean(xt, orbit, log_w, kernel.space)  # constant nu cancels

    if sampler.kind == groups.TORUS_TRANSLATION:
        k = sampler.offset_dim
        if sampler.mode == groups.UNIFORM:
            m = rng.random((B, N, k))
            if sampler.include_identity:
                m[:, 0, :] = 0.0
            log_nu = np.zeros((B, N))
        else:  # wrapped normal proposal
            sig_g = np.array([float(sampler.bandwidth(ti)) for ti in t_arr])
            m = wrap_unit(sig_g[:, None, None] * rng.standard_normal((B, N, k)))
            if sampler.include_identity:
                m[:, 0, :] = 0.0
            log_nu = wrapped_normal_logpdf(m, sig_g[:, None])
        orbit = wrap_unit(x0[:, None, :] + np.tile(m, d // k))
        log_q = log_density_values(kernel, xt[:, None, :], orbit, t_arr[:, None])
        return weighted_orbit_mean(xt, orbit, log_q - log_nu, kernel.space)

    # generic fallback: one point at a time
    out = np.empty_like(x0)
    for b in range(B):
        est = snis_orbit_target(
            Point(x0[b], kernel.space), Point(xt[b], kernel.space),
            int(t_arr[b]), kernel, sampler, N, rng,
        )
        out[b] = est.target.values
    return out


# ---------------------------------------------------------------------------
# Brute-force oracle over the full symmetrized support


def oracle_conditional_mean(
    dataset: Dataset,
    xt: Point,
    t: int,
    kernel: ForwardKernel,
    elements: Sequence[GroupElement],
) -> Point:
    """E[x0 | x_t] over dataset x group, by exhaustive enumeration."""
    kernel._check_space(xt, *dataset.points)
    support = np.stack(
        [groups.act_values(g, p.values) for p in dataset.points for g in elements]
    )
    log_w = log_density_values(kernel, xt.values[None, :], support, t)
    return Point(weighted_orbit_mean(xt.values, support, log_w, xt.space), xt.space)


def counterexample_check(
    alpha: float, sigma: float, xt: float, a: float = 1.0
) -> tuple[float, float]:
    """Translation-in-1D counterexample: the plain conditional mean is not
    translation equivariant.

    Dataset {0, a} with the trivial group; returns
    (lhs, rhs) = (mean at xt + a, mean at xt plus a).  For a = 1 the
    contract is lhs < 1 < rhs.
    """
    from .schedule import NoiseSchedule
    from .kernels import GAUSSIAN

    sched = NoiseSchedule(
        T=2, alpha=np.array([alpha, alpha]), sigma=np.array([sigma, sigma])
    )
    kernel = ForwardKernel(GAUSSIAN, sched)
    data = Dataset((groups.euclidean([0.0]), groups.euclidean([a])))
    trivial = [groups.Reflection(1)]
    lhs = float(
        oracle_conditional_mean(data, groups.euclidean([xt + a]), 1, kernel, trivial).values[0]
    )
    rhs = float(
        oracle_conditional_mean(data, groups.euclidean([xt]), 1, kernel, trivial).values[0]
    ) + a
    return lhs, rhs


# ---------------------------------------------------------------------------
# Dispatchers used by the training losses


def rb_diffusion_target(
    x0: Point,
    xt: Point,
    t: int,
    kernel: ForwardKernel,
    sampler: GroupSampler | None = None,
    N: int = 1,
    rng: np.random.Generator | None = None,
    elements: Sequence[GroupElement] | None = None,
) -> Point:
    """Regression target of the orbit-weighted loss.

    Pass ``elements`` for exact finite-group evaluation, otherwise a
    sampler and N for SNIS.  The result is a constant: no gradient ever
    flows through it.
    """
    if elements is not None:
        return exact_orbit_target(x0, xt, t, kernel, elements).target
    if sampler is None or rng is None:
        raise InvalidSampler("SNIS mode needs a sampler and an rng")
    return snis_orbit_target(x0, xt, t, kernel, sampler, N, rng).target


def rb_flow_velocity_target(
    x0: Point,
    x1: Point,
    xt: Point,
    t: float,
    coeffs: FlowCoefficients,
    orbit_mean_x1: Point,
) -> Point:
    """Rao-Blackwellized flow-matching velocity target.

    h(t) x_t - g(t) x_0 + f(t) E[x1 | x_t], with the data-endpoint
    expectation supplied by an orbit-target estimate.  The prior endpoint
    x_0 stays a single sample.
    """
    h, g, f = coeffs.h(t), coeffs.g(t), coeffs.f(t)
    return Point(h * xt.values - g * x0.values + f * orbit_mean_x1.values, xt.space)
