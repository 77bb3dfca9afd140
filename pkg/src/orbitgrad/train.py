"""Training loops for the three loss variants plus diagnostic harnesses.

Variants:
  * baseline -- regress phi(x_t, t) onto the clean sample x_0
  * augment  -- apply a random group element to x_0 before noising and
                regress onto the transformed sample
  * orbdiff  -- regress onto the orbit-weighted target (exact enumeration
                or SNIS); the target is a constant, no gradient flows
                through it
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import estimator, groups, net
from .errors import InvalidConfig, NumericalDivergence
from .estimator import Dataset
from .groups import GroupElement, GroupSampler, Point
from .kernels import ForwardKernel, sample_forward_values
from .wrapped import wrap_centered

BASELINE = "baseline"
AUGMENT = "augment"
ORBDIFF = "orbdiff"
VARIANTS = (BASELINE, AUGMENT, ORBDIFF)


@dataclass
class TrainConfig:
    variant: str = BASELINE
    iterations: int = 20_000
    batch_size: int = 64
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    n_group_samples: int = 2
    seed: int = 0
    net: str = net.EQUIREFLECT
    hidden: int = 64
    target_mode: str = "exact"  # "exact" | "snis"
    log_every: int = 100

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidConfig(f"unknown variant {self.variant!r}")
        if self.iterations < 1 or self.batch_size < 1 or self.n_group_samples < 1:
            raise InvalidConfig("iterations, batch size and N must all be >= 1")
        if self.target_mode not in ("exact", "snis"):
            raise InvalidConfig(f"unknown target mode {self.target_mode!r}")


@dataclass(frozen=True)
class GradientStats:
    """Per-timestep spread of single-draw gradients at frozen parameters."""

    variant: str
    timestep: int
    repeats: int
    mean_grad_norm: float
    grad_norm_var: float
    mean_component_var: float


@dataclass
class Problem:
    """Everything the losses need besides the optimizer state."""

    dataset: Dataset
    kernel: ForwardKernel
    elements: tuple[GroupElement, ...] | None = None  # exact enumeration
    sampler: GroupSampler | None = None  # SNIS / augmentation proposal

    def __post_init__(self):
        if self.elements is not None:
            elements = tuple(self.elements)
            if len(elements) <= 24:
                estimator.check_group_closure(elements)
            self.elements = elements

    def augment_sampler(self) -> GroupSampler:
        if self.sampler is not None and self.sampler.mode != groups.WRAPPED_NORMAL:
            return self.sampler
        if self.elements is not None:
            return groups.enumeration(self.elements)
        raise InvalidConfig("augmentation needs a uniform sampler or an element list")


def _batch_targets(
    variant: str,
    x0: np.ndarray,
    t: np.ndarray,
    problem: Problem,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Returns (x0 used for noising, regression target), both (B, d)."""
    if variant == BASELINE:
        return x0, x0
    if variant == AUGMENT:
        aug = problem.augment_sampler()
        x0p = np.stack(
            [groups.act_values(groups.sample(aug, int(ti), rng), xi) for xi, ti in zip(x0, t)]
        )
        return x0p, x0p
    # orbdiff: noise the raw sample; the target is computed after noising
    return x0, x0


def loss_and_grad(
    denoiser: net.Denoiser,
    x0: np.ndarray,
    t: np.ndarray,
    problem: Problem,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> tuple[float, net.MlpParams]:
    """Mean-squared loss over a batch and its exact parameter gradients.

    x0 has shape (B, d); t holds integer timesteps in 1..T.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    t = np.broadcast_to(np.asarray(t), (x0.shape[0],))
    noise_src, target = _batch_targets(cfg.variant, x0, t, problem, cfg, rng)
    xt = sample_forward_values(problem.kernel, noise_src, t, rng)
    if cfg.variant == ORBDIFF:
        if cfg.target_mode == "exact":
            if problem.elements is None:
                raise InvalidConfig("exact orbdiff target needs an element list")
            target, _ = estimator.exact_orbit_targets_values(
                x0, xt, t, problem.kernel, problem.elements
            )
        else:
            if problem.sampler is None:
                raise InvalidConfig("SNIS orbdiff target needs a group sampler")
            target = estimator.snis_orbit_targets_values(
                x0, xt, t, problem.kernel, problem.sampler, cfg.n_group_samples, rng
            )
    t_norm = t / problem.kernel.schedule.T
    phi, cache = net.forward_with_cache(denoiser, xt, t_norm)
    resid = phi - target
    if problem.kernel.space == groups.TORUS:
        resid = wrap_centered(resid)
    loss = float(np.mean(np.sum(resid**2, axis=-1)))
    grads = net.backward(denoiser, cache, 2.0 * resid / x0.shape[0])
    return loss, grads


@dataclass
class TrainResult:
    denoiser: net.Denoiser
    trace: list[tuple[int, float]] = field(default_factory=list)


def train_loop(cfg: TrainConfig, problem: Problem) -> TrainResult:
    """Adam training; deterministic given cfg.seed."""
    from .seeding import child_rng

    init_rng = child_rng(cfg.seed, "init")
    data_rng = child_rng(cfg.seed, "train")
    d = problem.dataset.points[0].dim
    denoiser = net.init_denoiser(cfg.net, d, cfg.hidden, init_rng)
    points = problem.dataset.values()
    T = problem.kernel.schedule.T

    theta = denoiser.params.flat()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    trace: list[tuple[int, float]] = []
    last_finite = theta.copy()

    for it in range(1, cfg.iterations + 1):
        idx = data_rng.integers(len(points), size=cfg.batch_size)
        t = data_rng.integers(1, T + 1, size=cfg.batch_size)
        loss, grads = loss_and_grad(denoiser, points[idx], t, problem, cfg, data_rng)
        if not np.isfinite(loss):
            denoiser.params = denoiser.params.with_flat(last_finite)
            err = NumericalDivergence(f"non-finite loss at iteration {it}")
            err.result = TrainResult(denoiser, trace)
            raise err
        last_finite = theta
        g = grads.flat()
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g**2
        m_hat = m / (1.0 - cfg.beta1**it)
        v_hat = v / (1.0 - cfg.beta2**it)
        theta = theta - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        denoiser.params = denoiser.params.with_flat(theta)
        if it == 1 or it % cfg.log_every == 0:
            trace.append((it, loss))
    return TrainResult(denoiser, trace)


# ---------------------------------------------------------------------------
# Diagnostics


def single_draw_gradient(
    denoiser: net.Denoiser,
    variant: str,
    problem: Problem,
    cfg: TrainConfig,
    rng: np.random.Generator,
    t: int,
    eps: np.ndarray | None = None,
) -> np.ndarray:
    """One Monte Carlo gradient draw (flat vector) at a frozen net."""
    points = problem.dataset.values()
    x0 = points[rng.integers(len(points))][None, :]
    t_arr = np.array([t])
    noise_src, target = _batch_targets(variant, x0, t_arr, problem, cfg, rng)
    if eps is None:
        eps = rng.standard_normal(x0.shape)
    sig = problem.kernel.schedule.sigma_at(t)
    if problem.kernel.space == groups.TORUS:
        xt = np.mod(noise_src + sig * eps, 1.0)
    else:
        xt = problem.kernel.schedule.alpha_at(t) * noise_src + sig * eps
    if variant == ORBDIFF:
        if cfg.target_mode == "exact":
            target, _ = estimator.exact_orbit_targets_values(
                x0, xt, t_arr, problem.kernel, problem.elements
            )
        else:
            target = estimator.snis_orbit_targets_values(
                x0, xt, t_arr, problem.kernel, problem.sampler, cfg.n_group_samples, rng
            )
    phi, cache = net.forward_with_cache(denoiser, xt, t_arr / problem.kernel.schedule.T)
    resid = phi - target
    if problem.kernel.space == groups.TORUS:
        resid = wrap_centered(resid)
    return net.backward(denoiser, cache, 2.0 * resid).flat()


def gradient_variance_sweep(
    denoiser: net.Denoiser,
    problem: Problem,
    timesteps: Sequence[int],
    repeats: int,
    variants: Sequence[str],
    cfg: TrainConfig,
    seed: int = 0,
    fixed_noise: bool = False,
    return_draws: bool = False,
):
    """Spread of K independent single-draw gradients at frozen parameters.

    With ``fixed_noise`` the data/noise draw is frozen per timestep and only
    the variant's internal randomness (augmentation g, SNIS group samples)
    varies; exact-enumeration targets then have zero variance.

    Draw j uses the stream child_rng(seed, "variance", t, j) for every
    variant, so variants sharing a draw structure (baseline and exact
    orbdiff both consume one data index and one noise vector) see paired
    (x0, eps) realizations.
    """
    from .seeding import child_rng

    if repeats < 2:
        raise InvalidConfig("need at least 2 repeats")
    stats: list[GradientStats] = []
    draws: dict[tuple[str, int], np.ndarray] = {}
    d = problem.dataset.points[0].dim
    for t in timesteps:
        eps_fixed = child_rng(seed, "eps", t).standard_normal((1, d)) if fixed_noise else None
        for variant in variants:
            grads = np.stack(
                [
                    single_draw_gradient(
                        denoiser, variant, problem, cfg,
                        child_rng(seed, "variance", t, j), t, eps=eps_fixed,
                    )
                    for j in range(repeats)
                ]
            )
            norms = np.linalg.norm(grads, axis=1)
            stats.append(
                GradientStats(
                    variant=variant,
                    timestep=int(t),
                    repeats=repeats,
                    mean_grad_norm=float(norms.mean()),
                    grad_norm_var=float(norms.var(ddof=1)),
                    mean_component_var=float(grads.var(axis=0, ddof=1).mean()),
                )
            )
            draws[(variant, int(t))] = norms
    if return_draws:
        return stats, draws
    return stats


def bootstrap_variance_pvalue(
    norms_a: np.ndarray,
    norms_b: np.ndarray,
    n_boot: int = 2000,
    seed: int = 0,
    paired: bool = False,
) -> float:
    """One-sided bootstrap p-value for H1: Var(a) < Var(b).

    Returns the fraction of bootstrap resamples in which the variance of
    ``a`` is not below that of ``b``.  With ``paired`` the two draw sets
    came from shared randomness and one common index resample is used,
    which removes the between-stream noise from the comparison.
    """
    from .seeding import child_rng

    rng = child_rng(seed, "bootstrap")
    a = np.asarray(norms_a, dtype=float)
    b = np.asarray(norms_b, dtype=float)
    ia = rng.integers(a.size, size=(n_boot, a.size))
    if paired:
        if a.size != b.size:
            raise InvalidConfig("paired bootstrap needs equal-size draw sets")
        ib = ia
    else:
        ib = rng.integers(b.size, size=(n_boot, b.size))
    va = a[ia].var(axis=1, ddof=1)
    vb = b[ib].var(axis=1, ddof=1)
    return float(np.mean(va >= vb))


def equivariance_error(
    denoiser: net.Denoiser,
    dataset: Dataset,
    kernel: ForwardKernel,
    group: GroupSampler,
    M: int,
    rng: np.random.Generator,
    timesteps: Sequence[int] | None = None,
) -> list[tuple[int, float]]:
    """Monte Carlo E[RMSD(g o phi(x_t), phi(g o x_t))] per timestep."""
    if M < 1:
        raise InvalidConfig("need at least one probe")
    T = kernel.schedule.T
    if timesteps is None:
        timesteps = sorted(set(np.linspace(1, T, 10, dtype=int).tolist()))
    points = dataset.values()
    out = []
    for t in timesteps:
        errs = np.empty(M)
        for j in range(M):
            x0 = points[rng.integers(len(points))]
            xt = sample_forward_values(kernel, x0, t, rng)
            g = groups.sample(group, t, rng)
            lhs = groups.act_values(g, net.forward(denoiser, xt, t / T))
            rhs = net.forward(denoiser, groups.act_values(g, xt), t / T)
            diff = wrap_centered(lhs - rhs) if kernel.space == groups.TORUS else lhs - rhs
            errs[j] = np.sqrt(np.mean(diff**2))
        out.append((int(t), float(errs.mean())))
    return out
