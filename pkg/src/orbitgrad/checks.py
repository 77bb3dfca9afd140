"""Self-contained property checks runnable from the command line.

Each check compares library output against an independent closed form or
a symmetry identity and returns (name, passed, detail).  The test suite
runs heavier versions of the same checks; this module exists so a
deployed install can be smoke-tested without pytest.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit, logsumexp

from . import estimator, groups
from .estimator import Dataset, counterexample_check, oracle_conditional_mean
from .groups import Point
from .kernels import GAUSSIAN, WRAPPED_NORMAL_KERNEL, ForwardKernel, log_density_values
from .schedule import make_torus_schedule, make_vp_schedule
from .seeding import child_rng
from .wrapped import wrap_centered, wrapped_normal_logpdf


def _euclidean_setup():
    schedule = make_vp_schedule(1000)
    return schedule, ForwardKernel(GAUSSIAN, schedule)


def _torus_setup():
    schedule = make_torus_schedule(1000, 0.01, 0.5)
    return schedule, ForwardKernel(WRAPPED_NORMAL_KERNEL, schedule)


def check_closed_form(seed: int = 0) -> tuple[str, bool, str]:
    """Reflection orbit target for dataset {1} equals tanh(alpha x / sigma^2)."""
    schedule, kernel = _euclidean_setup()
    elements = groups.reflection_group()
    worst = 0.0
    for t in (100, 500, 900):
        a, s = schedule.alpha_at(t), schedule.sigma_at(t)
        xt = np.linspace(-3.0, 3.0, 100)[:, None]
        got, _ = estimator.exact_orbit_targets_values(
            np.ones_like(xt), xt, np.full(len(xt), t), kernel, elements
        )
        worst = max(worst, float(np.abs(got[:, 0] - np.tanh(a * xt[:, 0] / s**2)).max()))
    return ("closed_form_tanh", worst <= 1e-12, f"max abs err {worst:.3e}")


def check_counterexample(seed: int = 0) -> tuple[str, bool, str]:
    """Plain conditional mean is not translation equivariant; logistic form."""
    rng = child_rng(seed, "counterexample")
    ok = True
    worst = 0.0
    for _ in range(20):
        sigma = float(rng.uniform(0.2, 2.0))
        xt = float(rng.uniform(-1.0, 1.0))
        lhs, rhs = counterexample_check(1.0, sigma, xt)
        ok = ok and (lhs < 1.0 < rhs)
        lhs_pred = float(expit((xt + 1.0 - 0.5) / sigma**2))
        rhs_pred = float(expit((xt - 0.5) / sigma**2)) + 1.0
        worst = max(worst, abs(lhs - lhs_pred), abs(rhs - rhs_pred))
    return ("translation_counterexample", ok and worst <= 1e-12,
            f"gap holds: {ok}, logistic err {worst:.3e}")


def _equivariance_case(kernel, elements, x0, xt, t, rng):
    g = elements[int(rng.integers(len(elements)))]
    lhs, _ = estimator.exact_orbit_targets_values(x0, xt, t, kernel, elements)
    lhs = groups.act_values(g, lhs)
    rhs, _ = estimator.exact_orbit_targets_values(
        x0, groups.act_values(g, xt), t, kernel, elements
    )
    diff = wrap_centered(lhs - rhs) if kernel.space == groups.TORUS else lhs - rhs
    return float(np.abs(diff).max())


def check_target_equivariance(seed: int = 0, probes: int = 50) -> tuple[str, bool, str]:
    """g o target(x0, xt) == target(x0, g o xt) for all supported groups."""
    rng = child_rng(seed, "equivariance")
    worst = 0.0
    sched_e, kernel_e = _euclidean_setup()
    sched_t, kernel_t = _torus_setup()
    cyc4 = [groups.Permutation(tuple((np.arange(4) + k) % 4)) for k in range(4)]
    cases = [
        (kernel_e, groups.reflection_group(), 1),
        (kernel_t, groups.cyclic_torus_translations(8), 2),
        (kernel_e, cyc4, 4),
    ]
    for kernel, elements, d in cases:
        for _ in range(probes):
            t = np.array([int(rng.integers(1, 1001))])
            if kernel.space == groups.TORUS:
                x0, xt = rng.random((1, d)), rng.random((1, d))
            else:
                x0, xt = rng.standard_normal((1, d)), rng.standard_normal((1, d))
            worst = max(worst, _equivariance_case(kernel, elements, x0, xt, t, rng))
    return ("target_equivariance", worst <= 1e-10, f"max abs err {worst:.3e}")


def check_symmetrized_marginals(seed: int = 0, probes: int = 50) -> tuple[str, bool, str]:
    """Mixture density over the orbit is the same whether the group acts on
    x0 before diffusion or on xt after (the action is an isometry)."""
    rng = child_rng(seed, "marginals")
    worst = 0.0
    for kernel, elements, d in (
        (_euclidean_setup()[1], groups.reflection_group(), 1),
        (_torus_setup()[1], groups.cyclic_torus_translations(8), 2),
    ):
        for _ in range(probes):
            t = int(rng.integers(1, 1001))
            if kernel.space == groups.TORUS:
                x0, xt = rng.random(d), rng.random(d)
            else:
                x0, xt = rng.standard_normal(d), rng.standard_normal(d)
            lhs = logsumexp(
                [log_density_values(kernel, xt, groups.act_values(g, x0), t) for g in elements]
            )
            rhs = logsumexp(
                [
                    log_density_values(kernel, groups.act_values(groups.invert(g), xt), x0, t)
                    for g in elements
                ]
            )
            worst = max(worst, abs(float(lhs) - float(rhs)))
    return ("symmetrized_marginals", worst <= 1e-10, f"max abs err {worst:.3e}")


def check_conditional_mean_equivariance(seed: int = 0, probes: int = 50) -> tuple[str, bool, str]:
    """On a group-closed dataset the exhaustive conditional mean commutes
    with the group action."""
    rng = child_rng(seed, "condmean")
    _, kernel = _euclidean_setup()
    elements = groups.reflection_group()
    data = Dataset((groups.euclidean([1.0, 2.0]), groups.euclidean([-1.0, -2.0])))
    worst = 0.0
    for _ in range(probes):
        t = int(rng.integers(1, 1001))
        xt = Point(rng.standard_normal(2), groups.EUCLIDEAN)
        g = elements[int(rng.integers(2))]
        lhs = groups.act(g, oracle_conditional_mean(data, xt, t, kernel, elements))
        rhs = oracle_conditional_mean(data, groups.act(g, xt), t, kernel, elements)
        worst = max(worst, float(np.abs(lhs.values - rhs.values).max()))
    return ("conditional_mean_equivariance", worst <= 1e-10, f"max abs err {worst:.3e}")


def check_wrapped_normal(seed: int = 0) -> tuple[str, bool, str]:
    """The wrapped density integrates to one and is shift-1 periodic."""
    grid = (np.arange(20000) + 0.5) / 20000
    worst_mass = 0.0
    worst_shift = 0.0
    for sigma in (0.05, 0.2, 0.7, 1.5):
        logp = wrapped_normal_logpdf(grid[:, None], sigma)
        worst_mass = max(worst_mass, abs(float(np.exp(logp).mean()) - 1.0))
        shifted = wrapped_normal_logpdf(grid[:, None] + 3.0, sigma)
        worst_shift = max(worst_shift, float(np.abs(logp - shifted).max()))
    ok = worst_mass <= 1e-6 and worst_shift <= 1e-10
    return ("wrapped_normal", ok, f"mass err {worst_mass:.3e}, shift err {worst_shift:.3e}")


def check_snis_enumeration(seed: int = 0, probes: int = 50) -> tuple[str, bool, str]:
    """SNIS over an enumerated group with N = |G| equals the exact target."""
    rng = child_rng(seed, "snis")
    _, kernel = _euclidean_setup()
    elements = groups.reflection_group()
    sampler = groups.enumeration(elements)
    worst = 0.0
    for _ in range(probes):
        t = int(rng.integers(1, 1001))
        x0 = Point(rng.standard_normal(1), groups.EUCLIDEAN)
        xt = Point(rng.standard_normal(1), groups.EUCLIDEAN)
        exact = estimator.exact_orbit_target(x0, xt, t, kernel, elements)
        snis = estimator.snis_orbit_target(x0, xt, t, kernel, sampler, 2, rng)
        worst = max(worst, float(np.abs(exact.target.values - snis.target.values).max()))
    return ("snis_enumeration", worst <= 1e-12, f"max abs err {worst:.3e}")


ALL_CHECKS = (
    check_closed_form,
    check_counterexample,
    check_target_equivariance,
    check_symmetrized_marginals,
    check_conditional_mean_equivariance,
    check_wrapped_normal,
    check_snis_enumeration,
)


def run_oracle_suite(seed: int = 0) -> list[tuple[str, bool, str]]:
    return [fn(seed) for fn in ALL_CHECKS]
