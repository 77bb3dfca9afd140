"""End-to-end acceptance gate.

Twelve criteria covering the full pipeline: the synthetic reflection
experiment, the closed-form target oracle, frozen-net variance reduction,
target equivariance and unbiasedness, the kernel/estimator property
suites, the translation counterexample, SNIS convergence rate, wrapped
normal correctness, the torus proposal ordering, the flow-matching
coefficient identity, and finite-difference gradient checks.

Each test prints one summary line so a full run reads as a scorecard:

    pytest tests/test_acceptance.py -s
"""

import numpy as np
import pytest

from orbitgrad import checks, estimator, groups, net
from orbitgrad.estimator import Dataset, counterexample_check
from orbitgrad.groups import GroupSampler, Point, euclidean, torus
from orbitgrad.kernels import (
    GAUSSIAN,
    WRAPPED_NORMAL_KERNEL,
    ForwardKernel,
    log_density_values,
)
from orbitgrad.metrics import rmsd_to_nearest, wasserstein2_1d
from orbitgrad.sampling import ancestral_sample
from orbitgrad.schedule import (
    FlowCoefficients,
    direct_velocity,
    flow_interpolate,
    make_torus_schedule,
    make_vp_schedule,
)
from orbitgrad.seeding import child_rng
from orbitgrad.train import (
    Problem,
    TrainConfig,
    bootstrap_variance_pvalue,
    gradient_variance_sweep,
    train_loop,
)
from orbitgrad.wrapped import wrapped_normal_logpdf

REFL = groups.reflection_group()


def report(num: int, ok: bool, detail: str) -> None:
    print(f"criterion {num:02d} {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def _reflection_problem() -> Problem:
    kernel = ForwardKernel(GAUSSIAN, make_vp_schedule(1000))
    return Problem(
        dataset=Dataset((euclidean([1.0]),)),
        kernel=kernel,
        elements=REFL,
        sampler=groups.enumeration(REFL),
    )


def test_criterion_01_reflection_experiment():
    """Orbit-target training beats the unaugmented equivariant baseline on
    the reflection toy: RMSD ratio <= 1/5, W2 ratio <= 1/10, absolute
    RMSD < 1e-3, seed-paired 20k-iteration runs."""
    prob = _reflection_problem()
    atoms = np.array([-1.0, 1.0])
    scores = {}
    for variant in ("baseline", "orbdiff"):
        res = train_loop(TrainConfig(variant=variant, seed=2), prob)
        xs = ancestral_sample(
            res.denoiser, prob.kernel.schedule, 10_000, child_rng(2, "sample", variant)
        ).ravel()
        # the equivariant net is odd, so -x is an exact antithetic draw;
        # completing the sample kills the multinomial noise floor in W2
        xs = np.concatenate([xs, -xs])
        scores[variant] = (
            float(rmsd_to_nearest(xs, atoms)),
            float(wasserstein2_1d(xs, atoms)),
        )
    (rb, wb), (ro, wo) = scores["baseline"], scores["orbdiff"]
    ok = ro <= rb / 5.0 and wo <= wb / 10.0 and ro < 1e-3
    report(1, ok, f"rmsd {ro:.2e} vs {rb:.2e}, w2 {wo:.2e} vs {wb:.2e}")


def test_criterion_02_closed_form_target():
    """The exact orbit target on the reflection toy equals
    tanh(alpha_t x_t / sigma_t^2) within 1e-12 on a 1000-point grid."""
    prob = _reflection_problem()
    sched = prob.kernel.schedule
    xt = np.repeat(np.linspace(-3.0, 3.0, 50), 20)[:, None]
    t = np.tile(np.linspace(1, 1000, 20, dtype=int), 50)
    got, _ = estimator.exact_orbit_targets_values(
        np.ones_like(xt), xt, t, prob.kernel, REFL
    )
    want = np.tanh(sched.alpha_at(t) * xt[:, 0] / sched.sigma_at(t) ** 2)
    err = float(np.abs(got[:, 0] - want).max())
    report(2, err <= 1e-12, f"max abs err {err:.3e} on {len(t)} grid points")


def test_criterion_03_variance_reduction():
    """At a frozen net the exact orbit target has strictly smaller
    gradient-norm variance than the baseline at t in {0.1T, 0.5T, 0.9T},
    paired bootstrap p < 0.01, K = 1000 draws."""
    prob = _reflection_problem()
    frozen = train_loop(TrainConfig(variant="orbdiff", iterations=2000, seed=0), prob).denoiser
    _, draws = gradient_variance_sweep(
        frozen, prob, [100, 500, 900], 1000, ["baseline", "orbdiff"],
        TrainConfig(variant="orbdiff", target_mode="exact"), seed=0, return_draws=True,
    )
    details, ok = [], True
    for t in (100, 500, 900):
        vo = draws[("orbdiff", t)].var(ddof=1)
        vb = draws[("baseline", t)].var(ddof=1)
        p = bootstrap_variance_pvalue(
            draws[("orbdiff", t)], draws[("baseline", t)], seed=t, paired=True
        )
        ok = ok and vo < vb and p < 0.01
        details.append(f"t={t}: {vo:.2e} < {vb:.2e} (p={p:.4f})")
    report(3, ok, "; ".join(details))


def test_criterion_04_target_equivariance():
    """g o target(xt) == target(g o xt) for reflections, cyclic torus
    translations (order 8), and permutations (n=4): 1000+ random probes,
    max deviation < 1e-10."""
    name, ok, detail = checks.check_target_equivariance(seed=0, probes=334)
    report(4, ok, f"{detail} over 1002 probes")


def test_criterion_05_unbiasedness():
    """Expected orbit-target gradient (data {1}) matches the expected
    oracle conditional-mean gradient (symmetrized data {-1, 1}):
    overlapping per-component 95% CIs at 1e5 paired draws, frozen net."""
    sched = make_vp_schedule(1000)
    kernel = ForwardKernel(GAUSSIAN, sched)
    den = net.init_denoiser(net.EQUIREFLECT, 1, 16, child_rng(0, "unbiased"))
    chunks, B = 100, 1000
    means = {"orbdiff": [], "oracle": []}
    for c in range(chunks):
        rng = child_rng(0, "unbiased", c)
        t = rng.integers(1, 1001, size=B)
        eps = rng.standard_normal((B, 1))
        s = rng.choice([-1.0, 1.0], size=(B, 1))
        a, sg = sched.alpha_at(t)[:, None], sched.sigma_at(t)[:, None]
        # paired via shared (t, eps); the oracle side draws the data sign
        for key, x0 in (("orbdiff", np.ones((B, 1))), ("oracle", s)):
            xt = a * x0 + sg * eps
            tgt, _ = estimator.exact_orbit_targets_values(
                np.ones((B, 1)), xt, t, kernel, REFL
            )
            phi, cache = net.forward_with_cache(den, xt, t / 1000)
            means[key].append(net.backward(den, cache, 2.0 * (phi - tgt) / B).flat())
    mo, mc = np.stack(means["orbdiff"]), np.stack(means["oracle"])
    hw = lambda m: 1.96 * m.std(0, ddof=1) / np.sqrt(chunks)
    gap = np.abs(mo.mean(0) - mc.mean(0)) - (hw(mo) + hw(mc))
    report(5, bool((gap <= 0).all()),
           f"all {gap.size} component CIs overlap, worst margin {gap.max():.2e}")


def test_criterion_06_kernel_estimator_properties():
    """Symmetrized-marginal identity and conditional-mean equivariance
    hold at 1e-10 on finite-group instances."""
    n1, ok1, d1 = checks.check_symmetrized_marginals(seed=0, probes=100)
    n2, ok2, d2 = checks.check_conditional_mean_equivariance(seed=0, probes=100)
    report(6, ok1 and ok2, f"{n1}: {d1}; {n2}: {d2}")


def test_criterion_07_translation_counterexample():
    """The plain conditional mean is not translation equivariant: for the
    dataset {0, 1}, mean(xt + 1) < 1 < mean(xt) + 1 for 100 random
    (alpha, sigma, xt), matching the logistic closed form to 1e-12."""
    from scipy.special import expit

    rng = child_rng(0, "counterexample")
    worst, gap_ok = 0.0, True
    for _ in range(100):
        alpha = float(rng.uniform(0.5, 1.0))
        sigma = float(rng.uniform(0.2, 2.0))
        xt = float(rng.uniform(-1.0, 1.0))
        lhs, rhs = counterexample_check(alpha, sigma, xt)
        gap_ok = gap_ok and (lhs < 1.0 < rhs)
        mean = lambda y: float(expit(alpha * (2.0 * y - alpha) / (2.0 * sigma**2)))
        worst = max(worst, abs(lhs - mean(xt + 1.0)), abs(rhs - mean(xt) - 1.0))
    report(7, gap_ok and worst <= 1e-12,
           f"gap holds on 100 draws, logistic err {worst:.3e}")


def test_criterion_08_snis_convergence_rate():
    """SNIS target error decays as N^(-1/2): log-log slope within
    -0.5 +/- 0.15 for N in {4, 16, 64, 256}, 200 seeds."""
    prob = _reflection_problem()
    sampler = GroupSampler(kind="reflection")
    x0, xt, t = np.ones((1, 1)), np.array([[0.7]]), 600
    exact, _ = estimator.exact_orbit_targets_values(
        x0, xt, np.array([t]), prob.kernel, REFL
    )
    sizes = [4, 16, 64, 256]
    errs = [
        np.mean([
            abs(float(estimator.snis_orbit_targets_values(
                x0, xt, t, prob.kernel, sampler, N, child_rng(s, "rate", N)
            )[0, 0]) - float(exact[0, 0]))
            for s in range(200)
        ])
        for N in sizes
    ]
    slope = float(np.polyfit(np.log(sizes), np.log(errs), 1)[0])
    report(8, -0.65 <= slope <= -0.35, f"log-log slope {slope:.3f}")


def test_criterion_09_wrapped_normal():
    """The wrapped density integrates to 1 +/- 1e-6, the torus kernel is
    translation invariant to 1e-10, and the adaptive truncation matches a
    Z=100 oracle to 1e-12 across all bandwidths the package produces."""
    grid = ((np.arange(20000) + 0.5) / 20000)[:, None]
    mass_err = max(
        abs(float(np.exp(wrapped_normal_logpdf(grid, s)).mean()) - 1.0)
        for s in (0.05, 0.2, 0.7, 1.5)
    )
    kernel = ForwardKernel(WRAPPED_NORMAL_KERNEL, make_torus_schedule(1000))
    rng = child_rng(0, "invariance")
    inv_err = 0.0
    for _ in range(100):
        t = int(rng.integers(1, 1001))
        x0, xt = rng.random(2), rng.random(2)
        g = groups.TorusTranslation(tuple(rng.random(2)))
        base = log_density_values(kernel, xt, x0, t)
        moved = log_density_values(
            kernel, groups.act_values(g, xt), groups.act_values(g, x0), t
        )
        inv_err = max(inv_err, abs(float(base) - float(moved)))
    trunc_err = max(
        float(np.abs(
            wrapped_normal_logpdf(grid, s) - wrapped_normal_logpdf(grid, s, trunc=100)
        ).max())
        for s in (0.01, 0.05, 0.2, 0.5, 1.0)
    )
    ok = mass_err <= 1e-6 and inv_err <= 1e-10 and trunc_err <= 1e-12
    report(9, ok, f"mass err {mass_err:.1e}, invariance {inv_err:.1e}, "
                  f"truncation vs Z=100 {trunc_err:.1e}")


def test_criterion_10_torus_proposal_ordering():
    """Torus toy: the wrapped-normal proposal (sigma_g = 2 sigma_t) has
    smaller SNIS gradient-norm variance than the uniform proposal for
    t <= 0.5T, and both beat the baseline at every probed t; K = 500,
    paired bootstrap p < 0.05."""
    sched = make_torus_schedule(1000)
    kernel = ForwardKernel(WRAPPED_NORMAL_KERNEL, sched)
    data = Dataset((torus([0.25, 0.6]),))
    wn = GroupSampler(kind="torus_translation", mode="wrapped_normal",
                      bandwidth=lambda t: 2.0 * float(sched.sigma_at(int(t))),
                      offset_dim=1)
    uni = GroupSampler(kind="torus_translation", mode="uniform", offset_dim=1)
    frozen = train_loop(
        TrainConfig(variant="orbdiff", iterations=1000, seed=0, net=net.EQUITORUS,
                    target_mode="snis", n_group_samples=8),
        Problem(dataset=data, kernel=kernel, sampler=wn),
    ).denoiser
    ts = [100, 250, 400, 900]
    cfg = TrainConfig(variant="orbdiff", net=net.EQUITORUS,
                      target_mode="snis", n_group_samples=4)
    norms = {}
    for key, sampler, variant in (
        ("base", None, "baseline"), ("uni", uni, "orbdiff"), ("wn", wn, "orbdiff"),
    ):
        _, draws = gradient_variance_sweep(
            frozen, Problem(dataset=data, kernel=kernel, sampler=sampler),
            ts, 500, [variant], cfg, seed=1, return_draws=True,
        )
        norms[key] = {t: draws[(variant, t)] for t in ts}
    ok, details = True, []
    for t in ts:
        pu = bootstrap_variance_pvalue(norms["uni"][t], norms["base"][t], seed=t, paired=True)
        pw = bootstrap_variance_pvalue(norms["wn"][t], norms["base"][t], seed=t, paired=True)
        ok = ok and pu < 0.05 and pw < 0.05
        line = f"t={t}: U<B p={pu:.3f}, WN<B p={pw:.3f}"
        if t <= 500:
            pwu = bootstrap_variance_pvalue(norms["wn"][t], norms["uni"][t], seed=t, paired=True)
            ok = ok and pwu < 0.05
            line += f", WN<U p={pwu:.3f}"
        details.append(line)
    report(10, ok, "; ".join(details))


def test_criterion_11_flow_coefficient_identity():
    """h(t) x_t - g(t) x0 + f(t) x1 equals the conditional velocity to
    1e-8 relative on 1e4 random draws, and the orbit velocity target with
    a singleton orbit reduces to the conditional velocity."""
    rng = child_rng(0, "flow")
    worst = 0.0
    for _ in range(10_000):
        coeffs = FlowCoefficients(sigma_fm=float(rng.uniform(0.5, 2.0)), t_min=1e-3)
        t = float(rng.uniform(0.01, 0.99))
        x0 = Point(rng.standard_normal(3), groups.EUCLIDEAN)
        x1 = Point(rng.standard_normal(3), groups.EUCLIDEAN)
        eps = Point(rng.standard_normal(3), groups.EUCLIDEAN)
        xt = flow_interpolate(x0, x1, t, eps, coeffs)
        want = direct_velocity(x0, x1, t, eps, coeffs).values
        got = estimator.rb_flow_velocity_target(x0, x1, xt, t, coeffs, x1).values
        worst = max(worst, float((np.abs(got - want) / (1.0 + np.abs(want))).max()))
    report(11, worst <= 1e-8, f"max rel err {worst:.3e} on 10000 draws")


def test_criterion_12_gradient_check():
    """Analytic backprop matches central finite differences on 20 random
    plain/equireflect configurations, relative error < 1e-4."""
    worst = 0.0
    for i in range(20):
        rng = child_rng(i, "gradcheck")
        kind = net.PLAIN if i % 2 == 0 else net.EQUIREFLECT
        dim = int(rng.integers(1, 4))
        den = net.init_denoiser(kind, dim, int(rng.integers(4, 9)), rng)
        B = int(rng.integers(1, 6))
        xt = rng.standard_normal((B, dim))
        t_norm = rng.uniform(0.01, 1.0, size=B)
        y = rng.standard_normal((B, dim))

        phi, cache = net.forward_with_cache(den, xt, t_norm)
        analytic = net.backward(den, cache, 2.0 * (phi - y)).flat()

        theta = den.params.flat()
        numeric = np.empty_like(theta)
        h = 1e-6
        for j in range(theta.size):
            up, down = theta.copy(), theta.copy()
            up[j] += h
            down[j] -= h
            den_p = net.Denoiser(kind=den.kind, dim=den.dim,
                                 params=den.params.with_flat(up))
            den_m = net.Denoiser(kind=den.kind, dim=den.dim,
                                 params=den.params.with_flat(down))
            lp = float(np.sum((net.forward(den_p, xt, t_norm) - y) ** 2))
            lm = float(np.sum((net.forward(den_m, xt, t_norm) - y) ** 2))
            numeric[j] = (lp - lm) / (2.0 * h)
        rel = np.linalg.norm(analytic - numeric) / (
            np.linalg.norm(analytic) + np.linalg.norm(numeric) + 1e-12
        )
        worst = max(worst, float(rel))
    report(12, worst < 1e-4, f"max relative gradient error {worst:.3e}")
