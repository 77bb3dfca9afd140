"""Command-line interface.

Subcommands: train, sample, eval, variance, equivariance, oracle.
Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 property-check failure.  The root seed can be overridden everywhere
with --seed or the ORBITGRAD_SEED environment variable.
"""

from __future__ import annotations

import contextlib
import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import config as cfgmod
from . import net, train
from .checks import run_oracle_suite
from .errors import (
    DegenerateWeights,
    InvalidConfig,
    InvalidInput,
    NumericalDivergence,
    OrbitGradError,
)
from .metrics import rmsd_to_nearest, wasserstein2_1d
from .sampling import ancestral_sample, flow_euler_sample
from .schedule import FlowCoefficients, make_vp_schedule
from .seeding import child_rng

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_PROPERTY = 4


@contextlib.contextmanager
def _guard():
    try:
        yield
    except (InvalidConfig, InvalidInput) as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    except (NumericalDivergence, DegenerateWeights) as e:
        click.echo(f"numerical failure: {e}", err=True)
        sys.exit(EXIT_NUMERICAL)
    except OrbitGradError as e:
        click.echo(f"property failure: {e}", err=True)
        sys.exit(EXIT_PROPERTY)


def _seed_option(f):
    return click.option(
        "--seed", type=int, default=None, envvar="ORBITGRAD_SEED",
        help="Root seed override (also read from ORBITGRAD_SEED).",
    )(f)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _load_runspec(config_path, seed, variant=None):
    user = cfgmod.load_toml(config_path)
    if variant is not None:
        user.setdefault("train", {})["variant"] = variant
    return cfgmod.build_runspec(user, seed_override=seed)


@click.group()
def main():
    """Symmetry-aware diffusion training and diagnostics."""


@main.command("train")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--variant", type=click.Choice(train.VARIANTS), default=None,
              help="Override [train].variant from the config.")
@_seed_option
def cmd_train(config_path, out_dir, variant, seed):
    """Train a denoiser and write checkpoint, loss trace and resolved config."""
    with _guard():
        spec = _load_runspec(config_path, seed, variant)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        result = train.train_loop(spec.train, spec.problem)
        extra = {
            "space": spec.dataset.space,
            "variant": spec.train.variant,
            "seed": spec.train.seed,
            "schedule": spec.raw["schedule"],
        }
        net.save_checkpoint(out / "checkpoint.npz", result.denoiser, extra)
        _write_csv(out / "loss.csv", ["iteration", "loss"], result.trace)
        cfgmod.dump_resolved(spec.raw, out / "config.resolved.toml")
        click.echo(f"final loss {result.trace[-1][1]:.6g}; artifacts in {out}")


@main.command("sample")
@click.option("--checkpoint", "ckpt_path", required=True, type=click.Path())
@click.option("--n", default=1000, show_default=True)
@click.option("--out", "out_path", default="samples.csv", show_default=True, type=click.Path())
@click.option("--method", type=click.Choice(["ancestral", "flow"]), default="ancestral",
              show_default=True)
@click.option("--steps", default=200, show_default=True, help="Euler steps (flow method).")
@click.option("--sigma-fm", default=1.0, show_default=True,
              help="Interpolant noise scale (flow method).")
@_seed_option
def cmd_sample(ckpt_path, n, out_path, method, steps, sigma_fm, seed):
    """Generate samples from a trained checkpoint."""
    with _guard():
        denoiser, extra = net.load_checkpoint(ckpt_path)
        seed = 0 if seed is None else seed
        rng = child_rng(seed, "sample")
        if method == "ancestral":
            sched_cfg = extra.get("schedule", {})
            if sched_cfg.get("kind", "vp") != "vp":
                raise InvalidConfig("ancestral sampling needs a vp schedule checkpoint")
            schedule = make_vp_schedule(int(sched_cfg.get("T", 1000)))
            samples = ancestral_sample(denoiser, schedule, n, rng)
        else:
            coeffs = FlowCoefficients(sigma_fm=sigma_fm)
            velocity = lambda x, t: net.forward(denoiser, x, t)
            samples = flow_euler_sample(velocity, coeffs, steps, n, denoiser.dim, rng)
        _write_csv(out_path, [f"x{i}" for i in range(samples.shape[1])], samples.tolist())
        click.echo(f"wrote {n} samples to {out_path}")


@main.command("eval")
@click.option("--samples", "samples_path", required=True, type=click.Path())
@click.option("--targets", default=None, help="Comma-separated 1D target atoms, e.g. '-1,1'.")
@click.option("--targets-file", default=None, type=click.Path(),
              help="CSV of target points (multi-dimensional data).")
@click.option("--out", "out_path", default=None, type=click.Path())
@_seed_option
def cmd_eval(samples_path, targets, targets_file, out_path, seed):
    """Report RMSD-to-nearest-target and (1D) Wasserstein-2 as JSON."""
    with _guard():
        samples = np.loadtxt(samples_path, delimiter=",", skiprows=1, ndmin=2)
        if targets is not None:
            tgt = np.array([float(v) for v in targets.split(",")])[:, None]
        elif targets_file is not None:
            tgt = np.loadtxt(targets_file, delimiter=",", skiprows=1, ndmin=2)
        else:
            raise InvalidConfig("need --targets or --targets-file")
        report = {
            "rmsd": rmsd_to_nearest(samples, tgt),
            "n_samples": int(samples.shape[0]),
            "seed": 0 if seed is None else int(seed),
        }
        if samples.shape[1] == 1 and tgt.shape[1] == 1:
            report["w2"] = wasserstein2_1d(samples[:, 0], tgt[:, 0])
        text = json.dumps(report, indent=2, sort_keys=True)
        if out_path is not None:
            Path(out_path).write_text(text + "\n")
        click.echo(text)


@main.command("variance")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--timesteps", default="100,500,900", show_default=True)
@click.option("--repeats", default=200, show_default=True)
@click.option("--variants", default="baseline,augment,orbdiff", show_default=True)
@_seed_option
def cmd_variance(config_path, out_path, timesteps, repeats, variants, seed):
    """Per-timestep gradient-variance sweep at frozen network parameters."""
    with _guard():
        spec = _load_runspec(config_path, seed)
        ts = [int(v) for v in timesteps.split(",")]
        var_list = [v.strip() for v in variants.split(",")]
        for v in var_list:
            if v not in train.VARIANTS:
                raise InvalidConfig(f"unknown variant {v!r}")
        root = spec.train.seed
        d = spec.dataset.points[0].dim
        denoiser = net.init_denoiser(spec.train.net, d, spec.train.hidden, child_rng(root, "init"))
        stats, draws = train.gradient_variance_sweep(
            denoiser, spec.problem, ts, repeats, var_list, spec.train,
            seed=root, return_draws=True,
        )
        rows = [
            (s.variant, s.timestep, s.repeats, s.mean_grad_norm,
             s.grad_norm_var, s.mean_component_var)
            for s in stats
        ]
        _write_csv(
            out_path,
            ["variant", "t", "K", "mean_grad_norm", "grad_norm_var", "mean_component_var"],
            rows,
        )
        if "orbdiff" in var_list and "baseline" in var_list:
            for t in ts:
                p = train.bootstrap_variance_pvalue(
                    draws[("orbdiff", t)], draws[("baseline", t)], seed=root, paired=True
                )
                click.echo(f"t={t}: p(Var[orbdiff] >= Var[baseline]) = {p:.4f}")
        click.echo(f"wrote variance table to {out_path}")


@main.command("equivariance")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--checkpoint", "ckpt_path", default=None, type=click.Path(),
              help="Probe a trained net; defaults to a fresh initialization.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--probes", default=100, show_default=True)
@_seed_option
def cmd_equivariance(config_path, ckpt_path, out_path, probes, seed):
    """Monte Carlo equivariance error of the denoiser per timestep."""
    with _guard():
        spec = _load_runspec(config_path, seed)
        root = spec.train.seed
        if ckpt_path is not None:
            denoiser, _ = net.load_checkpoint(ckpt_path)
        else:
            d = spec.dataset.points[0].dim
            denoiser = net.init_denoiser(
                spec.train.net, d, spec.train.hidden, child_rng(root, "init")
            )
        if spec.problem.sampler is None:
            raise InvalidConfig("equivariance probing needs a [group] sampler")
        errs = train.equivariance_error(
            denoiser, spec.dataset, spec.kernel, spec.problem.sampler,
            probes, child_rng(root, "equivariance"),
        )
        _write_csv(out_path, ["t", "error"], errs)
        worst = max(e for _, e in errs)
        click.echo(f"max equivariance error {worst:.3e}; table in {out_path}")


@main.command("oracle")
@_seed_option
def cmd_oracle(seed):
    """Run the built-in property checks; exit 4 if any fail."""
    with _guard():
        results = run_oracle_suite(0 if seed is None else seed)
        failed = False
        for name, ok, detail in results:
            click.echo(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
            failed = failed or not ok
        if failed:
            sys.exit(EXIT_PROPERTY)
        click.echo("all property checks passed")
