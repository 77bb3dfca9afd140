"""Experiment configuration: TOML loading, object construction, snapshots.

The config file has four sections: [dataset], [schedule], [group] and
[train].  Every run directory receives a resolved snapshot with all
defaults filled in, so runs are replayable byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import groups
from .errors import InvalidConfig
from .estimator import Dataset
from .groups import GroupSampler, Point
from .kernels import GAUSSIAN, WRAPPED_NORMAL_KERNEL, ForwardKernel
from .schedule import NoiseSchedule, make_torus_schedule, make_vp_schedule
from .train import Problem, TrainConfig

DEFAULTS = {
    "dataset": {"space": "euclidean", "points": [[1.0]]},
    "schedule": {"kind": "vp", "T": 1000, "sigma_min": 0.01, "sigma_max": 0.5},
    "group": {
        "kind": "reflection",
        "mode": "enumerate",
        "include_identity": True,
        "n_samples": 2,
        "bandwidth_scale": 2.0,
        "order": 8,
        "offset_dim": 1,
        "permutations": [],
    },
    "train": {
        "variant": "orbdiff",
        "iterations": 20000,
        "batch_size": 64,
        "lr": 1e-3,
        "seed": 0,
        "hidden": 64,
        "net": "equireflect",
        "target_mode": "exact",
    },
}


@dataclass
class RunSpec:
    raw: dict
    dataset: Dataset
    schedule: NoiseSchedule
    kernel: ForwardKernel
    problem: Problem
    train: TrainConfig


def _merged(user: dict) -> dict:
    out = {}
    for section, defaults in DEFAULTS.items():
        sub = dict(defaults)
        extra = user.get(section, {})
        unknown = set(extra) - set(defaults)
        if unknown:
            raise InvalidConfig(f"unknown keys in [{section}]: {sorted(unknown)}")
        sub.update(extra)
        out[section] = sub
    unknown_sections = set(user) - set(DEFAULTS)
    if unknown_sections:
        raise InvalidConfig(f"unknown sections: {sorted(unknown_sections)}")
    return out


def load_toml(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise InvalidConfig(f"config file not found: {p}")
    try:
        return tomllib.loads(p.read_text())
    except tomllib.TOMLDecodeError as e:
        raise InvalidConfig(f"malformed config: {e}") from e


def build_group(cfg: dict, schedule: NoiseSchedule):
    """Returns (elements or None, sampler or None) from the [group] section."""
    kind = cfg["kind"]
    elements = None
    if kind == "reflection":
        elements = groups.reflection_group()
    elif kind == "torus_translation":
        elements = groups.cyclic_torus_translations(int(cfg["order"]), int(cfg["offset_dim"]))
    elif kind == "permutation":
        perms = cfg["permutations"]
        if perms:
            elements = [groups.Permutation(tuple(p)) for p in perms]
        else:
            raise InvalidConfig("permutation groups need an explicit [group].permutations list")
    elif kind != "rotation":
        raise InvalidConfig(f"unknown group kind {kind!r}")

    mode = cfg["mode"]
    if mode == "enumerate":
        if elements is None:
            raise InvalidConfig(f"{kind} group cannot be enumerated without elements")
        sampler = groups.enumeration(elements, include_identity=bool(cfg["include_identity"]))
    elif mode == "uniform":
        sampler = GroupSampler(
            kind=kind,
            mode=groups.UNIFORM,
            include_identity=bool(cfg["include_identity"]),
            offset_dim=int(cfg["offset_dim"]),
        )
    elif mode == "wrapped_normal":
        scale = float(cfg["bandwidth_scale"])
        sampler = GroupSampler(
            kind=kind,
            mode=groups.WRAPPED_NORMAL,
            include_identity=bool(cfg["include_identity"]),
            bandwidth=lambda t: scale * float(schedule.sigma_at(int(t))),
            offset_dim=int(cfg["offset_dim"]),
        )
    else:
        raise InvalidConfig(f"unknown group sampler mode {mode!r}")
    return elements, sampler


def build_runspec(user: dict, seed_override: int | None = None) -> RunSpec:
    cfg = _merged(user)

    ds = cfg["dataset"]
    space = ds["space"]
    if space not in (groups.EUCLIDEAN, groups.TORUS):
        raise InvalidConfig(f"unknown space {space!r}")
    try:
        points = tuple(Point(np.asarray(p, dtype=float), space) for p in ds["points"])
        dataset = Dataset(points)
    except Exception as e:
        raise InvalidConfig(f"bad dataset points: {e}") from e

    sc = cfg["schedule"]
    if sc["kind"] == "vp":
        schedule = make_vp_schedule(int(sc["T"]))
    elif sc["kind"] == "torus":
        schedule = make_torus_schedule(int(sc["T"]), float(sc["sigma_min"]), float(sc["sigma_max"]))
    else:
        raise InvalidConfig(f"unknown schedule kind {sc['kind']!r}")

    kernel = ForwardKernel(
        GAUSSIAN if space == groups.EUCLIDEAN else WRAPPED_NORMAL_KERNEL, schedule
    )
    elements, sampler = build_group(cfg["group"], schedule)

    tr = cfg["train"]
    if seed_override is not None:
        tr = dict(tr)
        tr["seed"] = int(seed_override)
        cfg["train"]["seed"] = int(seed_override)
    train_cfg = TrainConfig(
        variant=tr["variant"],
        iterations=int(tr["iterations"]),
        batch_size=int(tr["batch_size"]),
        lr=float(tr["lr"]),
        n_group_samples=int(cfg["group"]["n_samples"]),
        seed=int(tr["seed"]),
        net=tr["net"],
        hidden=int(tr["hidden"]),
        target_mode=tr["target_mode"],
    )
    problem = Problem(dataset=dataset, kernel=kernel, elements=elements, sampler=sampler)
    return RunSpec(
        raw=cfg, dataset=dataset, schedule=schedule, kernel=kernel,
        problem=problem, train=train_cfg,
    )


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise InvalidConfig(f"cannot serialize {v!r}")


def dump_resolved(cfg: dict, path) -> None:
    """Write the fully resolved config as TOML."""
    lines = []
    for section, sub in cfg.items():
        lines.append(f"[{section}]")
        for k, v in sub.items():
            lines.append(f"{k} = {_toml_value(v)}")
        lines.append("")
    Path(path).write_text("\n".join(lines))
