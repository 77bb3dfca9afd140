"""Scikit-learn style front end.

``OrbitDiffusion`` wraps dataset construction, schedule and group wiring,
and the training loop behind the familiar ``fit`` / ``sample`` /
``get_params`` surface.  The functional modules stay the source of truth;
this class only holds configuration and fitted state.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import groups, net
from .errors import InvalidConfig
from .estimator import Dataset
from .groups import Point
from .kernels import GAUSSIAN, WRAPPED_NORMAL_KERNEL, ForwardKernel
from .metrics import rmsd_to_nearest
from .sampling import ancestral_sample
from .schedule import make_torus_schedule, make_vp_schedule
from .seeding import child_rng
from .train import Problem, TrainConfig, train_loop


class OrbitDiffusion(BaseEstimator):
    """Denoising diffusion model with orbit-weighted regression targets.

    Parameters mirror the TOML config schema.  ``net="auto"`` picks the
    architecture matching the group: odd networks for reflections,
    translation-equivariant ones on the torus, plain otherwise.
    """

    def __init__(
        self,
        variant: str = "orbdiff",
        group: str = "reflection",
        space: str = "euclidean",
        T: int = 1000,
        iterations: int = 2000,
        batch_size: int = 64,
        lr: float = 1e-3,
        hidden: int = 64,
        net: str = "auto",
        n_group_samples: int = 2,
        target_mode: str = "exact",
        torus_order: int = 8,
        sigma_min: float = 0.01,
        sigma_max: float = 0.5,
        seed: int = 0,
    ):
        self.variant = variant
        self.group = group
        self.space = space
        self.T = T
        self.iterations = iterations
        self.batch_size = batch_size
        self.lr = lr
        self.hidden = hidden
        self.net = net
        self.n_group_samples = n_group_samples
        self.target_mode = target_mode
        self.torus_order = torus_order
        self.sigma_min = sigma_min
        self.sigma_max = sigma_max
        self.seed = seed

    def _net_kind(self) -> str:
        if self.net != "auto":
            return self.net
        if self.group == "reflection" and self.space == groups.EUCLIDEAN:
            return net.EQUIREFLECT
        if self.space == groups.TORUS:
            return net.EQUITORUS
        return net.PLAIN

    def _elements(self):
        if self.group == "reflection":
            return groups.reflection_group()
        if self.group == "torus_translation":
            return groups.cyclic_torus_translations(self.torus_order)
        if self.group == "none":
            return None
        raise InvalidConfig(f"unsupported group {self.group!r} for the estimator front end")

    def fit(self, X, y=None):
        """Train on data points X of shape (n_points, d)."""
        X = check_array(X, ensure_2d=True, dtype=float)
        if self.space not in (groups.EUCLIDEAN, groups.TORUS):
            raise InvalidConfig(f"unknown space {self.space!r}")
        dataset = Dataset(tuple(Point(row, self.space) for row in X))

        if self.space == groups.EUCLIDEAN:
            schedule = make_vp_schedule(self.T)
            kernel = ForwardKernel(GAUSSIAN, schedule)
        else:
            schedule = make_torus_schedule(self.T, self.sigma_min, self.sigma_max)
            kernel = ForwardKernel(WRAPPED_NORMAL_KERNEL, schedule)

        elements = self._elements()
        sampler = groups.enumeration(elements) if elements is not None else None
        if elements is None and self.variant != "baseline":
            raise InvalidConfig("group 'none' only supports the baseline variant")

        cfg = TrainConfig(
            variant=self.variant,
            iterations=self.iterations,
            batch_size=self.batch_size,
            lr=self.lr,
            n_group_samples=self.n_group_samples,
            seed=self.seed,
            net=self._net_kind(),
            hidden=self.hidden,
            target_mode=self.target_mode,
        )
        problem = Problem(dataset=dataset, kernel=kernel, elements=elements, sampler=sampler)
        result = train_loop(cfg, problem)
        self.denoiser_ = result.denoiser
        self.trace_ = result.trace
        self.schedule_ = schedule
        self.kernel_ = kernel
        self.n_features_in_ = X.shape[1]
        return self

    def sample(self, n: int, seed: int | None = None) -> np.ndarray:
        """Draw n points from the learned reverse chain."""
        check_is_fitted(self, "denoiser_")
        if self.space != groups.EUCLIDEAN:
            raise InvalidConfig("ancestral sampling is only wired for Euclidean schedules")
        rng = child_rng(self.seed if seed is None else seed, "sample")
        return ancestral_sample(self.denoiser_, self.schedule_, n, rng)

    def score(self, X, y=None) -> float:
        """Negative RMSD from generated samples to the points in X."""
        check_is_fitted(self, "denoiser_")
        X = check_array(X, ensure_2d=True, dtype=float)
        samples = self.sample(max(256, len(X)))
        return -rmsd_to_nearest(samples, X)
