"""Sample-quality metrics: RMSD to the nearest target and 1D Wasserstein-2."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInput


def rmsd_to_nearest(samples, targets) -> float:
    """sqrt(mean over samples of the squared distance to the closest target)."""
    s = np.asarray(samples, dtype=float)
    t = np.asarray(targets, dtype=float)
    if s.size == 0 or t.size == 0:
        raise InvalidInput("samples and targets must be non-empty")
    if s.ndim == 1:
        s = s[:, None]
    if t.ndim == 1:
        t = t[:, None]
    sq = np.sum((s[:, None, :] - t[None, :, :]) ** 2, axis=-1)
    return float(np.sqrt(np.mean(sq.min(axis=1))))


def wasserstein2_1d(samples_a, samples_b) -> float:
    """W2 between equal-size 1D multisets via the sorted-quantile coupling.

    When the second set is a finite atom set, it is tiled up to |a|.
    """
    a = np.asarray(samples_a, dtype=float).ravel()
    b = np.asarray(samples_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise InvalidInput("inputs must be non-empty")
    if a.size != b.size:
        if a.size % b.size == 0:
            b = np.tile(b, a.size // b.size)
        else:
            raise InvalidInput(f"cannot tile {b.size} atoms to {a.size} samples")
    return float(np.sqrt(np.mean((np.sort(a) - np.sort(b)) ** 2)))
