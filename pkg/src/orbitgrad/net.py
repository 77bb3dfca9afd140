"""Minimal differentiable denoisers with hand-written reverse mode.

Three flavors share one 3-layer tanh MLP core:
  * plain          -- MLP(concat(x, t))
  * equireflect    -- MLP(concat(x, t)) - MLP(concat(-x, t)); odd in x by
                      construction, hence reflection equivariant
  * equitorus      -- x + MLP(periodic features of x, t); equivariant to
                      global torus translations because the features only
                      see wrapped coordinate differences
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidShape
from .wrapped import wrap_centered

PLAIN = "plain"
EQUIREFLECT = "equireflect"
EQUITORUS = "equitorus"

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class MlpParams:
    """Per-layer weights (out, in) and biases for a fully connected net."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.weights + self.biases])

    def with_flat(self, theta: np.ndarray) -> "MlpParams":
        out_w, out_b, i = [], [], 0
        for w in self.weights:
            out_w.append(theta[i : i + w.size].reshape(w.shape))
            i += w.size
        for b in self.biases:
            out_b.append(theta[i : i + b.size].reshape(b.shape))
            i += b.size
        return MlpParams(out_w, out_b)


def init_mlp(in_dim: int, hidden: int, out_dim: int, rng: np.random.Generator) -> MlpParams:
    """3-layer MLP, weights ~ N(0, 1/fan_in), zero biases."""
    dims = [in_dim, hidden, hidden, out_dim]
    weights = [
        rng.standard_normal((dims[i + 1], dims[i])) / np.sqrt(dims[i]) for i in range(3)
    ]
    biases = [np.zeros(dims[i + 1]) for i in range(3)]
    return MlpParams(weights, biases)


def mlp_forward(params: MlpParams, x: np.ndarray):
    """Forward pass on (B, in); tanh on the two hidden layers."""
    a = x
    acts = [a]
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w.T + b
        a = z if i == last else np.tanh(z)
        acts.append(a)
    return a, acts


def mlp_backward(params: MlpParams, acts: list[np.ndarray], upstream: np.ndarray) -> MlpParams:
    """Gradients of sum_b <output_b, upstream_b> w.r.t. all parameters."""
    gw = [None] * len(params.weights)
    gb = [None] * len(params.biases)
    delta = upstream
    last = len(params.weights) - 1
    for i in range(last, -1, -1):
        a_in, a_out = acts[i], acts[i + 1]
        if i != last:
            delta = delta * (1.0 - a_out**2)  # tanh'
        gw[i] = delta.T @ a_in
        gb[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ params.weights[i]
    return MlpParams(gw, gb)


@dataclass
class Denoiser:
    """x0- (or velocity-) predictor phi(x_t, t_norm)."""

    kind: str
    params: MlpParams
    dim: int

    def __post_init__(self):
        if self.kind not in (PLAIN, EQUIREFLECT, EQUITORUS):
            raise InvalidShape(f"unknown denoiser kind {self.kind!r}")


def input_dim(kind: str, dim: int) -> int:
    if kind == EQUITORUS:
        return 2 * (dim - 1) + 1
    return dim + 1


def init_denoiser(kind: str, dim: int, hidden: int, rng: np.random.Generator) -> Denoiser:
    return Denoiser(kind, init_mlp(input_dim(kind, dim), hidden, dim, rng), dim)


def _torus_features(xt: np.ndarray, t_norm: np.ndarray) -> np.ndarray:
    diffs = wrap_centered(np.diff(xt, axis=-1))
    ang = 2.0 * np.pi * diffs
    return np.concatenate([np.sin(ang), np.cos(ang), t_norm[:, None]], axis=-1)


def _prep(denoiser: Denoiser, xt: np.ndarray, t_norm) -> tuple[np.ndarray, np.ndarray, bool]:
    xt = np.asarray(xt, dtype=float)
    single = xt.ndim == 1
    if single:
        xt = xt[None, :]
    if xt.shape[-1] != denoiser.dim:
        raise InvalidShape(f"expected dimension {denoiser.dim}, got {xt.shape[-1]}")
    t_norm = np.broadcast_to(np.asarray(t_norm, dtype=float), (xt.shape[0],))
    return xt, t_norm, single


def forward(denoiser: Denoiser, xt: np.ndarray, t_norm) -> np.ndarray:
    """phi(x_t, t_norm) for xt of shape (d,) or (B, d), t_norm in [0, 1]."""
    y, _ = forward_with_cache(denoiser, xt, t_norm)
    return y


def forward_with_cache(denoiser: Denoiser, xt: np.ndarray, t_norm):
    xt, t_norm, single = _prep(denoiser, xt, t_norm)
    if denoiser.kind == PLAIN:
        y, acts = mlp_forward(denoiser.params, np.concatenate([xt, t_norm[:, None]], axis=-1))
        cache = (acts,)
    elif denoiser.kind == EQUIREFLECT:
        y_pos, acts_pos = mlp_forward(
            denoiser.params, np.concatenate([xt, t_norm[:, None]], axis=-1)
        )
        y_neg, acts_neg = mlp_forward(
            denoiser.params, np.concatenate([-xt, t_norm[:, None]], axis=-1)
        )
        y = y_pos - y_neg
        cache = (acts_pos, acts_neg)
    else:  # equitorus: identity plus an MLP of translation-invariant features
        corr, acts = mlp_forward(denoiser.params, _torus_features(xt, t_norm))
        y = xt + corr
        cache = (acts,)
    return (y[0] if single else y), (cache, single)


def backward(denoiser: Denoiser, cache, upstream: np.ndarray) -> MlpParams:
    """Exact reverse-mode gradients of sum_b <phi_b, upstream_b>."""
    inner, single = cache
    upstream = np.asarray(upstream, dtype=float)
    if single:
        upstream = upstream[None, :]
    if upstream.shape[-1] != denoiser.dim:
        raise InvalidShape("upstream must have the output shape")
    if denoiser.kind == EQUIREFLECT:
        acts_pos, acts_neg = inner
        g_pos = mlp_backward(denoiser.params, acts_pos, upstream)
        g_neg = mlp_backward(denoiser.params, acts_neg, -upstream)
        return MlpParams(
            [a + b for a, b in zip(g_pos.weights, g_neg.weights)],
            [a + b for a, b in zip(g_pos.biases, g_neg.biases)],
        )
    (acts,) = inner
    return mlp_backward(denoiser.params, acts, upstream)


# ---------------------------------------------------------------------------
# Checkpoint I/O (versioned npz: shape-carrying arrays plus a JSON header)


def save_checkpoint(path, denoiser: Denoiser, extra: dict | None = None) -> None:
    meta = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "kind": denoiser.kind,
        "dim": denoiser.dim,
        "n_layers": len(denoiser.params.weights),
        "extra": extra or {},
    }
    arrays = {"meta": np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)}
    for i, (w, b) in enumerate(zip(denoiser.params.weights, denoiser.params.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    np.savez(path, **arrays)


def load_checkpoint(path) -> tuple[Denoiser, dict]:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        if meta["format_version"] != CHECKPOINT_FORMAT_VERSION:
            raise InvalidShape(f"unsupported checkpoint version {meta['format_version']}")
        n = meta["n_layers"]
        params = MlpParams(
            [data[f"w{i}"].copy() for i in range(n)], [data[f"b{i}"].copy() for i in range(n)]
        )
    return Denoiser(meta["kind"], params, meta["dim"]), meta["extra"]
