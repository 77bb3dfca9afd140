"""Symmetry groups: elements, actions on points, and sampling distributions.

Supported groups are sign reflection on R^d, SO(3) rotations acting
blockwise on R^(3m), global translations on the unit torus, and finite
permutations acting on coordinate blocks.  All actions are isometries of
their respective space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidAction, InvalidSampler, NotInSupport
from .wrapped import wrap_unit, wrapped_normal_logpdf

EUCLIDEAN = "euclidean"
TORUS = "torus"

REFLECTION = "reflection"
ROTATION = "rotation"
TORUS_TRANSLATION = "torus_translation"
PERMUTATION = "permutation"

UNIFORM = "uniform"
WRAPPED_NORMAL = "wrapped_normal"
ENUMERATE = "enumerate"


@dataclass(frozen=True)
class Point:
    """A flat real vector with a space tag (the x_0 / x_t carrier)."""

    values: np.ndarray
    space: str = EUCLIDEAN

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.space not in (EUCLIDEAN, TORUS):
            raise InvalidAction(f"unknown space {self.space!r}")

    @property
    def dim(self) -> int:
        return self.values.shape[-1]


def euclidean(values) -> Point:
    return Point(np.atleast_1d(np.asarray(values, dtype=float)), EUCLIDEAN)


def torus(values) -> Point:
    return Point(np.atleast_1d(np.asarray(values, dtype=float)), TORUS)


# ---------------------------------------------------------------------------
# Group elements


@dataclass(frozen=True)
class Reflection:
    sign: int
    kind: str = field(default=REFLECTION, init=False)

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise InvalidAction("reflection sign must be +1 or -1")


@dataclass(frozen=True)
class Rotation:
    quat: tuple  # (w, x, y, z), unit norm
    kind: str = field(default=ROTATION, init=False)

    def __post_init__(self):
        q = np.asarray(self.quat, dtype=float)
        if q.shape != (4,):
            raise InvalidAction("quaternion must have 4 components")
        if abs(np.linalg.norm(q) - 1.0) > 1e-12:
            raise InvalidAction("quaternion must have unit norm")
        object.__setattr__(self, "quat", tuple(q))


@dataclass(frozen=True)
class TorusTranslation:
    offset: tuple  # components in [0, 1)
    kind: str = field(default=TORUS_TRANSLATION, init=False)

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.offset, dtype=float))
        if np.any(m < 0.0) or np.any(m >= 1.0):
            raise InvalidAction("torus translation components must lie in [0, 1)")
        object.__setattr__(self, "offset", tuple(m))


@dataclass(frozen=True)
class Permutation:
    perm: tuple  # bijection on {0..n-1}
    kind: str = field(default=PERMUTATION, init=False)

    def __post_init__(self):
        p = np.asarray(self.perm, dtype=int)
        if sorted(p.tolist()) != list(range(p.size)):
            raise InvalidAction("permutation index map must be a bijection")
        object.__setattr__(self, "perm", tuple(int(i) for i in p))


GroupElement = Reflection | Rotation | TorusTranslation | Permutation


def _quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def _quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def rotation_angle(g: Rotation) -> float:
    """Rotation angle in [0, pi] of an SO(3) element."""
    q = np.asarray(g.quat)
    return 2.0 * math.atan2(np.linalg.norm(q[1:]), abs(q[0]))


def space_of(g: GroupElement) -> str:
    return TORUS if g.kind == TORUS_TRANSLATION else EUCLIDEAN


def act_values(g: GroupElement, x: np.ndarray) -> np.ndarray:
    """Apply g to coordinate arrays of shape (..., d)."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    if isinstance(g, Reflection):
        return g.sign * x
    if isinstance(g, Rotation):
        if d % 3 != 0:
            raise InvalidAction(f"rotation needs dimension divisible by 3, got {d}")
        rot = _quat_to_matrix(np.asarray(g.quat))
        blocks = x.reshape(*x.shape[:-1], d // 3, 3)
        return (blocks @ rot.T).reshape(x.shape)
    if isinstance(g, TorusTranslation):
        m = np.asarray(g.offset)
        if d % m.size != 0:
            raise InvalidAction(f"offset of length {m.size} cannot act on dimension {d}")
        return wrap_unit(x + np.tile(m, d // m.size))
    if isinstance(g, Permutation):
        n = len(g.perm)
        if d % n != 0:
            raise InvalidAction(f"permutation of length {n} cannot act on dimension {d}")
        blocks = x.reshape(*x.shape[:-1], n, d // n)
        return blocks[..., list(g.perm), :].reshape(x.shape)
    raise InvalidAction(f"unknown group element {g!r}")


def act(g: GroupElement, x: Point) -> Point:
    """The group action g o x; an isometry of x's space."""
    if x.space != space_of(g):
        raise InvalidAction(f"{g.kind} cannot act on a {x.space} point")
    return Point(act_values(g, x.values), x.space)


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    """Group law: act(compose(g, h), x) == act(g, act(h, x))."""
    if g.kind != h.kind:
        raise InvalidAction(f"cannot compose {g.kind} with {h.kind}")
    if isinstance(g, Reflection):
        return Reflection(g.sign * h.sign)
    if isinstance(g, Rotation):
        q = _quat_mul(np.asarray(g.quat), np.asarray(h.quat))
        return Rotation(tuple(q / np.linalg.norm(q)))
    if isinstance(g, TorusTranslation):
        return TorusTranslation(tuple(wrap_unit(np.asarray(g.offset) + np.asarray(h.offset))))
    if isinstance(g, Permutation):
        hp = np.asarray(h.perm)
        gp = np.asarray(g.perm)
        return Permutation(tuple(hp[gp]))
    raise InvalidAction(f"unknown group element {g!r}")


def invert(g: GroupElement) -> GroupElement:
    """Inverse element: compose(g, invert(g)) is the identity."""
    if isinstance(g, Reflection):
        return g
    if isinstance(g, Rotation):
        w, x, y, z = g.quat
        return Rotation((w, -x, -y, -z))
    if isinstance(g, TorusTranslation):
        return TorusTranslation(tuple(wrap_unit(-np.asarray(g.offset))))
    if isinstance(g, Permutation):
        return Permutation(tuple(np.argsort(np.asarray(g.perm))))
    raise InvalidAction(f"unknown group element {g!r}")


def identity_like(g: GroupElement) -> GroupElement:
    if isinstance(g, Reflection):
        return Reflection(1)
    if isinstance(g, Rotation):
        return Rotation((1.0, 0.0, 0.0, 0.0))
    if isinstance(g, TorusTranslation):
        return TorusTranslation((0.0,) * len(g.offset))
    if isinstance(g, Permutation):
        return Permutation(tuple(range(len(g.perm))))
    raise InvalidAction(f"unknown group element {g!r}")


def is_identity(g: GroupElement, tol: float = 1e-12) -> bool:
    return elements_close(g, identity_like(g), tol)


def elements_close(a: GroupElement, b: GroupElement, tol: float = 1e-12) -> bool:
    if a.kind != b.kind:
        return False
    if isinstance(a, Reflection):
        return a.sign == b.sign
    if isinstance(a, Rotation):
        qa, qb = np.asarray(a.quat), np.asarray(b.quat)
        # q and -q encode the same rotation
        return min(np.abs(qa - qb).max(), np.abs(qa + qb).max()) <= tol
    if isinstance(a, TorusTranslation):
        diff = np.abs(np.asarray(a.offset) - np.asarray(b.offset))
        return float(np.minimum(diff, 1.0 - diff).max()) <= tol
    if isinstance(a, Permutation):
        return a.perm == b.perm
    return False


# ---------------------------------------------------------------------------
# Sampling distributions nu_t over group elements


@dataclass(frozen=True)
class GroupSampler:
    """Distribution nu_t over group elements, with evaluable density.

    Modes:
      * ``uniform`` -- Haar measure (reflection: fair coin; rotation:
        uniform quaternion; torus translation: uniform offset).
      * ``wrapped_normal`` -- near-identity proposal for torus
        translations; offset = sigma_g(t) * eps mod 1, eps ~ N(0, I).
      * ``enumerate`` -- uniform over an explicit finite element list.
    """

    kind: str
    mode: str = UNIFORM
    include_identity: bool = True
    elements: tuple[GroupElement, ...] | None = None
    bandwidth: Callable[[float], float] | None = None  # sigma_g(t)
    offset_dim: int = 1

    def __post_init__(self):
        if self.mode == WRAPPED_NORMAL:
            if self.kind != TORUS_TRANSLATION:
                raise InvalidSampler("wrapped_normal sampling is only valid for torus translations")
            if self.bandwidth is None:
                raise InvalidSampler("wrapped_normal sampling needs a bandwidth function")
        if self.mode == ENUMERATE:
            elems = tuple(self.elements or ())
            if not elems:
                raise InvalidSampler("enumeration needs a non-empty element list")
            for i, a in enumerate(elems):
                if a.kind != self.kind:
                    raise InvalidSampler(f"element {a!r} is not of kind {self.kind}")
                for b in elems[i + 1 :]:
                    if elements_close(a, b):
                        raise InvalidSampler("enumerated elements must be distinct")
            if self.include_identity and not any(is_identity(e) for e in elems):
                raise InvalidSampler("include_identity set but identity not in element list")
            object.__setattr__(self, "elements", elems)
        if self.mode == UNIFORM and self.kind == PERMUTATION:
            raise InvalidSampler("permutation groups must be given by enumeration")

    def identity(self) -> GroupElement:
        if self.kind == REFLECTION:
            return Reflection(1)
        if self.kind == ROTATION:
            return Rotation((1.0, 0.0, 0.0, 0.0))
        if self.kind == TORUS_TRANSLATION:
            k = self.offset_dim if self.elements is None else len(self.elements[0].offset)
            return TorusTranslation((0.0,) * k)
        return identity_like(self.elements[0])


def sample(sampler: GroupSampler, t: float, rng: np.random.Generator) -> GroupElement:
    """Draw one group element from nu_t."""
    if sampler.mode == ENUMERATE:
        return sampler.elements[int(rng.integers(len(sampler.elements)))]
    if sampler.mode == WRAPPED_NORMAL:
        sig = float(sampler.bandwidth(t))
        eps = rng.standard_normal(sampler.offset_dim)
        return TorusTranslation(tuple(wrap_unit(sig * eps)))
    # uniform / Haar
    if sampler.kind == REFLECTION:
        return Reflection(1 if rng.random() < 0.5 else -1)
    if sampler.kind == ROTATION:
        # a normalized 4D Gaussian is uniform on S^3, hence Haar on SO(3)
        q = rng.standard_normal(4)
        return Rotation(tuple(q / np.linalg.norm(q)))
    if sampler.kind == TORUS_TRANSLATION:
        return TorusTranslation(tuple(rng.random(sampler.offset_dim)))
    raise InvalidSampler(f"cannot sample uniformly from kind {sampler.kind}")


def log_density(sampler: GroupSampler, g: GroupElement, t: float) -> float:
    """log nu_t(g).

    Continuous Haar densities return the constant 0.0; any constant
    cancels under self-normalization.  Finite supports return
    -log|support|.
    """
    if g.kind != sampler.kind:
        raise NotInSupport(f"{g.kind} element under a {sampler.kind} sampler")
    if sampler.mode == ENUMERATE:
        if not any(elements_close(g, e) for e in sampler.elements):
            raise NotInSupport(f"{g!r} not in the enumerated support")
        return -math.log(len(sampler.elements))
    if sampler.mode == WRAPPED_NORMAL:
        sig = float(sampler.bandwidth(t))
        return float(wrapped_normal_logpdf(np.asarray(g.offset), sig))
    if sampler.kind == REFLECTION:
        return -math.log(2.0)
    # continuous Haar (rotation) or uniform on [0,1)^k (torus): density 1
    return 0.0


def enumeration(elements: Sequence[GroupElement], include_identity: bool = True) -> GroupSampler:
    """Convenience constructor for a finite-enumeration sampler."""
    elems = tuple(elements)
    return GroupSampler(
        kind=elems[0].kind, mode=ENUMERATE, include_identity=include_identity, elements=elems
    )


def cyclic_torus_translations(order: int, offset_dim: int = 1) -> list[GroupElement]:
    """The cyclic subgroup {0, 1/order, ..., (order-1)/order} acting globally."""
    return [TorusTranslation(((i / order),) * offset_dim) for i in range(order)]


def reflection_group() -> list[GroupElement]:
    return [Reflection(1), Reflection(-1)]
