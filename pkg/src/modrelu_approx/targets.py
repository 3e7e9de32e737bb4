"""Target functions on the unit cube of ``C^d`` and a small built-in catalog.

A complex function ``g`` on ``{z : Re z_k, Im z_k in [0, 1]}`` is handled as
two real functions of ``x = (Re z_1, ..., Re z_d, Im z_1, ..., Im z_d)``.
Each real component is a :class:`TargetFunction` carrying its partial
derivatives, which the Taylor compiler needs up to order ``n - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "CATALOG",
    "TargetFunction",
    "UnsupportedSmoothnessError",
    "catalog_target",
    "finite_difference",
    "points_to_cube",
]


class UnsupportedSmoothnessError(ValueError):
    """A derivative of the requested order is not available."""


def points_to_cube(z):
    """Complex points of shape (batch, d) to real points of shape (batch, 2d)."""
    z = np.asarray(z, dtype=np.complex128)
    if z.ndim == 1:
        z = z[:, None]
    return np.concatenate([z.real, z.imag], axis=1)


def finite_difference(fn, alpha, x, order_hint=None):
    """Central finite-difference estimate of ``D^alpha fn`` at rows of ``x``.

    The step is ``eps**(1/(k+2))`` for total order ``k``; accuracy degrades
    quickly with the order, so analytic derivatives are preferred.
    """
    alpha = tuple(int(a) for a in alpha)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    k = sum(alpha)
    if k == 0:
        return fn(x)
    step = np.finfo(float).eps ** (1.0 / (k + 2))
    axis = next(i for i, a in enumerate(alpha) if a > 0)
    lower = list(alpha)
    lower[axis] -= 1
    shift = np.zeros(x.shape[1])
    shift[axis] = step
    return (finite_difference(fn, lower, x + shift)
            - finite_difference(fn, lower, x - shift)) / (2 * step)


@dataclass
class TargetFunction:
    """Real-valued function on ``[0, 1]**(2d)`` with derivative access.

    ``deriv(alpha, x)`` returns ``D^alpha f`` at the rows of ``x``; when it is
    missing, central finite differences are used instead.  ``sobolev_bound``
    is asserted by the caller and never checked.
    """

    d: int
    n: int
    eval: Callable
    deriv: Callable | None = None
    sobolev_bound: float = 1.0
    name: str = "custom"
    max_order: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise ValueError(f"need d >= 1 and n >= 1, got d={self.d}, n={self.n}")

    @property
    def dim(self):
        return 2 * self.d

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.asarray(self.eval(x), dtype=float)

    def derivative(self, alpha, x):
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.dim or min(alpha) < 0:
            raise ValueError(f"multi-index {alpha} does not fit dimension {self.dim}")
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if sum(alpha) == 0:
            return self(x)
        if self.max_order is not None and sum(alpha) > self.max_order:
            raise UnsupportedSmoothnessError(
                f"{self.name}: derivatives available up to order {self.max_order}, "
                f"requested {sum(alpha)}")
        if self.deriv is None:
            return finite_difference(self, alpha, x)
        return np.asarray(self.deriv(alpha, x), dtype=float)


# --------------------------------------------------------------------------
# catalog

def _constant(value, d, n):
    def ev(x):
        return np.full(x.shape[0], value)

    def dv(alpha, x):
        return np.zeros(x.shape[0])

    return TargetFunction(d, n, ev, dv, abs(value), f"constant({value})")


def _affine(weights, offset, d, n):
    w = np.asarray(weights, dtype=float)

    def ev(x):
        return offset + x @ w

    def dv(alpha, x):
        if sum(alpha) == 1:
            return np.full(x.shape[0], w[alpha.index(1)])
        return np.zeros(x.shape[0])

    bound = max(abs(offset) + np.abs(w).sum(), float(np.abs(w).max()))
    return TargetFunction(d, n, ev, dv, bound, "affine")


def _quadratic(Q, d, n):
    """``x^T Q x`` with symmetric ``Q``."""
    Q = np.asarray(Q, dtype=float)
    Q = (Q + Q.T) / 2

    def ev(x):
        return np.einsum("bi,ij,bj->b", x, Q, x)

    def dv(alpha, x):
        k = sum(alpha)
        if k == 1:
            i = alpha.index(1)
            return 2 * x @ Q[i]
        if k == 2:
            idx = [i for i, a in enumerate(alpha) for _ in range(a)]
            return np.full(x.shape[0], 2 * Q[idx[0], idx[1]])
        return np.zeros(x.shape[0])

    bound = max(np.abs(Q).sum(), 2 * np.abs(Q).sum(axis=1).max(), 2 * np.abs(Q).max())
    return TargetFunction(d, n, ev, dv, float(bound), "quadratic")


def _sine(direction, phase, scale, d, n):
    """``scale * sin(direction . x + phase)``; derivatives stay in closed form."""
    v = np.asarray(direction, dtype=float)

    def ev(x):
        return scale * np.sin(x @ v + phase)

    def dv(alpha, x):
        k = sum(alpha)
        factor = np.prod([v[i] ** a for i, a in enumerate(alpha)])
        return scale * factor * np.sin(x @ v + phase + k * math.pi / 2)

    vmax = max(1.0, float(np.abs(v).max()))
    bound = scale * vmax ** max(n, 1)
    return TargetFunction(d, n, ev, dv, float(bound), "sine")


def catalog_target(name, d, n):
    """Pair ``(g_re, g_im)`` of a named built-in target with Sobolev bound <= 1.

    ``constant``
        ``g = 1/2 - i/4``.
    ``affine``
        ``Re g = 1/4 + sum_k (Re z_k - Im z_k)/(8d)``, ``Im g = sum_k Re z_k/(4d)``.
    ``quad``
        ``Re g = sum_k |z_k|**2/(8d)``, ``Im g = sum_k Re z_k Im z_k/(8d)``.
    ``sine``
        ``Re g = sin(s)/4``, ``Im g = cos(s)/4`` with ``s`` a weighted sum of
        the coordinates of slope at most one.
    """
    dim = 2 * d
    if name == "constant":
        pair = _constant(0.5, d, n), _constant(-0.25, d, n)
    elif name == "affine":
        w = np.concatenate([np.full(d, 1 / (8 * d)), np.full(d, -1 / (8 * d))])
        pair = _affine(w, 0.25, d, n), _affine(np.concatenate([np.full(d, 1 / (4 * d)),
                                                               np.zeros(d)]), 0.0, d, n)
    elif name == "quad":
        Q_re = np.eye(dim) / (8 * d)
        Q_im = np.zeros((dim, dim))
        for k in range(d):
            Q_im[k, k + d] = Q_im[k + d, k] = 1 / (16 * d)
        pair = _quadratic(Q_re, d, n), _quadratic(Q_im, d, n)
    elif name == "sine":
        v = np.linspace(1.0, 0.5, dim) / dim
        pair = _sine(v, 0.3, 0.25, d, n), _sine(v, 0.3 + math.pi / 2, 0.25, d, n)
    else:
        raise ValueError(f"unknown target {name!r}; choose from {sorted(CATALOG)}")
    for part, suffix in zip(pair, ("re", "im")):
        part.name = f"{name}.{suffix}"
    return pair


CATALOG = ("constant", "affine", "quad", "sine")
