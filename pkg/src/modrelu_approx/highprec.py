"""Arbitrary-precision evaluation of networks with mpmath.

Used as an independent oracle for the float64 evaluation paths.  Stored
float64 weights are converted exactly; extractor leaves use weights recomputed
from their step ``h`` in the working precision, so the result is the
realization of the exact construction rather than of its rounded matrices.
"""

from __future__ import annotations

import mpmath

from .network_core import ModReLUNetwork
from .primitives import ExtractorNetwork
from .structured import Parallel, Serial, WeightedSum

__all__ = ["evaluate_mp", "modrelu_mp"]


def modrelu_mp(z):
    r = abs(z)
    if r <= 1:
        return mpmath.mpc(0)
    return z - z / r


def _affine(A, b, x):
    return [sum((a * xi for a, xi in zip(row, x)), mpmath.mpc(0)) + bi for row, bi in zip(A, b)]


def _leaf(net, x):
    if isinstance(net, ExtractorNetwork):
        A1, b1, A2, b2 = net.exact_layers(mpmath.mp)
        hidden = [modrelu_mp(a * x[0] + b) for a, b in zip(A1, b1)]
        return [sum((a * v for a, v in zip(A2, hidden)), mpmath.mpc(0)) + b2]
    layers = [([[mpmath.mpc(c.real, c.imag) for c in row] for row in layer.weights],
               [mpmath.mpc(c.real, c.imag) for c in layer.bias]) for layer in net.layers]
    for A, b in layers[:-1]:
        x = [modrelu_mp(v) for v in _affine(A, b, x)]
    return _affine(*layers[-1], x)


def _node(net, x):
    if isinstance(net, ModReLUNetwork):
        return _leaf(net, x)
    if isinstance(net, Serial):
        for child in net.children:
            x = _node(child, x)
        return x
    if isinstance(net, Parallel):
        out, start = [], 0
        for child in net.children:
            out += _node(child, x[start:start + child.d_in])
            start += child.d_in
        return out
    if isinstance(net, WeightedSum):
        total = mpmath.mpc(net.bias.real, net.bias.imag)
        for c, child in zip(net.coeffs, net.children):
            total += mpmath.mpc(c.real, c.imag) * _node(child, x)[0]
        return [total]
    raise TypeError(f"cannot evaluate {type(net).__name__}")


def evaluate_mp(net, z, dps=60):
    """Realization at one input vector ``z``, computed with ``dps`` digits.

    Returns a list of ``mpmath.mpc``.
    """
    with mpmath.workdps(dps):
        x = [mpmath.mpc(complex(v).real, complex(v).imag) for v in (z if hasattr(z, "__len__") else [z])]
        return _node(net, x)
