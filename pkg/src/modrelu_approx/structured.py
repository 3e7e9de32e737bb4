"""Composition DAGs of modReLU networks that evaluate without flattening.

The large constructions (squares, products, the Taylor compiler output) are
built from a modest number of distinct leaf networks that are reused many
times.  A :class:`StructuredNet` keeps that sharing: evaluation walks the DAG,
and architecture statistics are computed from a per-node *profile* holding the
first and last affine layers explicitly (those get fused with neighbours under
composition) plus summaries of everything in between.  The profile arithmetic
mirrors :func:`flatten` exactly, so the cached stats equal the stats of the
flattened network.

Two exact evaluation shortcuts are used:

* in a :class:`WeightedSum`, serial branches that start with the same
  sub-networks (same objects, same input) compute that prefix once;
* serial branches that share their entire tail after a different head are
  evaluated by stacking the head outputs along the batch axis and running the
  tail once.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .network_core import (
    AffineLayer,
    ArchitectureStats,
    DepthMismatchError,
    DimensionError,
    ModReLUNetwork,
    _as_batch,
    compose,
    identity_chain,
    stack_layers_diag,
)

__all__ = [
    "LayerSummary",
    "Parallel",
    "Profile",
    "Serial",
    "StructuredNet",
    "WeightedSum",
    "architecture_signature",
    "flatten",
    "pad_structured",
    "serial",
    "weighted_sum",
]

DEFAULT_FLATTEN_LIMIT = 20_000_000


@dataclass(frozen=True)
class LayerSummary:
    rows: int
    cols: int
    nnz: int
    allowed: int
    max_abs: float

    @classmethod
    def of(cls, layer):
        return cls(layer.rows, layer.cols, layer.nnz(), layer.allowed(), layer.max_abs())

    def __add__(self, other):
        return LayerSummary(self.rows + other.rows, self.cols + other.cols,
                            self.nnz + other.nnz, self.allowed + other.allowed,
                            max(self.max_abs, other.max_abs))


@dataclass(frozen=True)
class Profile:
    """First and last layer of a network plus summaries of the layers between."""

    depth: int
    first: AffineLayer
    last: AffineLayer
    interior: tuple

    def summaries(self):
        if self.depth == 1:
            return [LayerSummary.of(self.first)]
        return [LayerSummary.of(self.first), *self.interior, LayerSummary.of(self.last)]

    def to_stats(self):
        layers = self.summaries()
        counts = (self.first.cols,) + tuple(s.rows for s in layers)
        return ArchitectureStats(
            depth=self.depth,
            neuron_counts=counts,
            total_neurons=int(sum(counts)),
            weight_count=sum(s.nnz for s in layers),
            max_weight_magnitude=max(s.max_abs for s in layers),
            architecture_weight_count=sum(s.allowed for s in layers),
        )


def _leaf_profile(net):
    layers = net.layers
    return Profile(len(layers), layers[0], layers[-1],
                   tuple(LayerSummary.of(layer) for layer in layers[1:-1]))


def _profile(node):
    if isinstance(node, ModReLUNetwork):
        return _leaf_profile(node)
    return node.profile


def _fuse_profiles(inner, outer):
    fused = inner.last.then(outer.first)
    if inner.depth == 1 and outer.depth == 1:
        return Profile(1, fused, fused, ())
    if inner.depth == 1:
        return Profile(outer.depth, fused, outer.last, outer.interior)
    if outer.depth == 1:
        return Profile(inner.depth, inner.first, fused, inner.interior)
    interior = inner.interior + (LayerSummary.of(fused),) + outer.interior
    return Profile(inner.depth + outer.depth - 1, inner.first, outer.last, interior)


def _sum_interiors(profiles):
    return tuple(_sum_summaries(col) for col in zip(*(p.interior for p in profiles)))


def _sum_summaries(items):
    items = list(items)
    total = items[0]
    for s in items[1:]:
        total = total + s
    return total


def _eval(node, x):
    if isinstance(node, ModReLUNetwork):
        return node._forward(x)
    return node._eval(x)


def _signature(node):
    if isinstance(node, ModReLUNetwork):
        h = hashlib.sha1(b"leaf")
        for layer in node.layers:
            wm, bm = layer.masks()
            h.update(repr(wm.shape).encode())
            h.update(np.packbits(wm).tobytes())
            h.update(np.packbits(bm).tobytes())
        return h.hexdigest()
    return node.signature


def architecture_signature(net):
    """Digest of the sparsity pattern and composition structure of ``net``.

    Two networks with equal signatures have identical layer widths and
    identical architecture masks after flattening; weight values are ignored.
    """
    return _signature(net)


class StructuredNet:
    """Base class of the composition nodes."""

    kind = "abstract"
    d_in: int
    d_out: int
    depth: int

    def __init__(self, meta=None):
        self.meta = dict(meta or {})

    eval_chunk = None

    def __call__(self, x):
        arr, single = _as_batch(x, self.d_in)
        chunk = self.eval_chunk
        if chunk and arr.shape[0] > chunk:
            out = np.concatenate([self._eval(arr[k:k + chunk])
                                  for k in range(0, arr.shape[0], chunk)])
        else:
            out = self._eval(arr)
        return out[0] if single else out

    def _eval(self, x):
        raise NotImplementedError

    @cached_property
    def profile(self):
        return self._profile()

    def stats(self):
        return self.profile.to_stats()

    @cached_property
    def signature(self):
        h = hashlib.sha1(self.kind.encode())
        for child in self.children:
            h.update(_signature(child).encode())
        h.update(self._signature_extra())
        return h.hexdigest()

    def _signature_extra(self):
        return b""

    def masks(self):
        return [layer.masks() for layer in flatten(self).layers]

    def __repr__(self):
        return (f"{type(self).__name__}(children={len(self.children)}, depth={self.depth}, "
                f"d_in={self.d_in}, d_out={self.d_out})")


class Serial(StructuredNet):
    """Children applied in order: ``children[0]`` sees the input first."""

    kind = "serial"

    def __init__(self, children, meta=None):
        super().__init__(meta)
        children = list(children)
        if not children:
            raise ValueError("serial composition needs at least one network")
        for k in range(1, len(children)):
            if children[k].d_in != children[k - 1].d_out:
                raise DimensionError(
                    f"child {k} expects {children[k].d_in} inputs, "
                    f"child {k - 1} produces {children[k - 1].d_out}")
        self.children = tuple(children)
        self.d_in = children[0].d_in
        self.d_out = children[-1].d_out
        self.depth = sum(c.depth for c in children) - (len(children) - 1)

    def _eval(self, x):
        for child in self.children:
            x = _eval(child, x)
        return x

    def _profile(self):
        prof = _profile(self.children[0])
        for child in self.children[1:]:
            prof = _fuse_profiles(prof, _profile(child))
        return prof


class Parallel(StructuredNet):
    """Children on consecutive disjoint input slices, outputs concatenated."""

    kind = "parallel"

    def __init__(self, children, meta=None):
        super().__init__(meta)
        children = list(children)
        if not children:
            raise ValueError("parallel composition needs at least one network")
        depths = {c.depth for c in children}
        if len(depths) != 1:
            raise DepthMismatchError(f"parallel children have depths {sorted(depths)}; pad first")
        self.children = tuple(children)
        self.d_in = sum(c.d_in for c in children)
        self.d_out = sum(c.d_out for c in children)
        self.depth = children[0].depth
        self._slices = np.cumsum([0] + [c.d_in for c in children])

    def _eval(self, x):
        outs = [_eval(c, x[:, self._slices[k]:self._slices[k + 1]])
                for k, c in enumerate(self.children)]
        return np.concatenate(outs, axis=1)

    def _profile(self):
        profs = [_profile(c) for c in self.children]
        first = stack_layers_diag([p.first for p in profs])
        if self.depth == 1:
            return Profile(1, first, first, ())
        last = stack_layers_diag([p.last for p in profs])
        return Profile(self.depth, first, last, _sum_interiors(profs))


def _vstack_layers(layers):
    masks = [layer.masks() for layer in layers]
    return AffineLayer(
        np.vstack([layer.weights for layer in layers]),
        np.concatenate([layer.bias for layer in layers]),
        np.vstack([m[0] for m in masks]),
        np.concatenate([m[1] for m in masks]),
    )


class WeightedSum(StructuredNet):
    """``bias + sum_i coeffs[i] * children[i](z)`` with a shared input.

    Every child has one output and all children have the same depth; the
    combination is absorbed into a widened final affine layer.
    """

    kind = "weighted_sum"

    def __init__(self, children, coeffs, bias=0.0, meta=None):
        super().__init__(meta)
        children = list(children)
        coeffs = np.array(coeffs, dtype=np.complex128, ndmin=1)
        if not children:
            raise ValueError("weighted sum needs at least one network")
        if len(coeffs) != len(children):
            raise ValueError(f"{len(children)} networks but {len(coeffs)} coefficients")
        if not np.all(np.isfinite(coeffs)) or not np.isfinite(bias):
            raise ValueError("coefficients and bias must be finite")
        if {c.d_in for c in children} != {children[0].d_in}:
            raise DimensionError("weighted-sum children must share their input dimension")
        if any(c.d_out != 1 for c in children):
            raise DimensionError("weighted-sum children must have a single output")
        depths = {c.depth for c in children}
        if len(depths) != 1:
            raise DepthMismatchError(f"weighted-sum children have depths {sorted(depths)}; pad first")
        self.children = tuple(children)
        coeffs.setflags(write=False)
        self.coeffs = coeffs
        self.bias = complex(bias)
        self.d_in = children[0].d_in
        self.d_out = 1
        self.depth = children[0].depth
        self._plan_evaluation()

    def _signature_extra(self):
        return repr(len(self.coeffs)).encode()

    def _plan_evaluation(self):
        # Tail batching: serial children sharing every node after the head.
        groups = {}
        for k, c in enumerate(self.children):
            if isinstance(c, Serial) and len(c.children) >= 2:
                key = tuple(id(t) for t in c.children[1:])
                groups.setdefault(key, []).append(k)
        self._tail_groups = [g for g in groups.values() if len(g) >= 2]
        grouped = {k for g in self._tail_groups for k in g}
        # Prefix sharing among the remaining serial children.
        counts = {}
        for k, c in enumerate(self.children):
            if k in grouped or not isinstance(c, Serial):
                continue
            ids = tuple(id(t) for t in c.children)
            for j in range(1, len(ids)):
                counts[ids[:j]] = counts.get(ids[:j], 0) + 1
        self._shared_prefixes = {key for key, n in counts.items() if n >= 2}
        self._singles = [k for k in range(len(self.children)) if k not in grouped]

    def _eval_prefixed(self, child, x, cache):
        ids = tuple(id(t) for t in child.children)
        start, y = 0, x
        for j in range(len(ids) - 1, 0, -1):
            if ids[:j] in cache:
                start, y = j, cache[ids[:j]]
                break
        for j in range(start, len(ids)):
            y = _eval(child.children[j], y)
            if ids[:j + 1] in self._shared_prefixes:
                cache[ids[:j + 1]] = y
        return y

    def _eval(self, x):
        total = np.full((x.shape[0], 1), self.bias, dtype=np.complex128)
        cache = {}
        for k in self._singles:
            child = self.children[k]
            if isinstance(child, Serial) and self._shared_prefixes:
                y = self._eval_prefixed(child, x, cache)
            else:
                y = _eval(child, x)
            total += self.coeffs[k] * y
        cache.clear()
        for group in self._tail_groups:
            heads = [_eval(self.children[k].children[0], x) for k in group]
            y = np.concatenate(heads, axis=0)
            for node in self.children[group[0]].children[1:]:
                y = _eval(node, y)
            y = y.reshape(len(group), x.shape[0])
            total[:, 0] += self.coeffs[group] @ y
        return total

    def _profile(self):
        profs = [_profile(c) for c in self.children]
        if self.depth == 1:
            masks = [p.first.masks() for p in profs]
            A = sum(c * p.first.weights for c, p in zip(self.coeffs, profs))
            b = sum(c * p.first.bias for c, p in zip(self.coeffs, profs)) + self.bias
            wm = np.logical_or.reduce([m[0] for m in masks])
            bm = np.logical_or.reduce([m[1] for m in masks]) | (b != 0)
            layer = AffineLayer(np.where(wm, A, 0), np.where(bm, b, 0), wm, bm)
            return Profile(1, layer, layer, ())
        first = _vstack_layers([p.first for p in profs])
        lasts = [p.last for p in profs]
        masks = [layer.masks() for layer in lasts]
        A = np.hstack([c * layer.weights for c, layer in zip(self.coeffs, lasts)])
        b = sum(c * layer.bias for c, layer in zip(self.coeffs, lasts)) + self.bias
        bm = np.logical_or.reduce([m[1] for m in masks]) | (b != 0)
        last = AffineLayer(A, np.where(bm, b, 0), np.hstack([m[0] for m in masks]), bm)
        return Profile(self.depth, first, last, _sum_interiors(profs))


def serial(nets, meta=None):
    """Structured composition, innermost first: ``serial([f, g])(z) = g(f(z))``."""
    return Serial(nets, meta=meta)


def weighted_sum(nets, coeffs, bias=0.0, meta=None):
    return WeightedSum(nets, coeffs, bias, meta=meta)


def pad_structured(net, target_depth, radius):
    """Structured counterpart of ``pad_depth``: append an identity chain."""
    if target_depth < net.depth:
        raise ValueError(f"target depth {target_depth} is below current depth {net.depth}")
    if target_depth == net.depth:
        return net
    chain = identity_chain(target_depth - net.depth + 1, radius, net.d_out)
    return Serial([net, chain])


def _dense_entries(profile):
    widths = [profile.first.cols] + [s.rows for s in profile.summaries()]
    return sum(a * b for a, b in zip(widths[:-1], widths[1:]))


def flatten(net, max_entries=DEFAULT_FLATTEN_LIMIT):
    """Equivalent single :class:`ModReLUNetwork` with fused affine maps.

    Raises ``ValueError`` when the dense matrices would exceed ``max_entries``
    complex entries.  Note that flattening fuses extractor leaves into their
    neighbours, so float64 evaluation of the result loses the closed-form
    evaluation those leaves carry.
    """
    if isinstance(net, ModReLUNetwork):
        return net
    entries = _dense_entries(net.profile)
    if entries > max_entries:
        raise ValueError(f"flattening needs {entries} dense entries (limit {max_entries})")
    return _flatten(net, {})


def _flatten(node, memo):
    if isinstance(node, ModReLUNetwork):
        return node
    key = id(node)
    if key in memo:
        return memo[key]
    parts = [_flatten(c, memo) for c in node.children]
    if isinstance(node, Serial):
        out = parts[0]
        for p in parts[1:]:
            out = compose(p, out)
    elif isinstance(node, Parallel):
        layers = [stack_layers_diag([p.layers[k] for p in parts]) for k in range(node.depth)]
        out = ModReLUNetwork(layers)
    else:
        prof = node.profile
        if node.depth == 1:
            out = ModReLUNetwork([prof.first])
        else:
            middle = [stack_layers_diag([p.layers[k] for p in parts])
                      for k in range(1, node.depth - 1)]
            out = ModReLUNetwork([prof.first, *middle, prof.last])
    memo[key] = out
    return out
