"""Complex affine-layer networks with the modReLU activation.

A network is a list of affine maps ``T_l(z) = A_l z + b_l`` over the complex
numbers; its realization applies modReLU after every map except the last.
Matrices are stored densely; optional boolean masks record which entries the
architecture allows to be nonzero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ArchitectureStats",
    "AffineLayer",
    "DepthMismatchError",
    "DimensionError",
    "IdentityChain",
    "ModReLUNetwork",
    "ParameterError",
    "compose",
    "evaluate",
    "identity_chain",
    "identity_network",
    "linear_network",
    "modrelu",
    "pad_depth",
    "parallel",
    "stats",
]


class DimensionError(ValueError):
    """Input or layer shapes do not fit together."""


class DepthMismatchError(ValueError):
    """Networks combined side by side must have equal depth."""


class ParameterError(ValueError):
    """A builder parameter is outside its admissible range."""


def modrelu(z):
    """modReLU: 0 inside the closed unit disk, ``z - z/|z|`` outside.

    Accepts a scalar or an array; the piecewise form avoids the 0/0 at z = 0.
    """
    arr = np.asarray(z, dtype=np.complex128)
    if arr.ndim == 0:
        r = abs(complex(arr))
        return complex(arr) * (1.0 - 1.0 / max(r, 1.0))
    # 1 - 1/max(|z|, 1) is 0 on the unit disk and needs no division by zero.
    scale = np.abs(arr)
    np.maximum(scale, 1.0, out=scale)
    np.reciprocal(scale, out=scale)
    np.subtract(1.0, scale, out=scale)
    return arr * scale


def _readonly(a):
    a.setflags(write=False)
    return a


class AffineLayer:
    """One affine map ``z -> A z + b`` with optional architecture masks."""

    __slots__ = ("weights", "bias", "weight_mask", "bias_mask")

    def __init__(self, weights, bias=None, weight_mask=None, bias_mask=None):
        A = np.array(weights, dtype=np.complex128, ndmin=2, copy=True)
        if A.ndim != 2:
            raise DimensionError(f"weight matrix must be 2-D, got shape {A.shape}")
        b = (np.zeros(A.shape[0], dtype=np.complex128) if bias is None
             else np.array(bias, dtype=np.complex128, ndmin=1, copy=True))
        if b.shape != (A.shape[0],):
            raise DimensionError(
                f"bias of shape {b.shape} does not match {A.shape[0]} output rows")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("layer entries must be finite")
        if weight_mask is not None:
            weight_mask = np.array(weight_mask, dtype=bool, ndmin=2, copy=True)
            if weight_mask.shape != A.shape:
                raise DimensionError("weight mask shape differs from weight matrix")
            if np.any(A[~weight_mask] != 0):
                raise ValueError("nonzero weight outside the architecture mask")
            _readonly(weight_mask)
        if bias_mask is not None:
            bias_mask = np.array(bias_mask, dtype=bool, ndmin=1, copy=True)
            if bias_mask.shape != b.shape:
                raise DimensionError("bias mask shape differs from bias vector")
            if np.any(b[~bias_mask] != 0):
                raise ValueError("nonzero bias outside the architecture mask")
            _readonly(bias_mask)
        self.weights = _readonly(A)
        self.bias = _readonly(b)
        self.weight_mask = weight_mask
        self.bias_mask = bias_mask

    @property
    def rows(self):
        return self.weights.shape[0]

    @property
    def cols(self):
        return self.weights.shape[1]

    def masks(self):
        """Architecture masks; the nonzero pattern when none were given."""
        wm = self.weight_mask if self.weight_mask is not None else self.weights != 0
        bm = self.bias_mask if self.bias_mask is not None else self.bias != 0
        return wm, bm

    def nnz(self):
        return int(np.count_nonzero(self.weights) + np.count_nonzero(self.bias))

    def allowed(self):
        wm, bm = self.masks()
        return int(np.count_nonzero(wm) + np.count_nonzero(bm))

    def max_abs(self):
        m = 0.0
        if self.weights.size:
            m = float(np.max(np.abs(self.weights)))
        if self.bias.size:
            m = max(m, float(np.max(np.abs(self.bias))))
        return m

    def apply(self, x):
        if self.cols == 1:
            out = x[:, :1] * self.weights[:, 0]
        else:
            out = x @ self.weights.T
        out += self.bias
        return out

    def then(self, outer):
        """The single affine map ``outer o self``."""
        if outer.cols != self.rows:
            raise DimensionError(
                f"cannot fuse: outer expects {outer.cols} inputs, inner gives {self.rows}")
        wo, bo = outer.masks()
        wi, bi = self.masks()
        wmask = (wo.astype(np.int64) @ wi.astype(np.int64)) > 0
        bmask = ((wo.astype(np.int64) @ bi.astype(np.int64)) > 0) | bo
        A = outer.weights @ self.weights
        b = outer.weights @ self.bias + outer.bias
        # Entries outside the structural pattern are exact zeros already; keep
        # the mask honest if rounding left residue there.
        A = np.where(wmask, A, 0)
        b = np.where(bmask, b, 0)
        return AffineLayer(A, b, wmask, bmask)

    def __eq__(self, other):
        if not isinstance(other, AffineLayer):
            return NotImplemented
        return (np.array_equal(self.weights, other.weights)
                and np.array_equal(self.bias, other.bias))

    __hash__ = None

    def __repr__(self):
        return f"AffineLayer({self.rows}x{self.cols}, nnz={self.nnz()})"


@dataclass(frozen=True)
class ArchitectureStats:
    """Size of a network.

    ``weight_count`` counts nonzero entries of the weights actually present;
    ``architecture_weight_count`` counts the entries the masks allow.
    """

    depth: int
    neuron_counts: tuple
    total_neurons: int
    weight_count: int
    max_weight_magnitude: float
    architecture_weight_count: int = 0

    @property
    def hidden_neurons(self):
        return sum(self.neuron_counts[1:-1])

    def as_dict(self):
        return {
            "depth": self.depth,
            "neuron_counts": list(self.neuron_counts),
            "total_neurons": self.total_neurons,
            "hidden_neurons": self.hidden_neurons,
            "weight_count": self.weight_count,
            "architecture_weight_count": self.architecture_weight_count,
            "max_weight_magnitude": self.max_weight_magnitude,
        }


def _as_batch(x, d_in):
    arr = np.asarray(x, dtype=np.complex128)
    single = arr.ndim <= 1
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise DimensionError(f"expected a vector or a batch of vectors, got shape {arr.shape}")
    if arr.shape[1] != d_in:
        raise DimensionError(f"input has length {arr.shape[1]}, network expects {d_in}")
    return arr, single


class ModReLUNetwork:
    """Ordered list of affine layers, modReLU between consecutive layers."""

    def __init__(self, layers, meta=None):
        layers = list(layers)
        if not layers:
            raise ValueError("a network needs at least one layer")
        for k in range(1, len(layers)):
            if layers[k].cols != layers[k - 1].rows:
                raise DimensionError(
                    f"layer {k} expects {layers[k].cols} inputs, "
                    f"layer {k - 1} produces {layers[k - 1].rows}")
        self.layers = tuple(layers)
        self.meta = dict(meta or {})

    @property
    def depth(self):
        return len(self.layers)

    @property
    def d_in(self):
        return self.layers[0].cols

    @property
    def d_out(self):
        return self.layers[-1].rows

    @property
    def neuron_counts(self):
        return (self.d_in,) + tuple(layer.rows for layer in self.layers)

    def _forward(self, x):
        return self._forward_layers(x)

    def _forward_layers(self, x):
        for layer in self.layers[:-1]:
            x = modrelu(layer.apply(x))
        return self.layers[-1].apply(x)

    def forward_layers(self, x):
        """Realization computed from the stored float64 matrices only.

        Subclasses may evaluate ``__call__`` through an exact closed form;
        this method always multiplies through the layers.
        """
        arr, single = _as_batch(x, self.d_in)
        out = self._forward_layers(arr)
        return out[0] if single else out

    def __call__(self, x):
        arr, single = _as_batch(x, self.d_in)
        out = self._forward(arr)
        return out[0] if single else out

    def stats(self):
        counts = self.neuron_counts
        return ArchitectureStats(
            depth=self.depth,
            neuron_counts=counts,
            total_neurons=int(sum(counts)),
            weight_count=sum(layer.nnz() for layer in self.layers),
            max_weight_magnitude=max(layer.max_abs() for layer in self.layers),
            architecture_weight_count=sum(layer.allowed() for layer in self.layers),
        )

    def masks(self):
        return [layer.masks() for layer in self.layers]

    def __repr__(self):
        return f"{type(self).__name__}(depth={self.depth}, widths={self.neuron_counts})"


def evaluate(net, x):
    """Realization of ``net`` (flat or structured) at one input or a batch."""
    return net(x)


def stats(net):
    return net.stats()


def linear_network(A, b=None):
    """A depth-1 network: a bare affine map, no activation."""
    return ModReLUNetwork([AffineLayer(A, b)])


def compose(outer, inner):
    """Network realizing ``outer o inner``; adjacent affine maps are fused."""
    if outer.d_in != inner.d_out:
        raise DimensionError(
            f"outer expects {outer.d_in} inputs but inner produces {inner.d_out}")
    fused = inner.layers[-1].then(outer.layers[0])
    layers = inner.layers[:-1] + (fused,) + outer.layers[1:]
    return ModReLUNetwork(layers)


def _block_diag(blocks, dtype):
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols), dtype=dtype)
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def stack_layers_diag(layers):
    """Block-diagonal stacking of affine layers acting on disjoint inputs."""
    masks = [layer.masks() for layer in layers]
    return AffineLayer(
        _block_diag([layer.weights for layer in layers], np.complex128),
        np.concatenate([layer.bias for layer in layers]),
        _block_diag([m[0] for m in masks], bool),
        np.concatenate([m[1] for m in masks]),
    )


def parallel(nets):
    """Side-by-side networks on disjoint input slices, outputs concatenated."""
    nets = list(nets)
    if not nets:
        raise ValueError("parallel needs at least one network")
    depths = {net.depth for net in nets}
    if len(depths) != 1:
        raise DepthMismatchError(f"parallel networks have depths {sorted(depths)}; pad first")
    if len(nets) == 1:
        return nets[0]
    layers = [stack_layers_diag([net.layers[k] for net in nets])
              for k in range(nets[0].depth)]
    return ModReLUNetwork(layers)


class IdentityChain(ModReLUNetwork):
    """Fused chain of identity networks ``Id_R`` acting on ``width`` coordinates.

    Every block computes ``sigma(2w) - sigma(w) - (R + 1)`` with
    ``w = z + R + 1``, which equals ``z`` exactly whenever ``|w| >= 1``; since
    each block returns its input, the same test certifies the whole chain.
    Evaluation returns the input on such rows and runs the layers elsewhere.
    """

    def __init__(self, depth, radius, width=1, meta=None):
        if depth < 1:
            raise ValueError("depth must be at least 1")
        radius = float(radius)
        if not radius > 0:
            raise ParameterError(f"identity radius must be positive, got {radius}")
        self.radius = radius
        self.width = int(width)
        net = linear_network(np.eye(self.width))
        if depth > 1:
            first = AffineLayer([[2.0], [1.0]], [2 * radius + 2, radius + 1])
            second = AffineLayer([[1.0, -1.0]], [-(radius + 1)])
            block = ModReLUNetwork([first, second])
            if self.width > 1:
                block = parallel([block] * self.width)
            for _ in range(depth - 1):
                net = compose(block, net)
        layers = net.layers
        super().__init__(layers, meta=meta)

    def _forward(self, x):
        if self.depth == 1:
            return x.copy()
        ok = np.all(np.abs(x + (self.radius + 1)) >= 1.0, axis=1)
        if np.all(ok):
            return x.copy()
        out = x.copy()
        out[~ok] = self._forward_layers(x[~ok])
        return out


def identity_network(R):
    """Two-neuron network equal to the identity on the disk ``|z| <= R``.

    Uses ``sigma(2w) - sigma(w) = w`` for ``|w| >= 1`` with ``w = z + R + 1``.
    """
    return IdentityChain(2, R, meta={"kind": "identity", "R": float(R)})


def identity_chain(depth, radius, width=1):
    """Identity on ``width`` coordinates, each of modulus at most ``radius``.

    Depth 1 is the bare identity map; every further layer is one fused
    identity network.
    """
    return IdentityChain(depth, radius, width,
                         meta={"kind": "identity_chain", "R": float(radius),
                               "depth": int(depth), "width": int(width)})


def pad_depth(net, target_depth, radius):
    """Append identity networks until ``net`` has ``target_depth`` layers.

    The realization is unchanged wherever every output of ``net`` has modulus
    at most ``radius``.
    """
    if target_depth < net.depth:
        raise ValueError(f"target depth {target_depth} is below current depth {net.depth}")
    extra = target_depth - net.depth
    if extra == 0:
        return net
    return compose(identity_chain(extra + 1, radius, net.d_out), net)
