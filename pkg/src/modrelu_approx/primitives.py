"""Builders for the elementary modReLU networks and their direct references.

Every builder returns a network whose realization approximates a simple
function (identity, real/imaginary part, shifted ReLU of the real part,
``|Re z|``, the tent map, ``Re(z)**2``, products, bump functions).  Next to
each builder sits a reference implementation in plain real/complex arithmetic
that the tests and the verification harness use as an oracle.

The real/imaginary-part extractors are the numerically delicate piece: their
weights grow like ``h**-3`` and the realization is ``h**-2`` times a tiny
difference of modReLU outputs.  :class:`ExtractorNetwork` therefore evaluates
the same realization through an algebraically identical closed form whenever
all three hidden neurons sit outside the unit disk (always the case on the
certified domain); the raw matrices are used otherwise.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .network_core import (
    AffineLayer,
    ModReLUNetwork,
    ParameterError,
    identity_chain,
    identity_network,
    linear_network,
)
from .structured import Serial, WeightedSum

__all__ = [
    "ExtractorNetwork",
    "PrimitiveSpec",
    "build_abs_re",
    "build_g_re",
    "build_identity",
    "build_im",
    "build_product",
    "build_product_re",
    "build_psi_im",
    "build_psi_re",
    "build_re",
    "build_relu_im",
    "build_relu_re",
    "build_square_im",
    "build_square_re",
    "ref_f_m",
    "ref_g",
    "ref_g_s",
    "ref_im_h",
    "ref_psi",
    "ref_re_h",
    "ref_relu",
    "sawtooth_count",
    "square_depth",
]


@dataclass(frozen=True)
class PrimitiveSpec:
    """Parameters a primitive was built from (recorded in serialized output)."""

    kind: str
    R: float | None = None
    eps: float | None = None
    c: float | None = None
    M: float | None = None
    m: int | None = None

    def as_meta(self):
        return {k: v for k, v in asdict(self).items() if v is not None}


def _check_radius(R, minimum=1.0):
    if not (np.isfinite(R) and R >= minimum):
        raise ParameterError(f"radius R must be >= {minimum}, got {R}")


def _check_eps(eps, upper=1.0):
    if not (0.0 < eps < upper):
        raise ParameterError(f"accuracy must lie in (0, {upper}), got {eps}")


# --------------------------------------------------------------------------
# direct references

def ref_relu(x):
    return np.maximum(x, 0.0)


def ref_re_h(z, h):
    """``(sgn(h z - i/h) + i) / h**2`` evaluated without cancellation."""
    z = np.asarray(z, dtype=np.complex128)
    a2 = (z * z.conjugate()).real
    num = h * h * a2 - 2.0 * z.imag
    t = h * h * num
    q = num / (1.0 + np.sqrt(1.0 + t))
    s = h * h * q
    return (z + 1j * q) / (1.0 + s)


def ref_im_h(z, h):
    """``-i (sgn(h z + 1/h) - 1) / h**2`` evaluated without cancellation."""
    z = np.asarray(z, dtype=np.complex128)
    a2 = (z * z.conjugate()).real
    num = h * h * a2 + 2.0 * z.real
    t = h * h * num
    q = num / (1.0 + np.sqrt(1.0 + t))
    s = h * h * q
    return -1j * (z - q) / (1.0 + s)


def ref_g(x):
    """Tent map on [0, 1], zero outside."""
    x = np.asarray(x, dtype=float)
    return 2 * ref_relu(x) - 4 * ref_relu(x - 0.5) + 2 * ref_relu(x - 1.0)


def ref_g_s(s, x):
    y = np.asarray(x, dtype=float)
    for _ in range(s):
        y = ref_g(y)
    return y


def ref_f_m(m, x):
    """Piecewise-linear interpolant of ``x**2`` on ``2**m`` pieces, ``x`` off [0, 1]."""
    x = np.asarray(x, dtype=float)
    out = x.copy()
    y = x
    for s in range(1, m + 1):
        y = ref_g(y)
        out = out - y / 4.0**s
    return out


def ref_psi(x):
    """Trapezoid bump: 1 on ``|x| <= 1/2``, 0 beyond ``3/2``, linear between."""
    return np.clip(1.5 - np.abs(np.asarray(x, dtype=float)), 0.0, 1.0)


# --------------------------------------------------------------------------
# identity and extractors

def build_identity(R):
    net = identity_network(R)
    net.meta.update(PrimitiveSpec("identity", R=float(R)).as_meta())
    return net


def _extractor_layers(part, h):
    if part == "re":
        first = AffineLayer([[2 * h], [h], [h]],
                            [4 / h + 2 - 2j / h, 2 / h + 1 - 1j / h, -1j / h])
        out = 1 / (h * h)
        second = AffineLayer([[out, -out, -out]], [out * (1j - 2 / h - 1)])
    else:
        first = AffineLayer([[2 * h], [h], [h]], [6 / h + 2, 3 / h + 1, 1 / h])
        out = -1j / (h * h)
        second = AffineLayer([[out, -out, -out]], [1j * (2 / h + 2) / (h * h)])
    return [first, second]


class ExtractorNetwork(ModReLUNetwork):
    """Three-neuron shallow network approximating ``Re z`` or ``Im z``.

    ``h`` fixes every weight; the float64 matrices are the rounded weights and
    serve statistics and serialization.  Evaluation uses the closed form of
    the realization on inputs where it is exact.
    """

    def __init__(self, part, h, meta=None):
        if part not in ("re", "im"):
            raise ValueError(f"part must be 're' or 'im', got {part!r}")
        if not 0 < h < 0.5:
            raise ParameterError(f"step h must lie in (0, 1/2), got {h}")
        self.part = part
        self.h = float(h)
        super().__init__(_extractor_layers(part, self.h), meta=meta)

    def exact_layers(self, ctx):
        """Layers with weights computed in the mpmath context ``ctx``."""
        h = ctx.mpf(self.h)
        j = ctx.mpc(0, 1)
        if self.part == "re":
            A1 = [2 * h, h, h]
            b1 = [4 / h + 2 - 2 * j / h, 2 / h + 1 - j / h, -j / h]
            out = 1 / (h * h)
            A2 = [out, -out, -out]
            b2 = out * (j - 2 / h - 1)
        else:
            A1 = [2 * h, h, h]
            b1 = [6 / h + 2, 3 / h + 1, 1 / h]
            out = -j / (h * h)
            A2 = [out, -out, -out]
            b2 = j * (2 / h + 2) / (h * h)
        return A1, b1, A2, b2

    def _forward(self, x):
        z = x[:, 0]
        h = self.h
        if self.part == "re":
            u2 = h * z + (2 / h + 1 - 1j / h)
            u3 = h * z - 1j / h
        else:
            u2 = h * z + (3 / h + 1)
            u3 = h * z + 1 / h
        ok = (np.abs(u2) >= 1.0) & (np.abs(u3) >= 1.0)
        ref = ref_re_h if self.part == "re" else ref_im_h
        out = np.empty(z.shape, dtype=np.complex128)
        out[ok] = ref(z[ok], h)
        if not np.all(ok):
            out[~ok] = self._forward_layers(x[~ok])[:, 0]
        return out[:, None]


def build_re(R, eps):
    """Shallow network with ``|out - Re z| <= eps`` on ``|z| <= R``."""
    R, eps = float(R), float(eps)
    _check_radius(R)
    _check_eps(eps)
    h = eps / (2 + 2 * R)
    return ExtractorNetwork("re", h, meta=PrimitiveSpec("re", R=R, eps=eps).as_meta())


def build_im(R, eps):
    """Shallow network with ``|out - Im z| <= eps`` on ``|z| <= R``."""
    R, eps = float(R), float(eps)
    _check_radius(R)
    _check_eps(eps)
    h = eps / (2 + 2 * R)
    return ExtractorNetwork("im", h, meta=PrimitiveSpec("im", R=R, eps=eps).as_meta())


def extractor_weight_bound(h):
    return max(8 / h, 4 / h**3)


# --------------------------------------------------------------------------
# shifted ReLU, |Re z|, tent map

def _relu_head(R, c):
    """``x -> sigma(1 + h (x + c)) / h``, exact ReLU for ``|x + c| <= 1/(2h)``."""
    h = 1.0 / (2.0 * (R + abs(c)))
    return ModReLUNetwork([AffineLayer([[h]], [1 + h * c]), AffineLayer([[1 / h]], [0.0])])


def _relu(extractor, R, c, kind):
    net = Serial([extractor, _relu_head(R, c)])
    net.meta.update(PrimitiveSpec(kind, R=R, eps=extractor.meta["eps"], c=float(c)).as_meta())
    return net


def build_relu_re(R, c, eps):
    """``|out - relu(Re z + c)| <= eps`` on ``|z| <= R`` (depth 3, 4 hidden neurons)."""
    R, c = float(R), float(c)
    return _relu(build_re(R, eps), R, c, "relu_re")


def build_relu_im(R, c, eps):
    R, c = float(R), float(c)
    return _relu(build_im(R, eps), R, c, "relu_im")


def build_abs_re(R, eps, extractor=None):
    """``relu(Re z) + relu(-Re z)`` approximated to ``2 eps`` on ``|z| <= R``."""
    R = float(R)
    if extractor is None:
        extractor = build_re(R, eps)
    relu = _relu(extractor, R, 0.0, "relu_re")
    neg = Serial([linear_network([[-1.0]]), relu])
    return WeightedSum([relu, neg], [1.0, 1.0],
                       meta=PrimitiveSpec("abs_re", R=R, eps=float(eps)).as_meta())


def build_g_re(R, eps):
    """Tent map of ``Re z`` to within ``8 eps`` on ``|z| <= R``."""
    R, eps = float(R), float(eps)
    ex = build_re(R, eps)
    parts = [_relu(ex, R, c, "relu_re") for c in (0.0, -0.5, -1.0)]
    return WeightedSum(parts, [2.0, -4.0, 2.0],
                       meta=PrimitiveSpec("g_re", R=R, eps=eps).as_meta())


# --------------------------------------------------------------------------
# squares

def sawtooth_count(eps):
    """Smallest useful ``m`` with ``2**(-2m-2) <= eps`` (never negative)."""
    return max(0, math.ceil(0.5 * math.log2(1.0 / eps) - 1.0))


def square_depth(m):
    return 2 * m + 3 if m >= 1 else 3


def build_square_re(R, eps_target):
    """``Re(z)**2`` to within ``eps_target`` on ``|z| <= R, |Re z| <= 1``.

    Built from the ``18 eps`` construction with ``eps = eps_target / 18``:
    an approximate ``|Re z|`` feeds ``f_m``, realized as the extracted real
    part minus ``sum_s g^s / 4**s`` with every branch padded by identity
    networks of radius ``R + 1`` to the common depth ``2m + 1``.
    """
    R, eps_target = float(R), float(eps_target)
    _check_radius(R, 3.0)
    _check_eps(eps_target)
    eps = eps_target / 18.0
    if not eps < min(1.0, R / 8.0):
        raise ParameterError(f"internal accuracy {eps} must be below min(1, R/8)")
    m = sawtooth_count(eps)
    ex = build_re(R, eps)
    absolute = build_abs_re(R, eps, extractor=ex)
    g = build_g_re(R + m, eps)
    depth = max(2, 2 * m + 1)
    pad = R + 1.0
    branches = [_padded([ex], depth, pad)]
    coeffs = [1.0]
    for s in range(1, m + 1):
        branches.append(_padded([g] * s, depth, pad))
        coeffs.append(-(4.0 ** -s))
    f_m = WeightedSum(branches, coeffs)
    net = Serial([absolute, f_m],
                 meta=PrimitiveSpec("square_re", R=R, eps=eps_target, m=m).as_meta())
    return net


def _padded(chain, depth, radius):
    current = sum(n.depth for n in chain) - (len(chain) - 1)
    if current < depth:
        chain = list(chain) + [identity_chain(depth - current + 1, radius)]
    return Serial(chain)


def build_square_im(R, eps_target):
    """``Im(z)**2`` via ``Re(-i z) = Im z``."""
    sq = build_square_re(R, eps_target)
    net = Serial([linear_network([[-1j]]), sq])
    net.meta.update(PrimitiveSpec("square_im", R=float(R), eps=float(eps_target),
                                  m=sq.meta["m"]).as_meta())
    return net


# --------------------------------------------------------------------------
# products

def _check_product_args(R, M, eps_target):
    _check_radius(R, 3.0)
    if not (np.isfinite(M) and M >= 1):
        raise ParameterError(f"magnitude bound M must be >= 1, got {M}")
    _check_eps(eps_target, 3.0 / 8.0)


def build_product_re(R, M, eps_target, square=None):
    """``Re(z) Re(w)`` to ``eps_target`` for ``|z|,|w| <= R``, ``|Re z|,|Re w| <= M``.

    Polarization through three copies of one square network built at accuracy
    ``eps_target / (6 M**2)``.
    """
    R, M, eps_target = float(R), float(M), float(eps_target)
    _check_product_args(R, M, eps_target)
    if square is None:
        square = build_square_re(R, eps_target / (6 * M * M))
    k = 1.0 / (2 * M)
    pre = [[[k, k]], [[k, 0.0]], [[0.0, k]]]
    children = [Serial([linear_network(A), square]) for A in pre]
    scale = 2 * M * M
    return WeightedSum(children, [scale, -scale, -scale],
                       meta=PrimitiveSpec("product_re", R=R, eps=eps_target, M=M,
                                          m=square.meta["m"]).as_meta())


def build_product(R, M, eps_target):
    """Complex product ``z w`` to ``eps_target`` on the certified domain.

    Four real-part products of rotated inputs, each at ``eps_target / 4``.
    """
    R, M, eps_target = float(R), float(M), float(eps_target)
    _check_product_args(R, M, eps_target)
    prod_re = build_product_re(R, M, eps_target / 4)
    rotations = [np.diag([1, 1]), np.diag([-1j, -1j]), np.diag([1, -1j]), np.diag([-1j, 1])]
    children = [Serial([linear_network(A), prod_re]) for A in rotations]
    return WeightedSum(children, [1, -1, 1j, 1j],
                       meta=PrimitiveSpec("product", R=R, eps=eps_target, M=M,
                                          m=prod_re.meta["m"]).as_meta())


# --------------------------------------------------------------------------
# bumps

def build_psi_re():
    """``1 - sigma(z + 1/2) + sigma(z - 1/2)``: the trapezoid bump on real inputs."""
    return ModReLUNetwork([AffineLayer([[1.0], [1.0]], [0.5, -0.5]),
                           AffineLayer([[-1.0, 1.0]], [1.0])],
                          meta=PrimitiveSpec("psi_re").as_meta())


def build_psi_im():
    """``i - sigma(z + i/2) + sigma(z - i/2)``: ``i`` times the bump on ``i R``."""
    return ModReLUNetwork([AffineLayer([[1.0], [1.0]], [0.5j, -0.5j]),
                           AffineLayer([[-1.0, 1.0]], [1j])],
                          meta=PrimitiveSpec("psi_im").as_meta())


def build_from_spec(kind, R=None, eps=None, c=None, M=None):
    """Dispatch used by deserialization and the CLI."""
    builders = {
        "identity": lambda: build_identity(R),
        "re": lambda: build_re(R, eps),
        "im": lambda: build_im(R, eps),
        "relu_re": lambda: build_relu_re(R, c, eps),
        "relu_im": lambda: build_relu_im(R, c, eps),
        "abs_re": lambda: build_abs_re(R, eps),
        "g_re": lambda: build_g_re(R, eps),
        "square_re": lambda: build_square_re(R, eps),
        "square_im": lambda: build_square_im(R, eps),
        "product_re": lambda: build_product_re(R, M, eps),
        "product": lambda: build_product(R, M, eps),
        "psi_re": build_psi_re,
        "psi_im": build_psi_im,
    }
    if kind not in builders:
        raise ParameterError(f"unknown primitive {kind!r}; choose from {sorted(builders)}")
    return builders[kind]()


PRIMITIVE_KINDS = ("identity", "re", "im", "relu_re", "relu_im", "abs_re", "g_re",
                   "square_re", "square_im", "product_re", "product", "psi_re", "psi_im")

