"""Compile a smooth function on the complex unit cube into a modReLU network.

Approximation proceeds in two steps.  First the target is replaced by the
partition-of-unity Taylor approximant

    f_*(x) = sum_m phi_m(x) P_m(x),

a sum over grid points ``m / 2N`` of local Taylor polynomials of degree
``n - 1`` weighted by products of trapezoid bumps.  Every summand
``phi_m(x) (x - m/2N)**nu`` is a product of ``M = 2d + |nu|`` scalar factors,
and the network computes it by feeding approximations of those factors into a
chain of approximate complex multiplications.

Imaginary coordinates enter through ``i Im z``, so the network's version of a
summand equals ``i**c`` times the real one, where ``c`` counts imaginary
factors; the coefficients absorb ``i**(-c)``.  Since none of the term networks
depend on the target, real and imaginary parts share them and differ only in
the final coefficients.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .network_core import ParameterError, identity_chain, linear_network
from .primitives import build_im, build_product, build_psi_im, build_psi_re, build_re, ref_psi
from .structured import Parallel, Serial, WeightedSum
from .targets import TargetFunction

__all__ = [
    "CompilerPlan",
    "GridIndex",
    "MultiIndex",
    "Term",
    "alpha_factors",
    "build_beta_networks",
    "build_f_mn",
    "build_plan",
    "choose_N",
    "compile",
    "evaluate_on_cube",
    "grid_indices",
    "multi_indices",
    "reference_f_mn",
    "reference_f_star",
    "reference_phi",
    "taylor_coefficients",
]

CHAIN_RADIUS = 4.0
_I_POWERS = (1, 1j, -1, -1j)
EVAL_CHUNK = 48


def choose_N(eps, d, n):
    """Grid resolution making the Taylor-partition error at most ``eps / 2``."""
    if not 0 < eps < 3 / 8:
        raise ParameterError(f"accuracy must lie in (0, 3/8), got {eps}")
    value = (math.factorial(n) * eps / (2 * 4**d * d**n)) ** (-1.0 / n)
    N = math.ceil(value)
    # Guard against the ceiling landing one short through rounding.
    while step1_bound(N, d, n) > eps / 2:
        N += 1
    return max(N, 1)


def step1_bound(N, d, n):
    return 4**d * d**n / math.factorial(n) * N ** (-n)


@dataclass(frozen=True)
class GridIndex:
    """Grid point ``m / 2N`` of ``[0, 1]**(2d)``; entries lie in ``0..2N``.

    The first ``d`` entries index real coordinates, the last ``d`` imaginary
    ones.
    """

    m: tuple

    def point(self, N):
        return np.asarray(self.m, dtype=float) / (2 * N)


@dataclass(frozen=True)
class MultiIndex:
    nu: tuple

    @property
    def order(self):
        return sum(self.nu)

    def factorial(self):
        return math.prod(math.factorial(k) for k in self.nu)


def grid_indices(N, d):
    return [GridIndex(m) for m in itertools.product(range(2 * N + 1), repeat=2 * d)]


def multi_indices(n, d):
    """All ``nu`` in ``N_0**(2d)`` with ``|nu| < n``, lexicographic order."""
    return [MultiIndex(nu) for nu in itertools.product(range(n), repeat=2 * d) if sum(nu) < n]


@dataclass(frozen=True)
class Term:
    m: GridIndex
    nu: MultiIndex

    @property
    def factors(self):
        return len(self.m.m) + self.nu.order

    def imaginary_count(self, d):
        """Number of factors carrying a factor ``i`` in the network version."""
        return d + sum(self.nu.nu[d:])


@dataclass
class CompilerPlan:
    """All accuracy parameters and the term list of one compilation."""

    d: int
    n: int
    eps: float
    eps_component: float
    N: int
    S: int
    eps_tilde: float
    delta: float
    extractor_eps: float
    M_max: int
    step1_bound: float
    terms: list = field(repr=False, default_factory=list)

    def as_meta(self):
        return {
            "d": self.d, "n": self.n, "eps": self.eps, "eps_component": self.eps_component,
            "N": self.N, "S": self.S, "eps_tilde": self.eps_tilde, "delta": self.delta,
            "extractor_eps": self.extractor_eps, "M_max": self.M_max,
            "step1_bound": self.step1_bound,
            "terms": [[list(t.m.m), list(t.nu.nu)] for t in self.terms],
        }


def build_plan(d, n, eps, components=2):
    """Plan for accuracy ``eps`` in complex modulus.

    With two components each part is compiled at ``eps / sqrt(2)``; a single
    real component uses ``eps`` directly.
    """
    if not 0 < eps < 3 / 8:
        raise ParameterError(f"accuracy must lie in (0, 3/8), got {eps}")
    if d < 1 or n < 1:
        raise ParameterError(f"need d >= 1 and n >= 1, got d={d}, n={n}")
    eps_c = eps / math.sqrt(2) if components == 2 else eps
    N = choose_N(eps_c, d, n)
    terms = [Term(m, nu) for m in grid_indices(N, d) for nu in multi_indices(n, d)]
    S = len(terms)
    eps_tilde = eps_c / (6 * (2 * d + n) * S)
    return CompilerPlan(
        d=d, n=n, eps=eps, eps_component=eps_c, N=N, S=S,
        eps_tilde=eps_tilde, delta=eps_tilde**2,
        extractor_eps=eps_tilde**2 / (8 * N),
        M_max=2 * d + n - 1, step1_bound=step1_bound(N, d, n), terms=terms,
    )


# --------------------------------------------------------------------------
# real-arithmetic references

def reference_phi(m, N, x):
    """``phi_m`` at rows of ``x`` in ``[0, 1]**(2d)`` (real form of every bump)."""
    x = np.atleast_2d(x)
    out = np.ones(x.shape[0])
    for k, mk in enumerate(m.m if isinstance(m, GridIndex) else m):
        out *= ref_psi(4 * N * x[:, k] - 2 * mk)
    return out


def taylor_coefficients(target, N, indices=None):
    """``a[m, nu] = D^nu f(m / 2N) / nu!`` for every grid point and multi-index."""
    grid = grid_indices(N, target.d)
    indices = indices or multi_indices(target.n, target.d)
    pts = np.array([g.point(N) for g in grid])
    coeffs = {}
    for nu in indices:
        vals = target.derivative(nu.nu, pts) / nu.factorial()
        for g, v in zip(grid, vals):
            coeffs[(g.m, nu.nu)] = float(v)
    return coeffs


def reference_f_mn(m, nu, N, x):
    x = np.atleast_2d(x)
    centre = np.asarray(m.m, dtype=float) / (2 * N)
    mono = np.prod((x - centre) ** np.asarray(nu.nu), axis=1)
    return reference_phi(m, N, x) * mono


def reference_f_star(target, N, x):
    """Partition-of-unity Taylor approximant at rows of ``x`` in ``[0, 1]**(2d)``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    coeffs = taylor_coefficients(target, N)
    indices = multi_indices(target.n, target.d)
    out = np.zeros(x.shape[0])
    for g in grid_indices(N, target.d):
        phi = reference_phi(g, N, x)
        live = phi != 0
        if not np.any(live):
            continue
        diff = x[live] - g.point(N)
        poly = np.zeros(int(live.sum()))
        for nu in indices:
            poly += coeffs[(g.m, nu.nu)] * np.prod(diff ** np.asarray(nu.nu), axis=1)
        out[live] += phi[live] * poly
    return out


def alpha_factors(term, N, z):
    """Exact factors whose product is ``i**c f_mn(z)``; shape (batch, M)."""
    z = np.atleast_2d(np.asarray(z, dtype=np.complex128))
    d = z.shape[1]
    m = term.m.m
    cols = []
    for k in range(d):
        cols.append(ref_psi(4 * N * z[:, k].real - 2 * m[k]).astype(np.complex128))
    for k in range(d):
        cols.append(1j * ref_psi(4 * N * z[:, k].imag - 2 * m[d + k]))
    for ell in range(d):
        for _ in range(term.nu.nu[ell]):
            cols.append(z[:, ell].real - m[ell] / (2 * N) + 0j)
    for ell in range(d):
        for _ in range(term.nu.nu[d + ell]):
            cols.append(1j * (z[:, ell].imag - m[d + ell] / (2 * N)))
    return np.stack(cols, axis=1)


# --------------------------------------------------------------------------
# networks

class _Parts:
    """Shared building blocks of one plan, created once and reused by every term."""

    def __init__(self, plan):
        self.plan = plan
        self.re = build_re(CHAIN_RADIUS, plan.extractor_eps)
        self.im = build_im(CHAIN_RADIUS, plan.extractor_eps)
        self.product = build_product(CHAIN_RADIUS, CHAIN_RADIUS, plan.eps_tilde)
        self.psi_re = build_psi_re()
        self.psi_im = build_psi_im()
        self._factor_cache = {}
        self._tail_cache = {}
        self._pad_cache = {}

    def factor(self, kind, mk):
        """Scalar-input factor network of depth 3; ``mk`` is the grid entry."""
        key = (kind, mk)
        if key not in self._factor_cache:
            N = self.plan.N
            if kind == "psi_re":
                net = Serial([self.re, linear_network([[4 * N]], [-2 * mk]), self.psi_re])
            elif kind == "psi_im":
                net = Serial([self.im, linear_network([[4j * N]], [-2j * mk]), self.psi_im])
            elif kind == "mono_re":
                net = Serial([self.re, linear_network([[1.0]], [-mk / (2 * N)]),
                              identity_chain(2, CHAIN_RADIUS)])
            else:
                net = Serial([self.im, linear_network([[1j]], [-1j * mk / (2 * N)]),
                              identity_chain(2, CHAIN_RADIUS)])
            self._factor_cache[key] = net
        return self._factor_cache[key]

    def tail(self, M):
        """Chained products of ``M`` inputs: ``x(b_1, x(b_2, ... x(b_{M-1}, b_M)))``."""
        if M not in self._tail_cache:
            stages = []
            for width in range(M - 2, -1, -1):
                if width == 0:
                    stages.append(self.product)
                else:
                    keep = identity_chain(self.product.depth, CHAIN_RADIUS, width)
                    stages.append(Parallel([keep, self.product]))
            self._tail_cache[M] = Serial(stages) if len(stages) > 1 else stages[0]
        return self._tail_cache[M]

    def pad(self, extra):
        if extra not in self._pad_cache:
            self._pad_cache[extra] = identity_chain(extra + 1, CHAIN_RADIUS)
        return self._pad_cache[extra]


def _factor_specs(term, d):
    m = term.m.m
    specs = [(k, "psi_re", m[k]) for k in range(d)]
    specs += [(k, "psi_im", m[d + k]) for k in range(d)]
    for ell in range(d):
        specs += [(ell, "mono_re", m[ell])] * term.nu.nu[ell]
    for ell in range(d):
        specs += [(ell, "mono_im", m[d + ell])] * term.nu.nu[d + ell]
    return specs


def build_beta_networks(plan, m, nu, parts=None):
    """Factor networks ``beta_k``, each mapping ``C^d`` to one output."""
    parts = parts or _Parts(plan)
    term = Term(m if isinstance(m, GridIndex) else GridIndex(tuple(m)),
                nu if isinstance(nu, MultiIndex) else MultiIndex(tuple(nu)))
    nets = []
    for coord, kind, mk in _factor_specs(term, plan.d):
        select = np.zeros((1, plan.d))
        select[0, coord] = 1.0
        nets.append(Serial([linear_network(select), parts.factor(kind, mk)]))
    return nets


def _term_network(term, plan, parts):
    specs = _factor_specs(term, plan.d)
    select = np.zeros((len(specs), plan.d))
    for row, (coord, _, _) in enumerate(specs):
        select[row, coord] = 1.0
    head = Serial([linear_network(select),
                   Parallel([parts.factor(kind, mk) for _, kind, mk in specs])])
    return head, parts.tail(len(specs))


def build_f_mn(plan, m, nu, parts=None):
    """Network approximating ``i**c phi_m(x) (x - m/2N)**nu`` on the unit cube."""
    parts = parts or _Parts(plan)
    term = Term(m if isinstance(m, GridIndex) else GridIndex(tuple(m)),
                nu if isinstance(nu, MultiIndex) else MultiIndex(tuple(nu)))
    head, tail = _term_network(term, plan, parts)
    return Serial([head, tail])


def _as_pair(target):
    if isinstance(target, TargetFunction):
        return target, None
    re, im = target
    return re, im


def compile(target, eps):
    """Network ``g~`` with ``|g - g~| <= eps`` on the unit cube of ``C^d``.

    ``target`` is a real :class:`TargetFunction` (imaginary part zero) or a
    pair ``(g_re, g_im)``.  Both parts must have Sobolev norm at most one.
    """
    g_re, g_im = _as_pair(target)
    d, n = g_re.d, g_re.n
    if g_im is not None and (g_im.d, g_im.n) != (d, n):
        raise ValueError("real and imaginary parts must share d and n")
    for part in (g_re, g_im):
        if part is not None and part.sobolev_bound > 1:
            raise ParameterError(f"{part.name}: Sobolev bound {part.sobolev_bound} exceeds 1")
    plan = build_plan(d, n, eps, components=2 if g_im is not None else 1)
    parts = _Parts(plan)
    indices = multi_indices(n, d)
    a_re = taylor_coefficients(g_re, plan.N, indices)
    a_im = taylor_coefficients(g_im, plan.N, indices) if g_im is not None else None

    built = [(_term_network(t, plan, parts), t) for t in plan.terms]
    depth = max(h.depth + tl.depth - 1 for (h, tl), _ in built)
    children, coeffs = [], []
    for (head, tail), t in built:
        chain = [head, tail]
        short = depth - (head.depth + tail.depth - 1)
        if short:
            chain.append(parts.pad(short))
        children.append(Serial(chain))
        key = (t.m.m, t.nu.nu)
        a = a_re[key] + (1j * a_im[key] if a_im is not None else 0)
        coeffs.append(a * _I_POWERS[-t.imaginary_count(d) % 4])
    meta = {"kind": "compiled", "target": [g_re.name, g_im.name if g_im else None],
            "plan": plan.as_meta()}
    net = WeightedSum(children, coeffs, meta=meta)
    net.eval_chunk = EVAL_CHUNK
    net.plan = plan
    return net


def evaluate_on_cube(net, x):
    """Evaluate a compiled network at real cube points ``x`` of shape (batch, 2d)."""
    x = np.atleast_2d(x)
    d = x.shape[1] // 2
    return net(x[:, :d] + 1j * x[:, d:])[:, 0]

