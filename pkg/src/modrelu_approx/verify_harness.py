"""Empirical checks of error bounds and size claims.

Every check produces a :class:`VerificationReport`: the largest observed
error over a deterministic grid plus seeded random samples of the domain on
which the claim is certified, together with the bound and where the maximum
was attained.  Random points come from numpy's PCG64 generator seeded with the
given integer, so reports are reproducible bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import primitives as P
from .network_core import DimensionError, identity_network, modrelu
from .targets import catalog_target
from .taylor_compiler import (
    build_plan,
    compile as compile_target,
    grid_indices,
    reference_phi,
)

__all__ = [
    "Domain",
    "SweepResult",
    "SweepRow",
    "VerificationReport",
    "check_lipschitz",
    "evaluate_parallel",
    "chained_product_recursion",
    "chained_product_report",
    "lemma_f_m",
    "lemma_magnitude",
    "lemma_oracles",
    "lemma_re_im_h",
    "partition_cube_report",
    "partition_report",
    "plan_summary",
    "run_suite",
    "sup_error",
    "sweep",
    "theorem_report",
    "write_reports",
    "SUITES",
]


# --------------------------------------------------------------------------
# domains

@dataclass(frozen=True)
class Domain:
    """Certified input region of a claim.

    ``disk``: every one of ``dim`` coordinates has modulus at most ``R``.
    ``cube``: real and imaginary parts of ``dim`` coordinates lie in [0, 1].
    ``disk_real_bound``: ``|z| <= R`` and ``|Re z| <= M`` per coordinate; with
    ``box=True`` also ``|Im z| <= M``.
    ``disk_imag_bound``: ``|z| <= R`` and ``|Im z| <= M`` per coordinate.
    """

    kind: str
    R: float = 1.0
    M: float = 1.0
    dim: int = 1
    box: bool = False

    @classmethod
    def disk(cls, R, dim=1):
        return cls("disk", R=float(R), dim=dim)

    @classmethod
    def cube(cls, d):
        return cls("cube", dim=d)

    @classmethod
    def disk_real_bound(cls, R, M, dim=1, box=False):
        return cls("disk_real_bound", R=float(R), M=float(M), dim=dim, box=box)

    @classmethod
    def disk_imag_bound(cls, R, M, dim=1):
        return cls("disk_imag_bound", R=float(R), M=float(M), dim=dim)

    def __post_init__(self):
        if self.kind not in ("disk", "cube", "disk_real_bound", "disk_imag_bound"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.R <= 0 or self.M <= 0 or self.dim < 1:
            raise ValueError("domain parameters must be positive")

    def contains(self, z):
        z = np.atleast_2d(z)
        if self.kind == "cube":
            return np.all((z.real >= 0) & (z.real <= 1) & (z.imag >= 0) & (z.imag <= 1), axis=1)
        ok = np.abs(z) <= self.R
        if self.kind == "disk_real_bound":
            ok &= np.abs(z.real) <= self.M
            if self.box:
                ok &= np.abs(z.imag) <= self.M
        elif self.kind == "disk_imag_bound":
            ok &= np.abs(z.imag) <= self.M
        return np.all(ok, axis=1)

    def _box(self):
        if self.kind == "cube":
            return 0.0, 1.0, 0.0, 1.0
        bounded_re = self.kind == "disk_real_bound"
        bounded_im = self.kind == "disk_imag_bound" or (bounded_re and self.box)
        re = min(self.R, self.M) if bounded_re else self.R
        im = min(self.R, self.M) if bounded_im else self.R
        return -re, re, -im, im

    def grid(self, samples):
        """Tensor grid with ``floor(samples**(1/(2 dim)))`` nodes per real axis."""
        per_axis = max(2, int(math.floor(samples ** (1.0 / (2 * self.dim)) + 1e-9)))
        lo_r, hi_r, lo_i, hi_i = self._box()
        re = np.linspace(lo_r, hi_r, per_axis)
        im = np.linspace(lo_i, hi_i, per_axis)
        axes = [re] * self.dim + [im] * self.dim
        mesh = np.meshgrid(*axes, indexing="ij")
        flat = np.stack([m.ravel() for m in mesh], axis=1)
        z = flat[:, :self.dim] + 1j * flat[:, self.dim:]
        return z[self.contains(z)]

    def random(self, samples, rng):
        if self.kind == "cube":
            return rng.random((samples, self.dim)) + 1j * rng.random((samples, self.dim))
        if self.kind == "disk":
            r = self.R * np.sqrt(rng.random((samples, self.dim)))
            return r * np.exp(2j * np.pi * rng.random((samples, self.dim)))
        out = np.empty((0, self.dim), dtype=np.complex128)
        lo_r, hi_r, lo_i, hi_i = self._box()
        while out.shape[0] < samples:
            k = 2 * (samples - out.shape[0]) + 16
            z = (rng.uniform(lo_r, hi_r, (k, self.dim))
                 + 1j * rng.uniform(lo_i, hi_i, (k, self.dim)))
            out = np.concatenate([out, z[self.contains(z)]])
        return out[:samples]

    def describe(self):
        if self.kind == "cube":
            return f"cube(d={self.dim})"
        if self.kind == "disk":
            return f"disk(R={self.R:g}, dim={self.dim})"
        if self.kind == "disk_imag_bound":
            return f"disk(R={self.R:g}, |Im|<={self.M:g}, dim={self.dim})"
        return f"disk(R={self.R:g}, |Re|{'/|Im|' if self.box else ''}<={self.M:g}, dim={self.dim})"


# --------------------------------------------------------------------------
# reports

@dataclass
class VerificationReport:
    claim: str
    samples: int
    max_error: float
    bound: float
    passed: bool
    max_location: list
    runtime_s: float
    seed: int | None = None
    details: dict = field(default_factory=dict)

    def as_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.as_dict(), sort_keys=True, default=_jsonable)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.claim}: max error {self.max_error:.3e} vs bound "
                f"{self.bound:.3e} over {self.samples} samples ({self.runtime_s:.2f}s)")


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(type(obj).__name__)


def _location(z):
    z = np.atleast_1d(z)
    return [[float(c.real), float(c.imag)] for c in z]


def _make_report(claim, pts, err, bound, t0, seed=None, details=None):
    err = np.asarray(err, dtype=float)
    k = int(np.argmax(err)) if err.size else 0
    worst = float(err[k]) if err.size else 0.0
    loc = _location(pts[k]) if err.size else []
    passed = bool(worst <= bound) and bool(np.all(np.isfinite(err)))
    return VerificationReport(claim, int(err.size), worst, float(bound), passed, loc,
                              time.perf_counter() - t0, seed, details or {})


def write_reports(reports, path_or_file):
    """JSON lines, one report per line."""
    text = "".join(r.to_json() + "\n" for r in reports)
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", encoding="utf-8") as fh:
            fh.write(text)


# --------------------------------------------------------------------------
# evaluation

def _thread_count():
    try:
        n = int(os.environ.get("MODRELU_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def evaluate_parallel(net, z, threads=None, chunk=None):
    """Evaluate ``net`` on a batch, splitting it over a thread pool.

    Chunks are reassembled in order, so the result does not depend on the
    number of threads.
    """
    z = np.atleast_2d(np.asarray(z, dtype=np.complex128))
    threads = threads or _thread_count()
    if threads <= 1 or z.shape[0] < 2 * threads:
        return net(z)
    chunk = chunk or max(1, math.ceil(z.shape[0] / threads))
    pieces = [z[k:k + chunk] for k in range(0, z.shape[0], chunk)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.concatenate(list(pool.map(net, pieces)))


def _points(domain, samples, seed):
    rng = np.random.default_rng(seed)
    return np.concatenate([domain.grid(samples), domain.random(samples, rng)])


def sup_error(net, reference, domain, samples=10_000, seed=42, bound=float("inf"),
              claim="sup_error", scale=None, grid=True):
    """Largest ``|net(z) - reference(z)|`` over grid and random points of ``domain``.

    ``reference`` maps a batch of shape (k, dim) to k values.  With ``scale``
    the error at ``z`` is divided by ``scale(z)`` (for relative bounds).
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    if net.d_in != domain.dim:
        raise DimensionError(f"network takes {net.d_in} inputs, domain has dimension {domain.dim}")
    t0 = time.perf_counter()
    if grid:
        pts = _points(domain, samples, seed)
    else:
        pts = domain.random(samples, np.random.default_rng(seed))
    out = evaluate_parallel(net, pts)
    out = out.reshape(pts.shape[0], -1)
    ref = np.asarray(reference(pts), dtype=np.complex128).reshape(out.shape)
    err = np.max(np.abs(out - ref), axis=1)
    if scale is not None:
        err = err / scale(pts)
    return _make_report(claim, pts, err, bound, t0, seed, {"domain": domain.describe()})


# --------------------------------------------------------------------------
# modReLU Lipschitz check

def check_lipschitz(samples=1_000_000, seed=42, radius=10.0, slack=1e-12):
    """``|sigma(z) - sigma(w)| <= |z - w|`` on pairs stratified by the four cases.

    The cases are: both in the unit disk, exactly one of them inside, and both
    outside; a share of near-equal and equal pairs is mixed into the last.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    q = samples // 4
    sizes = [q, q, q, samples - 3 * q]

    def ring(k, lo, hi):
        r = np.sqrt(rng.uniform(lo * lo, hi * hi, k))
        return r * np.exp(2j * np.pi * rng.random(k))

    z_parts, w_parts = [], []
    bounds = [(0, 1), (0, 1)], [(0, 1), (1, radius)], [(1, radius), (0, 1)], \
        [(1, radius), (1, radius)]
    for k, ((a, b), (c, e)) in zip(sizes, bounds):
        z_parts.append(ring(k, a, b))
        w_parts.append(ring(k, c, e))
    # Near pairs on the same side of the unit circle exercise small differences.
    near = sizes[3] // 4
    w_parts[3][:near] = z_parts[3][:near] * (1 + 1e-6 * rng.standard_normal(near))
    w_parts[3][near:near + 8] = z_parts[3][near:near + 8]
    z = np.concatenate(z_parts)
    w = np.concatenate(w_parts)
    lhs = np.abs(modrelu(z) - modrelu(w))
    rhs = np.abs(z - w)
    excess = lhs - rhs
    labels = ("both_inside", "inside_outside", "outside_inside", "both_outside")
    details, start = {}, 0
    for label, k in zip(labels, sizes):
        details[label] = {"pairs": k, "max_excess": float(np.max(excess[start:start + k]))}
        start += k
    details["both_inside_max_difference"] = float(np.max(lhs[:sizes[0]]))
    pts = np.stack([z, w], axis=1)
    return _make_report("modrelu_lipschitz", pts, excess, slack, t0, seed, details)


# --------------------------------------------------------------------------
# lemma oracles (direct, non-network checks unless noted)

def lemma_re_im_h(h, radius=40.0, samples=10_000, part="re"):
    """``|Re z - Re_h(z)| <= 2 h |z|`` (or the Im analogue) on a grid.

    The grid is refined until at least ``samples`` of its nodes satisfy the
    hypothesis ``h < 1/(2 + 2|z|)``; the reported error is the ratio to the
    bound.
    """
    t0 = time.perf_counter()
    R = min(radius, 1 / (2 * h) - 1)
    n = samples
    while True:
        z = Domain.disk(R).grid(n)[:, 0]
        z = z[h < 1 / (2 + 2 * np.abs(z))]
        if z.size >= samples:
            break
        n = int(n * 1.3) + 1
    if part == "re":
        err = np.abs(z.real - P.ref_re_h(z, h))
    else:
        err = np.abs(z.imag - P.ref_im_h(z, h))
    bound_at = 2 * h * np.abs(z)
    ratio = np.where(bound_at > 0, err / np.where(bound_at > 0, bound_at, 1), err)
    return _make_report(f"lemma_re_im_h[{part},h={h:g}]", z, ratio, 1.0, t0,
                        details={"radius": R, "note": "error / (2 h |z|)"})


def chained_product_recursion(M, eps, delta, trials=1000, seed=42, mode="mixed"):
    """Simulate ``gamma_{j+1} = x(beta_{j+1}, gamma_j)`` with synthetic errors.

    ``x`` is the exact product plus a perturbation of modulus ``eps`` and
    every ``beta_j`` is ``alpha_j`` plus one of modulus ``delta``, with
    ``|alpha_j| <= 1``.  Perturbation phases are random or aligned with the
    current error (the unfavourable direction).  Returns the largest ratio of
    ``|gamma_j - theta_j|`` to ``kappa_j`` over all steps, and the largest final
    error.
    """
    if not (0 < eps < 1 / (M + 1) and 0 < delta <= eps * eps):
        raise ValueError("need eps in (0, 1/(M+1)) and 0 < delta <= eps**2")
    if mode not in ("random", "aligned", "mixed"):
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    aligned = np.zeros(trials, dtype=bool)
    aligned[: trials if mode == "aligned" else trials // 2 if mode == "mixed" else 0] = True
    r = np.sqrt(rng.random((trials, M)))
    # The unfavourable trials put every factor on the unit circle.
    r[aligned] = 1.0
    alpha = r * np.exp(2j * np.pi * rng.random((trials, M)))
    beta = alpha + delta * np.exp(2j * np.pi * rng.random((trials, M)))
    kappa = np.array([eps * sum((1 + eps) ** l for l in range(1, j + 1))
                      for j in range(1, M + 1)])
    theta = alpha[:, 0].copy()
    gamma = beta[:, 0].copy()
    worst_ratio = np.max(np.abs(gamma - theta)) / kappa[0]
    for j in range(1, M):
        exact = beta[:, j] * gamma
        err_dir = gamma - theta
        unit = np.where(np.abs(err_dir) > 0, err_dir / np.where(np.abs(err_dir) > 0,
                                                               np.abs(err_dir), 1), 1.0)
        rand = np.exp(2j * np.pi * rng.random(trials))
        gamma = exact + eps * np.where(aligned, unit, rand)
        theta = theta * alpha[:, j]
        worst_ratio = max(worst_ratio, float(np.max(np.abs(gamma - theta)) / kappa[j]))
    final = np.abs(gamma - theta)
    return float(worst_ratio), final


def chained_product_report(M, eps, delta, trials=1000, seed=42):
    t0 = time.perf_counter()
    ratio, final = chained_product_recursion(M, eps, delta, trials, seed)
    rep = _make_report(f"lemma_chained_product[M={M},eps={eps:g}]",
                       np.zeros((final.size, 1)), final, 3 * M * eps, t0, seed,
                       {"max_error_over_kappa": ratio})
    rep.passed = rep.passed and ratio <= 1.0 + 1e-12
    return rep


def lemma_f_m(m, samples=100_000):
    t0 = time.perf_counter()
    x = np.linspace(0, 1, samples)
    err = np.abs(x * x - P.ref_f_m(m, x))
    outside = np.concatenate([np.linspace(-5, -1e-9, 1000), np.linspace(1 + 1e-9, 5, 1000)])
    off = np.abs(P.ref_f_m(m, outside) - outside)
    rep = _make_report(f"sawtooth_square[m={m}]", x, err, 2.0 ** (-2 * m - 2), t0,
                       details={"outside_max_deviation": float(off.max())})
    rep.passed = rep.passed and float(off.max()) == 0.0
    return rep


def lemma_magnitude(R=3.0, m=6, eps=0.1, samples=4000, seed=42):
    """Iterates of the network tent map keep ``|z| <= R + 1`` inside that disk.

    Sampling the larger disk and its boundary covers the self-map property,
    which implies the bound for starting points with ``|z| <= R``.
    """
    t0 = time.perf_counter()
    g = P.build_g_re(R + m, eps)
    dom = Domain.disk(R + 1)
    rng = np.random.default_rng(seed)
    theta = np.linspace(0, 2 * np.pi, samples, endpoint=False)
    z = np.concatenate([dom.grid(samples)[:, 0], (R + 1) * np.exp(1j * theta),
                        dom.random(samples, rng)[:, 0]])
    y = z[:, None]
    worst = np.zeros(z.size)
    for _ in range(m):
        y = g(y)
        worst = np.maximum(worst, np.abs(y[:, 0]))
    return _make_report(f"tent_iterate_magnitude[R={R:g},m={m}]", z, worst, R + 1, t0, seed)


def lemma_oracles(seed=42, samples=10_000):
    """Independent reports for each of the elementary inequalities."""
    reports = []
    for h in (0.01, 0.001):
        for part in ("re", "im"):
            reports.append(lemma_re_im_h(h, 40.0, samples, part))
    for m in range(7):
        reports.append(lemma_f_m(m))
    for eps in (0.1, 0.01):
        net = P.build_g_re(3.0, eps)
        reports.append(sup_error(net, lambda z: P.ref_g(z[:, 0].real), Domain.disk(3),
                                 samples, seed, 8 * eps, f"tent_network[eps={eps:g}]"))
        net = P.build_abs_re(3.0, eps)
        reports.append(sup_error(net, lambda z: np.abs(z[:, 0].real), Domain.disk(3),
                                 samples, seed, 2 * eps, f"abs_network[eps={eps:g}]"))
    reports.append(lemma_magnitude(seed=seed))
    reports.append(chained_product_report(7, 0.01, 1e-4, 1000, seed))
    return reports


# --------------------------------------------------------------------------
# claim suites

class _RawLayers:
    """View of a network evaluated through its float64 matrices."""

    def __init__(self, net):
        self.net = net
        self.d_in = net.d_in

    def __call__(self, z):
        return self.net.forward_layers(z)


def _identity_reports(seed, samples):
    out = []
    for R in (1.0, 10.0, 100.0):
        out.append(sup_error(_RawLayers(identity_network(R)), lambda z: z[:, 0], Domain.disk(R),
                             samples, seed, 1e-10, f"identity[R={R:g}]",
                             scale=lambda z: 1 + np.abs(z[:, 0])))
    return out


def _primitive_reports(seed, samples):
    out = []
    for eps in (0.1, 0.01, 0.001):
        out.append(sup_error(P.build_re(2, eps), lambda z: z[:, 0].real, Domain.disk(2),
                             samples, seed, eps, f"re_network[eps={eps:g}]"))
        out.append(sup_error(P.build_im(2, eps), lambda z: z[:, 0].imag, Domain.disk(2),
                             samples, seed, eps, f"im_network[eps={eps:g}]"))
    for c in (0.0, -0.5, 1.0):
        out.append(sup_error(P.build_relu_re(2, c, 0.01),
                             lambda z, c=c: np.maximum(z[:, 0].real + c, 0), Domain.disk(2),
                             samples, seed, 0.01, f"relu_network[c={c:g}]"))
    out.append(sup_error(P.build_square_re(3, 0.2), lambda z: z[:, 0].real ** 2,
                         Domain.disk_real_bound(3, 1), samples, seed, 0.2, "square_network"))
    out.append(sup_error(P.build_square_im(3, 0.2), lambda z: z[:, 0].imag ** 2,
                         Domain.disk_imag_bound(3, 1), samples, seed, 0.2, "square_im_network"))
    out.append(sup_error(P.build_product(3, 1, 0.1), lambda z: z[:, 0] * z[:, 1],
                         Domain.disk_real_bound(3, 1, dim=2, box=True), samples, seed, 0.1,
                         "product_network"))
    return out


def partition_report(N, points=1000, seed=42):
    """``sum_m phi_m = 1`` on [0, 1] for the one-dimensional bumps."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    x = np.concatenate([rng.random(points), np.linspace(0, 1, 101)])
    net = P.build_psi_re()
    total = np.zeros(x.size, dtype=np.complex128)
    for m in range(2 * N + 1):
        total += net((4 * N * x - 2 * m)[:, None])[:, 0]
    return _make_report(f"partition_of_unity[N={N}]", x, np.abs(total - 1), 1e-10, t0, seed)


def partition_cube_report(N, d=1, points=1000, seed=42):
    """Reference ``sum_m phi_m = 1`` on ``[0, 1]**(2d)``."""
    t0 = time.perf_counter()
    x = np.random.default_rng(seed).random((points, 2 * d))
    total = sum(reference_phi(g, N, x) for g in grid_indices(N, d))
    return _make_report(f"partition_of_unity_cube[N={N},d={d}]", x, np.abs(total - 1), 1e-10,
                        t0, seed)


def theorem_report(eps=0.3, d=1, n=2, target="quad", grid=41, seed=42):
    """Compile a catalog target and measure its error on a tensor grid of the cube."""
    t0 = time.perf_counter()
    g_re, g_im = catalog_target(target, d, n)
    net = compile_target((g_re, g_im), eps)
    pts = _cube_grid(d, grid)
    out = evaluate_parallel(net, pts)[:, 0]
    x = np.concatenate([pts.real, pts.imag], axis=1)
    err = np.abs(out - (g_re(x) + 1j * g_im(x)))
    st = net.stats()
    return _make_report(f"theorem[{target},eps={eps:g},d={d},n={n}]", pts, err, eps, t0, seed,
                        {"stats": st.as_dict(), "N": net.plan.N, "S": net.plan.S})


def _cube_grid(d, per_axis):
    axis = np.linspace(0, 1, per_axis)
    mesh = np.meshgrid(*([axis] * (2 * d)), indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=1)
    return flat[:, :d] + 1j * flat[:, d:]


SUITES = ("lipschitz", "identity", "lemmas", "primitives", "partition", "theorem", "all")


def run_suite(name, seed=42, samples=10_000):
    """Reports of a named claim suite."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")
    if name == "all":
        return [r for s in SUITES[:-1] for r in run_suite(s, seed, samples)]
    if name == "lipschitz":
        return [check_lipschitz(max(samples, 4), seed)]
    if name == "identity":
        return _identity_reports(seed, samples)
    if name == "lemmas":
        return lemma_oracles(seed, samples)
    if name == "primitives":
        return _primitive_reports(seed, samples)
    if name == "partition":
        return ([partition_report(N, seed=seed) for N in (1, 5, 20)]
                + [partition_cube_report(N, seed=seed) for N in (1, 5)])
    return [theorem_report(seed=seed)]


# --------------------------------------------------------------------------
# sweeps

@dataclass
class SweepRow:
    epsilon: float
    depth: int
    weights: int
    max_weight: float
    sup_error: float
    build_ms: float
    eval_ms: float
    error: str | None = None

    def csv_fields(self):
        return [f"{self.epsilon:g}", str(self.depth), str(self.weights),
                f"{self.max_weight:.6e}", f"{self.sup_error:.6e}",
                f"{self.build_ms:.1f}", f"{self.eval_ms:.1f}"]


CSV_HEADER = ["epsilon", "depth", "weights", "max_weight", "sup_error", "build_ms", "eval_ms"]


@dataclass
class SweepResult:
    rows: list
    d: int
    n: int
    target: str
    weight_slope: float = float("nan")
    depth_constant: float = float("nan")
    weight_constant: float = float("nan")
    max_weight_slope: float = float("nan")
    checks: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.checks.values())

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in self.rows:
            writer.writerow(row.csv_fields())
        return buf.getvalue()

    def summary(self):
        return {"d": self.d, "n": self.n, "target": self.target,
                "weight_slope": self.weight_slope, "depth_constant": self.depth_constant,
                "weight_constant": self.weight_constant,
                "max_weight_slope": self.max_weight_slope, "checks": self.checks}


def sweep(eps_list, d=1, n=2, target="quad", grid=41, seed=42):
    """Compile at each accuracy, record size and observed error, fit growth rates.

    Fitted quantities: the least-squares slope of ``log W`` against
    ``log(1/eps)``; the constant ``c`` of ``depth <= c ln(1/eps)`` and of
    ``W <= c eps**(-2d/n) ln(1/eps)**2``, both taken at the largest ``eps`` and
    required to hold within a factor 2 on every row; and the slope of the
    log maximal weight.  A row that fails to build is kept with its message.
    """
    eps_list = sorted((float(e) for e in eps_list), reverse=True)
    for e in eps_list:
        if not 0 < e < 3 / 8:
            raise ValueError(f"accuracy {e} outside (0, 3/8)")
    g_re, g_im = catalog_target(target, d, n)
    pts = _cube_grid(d, grid)
    x = np.concatenate([pts.real, pts.imag], axis=1)
    exact = g_re(x) + 1j * g_im(x)
    rows = []
    for e in eps_list:
        try:
            t0 = time.perf_counter()
            net = compile_target((g_re, g_im), e)
            st = net.stats()
            t1 = time.perf_counter()
            out = evaluate_parallel(net, pts)[:, 0]
            t2 = time.perf_counter()
            rows.append(SweepRow(e, st.depth, st.weight_count, st.max_weight_magnitude,
                                 float(np.max(np.abs(out - exact))),
                                 1000 * (t1 - t0), 1000 * (t2 - t1)))
        except Exception as exc:  # keep sweeping; the row records the failure
            rows.append(SweepRow(e, 0, 0, float("nan"), float("nan"), 0.0, 0.0, repr(exc)))
    result = SweepResult(rows, d, n, target)
    good = [r for r in rows if r.error is None]
    result.checks["all_rows_built"] = len(good) == len(rows)
    result.checks["errors_within_eps"] = all(r.sup_error <= r.epsilon for r in good)
    if len(good) >= 2:
        inv = np.log([1 / r.epsilon for r in good])
        result.weight_slope = float(np.polyfit(inv, np.log([r.weights for r in good]), 1)[0])
        result.max_weight_slope = float(
            np.polyfit(inv, np.log([r.max_weight for r in good]), 1)[0])
        result.checks["weight_slope"] = result.weight_slope <= 2 * d / n + 1
    if good:
        ref = good[0]
        L = math.log(1 / ref.epsilon)
        result.depth_constant = ref.depth / L
        result.weight_constant = ref.weights / (ref.epsilon ** (-2 * d / n) * L * L)
        result.checks["depth_log_bound"] = all(
            r.depth <= 2 * result.depth_constant * math.log(1 / r.epsilon) for r in good)
        result.checks["weight_bound"] = all(
            r.weights <= 2 * result.weight_constant * r.epsilon ** (-2 * d / n)
            * math.log(1 / r.epsilon) ** 2 for r in good)
        result.checks["max_weight_finite"] = all(math.isfinite(r.max_weight) for r in good)
    return result


def plan_summary(eps, d, n):
    plan = build_plan(d, n, eps)
    return {k: v for k, v in plan.as_meta().items() if k != "terms"}
