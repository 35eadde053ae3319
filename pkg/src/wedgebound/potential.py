"""Image potential of a charge inside a perfectly polarisable wedge.

A point charge sits in the vacuum opening ``|theta| < alpha/2`` of a wedge
whose two faces are the half-lines ``theta = +-alpha/2``. In atomic units its
self-energy is::

    U(r, theta) = (k(alpha) - f(theta, alpha)) / (4 r)

with ``k`` and ``f`` given by integrals over ``eta`` in (0, 1). Both
integrands have a ``1/sqrt(eta)`` endpoint (removed by ``eta = t**2``) and a
removable 0/0 at ``eta = 1``. ``f`` diverges at the walls like
``(pi/alpha) / cos(pi theta / alpha)``; the bounded product
``w = f * cos(pi theta / alpha)`` is what gets tabulated for fast use.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C

from .numerics import QuadratureError, QuadratureSpec, integrate_unit

HARTREE_EV = 27.211386

__all__ = [
    "HARTREE_EV",
    "WedgeGeometry",
    "UnitsContext",
    "FieldGrid",
    "k_coefficient",
    "k_integrand",
    "f_integrand",
    "f_profile",
    "f_from_cos",
    "wall_profile",
    "image_potential_energy",
    "image_oracle",
    "potential_grid",
    "WallProfile",
    "kernel_cache",
]

_SPEC = QuadratureSpec(relative_tolerance=1e-12, absolute_tolerance=1e-15,
                       max_subdivisions=500, endpoint_hint="both")


@dataclass(frozen=True)
class WedgeGeometry:
    """Vacuum opening ``alpha`` of a wedge with contrast 1 and vacuum outside."""

    alpha: float
    material_contrast: float = 1.0
    outer_permittivity: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0 * math.pi):
            raise ValueError(f"opening angle must lie in (0, 2pi], got {self.alpha!r}")
        if self.material_contrast != 1.0 or self.outer_permittivity != 1.0:
            raise ValueError("only the perfectly polarisable limit (contrast 1, "
                             "outer permittivity 1) is supported")

    def inside(self, r, theta):
        return (np.asarray(r) > 0) & (np.abs(np.asarray(theta)) < 0.5 * self.alpha)


@dataclass(frozen=True)
class UnitsContext:
    system: str = "atomic"
    hartree_to_ev: float = HARTREE_EV

    def __post_init__(self):
        if self.system not in ("atomic", "electronvolt"):
            raise ValueError(f"unknown unit system {self.system!r}")

    def energy(self, value_au):
        return value_au * self.hartree_to_ev if self.system == "electronvolt" else value_au


# ---------------------------------------------------------------------------
# integrands


def _series_numerator(L: float, s: float, kmax: int = 40) -> float:
    # sum_{k>=3} c_k L^k / k!  with  c_k = (s+1)(s^k - 1) - (s-1)(s+1)^k
    total, term = 0.0, L * L / 2.0
    for k in range(3, kmax):
        term *= L / k
        ck = (s + 1.0) * (s**k - 1.0) - (s - 1.0) * (s + 1.0) ** k
        total += ck * term
    return total


def _k_core(L: float, s: float) -> float:
    # k integrand times sqrt(eta), as a function of L = log(eta) < 0
    e1 = math.expm1(L)
    es = math.expm1(s * L)
    if abs(L) * (s + 1.0) < 0.2:
        num = _series_numerator(L, s)
    else:
        num = -(s - 1.0) * math.expm1((s + 1.0) * L) - (s + 1.0) * e1 + (s + 1.0) * es
    # numerator = alpha * num; (1 - eta)^2 (1 - eta^s) = e1^2 * (-es)
    return num / (e1 * e1 * (-es))


def k_integrand(eta: float, alpha: float) -> float:
    """Integrand of ``k`` without the ``2/(alpha pi)`` prefactor."""
    if eta == 1.0:
        return (math.pi**2 - alpha**2) / (6.0 * alpha)
    return alpha * _k_core(math.log(eta), math.pi / alpha) / math.sqrt(eta)


def _f_core(L: float, s: float, c: float) -> float:
    # f integrand times sqrt(eta); c = cos(pi theta / alpha)
    u = math.exp(s * L)
    one_m_u = -math.expm1(s * L)
    ratio = one_m_u / -math.expm1(L)
    return (1.0 + u) * ratio / (one_m_u * one_m_u + 4.0 * u * c * c)


def f_integrand(eta: float, theta: float, alpha: float) -> float:
    """Integrand of ``f`` without the ``2/alpha`` prefactor."""
    s = math.pi / alpha
    c = math.cos(math.pi * theta / alpha)
    if eta == 1.0:
        return s / (2.0 * c * c)
    return _f_core(math.log(eta), s, c) / math.sqrt(eta)


def _split_integral(core, spec: QuadratureSpec, upper_points=None) -> float:
    """``int_0^1 core(log eta) / sqrt(eta) d eta``.

    The lower half uses ``eta = t**2``; the upper half is written in
    ``eps = 1 - eta`` so that points very close to ``eta = 1`` keep their
    relative spacing.
    """
    lo = integrate_unit(lambda eta: core(math.log(eta)) / math.sqrt(eta), spec, upper=0.5)
    hi_spec = QuadratureSpec(spec.relative_tolerance, spec.absolute_tolerance,
                             spec.max_subdivisions, "removable_at_one")
    hi = integrate_unit(lambda eps: core(math.log1p(-eps)) / math.sqrt(1.0 - eps), hi_spec,
                        points=upper_points, upper=0.5)
    return lo.value + hi.value


# ---------------------------------------------------------------------------
# k(alpha)


class _KernelCache:
    """Run-scoped memo of ``k(alpha)`` and wall profiles, safe for threads."""

    def __init__(self):
        self._lock = threading.Lock()
        self.k: dict[float, float] = {}
        self.w: dict[tuple[float, int], "WallProfile"] = {}

    def clear(self):
        with self._lock:
            self.k.clear()
            self.w.clear()

    def get_k(self, alpha):
        v = self.k.get(alpha)
        if v is None:
            v = _k_direct(alpha)
            with self._lock:
                v = self.k.setdefault(alpha, v)
        return v

    def get_w(self, alpha, degree):
        key = (alpha, degree)
        v = self.w.get(key)
        if v is None:
            v = WallProfile.build(alpha, degree)
            with self._lock:
                v = self.w.setdefault(key, v)
        return v


kernel_cache = _KernelCache()


def _check_alpha(alpha):
    if not (0.0 < alpha <= 2.0 * math.pi):
        raise ValueError(f"opening angle must lie in (0, 2pi], got {alpha!r}")


def _k_direct(alpha: float, spec: QuadratureSpec = _SPEC) -> float:
    s = math.pi / alpha
    try:
        val = _split_integral(lambda L: _k_core(L, s), spec)
    except QuadratureError as exc:
        raise QuadratureError(f"k({alpha!r}): {exc}", exc.result, exc.abscissa) from exc
    return 2.0 / math.pi * val


def k_coefficient(alpha: float, cached: bool = True, spec: QuadratureSpec | None = None) -> float:
    """Angle-independent part of the image potential (zero for a flat surface).

    Passing ``spec`` bypasses the cache and integrates at that tolerance.
    """
    _check_alpha(alpha)
    if spec is not None:
        return _k_direct(float(alpha), spec)
    return kernel_cache.get_k(float(alpha)) if cached else _k_direct(float(alpha))


# ---------------------------------------------------------------------------
# f(theta, alpha)


def f_profile(theta: float, alpha: float, spec: QuadratureSpec = _SPEC) -> float:
    """Angular part of the image potential, by direct quadrature."""
    _check_alpha(alpha)
    if not abs(theta) < 0.5 * alpha:
        raise ValueError(f"theta={theta!r} is on or inside the material (|theta| >= alpha/2)")
    try:
        return f_from_cos(math.cos(math.pi * theta / alpha), alpha, spec)
    except QuadratureError as exc:
        raise QuadratureError(f"f(theta={theta!r}, alpha={alpha!r}): {exc}",
                              exc.result, exc.abscissa) from exc


def f_from_cos(c: float, alpha: float, spec: QuadratureSpec = _SPEC) -> float:
    """``f`` given ``c = cos(pi theta / alpha)`` in (0, 1].

    Callers that know the distance to the wall should pass ``c`` computed
    from it; recovering ``c`` from ``theta`` costs relative precision
    ``~1e-16 / c``.
    """
    if not 0.0 < c <= 1.0:
        raise ValueError(f"cos(pi theta/alpha) must lie in (0, 1], got {c!r}")
    s = math.pi / alpha
    pts = None
    if c < 0.05:
        # near a wall the integrand is a Lorentzian in 1 - eta of width ~ 2c/s
        # with a 1/eps**2 tail; breakpoints every decade resolve both
        pts = [p for p in 0.01 * c / s * 10.0 ** np.arange(0, 20) if p < 0.5]
    return 2.0 / alpha * _split_integral(lambda L: _f_core(L, s, c), spec, pts)


def _w_direct(x: float, alpha: float) -> float:
    # w = f cos(x) at x = pi theta / alpha in [0, pi/2]
    if x >= 0.5 * math.pi:
        return math.pi / alpha
    c = math.sin(0.5 * math.pi - x)
    return f_from_cos(c, alpha) * c


@dataclass(frozen=True)
class WallProfile:
    """Chebyshev interpolant of ``w(x) = f cos x`` on ``x = pi theta/alpha in [0, pi/2]``."""

    alpha: float
    coefficients: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, alpha: float, degree: int = 48) -> "WallProfile":
        # w is even in x, so interpolate on [-pi/2, pi/2] in x**2-free form by
        # fitting on the symmetric domain and keeping only even modes
        nodes = C.chebpts1(2 * degree + 2)  # in (-1, 1)
        xs = 0.5 * math.pi * nodes
        vals = np.array([_w_direct(abs(x), alpha) for x in xs])
        coef = C.chebfit(nodes, vals, 2 * degree + 1)
        coef[1::2] = 0.0
        return cls(float(alpha), coef)

    def __call__(self, x):
        return C.chebval(np.asarray(x) / (0.5 * math.pi), self.coefficients)

    def tail(self) -> float:
        return float(np.max(np.abs(self.coefficients[-6:])))


def wall_profile(alpha: float, degree: int = 48) -> WallProfile:
    _check_alpha(alpha)
    return kernel_cache.get_w(float(alpha), degree)


def image_potential_energy(r, theta, geometry: WedgeGeometry, interpolate: bool = False):
    """Self-energy ``(k - f) / (4 r)`` in hartree.

    Scalar inputs give a float. With ``interpolate=True`` ``f`` comes from the
    cached wall profile instead of a fresh quadrature, and arrays are
    accepted.
    """
    alpha = geometry.alpha
    r_arr, th_arr = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
    if np.any(r_arr <= 0):
        raise ValueError("r must be positive")
    if np.any(np.abs(th_arr) >= 0.5 * alpha):
        raise ValueError("point is on or inside the material (|theta| >= alpha/2)")
    k = k_coefficient(alpha)
    if interpolate:
        x = math.pi * np.abs(th_arr) / alpha
        f = wall_profile(alpha)(x) / np.cos(x)
    else:
        f = np.vectorize(lambda t: f_profile(float(t), alpha), otypes=[float])(th_arr)
    out = (k - f) / (4.0 * r_arr)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# method-of-images check for alpha = pi / n


def image_oracle(r: float, theta: float, n: int) -> float:
    """Self-energy of a unit charge between grounded planes at angle ``pi/n``.

    The ``2n - 1`` Kelvin images are generated by reflecting the source
    across the walls repeatedly; images at angles ``2 j alpha + theta`` carry
    +1 and those at ``2 j alpha + alpha - theta`` carry -1 (the wedge is
    ``|theta| < alpha/2`` here). The self-energy is half the interaction sum.
    """
    if n < 1 or int(n) != n:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    alpha = math.pi / n
    if not (r > 0 and abs(theta) < 0.5 * alpha):
        raise ValueError("point must lie strictly inside the opening")
    src = np.array([r * math.cos(theta), r * math.sin(theta)])
    total = 0.0
    for j in range(n):
        for ang, q in ((2 * j * alpha + theta, 1.0), (2 * j * alpha + alpha - theta, -1.0)):
            if j == 0 and q > 0:
                continue
            img = np.array([r * math.cos(ang), r * math.sin(ang)])
            total += q / float(np.hypot(*(img - src)))
    return 0.5 * total


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class FieldGrid:
    alpha: float
    r: np.ndarray
    theta: np.ndarray
    values: np.ndarray
    inside: np.ndarray
    sentinel: float = float("nan")

    def rows(self):
        """Yield ``(r, theta, x, y, value, inside)`` in row-major order."""
        for i, rr in enumerate(self.r):
            for j, th in enumerate(self.theta):
                yield (float(rr), float(th), float(rr * math.cos(th)),
                       float(rr * math.sin(th)), float(self.values[i, j]),
                       bool(self.inside[i, j]))


def potential_grid(geometry: WedgeGeometry, r_max: float, n_r: int, n_theta: int,
                   theta_span: float | None = None, interpolate: bool = True) -> FieldGrid:
    """Image potential on a polar grid.

    Radial nodes are ``r_max * (i+1)/n_r`` and angular nodes are spread over
    ``theta_span`` (default: the opening) with the walls excluded. Nodes
    outside the opening are masked and hold NaN.
    """
    if n_r < 2 or n_theta < 2:
        raise ValueError("grid counts must be >= 2")
    if not r_max > 0:
        raise ValueError("r_max must be positive")
    alpha = geometry.alpha
    span = alpha if theta_span is None else theta_span
    r = r_max * np.arange(1, n_r + 1) / n_r
    theta = -0.5 * span + span * (np.arange(n_theta) + 0.5) / n_theta
    inside = np.broadcast_to(np.abs(theta)[None, :] < 0.5 * alpha, (n_r, n_theta)).copy()
    values = np.full((n_r, n_theta), np.nan)
    ins_th = np.abs(theta) < 0.5 * alpha
    if np.any(ins_th):
        th = theta[ins_th]
        if interpolate:
            k = k_coefficient(alpha)
            x = math.pi * np.abs(th) / alpha
            shape = k - wall_profile(alpha)(x) / np.cos(x)
        else:
            shape = np.array([k_coefficient(alpha) - f_profile(float(t), alpha) for t in th])
        values[:, ins_th] = shape[None, :] / (4.0 * r[:, None])
    return FieldGrid(alpha, r, theta, values, inside)
