"""Quadrature and special-function helpers shared by the rest of the package.

Adaptive work is delegated to QUADPACK (``scipy.integrate.quad``); the
wrappers here add endpoint substitutions, strict convergence reporting and
the composite Gauss-Legendre rules used inside the optimisation loops.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, special

__all__ = [
    "QuadratureSpec",
    "QuadratureResult",
    "QuadratureError",
    "integrate_unit",
    "integrate_semi_infinite",
    "log_gamma",
    "gauss_legendre",
    "graded_rule",
]

ENDPOINT_HINTS = ("none", "inverse_sqrt_at_zero", "removable_at_one", "both")


class QuadratureError(RuntimeError):
    """Raised when an integral fails to converge or the integrand misbehaves."""

    def __init__(self, message: str, result: "QuadratureResult | None" = None,
                 abscissa: float | None = None):
        super().__init__(message)
        self.result = result
        self.abscissa = abscissa


@dataclass(frozen=True)
class QuadratureSpec:
    relative_tolerance: float = 1e-10
    absolute_tolerance: float = 1e-14
    max_subdivisions: int = 200
    endpoint_hint: str = "none"

    def __post_init__(self):
        if not (self.relative_tolerance > 0 and self.absolute_tolerance > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.endpoint_hint not in ENDPOINT_HINTS:
            raise ValueError(f"unknown endpoint hint {self.endpoint_hint!r}")

    def tolerance_for(self, value: float) -> float:
        return max(self.relative_tolerance * abs(value), self.absolute_tolerance)


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int
    converged: bool


def _guarded(f: Callable[[float], float]) -> Callable[[float], float]:
    def g(x):
        y = f(x)
        if not math.isfinite(y):
            raise QuadratureError(f"integrand returned {y!r} at x={x!r}", abscissa=x)
        return y
    return g


def _quad(g, a, b, spec: QuadratureSpec, points=None) -> QuadratureResult:
    kw = dict(epsabs=spec.absolute_tolerance, epsrel=spec.relative_tolerance,
              limit=spec.max_subdivisions, full_output=1)
    if points is not None and math.isfinite(b):
        pts = sorted(p for p in points if a < p < b)
        if pts:
            kw["points"] = pts
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(g, a, b, **kw)
    value, err, info = out[0], out[1], out[2]
    ier = out[3] if len(out) > 3 and isinstance(out[3], str) else None
    neval = int(info.get("neval", 0))
    ok = ier is None and err <= spec.tolerance_for(value)
    return QuadratureResult(float(value), float(err), neval, bool(ok))


def _checked(res: QuadratureResult, what: str) -> QuadratureResult:
    if not res.converged:
        raise QuadratureError(
            f"{what}: no convergence (value={res.value!r}, error={res.error_estimate:.3g}, "
            f"evaluations={res.evaluations})", result=res)
    return res


def integrate_unit(f: Callable[[float], float], spec: QuadratureSpec = QuadratureSpec(),
                   points=None, lower: float = 0.0, upper: float = 1.0) -> QuadratureResult:
    """Integrate ``f`` over ``(lower, upper)`` inside the unit interval.

    With an ``inverse_sqrt_at_zero`` (or ``both``) hint the substitution
    ``eta = t**2`` is applied, which turns an ``eta**-0.5`` endpoint into a
    smooth integrand. Endpoints are never evaluated, so a removable
    singularity at one only needs a finite limit. ``points`` are breakpoints
    given in the original variable.

    Raises
    ------
    QuadratureError
        On non-convergence or a non-finite integrand value.
    """
    f = _guarded(f)
    if spec.endpoint_hint in ("inverse_sqrt_at_zero", "both"):
        def g(t):
            return 2.0 * t * f(t * t)
        a, b = math.sqrt(lower), math.sqrt(upper)
        pts = None if points is None else [math.sqrt(p) for p in points if p > 0]
        return _checked(_quad(g, a, b, spec, pts), "integrate_unit")
    return _checked(_quad(f, lower, upper, spec, points), "integrate_unit")


def integrate_semi_infinite(f: Callable[[float], float], spec: QuadratureSpec = QuadratureSpec(),
                            scale: float | None = None) -> QuadratureResult:
    """Integrate ``f`` over ``(0, inf)``.

    ``scale`` is the length on which the integrand lives (for ``exp(-b r)``
    decay, roughly ``1/b``). When given, the range is split at a few multiples
    of it so the finite part is resolved before QUADPACK's infinite-range map
    takes over. A tail that still carries more than the tolerance is reported
    as divergence.
    """
    f = _guarded(f)
    if scale is None:
        return _checked(_quad(f, 0.0, math.inf, spec), "integrate_semi_infinite")
    cut = 40.0 * scale
    head = _quad(f, 0.0, cut, spec, points=[scale, 5.0 * scale])
    tail = _quad(f, cut, math.inf, spec)
    total = head.value + tail.value
    res = QuadratureResult(total, head.error_estimate + tail.error_estimate,
                           head.evaluations + tail.evaluations,
                           head.converged and tail.converged)
    if abs(tail.value) > max(1e3 * spec.tolerance_for(total), 1e-3 * abs(total)):
        raise QuadratureError(f"tail beyond r={cut:.3g} carries {tail.value:.3g}; "
                              "integrand does not decay on the given scale", result=res)
    return _checked(res, "integrate_semi_infinite")


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    if not x > 0:
        raise ValueError(f"log_gamma requires x > 0, got {x!r}")
    return float(special.gammaln(x))


@lru_cache(maxsize=16)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def graded_rule(length: float, scale: float, order: int = 20, ratio: float = 3.0,
                depth: float = 1e-5, coarse_panels: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on ``[0, length]`` refined towards 0.

    Panels shrink geometrically by ``ratio`` from ``length`` down to
    ``depth * scale``, so an integrand with structure on the length ``scale``
    near the origin (a rational peak, a small offset in a denominator) is
    resolved at a cost logarithmic in ``length / scale``.
    """
    edges = list(np.linspace(length, 0.0, coarse_panels + 1)[:-1])
    stop = max(min(scale, length) * depth, 1e-300)
    t = edges[-1] / ratio
    while t > stop:
        edges.append(t)
        t /= ratio
    edges.append(0.0)
    edges = np.array(edges[::-1])
    xg, wg = gauss_legendre(order)
    h = np.diff(edges)
    nodes = (edges[:-1, None] + h[:, None] * xg[None, :]).ravel()
    weights = (h[:, None] * wg[None, :]).ravel()
    return nodes, weights
