"""Opening-angle sweeps and the two-channel picture of the level pairs.

For each opening angle the three variational levels are optimised and
collected into a :class:`SweepRecord`. The near-degeneracy of the
symmetric/antisymmetric pair is probed two ways:

* the splitting formula ``dE = 2 int_0^inf psi_L(r,0) (1/r) d_theta psi_L(r,0) dr``
  (atomic units) applied to a single-channel state ``psi_L``;
* the current identity ``-1/2 div(psi_L grad psi - psi grad psi_L) = (E - E_L) psi_L psi``,
  whose residual is evaluated on a polar grid and whose volume integral is
  compared with the flux through the symmetry line.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .numerics import QuadratureSpec, integrate_semi_infinite
from .optimize import OptimizationResult, OptimizerConfig, optimize_state
from .potential import HARTREE_EV
from .trial import SeparableState, overlap

log = logging.getLogger(__name__)

__all__ = [
    "SweepRecord",
    "SingleWellState",
    "CurrentResidual",
    "OrderingError",
    "PhaseMismatchError",
    "SWEEP_COLUMNS",
    "ORDERING_TOLERANCE",
    "sweep",
    "sweep_point",
    "single_well_from_pair",
    "single_well_from_state",
    "analytic_channel_state",
    "splitting_eq2",
    "pair_splitting_closed_form",
    "current_residual",
    "degeneracy_onset",
]

ORDERING_TOLERANCE = 1e-9
SWEEP_COLUMNS = ("alpha_rad", "E0_eV", "E1_eV", "E2_eV", "gap01_eV", "gap02_eV",
                 "splitting_eq2_eV", "virial0", "virial1", "virial2", "boundary_flags", "status")
# applied to the integrand divided by its peak value, so the absolute
# tolerance is relative to the integrand's natural size
_SPLIT_SPEC = QuadratureSpec(relative_tolerance=1e-11, absolute_tolerance=1e-12,
                             max_subdivisions=400)


class OrderingError(RuntimeError):
    """The symmetric level came out above the antisymmetric one."""


class PhaseMismatchError(ValueError):
    """The pair's phases do not add up in the upper channel."""


# ---------------------------------------------------------------------------
# single-channel states


@dataclass(frozen=True)
class SingleWellState:
    """A state concentrated along the upper wall (``theta > 0``).

    ``derivatives(r, theta)`` returns ``(psi, psi_r, psi_theta, psi_thetatheta, psi_rr)``.
    ``decay`` is an inverse length describing the radial fall-off along the
    symmetry line, used to place quadrature breakpoints. ``min_power`` is the
    smallest power of ``r`` near the apex.
    """

    alpha: float
    provenance: str
    derivatives: Callable
    decay: float
    min_power: float
    upper_mass: float | None = None
    lower_mass: float | None = None
    pair: tuple | None = field(default=None, repr=False)

    def __call__(self, r, theta):
        return self.derivatives(r, theta)[0]

    def theta_derivative(self, r, theta):
        return self.derivatives(r, theta)[2]


def single_well_from_pair(ground: OptimizationResult | SeparableState,
                          antisymmetric: OptimizationResult | SeparableState) -> SingleWellState:
    """``psi_L = (psi_plus + psi_minus) / sqrt(2)``.

    Both inputs follow the sign convention of :mod:`wedgebound.trial`, so the
    two states add up in the upper channel. ``psi_L`` keeps unit norm over the
    whole wedge (the pair is orthogonal by parity); the channel masses
    ``1/2 +- <psi_plus|psi_minus>_{theta>0}`` are stored on the result.

    Raises
    ------
    PhaseMismatchError
        If the upper-channel overlap of the pair is negative.
    """
    sp = ground.state() if isinstance(ground, OptimizationResult) else ground
    sm = antisymmetric.state() if isinstance(antisymmetric, OptimizationResult) else antisymmetric
    if sp.kind != "ground" or sm.kind != "antisymmetric":
        raise ValueError("expected a (ground, antisymmetric) pair")
    if sp.alpha != sm.alpha:
        raise ValueError("the pair belongs to different opening angles")
    o = overlap(sp, sm, "upper")
    if o < 0:
        raise PhaseMismatchError(f"upper-channel overlap {o:.3g} is negative; "
                                 "the pair does not follow the phase convention")
    c = 1.0 / math.sqrt(2.0)

    def derivs(r, theta):
        a = sp.evaluate_derivatives(r, theta)
        b = sm.evaluate_derivatives(r, theta)
        return tuple(c * (x + y) for x, y in zip(a, b))

    g0 = (sp.params.n + sp.params.q) + (sm.params.n + sm.params.q)
    return SingleWellState(sp.alpha, "variational_pair", derivs, g0,
                           min(sp.params.m, sm.params.m), 0.5 + o, 0.5 - o, (sp, sm))


def single_well_from_state(state: SeparableState) -> SingleWellState:
    """Wrap one trial state unchanged (used for the null tests of the splitting)."""
    return SingleWellState(state.alpha, f"state:{state.kind}", state.evaluate_derivatives,
                           state.params.n + state.params.q, state.params.m)


ANALYTIC_CHANNEL_AMPLITUDE = 0.25


def analytic_channel_state(alpha: float) -> SingleWellState:
    """``psi_L = C d exp(-d/4)`` with ``d = r sin(alpha/2 - theta)``.

    This is the planar ground state written in the distance to the upper
    wall. It is not square integrable over the half-wedge (the channel runs to
    infinity along the wall), so ``C = 1/4`` normalises the profile per unit
    wall length: ``int_0^inf (C d e^{-d/4})^2 dd = 1``.
    """
    if not 0 < alpha < 2 * math.pi:
        raise ValueError(f"opening angle must lie in (0, 2pi), got {alpha!r}")
    C = ANALYTIC_CHANNEL_AMPLITUDE
    h = 0.5 * alpha

    def derivs(r, theta):
        r = np.asarray(r, float)
        s, c = np.sin(h - theta), np.cos(h - theta)
        d = r * s
        e = np.exp(-0.25 * d)
        phi = C * d * e
        dphi = C * (1.0 - 0.25 * d) * e           # d phi / d d
        d2phi = C * (0.0625 * d - 0.5) * e        # d^2 phi / d d^2
        psi_r = dphi * s
        psi_rr = d2phi * s * s
        psi_t = -dphi * r * c
        psi_tt = d2phi * (r * c) ** 2 - dphi * r * s
        out = (phi, psi_r, psi_t, psi_tt, psi_rr)
        if np.ndim(phi) == 0:
            return tuple(float(v) for v in out)
        return out

    return SingleWellState(float(alpha), "analytic_channel", derivs, 0.25 * math.sin(h), 1.0)


# ---------------------------------------------------------------------------
# splitting estimator


def splitting_eq2(psi_l: SingleWellState, spec: QuadratureSpec = _SPLIT_SPEC) -> float:
    """``2 int_0^inf psi_L(r,0) (1/r) d_theta psi_L(r,0) dr`` in hartree.

    The radial integral runs on the semi-infinite range with the state's own
    decay length as the split point. Near the apex the integrand behaves as
    ``r**(2 mu - 1)``, which needs ``mu > 0``.
    """
    if not psi_l.min_power > 0:
        raise ValueError(f"integrand ~ r^{2 * psi_l.min_power - 1:g} is not integrable at r=0")

    def f(r):
        psi, _, dth, _, _ = psi_l.derivatives(r, 0.0)
        return 2.0 * psi * dth / r

    if psi_l.decay > 0:
        scale = 1.0 / psi_l.decay
    else:
        scale = None
    peak = max(abs(f(x * (scale or 1.0))) for x in (0.5, 1.0, 2.0, 4.0))
    if peak == 0.0:
        return 0.0
    res = integrate_semi_infinite(lambda r: f(r) / peak, spec, scale)
    return res.value * peak


def pair_splitting_closed_form(psi_l: SingleWellState) -> float:
    """Closed form of :func:`splitting_eq2` for a variational pair.

    Along ``theta = 0`` only ``psi_plus`` survives in the value and only
    ``psi_minus`` in the angular derivative, so the integral reduces to one
    gamma function: ``2 (pi/alpha) N_+ N_- Gamma(m_+ + m_-) / (g_+ + g_-)^(m_+ + m_-)``
    with ``g = n + q`` the decay on the symmetry line.
    """
    if psi_l.pair is None:
        raise ValueError("closed form exists only for states built from a variational pair")
    sp, sm = psi_l.pair
    s = sp.params.m + sm.params.m
    g = sp.params.n + sp.params.q + sm.params.n + sm.params.q
    logv = (sp.log_norm + sm.log_norm + math.lgamma(s) - s * math.log(g)
            + math.log(2.0 * math.pi / psi_l.alpha))
    return sp.phase * sm.phase * math.exp(logv)


# ---------------------------------------------------------------------------
# current identity on a grid


@dataclass(frozen=True)
class CurrentResidual:
    """Residual of the current identity on the half-wedge grid.

    ``field`` holds ``-1/2 div J - (E_pm - E_L) psi_L psi_pm`` with
    ``J = psi_L grad psi_pm - psi_pm grad psi_L``; ``integrated`` is its
    integral over the grid. ``volume_term`` is the integral of ``-1/2 div J``
    alone and ``line_term`` the flux through ``theta = 0`` that the
    divergence theorem equates it with, ``1/2 int J_theta(r, 0) dr``. On a
    truncated grid some flux also leaves through ``r = r_max``; that part is
    ``outer_term``. The walls carry none because both states vanish there.
    """

    r: np.ndarray
    theta: np.ndarray
    field: np.ndarray
    integrated: float
    volume_term: float
    line_term: float
    outer_term: float = 0.0

    @property
    def divergence_mismatch(self) -> float:
        """Volume term minus all boundary fluxes of the truncated grid."""
        return self.volume_term - self.line_term - self.outer_term


def _flux(psi_l, psi_pm, R, T):
    a = psi_l.derivatives(R, T) if isinstance(psi_l, SingleWellState) else psi_l.evaluate_derivatives(R, T)
    b = psi_pm.derivatives(R, T) if isinstance(psi_pm, SingleWellState) else psi_pm.evaluate_derivatives(R, T)
    la, la_r, la_t = a[0], a[1], a[2]
    pb, pb_r, pb_t = b[0], b[1], b[2]
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(R > 0, 1.0 / R, 0.0)
    j_r = la * pb_r - pb * la_r
    j_t = (la * pb_t - pb * la_t) * inv
    return la, pb, j_r, j_t


def current_residual(psi_l, psi_pm, e_l: float, e_pm: float,
                     grid: tuple[int, int, float], stencil: int = 2) -> CurrentResidual:
    """Evaluate the current identity on an ``(nr, ntheta, r_max)`` polar grid.

    The grid covers ``0 <= r <= r_max`` and ``0 <= theta <= alpha/2``. The flux
    ``J`` is evaluated analytically at the nodes and differentiated with
    ``numpy.gradient`` (second order, one-sided at the edges), so the residual
    measures both how far the pair is from solving the identity and the grid
    error. Integrals use the trapezoidal rule with the ``r`` Jacobian.

    Raises
    ------
    ValueError
        If a grid axis has fewer nodes than the stencil needs.
    """
    nr, nt, r_max = grid
    if stencil != 2:
        raise ValueError("only the second-order stencil is implemented")
    need = stencil + 1
    if nr < need or nt < need:
        raise ValueError(f"grid {nr}x{nt} is too coarse for a {need}-point stencil")
    if not r_max > 0:
        raise ValueError("r_max must be positive")
    alpha = psi_l.alpha
    if abs(psi_pm.alpha - alpha) > 0:
        raise ValueError("states belong to different opening angles")
    r = np.linspace(0.0, r_max, nr)
    th = np.linspace(0.0, 0.5 * alpha, nt)
    R, T = np.meshgrid(r, th, indexing="ij")
    la, pb, j_r, j_t = _flux(psi_l, psi_pm, R, T)
    dr, dt = r[1] - r[0], th[1] - th[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(R > 0, 1.0 / R, 0.0)
    div = inv * np.gradient(R * j_r, dr, axis=0, edge_order=2) \
        + inv * np.gradient(j_t, dt, axis=1, edge_order=2)
    field_ = -0.5 * div - (e_pm - e_l) * la * pb

    def area(f):
        return float(trapezoid(trapezoid(f * R, th, axis=1), r))

    # outward normal on theta = 0 is -theta_hat, so the flux of -J/2 is +J_theta/2
    line = 0.5 * float(trapezoid(j_t[:, 0], r))
    outer = -0.5 * r_max * float(trapezoid(j_r[-1, :], th))
    return CurrentResidual(r, th, field_, area(field_), area(-0.5 * div), line, outer)


# ---------------------------------------------------------------------------
# sweep


@dataclass
class SweepRecord:
    """One opening angle of the sweep (energies in hartree)."""

    alpha: float
    E0: float = math.nan
    E1: float = math.nan
    E2: float = math.nan
    splitting_eq2: float = math.nan
    virial: tuple = (math.nan, math.nan, math.nan)
    boundary_flags: dict = field(default_factory=dict)
    seconds: float = 0.0
    status: str = "ok"
    results: dict = field(default_factory=dict, repr=False)

    @property
    def gap01(self) -> float:
        return self.E1 - self.E0

    @property
    def gap02(self) -> float:
        return self.E2 - self.E0

    @property
    def ok(self) -> bool:
        return self.status == "ok" or self.status.startswith("partial")

    def flags_text(self) -> str:
        parts = []
        for key in ("ground", "antisymmetric", "excited"):
            flags = self.boundary_flags.get(key)
            if flags is None:
                continue
            active = [k for k, v in flags.items() if v]
            parts.append(f"{key[0]}:{'+'.join(active) if active else '-'}")
        return ";".join(parts)

    def csv_row(self) -> list[str]:
        def num(x, scale=HARTREE_EV):
            return "nan" if not math.isfinite(x) else repr(float(x * scale))

        return [repr(float(self.alpha)), num(self.E0), num(self.E1), num(self.E2),
                num(self.gap01), num(self.gap02), num(self.splitting_eq2),
                num(self.virial[0], 1.0), num(self.virial[1], 1.0), num(self.virial[2], 1.0),
                self.flags_text(), self.status]

    def to_dict(self):
        return {"alpha": self.alpha, "E0_au": self.E0, "E1_au": self.E1, "E2_au": self.E2,
                "gap01_au": self.gap01, "gap02_au": self.gap02,
                "splitting_eq2_au": self.splitting_eq2, "virial": list(self.virial),
                "boundary_flags": self.boundary_flags, "status": self.status}


Solver = Callable[..., OptimizationResult]


def _default_solver(kind, alpha, config, ground=None):
    return optimize_state(kind, alpha, config, ground=ground)


def sweep_point(alpha: float, config: OptimizerConfig = OptimizerConfig(),
                solver: Solver = _default_solver) -> SweepRecord:
    """Optimise the three levels at one opening angle.

    Failures are caught and recorded in ``status``; the ordering check of the
    pair is the caller's business (see :func:`sweep`).
    """
    t0 = time.perf_counter()
    rec = SweepRecord(float(alpha))
    try:
        g = solver("ground", alpha, config)
        a = solver("antisymmetric", alpha, config)
        rec.results.update(ground=g, antisymmetric=a)
        rec.E0, rec.E1 = g.best_energy.total, a.best_energy.total
        rec.boundary_flags.update(ground=g.boundary_active, antisymmetric=a.boundary_active)
        v = [g.best_energy.virial_residual, a.best_energy.virial_residual, math.nan]
        problems = []
        try:
            e = solver("excited", alpha, config, ground=g)
            rec.results["excited"] = e
            rec.E2 = e.best_energy.total
            rec.boundary_flags["excited"] = e.boundary_active
            v[2] = e.best_energy.virial_residual
        except Exception as exc:  # recorded, sweep continues
            problems.append(f"excited: {type(exc).__name__}")
        rec.virial = tuple(v)
        try:
            rec.splitting_eq2 = splitting_eq2(single_well_from_pair(g, a))
        except Exception as exc:
            problems.append(f"splitting: {type(exc).__name__}")
        if problems:
            rec.status = "partial(" + ",".join(problems) + ")"
    except Exception as exc:
        log.warning("alpha=%r failed: %s", alpha, exc)
        rec.status = f"failed({type(exc).__name__})"
    rec.seconds = time.perf_counter() - t0
    return rec


def sweep(alphas: Sequence[float], config: OptimizerConfig = OptimizerConfig(),
          solver: Solver = _default_solver, workers: int = 1,
          check_ordering: bool = True) -> list[SweepRecord]:
    """One :class:`SweepRecord` per opening angle, in input order.

    Per-angle work items are independent; with ``workers > 1`` they run in
    separate processes and are reassembled in input order, so the output does
    not depend on the worker count.

    Raises
    ------
    OrderingError
        If a record has ``E0 > E1 + 1e-9`` hartree.
    """
    for a in alphas:
        if not 0 < a <= 2 * math.pi:
            raise ValueError(f"opening angle must lie in (0, 2pi], got {a!r}")
    if workers > 1 and solver is _default_solver:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(sweep_point, alphas, [config] * len(alphas)))
    else:
        records = [sweep_point(a, config, solver) for a in alphas]
    if check_ordering:
        for rec in records:
            if rec.ok and rec.E0 > rec.E1 + ORDERING_TOLERANCE:
                raise OrderingError(
                    f"alpha={rec.alpha!r}: E0={rec.E0!r} lies above E1={rec.E1!r} "
                    f"(ground {rec.results['ground'].best_params}, "
                    f"antisymmetric {rec.results['antisymmetric'].best_params})")
    return records


def degeneracy_onset(records: Sequence[SweepRecord], threshold: float) -> float | None:
    """Smallest sampled ``alpha`` from which ``|E1 - E0| <= threshold`` holds throughout.

    ``threshold`` is in hartree. Failed records are skipped. A threshold of
    zero never certifies a degeneracy (computed gaps are never exactly zero
    in a meaningful sense) and returns ``None``, as does an empty tail.

    Raises
    ------
    ValueError
        If the records are not strictly increasing in ``alpha`` or the
        threshold is negative.
    """
    alphas = [r.alpha for r in records]
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("records must be sorted by strictly increasing alpha")
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    if threshold == 0:
        return None
    onset = None
    for rec in reversed([r for r in records if r.ok]):
        if abs(rec.gap01) <= threshold:
            onset = rec.alpha
        else:
            break
    return onset
