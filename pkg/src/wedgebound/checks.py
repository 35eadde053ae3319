"""Battery of analytic limits and cross-checks behind ``limits-check``.

Every check compares a computed number with an independently known value
and a fixed tolerance. ``fault`` perturbs the named check so the harness
itself can be exercised.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .degeneracy import (analytic_channel_state, current_residual, single_well_from_state,
                         splitting_eq2)
from .energy import discrepancy_report, e0_paper_formula, expectation_oracle_2d, expectation_reduced
from .numerics import QuadratureSpec
from .optimize import OptimizerConfig, optimize_state, state_energy
from .potential import WedgeGeometry, f_profile, image_oracle, image_potential_energy, k_coefficient
from .trial import (TIGHT_RULE, TrialParams, excited_state, ground_state, antisymmetric_state,
                    n0_closed_form, normalization, overlap)

__all__ = ["CheckResult", "run_limit_checks"]

PLANAR_GROUND = -1.0 / 32.0


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    expected: float
    deviation: float
    tolerance: float
    relative: bool
    passed: bool

    @property
    def margin(self) -> float:
        """How far inside the tolerance the deviation sits (negative on failure)."""
        return self.tolerance - self.deviation

    def to_dict(self):
        d = asdict(self)
        d["margin"] = self.margin
        return d


def _result(name, value, expected, tol, relative=False, fault=None):
    if fault == name:
        value = value + 1.0
    dev = abs(value - expected)
    if relative and expected != 0:
        dev /= abs(expected)
    return CheckResult(name, float(value), float(expected), float(dev), float(tol), relative,
                       bool(dev <= tol))


_SAMPLE_PARAMS = (
    TrialParams(1.3, 0.2, 0.7, 0.05),
    TrialParams(2.1, 0.45, 0.93, 0.12),
)


def _potential_checks(spec, fault):
    out = [
        _result("k(pi)=0", k_coefficient(math.pi, spec=spec), 0.0, 1e-8, fault=fault),
        _result("k(pi/2)=1", k_coefficient(math.pi / 2, spec=spec), 1.0, 1e-7, fault=fault),
        _result("k(2pi)=-1/pi", k_coefficient(2 * math.pi, spec=spec), -1 / math.pi, 1e-7,
                fault=fault),
        _result("f(0,pi/2)=2sqrt2", f_profile(0.0, math.pi / 2, spec), 2 * math.sqrt(2), 1e-7,
                fault=fault),
    ]
    for th in (0.0, 0.3, 0.8, 1.2, 1.45):
        out.append(_result(f"f({th},pi)=1/cos", f_profile(th, math.pi, spec), 1 / math.cos(th),
                           1e-8, relative=True, fault=fault))
    out.append(_result("planar ephi=-1/(4y)",
                       image_potential_energy(2.0, 0.0, WedgeGeometry(math.pi)), -0.125, 1e-10,
                       relative=True, fault=fault))
    worst = 0.0
    for n in (1, 2, 3):
        alpha = math.pi / n
        geo = WedgeGeometry(alpha)
        for r, frac in ((0.7, 0.1), (2.0, -0.35), (5.0, 0.42)):
            th = frac * alpha
            a = image_potential_energy(r, th, geo, interpolate=False)
            b = image_oracle(r, th, n)
            worst = max(worst, abs(a - b) / abs(b))
    out.append(_result("image oracle n=1..3 (max rel)", worst, 0.0, 1e-6, fault=fault))
    return out


def _state_checks(fault):
    out = []
    alpha = 2.0
    worst = 0.0
    for p in _SAMPLE_PARAMS:
        worst = max(worst, abs(n0_closed_form(p, alpha) / normalization("ground", p, alpha) - 1))
    out.append(_result("N0 closed form vs generic (max rel)", worst, 0.0, 1e-6, fault=fault))
    q = 0.3
    const = TrialParams(1.0, 1e-13, 1.0, q)
    out.append(_result("N0 constant gamma = 4q^2/sqrt(3 alpha)", n0_closed_form(const, alpha),
                       4 * q * q / math.sqrt(3 * alpha), 1e-6, relative=True, fault=fault))
    g = ground_state(_SAMPLE_PARAMS[0], alpha)
    e = excited_state(TrialParams(1.2, 0.1, 0.9, 0.05), g.params, alpha)
    out.append(_result("<psi0|psi2> = 0", overlap(g, e), 0.0, 1e-8, fault=fault))
    return out


def _energy_checks(fault, artifacts):
    out = []
    worst_oracle = worst_fixed = worst_printed = 0.0
    for alpha in (2.0, math.pi, 4.5):
        for p in _SAMPLE_PARAMS:
            st = ground_state(p, alpha)
            eng = expectation_reduced(st, rule=TIGHT_RULE, interpolate=False)
            ora, _ = expectation_oracle_2d(st)
            worst_oracle = max(worst_oracle, abs(eng.total - ora.total) / abs(ora.total))
            rep = discrepancy_report(p, alpha, TIGHT_RULE)
            worst_fixed = max(worst_fixed, rep["rederived_relative_deviation"])
            worst_printed = max(worst_printed, rep["printed_relative_deviation"])
            if rep["printed_relative_deviation"] > 1e-6:
                artifacts.append(rep)
    out.append(_result("engine vs 2D oracle (max rel)", worst_oracle, 0.0, 1e-6, fault=fault))
    out.append(_result("re-derived E0 formula vs engine (max rel)", worst_fixed, 0.0, 1e-6,
                       fault=fault))
    # the printed closed form either agrees or its deviation is documented
    documented = 0.0 if (worst_printed <= 1e-6 or artifacts) else 1.0
    out.append(_result("printed E0 formula agrees or discrepancy recorded", documented, 0.0, 0.0,
                       fault=fault))

    closure = TrialParams(1.0, 0.25, 1.0 - 1e-12, 0.0)
    out.append(_result("planar closure energy = -1/32",
                       state_energy("ground", closure, math.pi, None, TIGHT_RULE).total,
                       PLANAR_GROUND, 1e-9, fault=fault))
    out.append(_result("re-derived E0 formula at planar closure = -1/32",
                       e0_paper_formula(closure, math.pi, TIGHT_RULE, tan_sign=-1.0),
                       PLANAR_GROUND, 1e-9, fault=fault))
    rep = discrepancy_report(closure, math.pi, TIGHT_RULE)
    if rep["printed_relative_deviation"] > 1e-6:
        artifacts.append(rep)

    p = _SAMPLE_PARAMS[1]
    base = state_energy("antisymmetric", p, 3.5, None, TIGHT_RULE)
    lam = state_energy("antisymmetric", p.scaled(2.0), 3.5, None, TIGHT_RULE)
    dev = max(abs(lam.kinetic / (4 * base.kinetic) - 1), abs(lam.potential / (2 * base.potential) - 1))
    out.append(_result("scaling covariance lam=2 (max rel)", dev, 0.0, 1e-10, fault=fault))

    res = optimize_state("ground", math.pi, OptimizerConfig())
    out.append(_result("virial residual at alpha=pi optimum", res.best_energy.virial_residual, 0.0,
                       1e-3, fault=fault))
    out.append(_result("alpha=pi optimum above planar floor",
                       max(0.0, PLANAR_GROUND - res.best_energy.total), 0.0, 1e-9, fault=fault))
    return out


def _splitting_checks(fault):
    out = []
    alpha = 3.5
    out.append(_result("splitting: analytic channel = 0",
                       splitting_eq2(analytic_channel_state(alpha)), 0.0, 1e-10, fault=fault))
    g = ground_state(_SAMPLE_PARAMS[0], alpha)
    a = antisymmetric_state(_SAMPLE_PARAMS[0], alpha)
    out.append(_result("splitting: zero theta-gradient on the line = 0",
                       splitting_eq2(single_well_from_state(g)), 0.0, 1e-10, fault=fault))
    out.append(_result("splitting: zero amplitude on the line = 0",
                       splitting_eq2(single_well_from_state(a)), 0.0, 1e-10, fault=fault))
    cr = current_residual(single_well_from_state(g), g, -0.03, -0.03, (40, 30, 40.0))
    out.append(_result("current residual for identical states", float(np.max(np.abs(cr.field))),
                       0.0, 0.0, fault=fault))
    return out


def run_limit_checks(tol_quad: float = 1e-10, fault: str | None = None):
    """Run the battery. Returns ``(results, artifacts)``.

    ``artifacts`` holds discrepancy reports for the printed ground-state
    formula whenever it disagrees with the generic engine.
    """
    spec = QuadratureSpec(relative_tolerance=tol_quad, absolute_tolerance=1e-15,
                          max_subdivisions=500, endpoint_hint="both")
    artifacts: list = []
    results = []
    results += _potential_checks(spec, fault)
    results += _state_checks(fault)
    results += _energy_checks(fault, artifacts)
    results += _splitting_checks(fault)
    return results, artifacts
