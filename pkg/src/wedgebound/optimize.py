"""Nelder-Mead minimisation of the variational energies.

The search runs in unconstrained coordinates ``u``::

    m = exp(u1),  n = exp(u2),  p = logistic(u3) (capped at 1 - 1e-12),  q = exp(u4)

so every probe is a valid parameter set. Probes whose state cannot be
normalised score ``+inf`` and the simplex backs away from them.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .energy import EnergyBreakdown, expectation_reduced
from .trial import (DEFAULT_RULE, LOOSE_RULE, TIGHT_RULE, AngularRule, NonNormalizableError,
                    TrialParams, make_state)

log = logging.getLogger(__name__)

__all__ = [
    "OptimizerConfig",
    "SimplexResult",
    "OptimizationResult",
    "OptimizationError",
    "nelder_mead",
    "minimize",
    "transform",
    "untransform",
    "initial_guesses",
    "state_energy",
    "optimize_state",
]

P_CAP = 1.0 - 1e-12
BOUNDARY_EPS = 1e-6


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 5000
    simplex_size_tolerance: float = 1e-9
    objective_spread_tolerance: float = 1e-12
    restarts: int = 8
    seed: int = 20240611
    initial_step: float = 0.4
    initial_guesses: tuple = ()
    tie_tolerance: float = 1e-9

    def __post_init__(self):
        if self.max_iterations < 1 or self.restarts < 1:
            raise ValueError("iteration and restart counts must be positive")
        if not (self.simplex_size_tolerance > 0 and self.objective_spread_tolerance > 0):
            raise ValueError("tolerances must be positive")

    def digest(self) -> str:
        d = asdict(self)
        d["initial_guesses"] = [list(g.as_tuple()) if isinstance(g, TrialParams) else list(g)
                                for g in self.initial_guesses]
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# simplex


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    iterations: int
    evaluations: int
    converged: bool


def nelder_mead(fun: Callable[[np.ndarray], float], x0, step: float = 0.4,
                max_iterations: int = 5000, xtol: float = 1e-9, ftol: float = 1e-12,
                reflect: float = 1.0, expand: float = 2.0, contract: float = 0.5,
                shrink: float = 0.5) -> SimplexResult:
    """Classic Nelder-Mead.

    Stops when the simplex diameter (largest vertex distance from the best
    vertex) drops below ``xtol`` or the spread of objective values below
    ``ftol``, whichever comes first. Deterministic for a given ``x0``.
    """
    x0 = np.asarray(x0, float)
    dim = x0.size
    simplex = np.vstack([x0] + [x0 + step * e for e in np.eye(dim)])
    values = np.array([fun(v) for v in simplex])
    nfev = dim + 1
    if not np.any(np.isfinite(values)):
        raise OptimizationError(f"objective is not finite anywhere on the initial simplex at {x0}")

    it = 0
    converged = False
    while it < max_iterations:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        diam = float(np.max(np.linalg.norm(simplex[1:] - simplex[0], axis=1)))
        spread = float(values[-1] - values[0])
        if diam < xtol or (np.isfinite(spread) and spread < ftol):
            converged = True
            break
        it += 1
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + reflect * (centroid - worst)
        fr = fun(xr)
        nfev += 1
        if fr < values[0]:
            xe = centroid + expand * (xr - centroid)
            fe = fun(xe)
            nfev += 1
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        if fr < values[-1]:
            xc = centroid + contract * (xr - centroid)
            fc = fun(xc)
            nfev += 1
            if fc <= fr:
                simplex[-1], values[-1] = xc, fc
                continue
        else:
            xc = centroid + contract * (worst - centroid)
            fc = fun(xc)
            nfev += 1
            if fc < values[-1]:
                simplex[-1], values[-1] = xc, fc
                continue
        best = simplex[0]
        simplex[1:] = best + shrink * (simplex[1:] - best)
        values[1:] = [fun(v) for v in simplex[1:]]
        nfev += dim

    i = int(np.argmin(values))
    return SimplexResult(simplex[i].copy(), float(values[i]), it, nfev, converged)


def minimize(objective: Callable[[np.ndarray], float], starts: Sequence, config: OptimizerConfig):
    """Run the simplex from every start; returns the list of per-start results.

    Non-finite objective values are mapped to ``+inf``. Results are in start
    order, so the caller's argmin is deterministic.
    """
    def safe(u):
        try:
            v = float(objective(u))
        except (NonNormalizableError, ArithmeticError, ValueError, FloatingPointError):
            return math.inf
        return v if math.isfinite(v) else math.inf

    out = []
    for x0 in starts:
        try:
            out.append(nelder_mead(safe, x0, config.initial_step, config.max_iterations,
                                   config.simplex_size_tolerance,
                                   config.objective_spread_tolerance))
        except OptimizationError as exc:
            log.warning("restart from %s failed: %s", x0, exc)
    if not out:
        raise OptimizationError("no restart produced a finite objective")
    return out


# ---------------------------------------------------------------------------
# parameter transforms


def transform(params: TrialParams) -> np.ndarray:
    if not isinstance(params, TrialParams):
        params = TrialParams(*params)
    p = min(params.p, P_CAP)
    q = params.q if params.q > 0 else 1e-300
    return np.array([math.log(params.m), math.log(params.n), math.log(p / (1.0 - p)),
                     math.log(q)])


def untransform(u) -> TrialParams:
    u = np.asarray(u, float)
    # logistic written to stay accurate for large |u3|
    if u[2] >= 0:
        p = 1.0 / (1.0 + math.exp(-u[2]))
    else:
        e = math.exp(u[2])
        p = e / (1.0 + e)
    p = min(p, P_CAP)
    return TrialParams(math.exp(u[0]), math.exp(u[1]), p, math.exp(u[3]))


def initial_guesses(alpha: float, config: OptimizerConfig) -> list[TrialParams]:
    """Physics-informed start followed by seeded log-uniform draws."""
    guesses = list(config.initial_guesses)
    if len(guesses) < config.restarts:
        guesses.append(TrialParams(1.0, 0.25 * math.pi / alpha,
                                   min(1.0, 0.99 * math.pi / alpha), 0.01))
    rng = np.random.default_rng(config.seed)

    def lu(lo, hi):
        return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))

    while len(guesses) < config.restarts:
        guesses.append(TrialParams(lu(0.3, 3.0), lu(0.02, 1.0), lu(0.2, 1.0), lu(1e-3, 0.5)))
    return [g if isinstance(g, TrialParams) else TrialParams(*g) for g in guesses]


# ---------------------------------------------------------------------------
# state-level driver


@dataclass
class OptimizationResult:
    kind: str
    alpha: float
    best_params: TrialParams
    best_energy: EnergyBreakdown
    iterations: int
    converged: bool
    boundary_active: dict
    restart_energies: list
    a: float | None = None
    ground_params: TrialParams | None = None
    config_digest: str = ""
    notes: list = field(default_factory=list)

    def state(self, rule: AngularRule = DEFAULT_RULE):
        return make_state(self.kind, self.best_params, self.alpha,
                          ground_params=self.ground_params, rule=rule)

    def to_dict(self):
        d = {
            "kind": self.kind,
            "alpha": self.alpha,
            "best_params": self.best_params.to_dict(),
            "energy": self.best_energy.to_dict("au") | self.best_energy.to_dict("ev"),
            "iterations": self.iterations,
            "converged": self.converged,
            "boundary_active": self.boundary_active,
            "restart_energies_au": self.restart_energies,
            "config_digest": self.config_digest,
            "notes": self.notes,
        }
        if self.kind == "excited":
            d["a"] = self.a
            d["ground_params"] = self.ground_params.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        e = d["energy"]
        gp = d.get("ground_params")
        return cls(d["kind"], d["alpha"], TrialParams(**d["best_params"]),
                   EnergyBreakdown(e["kinetic_au"], e["potential_au"]), d["iterations"],
                   d["converged"], d["boundary_active"], d["restart_energies_au"], d.get("a"),
                   TrialParams(**gp) if gp else None, d.get("config_digest", ""),
                   d.get("notes", []))


def state_energy(kind: str, params: TrialParams, alpha: float,
                 ground_params: TrialParams | None = None,
                 rule: AngularRule = DEFAULT_RULE) -> EnergyBreakdown:
    st = make_state(kind, params, alpha, ground_params=ground_params, rule=rule)
    return expectation_reduced(st, rule=rule)


def _boundary_flags(params: TrialParams) -> dict:
    return {"p_at_one": params.p >= 1.0 - BOUNDARY_EPS, "q_at_zero": params.q <= BOUNDARY_EPS,
            "m_small": params.m <= BOUNDARY_EPS, "n_small": params.n <= BOUNDARY_EPS}


def _canonical_candidate(kind, params, alpha, rule):
    # Near the wall-bound threshold the energy surface is flat to round-off
    # along m, p and q: every member of that valley describes the same
    # wall-bound limit. The hydrogenic member (m = 1, p at its cap, q = 0),
    # rescaled to its virial optimum, is then the one reported.
    try:
        cand = TrialParams(1.0, params.n, P_CAP, 0.0)
        e = state_energy(kind, cand, alpha, None, rule)
        lam, _ = e.scaled_to_virial()
        cand = cand.scaled(lam)
        return cand, state_energy(kind, cand, alpha, None, rule)
    except (NonNormalizableError, ArithmeticError, ValueError):
        return None


def optimize_state(kind: str, alpha: float, config: OptimizerConfig = OptimizerConfig(),
                   ground: OptimizationResult | None = None,
                   search_rule: AngularRule = LOOSE_RULE,
                   final_rule: AngularRule = TIGHT_RULE) -> OptimizationResult:
    """Upper bound on one level for opening angle ``alpha``.

    The excited family needs the optimised ground state: its parameters are
    frozen and the orthogonality constant is recomputed for every probe.
    The winner is re-evaluated on ``final_rule``. For the ground and
    antisymmetric families the length scale is then set exactly to its
    virial optimum (the family is closed under ``(n, q) -> lam (n, q)``),
    and the ``q = 0`` face is probed whenever it is normalisable.
    """
    if kind not in ("ground", "antisymmetric", "excited"):
        raise ValueError(f"unknown state kind {kind!r}")
    gp = None
    if kind == "excited":
        if ground is None:
            raise ValueError("optimising the excited state needs a ground-state result")
        if ground.alpha != alpha:
            raise ValueError("ground result belongs to a different opening angle")
        gp = ground.best_params

    def objective(u):
        return state_energy(kind, untransform(u), alpha, gp, search_rule).total

    starts = [transform(g) for g in initial_guesses(alpha, config)]
    runs = minimize(objective, starts, config)

    finals = []
    for run in runs:
        params = untransform(run.x)
        try:
            e = state_energy(kind, params, alpha, gp, final_rule)
        except (NonNormalizableError, ArithmeticError, ValueError):
            e = None
        finals.append((params, e, run))
    restart_energies = [e.total if e is not None else math.inf for _, e, _ in finals]
    i = int(np.argmin(restart_energies))
    params, energy, run = finals[i]
    if energy is None:
        raise OptimizationError("every restart ended on a non-normalisable state")
    notes = []

    if kind != "excited" and energy.potential < 0:
        lam, _ = energy.scaled_to_virial()
        cand = params.scaled(lam)
        e2 = state_energy(kind, cand, alpha, gp, final_rule)
        if e2.total <= energy.total:
            params, energy = cand, e2
            notes.append(f"virial rescale lam={lam:.12g}")
    if params.q > 0:
        try:
            cand = TrialParams(params.m, params.n, params.p, 0.0)
            e0 = state_energy(kind, cand, alpha, gp, final_rule)
            if e0.total < energy.total:
                params, energy = cand, e0
                notes.append("q=0 face is lower")
        except NonNormalizableError:
            pass

    if kind != "excited" and any(_boundary_flags(params).values()):
        cand = _canonical_candidate(kind, params, alpha, final_rule)
        if cand is not None and cand[1].total <= energy.total + config.tie_tolerance:
            notes.append(f"flat valley: (m, p, q)=({params.m:.6g}, {params.p:.12g}, "
                         f"{params.q:.3g}) replaced by the wall-bound representative "
                         f"(energy change {cand[1].total - energy.total:.3g} Ha)")
            params, energy = cand

    restart_energies[i] = min(restart_energies[i], energy.total)
    a = None
    if kind == "excited":
        a = make_state(kind, params, alpha, ground_params=gp, rule=final_rule).a
    return OptimizationResult(kind, float(alpha), params, energy, run.iterations, run.converged,
                              _boundary_flags(params), [float(v) for v in restart_energies], a,
                              gp, config.digest(), notes)
