"""Separable trial states for the wedge surface-state problem.

Every state is a short sum ``N * sum_j v_j(theta) r**mu_j * exp(-gamma(theta) r)``
with ``gamma(theta) = n cos(p pi theta/alpha) + q``. The angular factors are
monomials ``c cos^k(x) sin^j(x)`` in ``x = pi theta / alpha``:

* ground         ``cos x``                         (power m)
* antisymmetric  ``sin 2x = 2 sin x cos x``        (power m)
* excited        ``a cos x``  and  ``-cos^2 x``    (powers m and m+1)

Angular quadratures run over ``x`` in ``[0, pi/2]`` (all squared integrands
are even) but are written in the wall distance ``t = pi/2 - x`` so that
``cos x = sin t`` keeps full relative precision where the integrands peak.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gammaln

from .numerics import graded_rule, log_gamma

__all__ = [
    "TrialParams",
    "Monomial",
    "SeparableState",
    "OrthogonalityInputs",
    "AngularRule",
    "NonNormalizableError",
    "gamma_profile",
    "radial_moment",
    "i_n_integral",
    "orthogonality_constant",
    "printed_orthogonality_constant",
    "normalization",
    "log_normalization",
    "log_decay",
    "overlap",
    "n0_closed_form",
    "ground_state",
    "antisymmetric_state",
    "excited_state",
    "make_state",
    "REFERENCE_RADIUS",
    "density_grid",
    "default_extent",
]

HALF_PI = 0.5 * math.pi
REFERENCE_RADIUS = 4.0
KINDS = ("ground", "antisymmetric", "excited")


class NonNormalizableError(ValueError):
    """The decay profile vanishes at a wall, so the state has infinite norm."""


@dataclass(frozen=True)
class TrialParams:
    """Variational parameters of one trial family."""

    m: float
    n: float
    p: float
    q: float

    def __post_init__(self):
        for name in ("m", "n", "p", "q"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if not self.m > 0:
            raise ValueError(f"m must be positive, got {self.m!r}")
        if not self.n > 0:
            raise ValueError(f"n must be positive, got {self.n!r}")
        if not 0 < self.p <= 1:
            raise ValueError(f"p must lie in (0, 1], got {self.p!r}")
        if not self.q >= 0:
            raise ValueError(f"q must be non-negative, got {self.q!r}")

    @property
    def wall_decay(self) -> float:
        """``gamma`` at the walls; the state is normalisable iff this is positive."""
        return self.n * math.sin(0.5 * math.pi * (1.0 - self.p)) + self.q

    @property
    def normalizable(self) -> bool:
        return self.wall_decay > 0

    def scaled(self, lam: float) -> "TrialParams":
        """Same shape with all lengths divided by ``lam``."""
        return replace(self, n=self.n * lam, q=self.q * lam)

    def as_tuple(self):
        return (self.m, self.n, self.p, self.q)

    def to_dict(self):
        return {"m": self.m, "n": self.n, "p": self.p, "q": self.q}


def _gamma_t(params: TrialParams, t):
    """``gamma`` and its first two x-derivatives at wall distance ``t``."""
    # cos(p x) = sin((1 - p) pi/2 + p t) avoids cancelling near p = 1, t = 0
    arg = (1.0 - params.p) * HALF_PI + params.p * t
    c, s = np.sin(arg), np.cos(arg)
    g = params.n * c + params.q
    gx = -params.n * params.p * s
    gxx = -params.n * params.p**2 * c
    return g, gx, gxx


def _gamma_offset(params: TrialParams, t):
    """``gamma(t) - gamma(0)`` formed without cancellation (``t`` = wall distance)."""
    a0 = (1.0 - params.p) * HALF_PI
    pt = params.p * np.asarray(t, float)
    return params.n * (math.cos(a0) * np.sin(pt) - 2.0 * math.sin(a0) * np.sin(0.5 * pt) ** 2)


def log_decay(t, *profiles: TrialParams):
    """``log(sum of gamma_i)`` split as ``(value at the wall, log1p offset)``.

    Large powers of the decay profile are only meaningful through ratios to
    the wall value; keeping the offset separate preserves those ratios even
    when the profile varies by less than a rounding unit.
    """
    gw = sum(p.wall_decay for p in profiles)
    d = sum(_gamma_offset(p, t) for p in profiles)
    return math.log(gw), np.log1p(d / gw)


def log_rising(x: float, k: int) -> float:
    """``log Gamma(x + k) - log Gamma(x)`` for integer ``k >= 0``."""
    return float(sum(math.log(x + i) for i in range(k)))


def gamma_profile(theta, params: TrialParams, alpha: float):
    """``(gamma, dgamma/dtheta, d2gamma/dtheta2)`` at angle ``theta``."""
    if np.any(np.abs(theta) > 0.5 * alpha * (1 + 1e-14)):
        raise ValueError("theta outside the closed opening")
    k = math.pi / alpha
    x = k * np.asarray(theta, float)
    px = params.p * x
    g = params.n * np.cos(px) + params.q
    d1 = -params.n * params.p * np.sin(px) * k
    d2 = -params.n * params.p**2 * np.cos(px) * k * k
    if np.ndim(g) == 0:
        return float(g), float(d1), float(d2)
    return g, d1, d2


def radial_moment(s: float, beta: float) -> float:
    """``int_0^inf r**s exp(-beta r) dr = Gamma(s+1) / beta**(s+1)``."""
    if not s > -1:
        raise ValueError(f"radial moment needs s > -1, got {s!r}")
    if not beta > 0:
        raise ValueError(f"radial moment needs beta > 0, got {beta!r}")
    return math.exp(log_gamma(s + 1.0) - (s + 1.0) * math.log(beta))


# ---------------------------------------------------------------------------
# angular factors


@dataclass(frozen=True)
class Monomial:
    """``coef * cos(x)**k * sin(x)**j`` with x-derivatives."""

    coef: float
    k: int
    j: int

    def value(self, cx, sx):
        return self.coef * cx**self.k * sx**self.j

    def d1(self, cx, sx):
        out = 0.0
        if self.k:
            out = out - self.k * cx ** (self.k - 1) * sx ** (self.j + 1)
        if self.j:
            out = out + self.j * cx ** (self.k + 1) * sx ** (self.j - 1)
        return self.coef * out

    def d2(self, cx, sx):
        k, j = self.k, self.j
        # d/dx of  -k c^(k-1) s^(j+1) + j c^(k+1) s^(j-1)
        out = 0.0
        if k:
            if k > 1:
                out = out + k * (k - 1) * cx ** (k - 2) * sx ** (j + 2)
            out = out - k * (j + 1) * cx**k * sx**j
        if j:
            out = out - j * (k + 1) * cx**k * sx**j
            if j > 1:
                out = out + j * (j - 1) * cx ** (k + 2) * sx ** (j - 2)
        return self.coef * out


# ---------------------------------------------------------------------------
# angular quadrature


@dataclass(frozen=True)
class AngularRule:
    """Composite Gauss-Legendre nodes on ``t = pi/2 - x`` in ``[0, pi/2]``.

    ``order``/``ratio``/``depth`` trade speed for accuracy: the loose
    setting is used inside optimisation loops, the tight one for final
    numbers.
    """

    order: int = 20
    ratio: float = 3.0
    depth: float = 1e-5

    def nodes(self, *profiles: TrialParams):
        scale = min(_wall_scale(p) for p in profiles) if profiles else 1.0
        return graded_rule(HALF_PI, scale, self.order, self.ratio, self.depth)


LOOSE_RULE = AngularRule(order=16, ratio=4.0, depth=1e-4)
DEFAULT_RULE = AngularRule()
TIGHT_RULE = AngularRule(order=32, ratio=2.5, depth=1e-7)


def _wall_scale(params: TrialParams) -> float:
    # Angular integrands carry gamma**-(2m+2); gamma grows linearly away from
    # the wall, so they peak within gamma_wall / ((2m+2) slope) of it.
    slope = params.n * params.p * math.cos(0.5 * math.pi * (1.0 - params.p))
    gw = params.wall_decay
    if slope <= 0 or gw <= 0:
        return 1.0
    return min(1.0, gw / (slope * max(1.0, 2.0 * params.m + 2.0)))


# ---------------------------------------------------------------------------
# orthogonality integrals


@dataclass(frozen=True)
class OrthogonalityInputs:
    params0: TrialParams
    params2: TrialParams
    alpha: float


def _i_n(order: int, power: float, l1p, cx, w):
    # int cos^order x / (beta/beta_wall)^power dx; the result is val * exp(shift)
    logs = order * np.log(cx) - power * l1p
    shift = float(np.max(logs))
    return float(np.sum(w * np.exp(logs - shift))), shift


def i_n_integral(n: int, inputs: OrthogonalityInputs, rule: AngularRule = DEFAULT_RULE) -> float:
    """``int_0^{pi/2} cos^n x / (gamma_0 + gamma_2)^(m_0 + m_2 + n) dx``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    p0, p2 = inputs.params0, inputs.params2
    t, w = rule.nodes(p0, p2)
    power = p0.m + p2.m + n
    lw, l1p = log_decay(t, p0, p2)
    val, shift = _i_n(n, power, l1p, np.sin(t), w)
    return val * math.exp(shift - power * lw)


def _a_from_ratio(p0: TrialParams, p2: TrialParams, rule: AngularRule, invert: bool) -> float:
    t, w = rule.nodes(p0, p2)
    lw, l1p = log_decay(t, p0, p2)
    cx = np.sin(t)
    s = p0.m + p2.m
    i2, sh2 = _i_n(2, s + 2, l1p, cx, w)
    i3, sh3 = _i_n(3, s + 3, l1p, cx, w)
    # the wall factors differ by exactly one power of beta_wall
    ratio = (i3 / i2) * math.exp(sh3 - sh2 - lw)
    if not (ratio > 0 and math.isfinite(ratio)):
        raise ArithmeticError("orthogonality integrals degenerate (I3/I2 not positive)")
    return (s + 2.0) * (1.0 / ratio if invert else ratio)


def orthogonality_constant(inputs: OrthogonalityInputs, rule: AngularRule = DEFAULT_RULE) -> float:
    """The length ``a`` that makes the excited trial state orthogonal to the ground one.

    Radial integration of the overlap along each ray leaves
    ``a Gamma(s+2) I_2 = Gamma(s+3) I_3`` with ``s = m_0 + m_2``, hence
    ``a = (m_0 + m_2 + 2) I_3 / I_2``.
    """
    return _a_from_ratio(inputs.params0, inputs.params2, rule, invert=False)


def printed_orthogonality_constant(inputs: OrthogonalityInputs,
                                   rule: AngularRule = DEFAULT_RULE) -> float:
    """``(m_0 + m_2 + 2) I_2 / I_3``; kept only to show that it does not orthogonalise."""
    return _a_from_ratio(inputs.params0, inputs.params2, rule, invert=True)


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class SeparableState:
    kind: str
    alpha: float
    params: TrialParams
    terms: tuple  # ((mu, Monomial), ...)
    log_norm: float = 0.0
    a: float | None = None
    phase: int = 1
    ground_params: TrialParams | None = field(default=None, repr=False)

    @property
    def norm(self) -> float:
        """Signed normalisation constant (may underflow for very large m)."""
        return self.phase * math.exp(self.log_norm)

    # -- evaluation ------------------------------------------------------
    def _angles(self, theta):
        # via the wall distance t = pi/2 - |x| so that cos x is exactly 0 on the walls
        th = np.asarray(theta, float)
        t = np.maximum(math.pi / self.alpha * (0.5 * self.alpha - np.abs(th)), 0.0)
        return np.sin(t), np.sign(th) * np.cos(t)

    def _check(self, r, theta):
        if np.any(np.asarray(r) < 0):
            raise ValueError("r must be non-negative")
        if np.any(np.abs(theta) > 0.5 * self.alpha * (1 + 1e-14)):
            raise ValueError("point outside the wedge opening")

    def _radial(self, r, g):
        # N r^mu e^{-g r} per term, formed in logs so large m cannot overflow
        with np.errstate(divide="ignore"):
            logr = np.log(r)
        base = self.log_norm - g * r
        return [np.where(r > 0, np.exp(base + mu * logr), 0.0) for mu, _ in self.terms]

    def evaluate(self, r, theta):
        self._check(r, theta)
        r = np.asarray(r, float)
        cx, sx = self._angles(theta)
        g, _, _ = gamma_profile(theta, self.params, self.alpha)
        rad = self._radial(r, g)
        out = self.phase * sum(m.value(cx, sx) * R for (_, m), R in zip(self.terms, rad))
        return float(out) if np.ndim(out) == 0 else out

    def evaluate_derivatives(self, r, theta):
        """``(psi, dpsi/dr, dpsi/dtheta, d2psi/dtheta2, d2psi/dr2)``."""
        self._check(r, theta)
        r = np.asarray(r, float)
        k = math.pi / self.alpha
        cx, sx = self._angles(theta)
        g, g1, g2 = gamma_profile(theta, self.params, self.alpha)
        rad = self._radial(r, g)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(r > 0, 1.0 / r, 0.0)
        psi = dr = dth = dth2 = drr = 0.0
        for (mu, mono), R in zip(self.terms, rad):
            v = mono.value(cx, sx)
            v1 = k * mono.d1(cx, sx)
            v2 = k * k * mono.d2(cx, sx)
            psi = psi + v * R
            # d/dr (r^mu e^{-g r}) = (mu/r - g) r^mu e^{-g r}
            dr = dr + v * (mu * inv - g) * R
            drr = drr + v * ((mu * inv - g) ** 2 - mu * inv * inv) * R
            dth = dth + (v1 - v * g1 * r) * R
            dth2 = dth2 + (v2 - 2 * v1 * g1 * r - v * g2 * r + v * g1 * g1 * r * r) * R
        out = tuple(self.phase * q for q in (psi, dr, dth, dth2, drr))
        if np.ndim(out[0]) == 0:
            return tuple(float(q) for q in out)
        return out

    __call__ = evaluate

    # -- serialisation ---------------------------------------------------
    def to_dict(self):
        d = {"kind": self.kind, "alpha": self.alpha, "params": self.params.to_dict(),
             "N": self.norm, "log_N": self.log_norm, "phase": self.phase}
        if self.kind == "excited":
            d["a"] = self.a
            d["ground_params"] = self.ground_params.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        params = TrialParams(**d["params"])
        if d["kind"] == "excited":
            return excited_state(params, TrialParams(**d["ground_params"]), d["alpha"])
        return make_state(d["kind"], params, d["alpha"])


def _terms(kind, params, a=None):
    m = params.m
    if kind == "ground":
        return ((m, Monomial(1.0, 1, 0)),)
    if kind == "antisymmetric":
        return ((m, Monomial(2.0, 1, 1)),)
    if kind == "excited":
        return ((m, Monomial(a, 1, 0)), (m + 1.0, Monomial(-1.0, 2, 0)))
    raise ValueError(f"unknown state kind {kind!r}")


def _norm_integral(terms, params, alpha, rule: AngularRule):
    """``int |psi|^2 r dr dtheta`` for unit normalisation constant."""
    if not params.normalizable:
        raise NonNormalizableError(
            f"gamma vanishes at the walls for {params} (n cos(p pi/2) + q = 0)")
    t, w = rule.nodes(params)
    lw, l1p = log_decay(t, params)
    lw += math.log(2.0)
    cx, sx = np.sin(t), np.cos(t)
    # moments Gamma(s+1)/(2 gamma)^(s+1) relative to the smallest power s0
    s0 = 2.0 * min(mu for mu, _ in terms) + 1.0
    total = 0.0
    for mu_j, vj in terms:
        for mu_k, vk in terms:
            s = mu_j + mu_k + 1.0
            k = int(round(s - s0))
            logm = log_rising(s0 + 1.0, k) - k * lw - (s + 1.0) * l1p
            total += float(np.sum(w * vj.value(cx, sx) * vk.value(cx, sx) * np.exp(logm)))
    shift = gammaln(s0 + 1.0) - (s0 + 1.0) * lw
    return 2.0 * alpha / math.pi * total, float(shift)


def log_normalization(kind: str, params: TrialParams, alpha: float, a: float | None = None,
                      rule: AngularRule = DEFAULT_RULE) -> float:
    terms = _terms(kind, params, a)
    val, shift = _norm_integral(terms, params, alpha, rule)
    if not val > 0:
        raise NonNormalizableError(f"norm integral is {val!r}")
    return -0.5 * (math.log(val) + shift)


def normalization(kind: str, params: TrialParams, alpha: float, a: float | None = None,
                  rule: AngularRule = DEFAULT_RULE) -> float:
    """Positive constant ``N`` with ``int |psi|^2 r dr dtheta = 1``."""
    return math.exp(log_normalization(kind, params, alpha, a, rule))


def n0_closed_form(params: TrialParams, alpha: float, rule: AngularRule = DEFAULT_RULE) -> float:
    """Ground-state normalisation from the gamma-function reduction.

    ``N0**2 = 2**(2m+1) (pi/alpha) / (Gamma(2m+2) I_2)`` where ``I_2`` is the
    orthogonality integral with the second profile switched off (its power
    set to ``m`` and ``n = p = q = 0``), i.e. ``int cos^2 x / gamma_0^(2m+2)``.
    """
    if not params.normalizable:
        raise NonNormalizableError(f"gamma vanishes at the walls for {params}")
    m = params.m
    t, w = rule.nodes(params)
    lw, l1p = log_decay(t, params)
    i2, shift = _i_n(2, 2 * m + 2, l1p, np.sin(t), w)
    log_n2 = ((2 * m + 1) * math.log(2.0) + math.log(math.pi / alpha)
              - log_gamma(2 * m + 2) - math.log(i2) - shift + (2 * m + 2) * lw)
    return math.exp(0.5 * log_n2)


def overlap(sa: SeparableState, sb: SeparableState, region: str = "full",
            rule: AngularRule = DEFAULT_RULE) -> float:
    """``int psi_a psi_b r dr dtheta`` over the wedge or one half of it.

    ``region`` is ``"full"``, ``"upper"`` (theta > 0) or ``"lower"``
    (theta < 0). The radial integral is done in closed form; the angular one
    on the graded rule.
    """
    if sa.alpha != sb.alpha:
        raise ValueError("states belong to different opening angles")
    if region == "full":
        return overlap(sa, sb, "upper", rule) + overlap(sa, sb, "lower", rule)
    if region not in ("upper", "lower"):
        raise ValueError(f"unknown region {region!r}")
    t, w = rule.nodes(sa.params, sb.params)
    lw, l1p = log_decay(t, sa.params, sb.params)
    cx = np.sin(t)
    sx = np.cos(t) if region == "upper" else -np.cos(t)
    # int r^(s+1) exp(-beta r) dr = Gamma(s+2)/beta^(s+2), s = mu_j + mu_k
    s0 = sa.params.m + sb.params.m
    total = 0.0
    for mu_j, vj in sa.terms:
        for mu_k, vk in sb.terms:
            k = int(round(mu_j + mu_k - s0))
            logm = log_rising(s0 + 2.0, k) - k * lw - (mu_j + mu_k + 2.0) * l1p
            total += float(np.sum(w * vj.value(cx, sx) * vk.value(cx, sx) * np.exp(logm)))
    log_pref = (sa.log_norm + sb.log_norm + log_gamma(s0 + 2.0) - (s0 + 2.0) * lw
                + math.log(sa.alpha / math.pi))
    return sa.phase * sb.phase * total * math.exp(log_pref)


def _phase_fixed(state: SeparableState) -> SeparableState:
    # sign of the angular/polynomial part at the reference point
    cx = sx = math.sqrt(0.5)
    v = sum(m.value(cx, sx) * REFERENCE_RADIUS**(mu - state.params.m) for mu, m in state.terms)
    if v < 0:
        return replace(state, phase=-state.phase)
    return state


def make_state(kind: str, params: TrialParams, alpha: float, *, a: float | None = None,
               ground_params: TrialParams | None = None,
               rule: AngularRule = DEFAULT_RULE) -> SeparableState:
    if not 0 < alpha <= 2 * math.pi:
        raise ValueError(f"opening angle must lie in (0, 2pi], got {alpha!r}")
    if kind == "excited" and a is None:
        if ground_params is None:
            raise ValueError("the excited state needs the ground-state parameters")
        a = orthogonality_constant(OrthogonalityInputs(ground_params, params, alpha), rule)
    terms = _terms(kind, params, a)
    log_n = log_normalization(kind, params, alpha, a, rule)
    st = SeparableState(kind, float(alpha), params, terms, log_n, a, 1, ground_params)
    return _phase_fixed(st)


def ground_state(params: TrialParams, alpha: float, **kw) -> SeparableState:
    return make_state("ground", params, alpha, **kw)


def antisymmetric_state(params: TrialParams, alpha: float, **kw) -> SeparableState:
    return make_state("antisymmetric", params, alpha, **kw)


def excited_state(params: TrialParams, ground_params: TrialParams, alpha: float,
                  **kw) -> SeparableState:
    return make_state("excited", params, alpha, ground_params=ground_params, **kw)


# ---------------------------------------------------------------------------
# probability density on a polar grid


def density_grid(state: SeparableState, r_max: float, n_r: int, n_theta: int):
    """``|psi|^2`` at the cell midpoints of a polar grid over the opening.

    Returns ``(FieldGrid, integral)`` where ``integral`` is the midpoint-rule
    value of ``int |psi|^2 r dr dtheta`` over the grid, i.e. the share of the
    norm the grid captures.
    """
    from .potential import FieldGrid

    if n_r < 2 or n_theta < 2:
        raise ValueError("grid counts must be >= 2")
    if not r_max > 0:
        raise ValueError("r_max must be positive")
    alpha = state.alpha
    r = r_max * (np.arange(n_r) + 0.5) / n_r
    theta = alpha * ((np.arange(n_theta) + 0.5) / n_theta - 0.5)
    R, T = np.meshgrid(r, theta, indexing="ij")
    rho = state.evaluate(R, T) ** 2
    integral = float(np.sum(rho * R)) * (r_max / n_r) * (alpha / n_theta)
    inside = np.ones_like(rho, dtype=bool)
    return FieldGrid(alpha, r, theta, rho, inside), integral


def default_extent(state: SeparableState, cap: float = 400.0) -> float:
    """Radius that holds all but a negligible part of the radial mass.

    Uses the slowest decay (at the walls): the radial density
    ``r^(2m+1) exp(-2 gamma_w r)`` has mean ``(2m+2)/(2 gamma_w)``; ten
    standard deviations beyond it are added. Wall-bound states whose extent
    exceeds ``cap`` are truncated there.
    """
    p = state.params
    k = 2.0 * (p.m + (1.0 if state.kind == "excited" else 0.0)) + 2.0
    gw = p.wall_decay
    return float(min(cap, (k + 10.0 * math.sqrt(k)) / (2.0 * gw)))
