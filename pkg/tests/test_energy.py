import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from wedgebound.energy import (EnergyBreakdown, discrepancy_report, e0_paper_formula,
                               expectation_oracle_2d, expectation_reduced, paper_e0_terms)
from wedgebound.optimize import state_energy
from wedgebound.potential import f_profile, k_coefficient
from wedgebound.trial import TIGHT_RULE, TrialParams, excited_state, ground_state, make_state

params_st = st.builds(TrialParams, m=st.floats(0.6, 2.5), n=st.floats(0.05, 0.6),
                      p=st.floats(0.3, 0.97), q=st.floats(0.01, 0.3))
PLANAR = -1 / 32
G0 = TrialParams(1.3, 0.2, 0.7, 0.05)


def _constant_gamma_oracle(q, alpha):
    """Hand-reduced energy of N r cos(pi theta/alpha) exp(-q r)."""
    kinetic = q * q / 6 + math.pi ** 2 * q * q / (3 * alpha ** 2)
    k = k_coefficient(alpha)
    j, _ = integrate.quad(lambda th: math.cos(math.pi * th / alpha) ** 2
                          * (k - f_profile(th, alpha)), -alpha / 2, alpha / 2,
                          epsabs=1e-13, epsrel=1e-12, limit=200)
    return kinetic, q * j / (3 * alpha)


class TestBreakdown:
    def test_fields(self):
        e = EnergyBreakdown(0.1, -0.25)
        assert e.total == pytest.approx(-0.15) and e.virial_residual == pytest.approx(
            abs(0.2 - 0.25) / 0.15)

    def test_virial_rescale(self):
        lam, e = EnergyBreakdown(0.1, -0.25).scaled_to_virial()
        assert lam == pytest.approx(1.25)
        assert e.virial_residual == pytest.approx(0.0, abs=1e-14)
        with pytest.raises(ArithmeticError):
            EnergyBreakdown(0.1, 0.2).scaled_to_virial()

    def test_units(self):
        d = EnergyBreakdown(0.1, -0.25).to_dict("ev")
        assert any(v == pytest.approx(-0.15 * 27.211386, rel=1e-10) for v in d.values())


class TestConstantGamma:
    def test_planar_closed_form(self):
        q = 0.2
        e = expectation_reduced(ground_state(TrialParams(1.0, 1e-13, 0.5, q), math.pi),
                                rule=TIGHT_RULE, interpolate=False)
        assert e.kinetic == pytest.approx(q * q / 6 + q * q / 3, rel=1e-10)
        assert e.potential == pytest.approx(-2 * q / (3 * math.pi), rel=1e-10)

    @pytest.mark.parametrize("alpha", [1.3, 2.0, 4.5])
    def test_generic_alpha(self, alpha):
        q = 0.15
        p = TrialParams(1.0, 1e-13, 0.5, q)
        t, v = _constant_gamma_oracle(q, alpha)
        e = expectation_reduced(ground_state(p, alpha), rule=TIGHT_RULE, interpolate=False)
        assert e.kinetic == pytest.approx(t, rel=1e-10)
        assert e.potential == pytest.approx(v, rel=1e-8)
        assert e0_paper_formula(p, alpha, TIGHT_RULE, tan_sign=-1.0, interpolate=False) == \
            pytest.approx(t + v, rel=1e-8)


class TestPlanarClosure:
    def test_approaches_from_above(self):
        prev = None
        for eps in (1e-2, 1e-4, 1e-6):
            e = state_energy("ground", TrialParams(1.0, 0.25, 1 - eps, eps), math.pi, None,
                             TIGHT_RULE).total
            assert e >= PLANAR - 1e-12
            if prev is not None:
                assert e <= prev + 1e-12
            prev = e
        assert prev == pytest.approx(PLANAR, abs=1e-6)

    def test_oracle_closure(self):
        st_ = ground_state(TrialParams(1.0, 0.25, 1 - 1e-6, 1e-6), math.pi)
        e, norm = expectation_oracle_2d(st_)
        assert norm == pytest.approx(1.0, abs=1e-8)
        assert e.total == pytest.approx(PLANAR, abs=1e-6)

    def test_rederived_formula_at_closure(self):
        p = TrialParams(1.0, 0.25, 1 - 1e-12, 0.0)
        assert e0_paper_formula(p, math.pi, TIGHT_RULE, tan_sign=-1.0) == pytest.approx(PLANAR,
                                                                                       abs=1e-9)

    def test_printed_formula_misses_closure(self):
        p = TrialParams(1.0, 0.25, 1 - 1e-12, 0.0)
        assert e0_paper_formula(p, math.pi, TIGHT_RULE) == pytest.approx(-5 / 32, rel=1e-6)

    @given(params_st)
    def test_variational_floor(self, p):
        assert state_energy("ground", p, math.pi).total >= PLANAR - 1e-9


class TestThreeWay:
    @pytest.mark.parametrize("alpha", [2.0, math.pi, 4.5])
    @pytest.mark.parametrize("kind", ["ground", "antisymmetric", "excited"])
    def test_engine_vs_oracle(self, alpha, kind):
        p = TrialParams(1.5, 0.25, 0.8, 0.07)
        st_ = excited_state(p, G0, alpha) if kind == "excited" else make_state(kind, p, alpha)
        eng = expectation_reduced(st_, rule=TIGHT_RULE, interpolate=False)
        ora, norm = expectation_oracle_2d(st_)
        assert norm == pytest.approx(1.0, abs=1e-8)
        assert eng.total == pytest.approx(ora.total, rel=1e-6)
        assert eng.kinetic == pytest.approx(ora.kinetic, rel=1e-6)

    @given(params_st, st.sampled_from([2.0, math.pi, 4.5]))
    def test_rederived_formula_vs_engine(self, p, alpha):
        rep = discrepancy_report(p, alpha, TIGHT_RULE)
        assert rep["rederived_relative_deviation"] <= 1e-6
        assert rep["engine_total_au"] == pytest.approx(rep["rederived_formula_au"], rel=1e-6)

    def test_discrepancy_report_flags_printed_form(self):
        rep = discrepancy_report(G0, 2.0, TIGHT_RULE)
        assert rep["printed_relative_deviation"] > 1e-6
        assert rep["note"]

    def test_terms_structure(self):
        import numpy as np
        t = np.linspace(0.01, 1.5, 5)
        terms = paper_e0_terms(G0, 2.0, t)
        assert terms.A == pytest.approx(G0.m ** 2 - (math.pi / 2.0) ** 2)
        assert np.all(terms.C >= 0) and np.all(np.isfinite(terms.B))


class TestScaling:
    @given(params_st, st.floats(0.8, 6.0), st.sampled_from(["ground", "antisymmetric"]))
    def test_covariance(self, p, alpha, kind):
        a = state_energy(kind, p, alpha, None, TIGHT_RULE)
        b = state_energy(kind, p.scaled(2.0), alpha, None, TIGHT_RULE)
        assert b.kinetic == pytest.approx(4 * a.kinetic, rel=1e-10)
        assert b.potential == pytest.approx(2 * a.potential, rel=1e-10)

    @given(params_st, st.floats(0.8, 6.0))
    def test_kinetic_positive(self, p, alpha):
        e = state_energy("ground", p, alpha)
        assert e.kinetic > 0 and e.total == pytest.approx(e.kinetic + e.potential, rel=1e-12)
