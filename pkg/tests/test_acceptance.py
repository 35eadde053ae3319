"""Acceptance criteria 1-9, one verdict line per criterion.

Each test prints ``PASS``/``FAIL`` with the measured quantity and the stated
tolerance, then asserts the criterion unchanged. The collected lines are
repeated in the ``acceptance criteria`` section of the pytest summary.
"""

import functools
import json
import math
from pathlib import Path

import numpy as np

from wedgebound.cli import main
from wedgebound.degeneracy import (analytic_channel_state, current_residual,
                                   single_well_from_pair, single_well_from_state, splitting_eq2)
from wedgebound.energy import discrepancy_report, expectation_oracle_2d, expectation_reduced
from wedgebound.optimize import OptimizerConfig, optimize_state, state_energy
from wedgebound.potential import (HARTREE_EV, WedgeGeometry, f_profile, image_oracle,
                                  image_potential_energy, k_coefficient)
from wedgebound.trial import (TIGHT_RULE, OrthogonalityInputs, TrialParams, excited_state,
                              ground_state, make_state, n0_closed_form, overlap,
                              printed_orthogonality_constant)

REPORT: list[str] = []
CONFIG = OptimizerConfig()
PLANAR_FLOOR_EV = -HARTREE_EV / 32


def verdict(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    REPORT.append(line)
    print(line)
    return ok


@functools.cache
def optimum(kind, alpha):
    ground = optimum("ground", alpha) if kind == "excited" else None
    return optimize_state(kind, alpha, CONFIG, ground=ground)


def energy_ev(kind, alpha):
    return optimum(kind, alpha).best_energy.total * HARTREE_EV


def random_params(rng, count):
    out = []
    while len(out) < count:
        p = TrialParams(float(rng.uniform(0.6, 2.5)), float(rng.uniform(0.05, 0.6)),
                        float(rng.uniform(0.3, 0.97)), float(rng.uniform(0.01, 0.3)))
        out.append(p)
    return out


def test_criterion_1_potential_limits():
    devs = {
        "k(pi)": (abs(k_coefficient(math.pi)), 1e-8),
        "k(pi/2)": (abs(k_coefficient(math.pi / 2) - 1.0), 1e-7),
        "k(2pi)": (abs(k_coefficient(2 * math.pi) + 1 / math.pi), 1e-7),
        "f(0,pi/2)": (abs(f_profile(0.0, math.pi / 2) - 2 * math.sqrt(2)), 1e-7),
    }
    for th in (0.0, 0.3, 0.8, 1.2, 1.45):
        devs[f"f({th},pi)"] = (abs(f_profile(th, math.pi) * math.cos(th) - 1.0), 1e-8)
    ok = all(d <= t for d, t in devs.values())
    worst = max(devs, key=lambda k: devs[k][0] / devs[k][1])
    verdict(1, ok, f"analytic limits, worst {worst}: dev {devs[worst][0]:.2e} "
                   f"(tol {devs[worst][1]:.0e})")
    assert ok


def test_criterion_2_images():
    rng = np.random.default_rng(2)
    worst = 0.0
    for n in (1, 2, 3):
        alpha = math.pi / n
        geo = WedgeGeometry(alpha)
        for _ in range(20):
            r = float(rng.uniform(0.1, 20.0))
            th = float(rng.uniform(-0.499, 0.499) * alpha)
            ref = image_oracle(r, th, n)
            worst = max(worst, abs(image_potential_energy(r, th, geo) - ref) / abs(ref))
    ok = worst <= 1e-6
    verdict(2, ok, f"image sums at alpha=pi, pi/2, pi/3 (60 points): max rel dev {worst:.2e} "
                   f"(tol 1e-6)")
    assert ok


def test_criterion_3_planar_benchmark():
    e0 = energy_ev("ground", math.pi)
    e2 = energy_ev("excited", math.pi)
    ok0 = -0.8504 <= e0 <= -0.84 and e0 >= PLANAR_FLOOR_EV - 1e-9
    ok2 = abs(e2 - (-0.2126)) <= 0.02
    verdict(3, ok0 and ok2, f"E0(pi) = {e0:.6f} eV in [-0.8504, -0.84], floor "
                            f"{PLANAR_FLOOR_EV:.6f}; E2(pi) = {e2:.6f} eV, |E2 + 0.2126| = "
                            f"{abs(e2 + 0.2126):.2e} (tol 0.02)")
    assert ok0 and ok2


def test_criterion_4_degeneracy_plateau():
    parts, ok = [], True
    for alpha in (3.5, 4.712, 5.011):
        e0, e1 = energy_ev("ground", alpha), energy_ev("antisymmetric", alpha)
        good = abs(e1 - e0) <= 0.05 and abs(e0 + 0.85) <= 0.10
        ok &= good
        parts.append(f"alpha={alpha}: E0={e0:.4f} |gap|={abs(e1 - e0):.1e} "
                     f"{'ok' if good else 'FAIL'}")
    gap = energy_ev("antisymmetric", 2.0) - energy_ev("ground", 2.0)
    distinct = gap >= 0.1
    ok &= distinct
    parts.append(f"alpha=2.0: E1-E0={gap:.4f} eV (need >= 0.1) {'ok' if distinct else 'FAIL'}")
    verdict(4, ok, "; ".join(parts))
    assert ok


def test_criterion_5_oracle_equivalence(tmp_path):
    rng = np.random.default_rng(5)
    worst_oracle = worst_rederived = 0.0
    outliers = []
    for alpha in (2.0, math.pi, 4.5):
        for p in random_params(rng, 20):
            st = ground_state(p, alpha)
            eng = expectation_reduced(st, rule=TIGHT_RULE, interpolate=False)
            ora, _ = expectation_oracle_2d(st)
            worst_oracle = max(worst_oracle, abs(eng.total - ora.total) / abs(ora.total))
            rep = discrepancy_report(p, alpha, TIGHT_RULE)
            worst_rederived = max(worst_rederived, rep["rederived_relative_deviation"])
            if rep["printed_relative_deviation"] > 1e-6:
                outliers.append(rep)
    artifact = tmp_path / "e0_formula_discrepancy.json"
    if outliers:
        artifact.write_text(json.dumps(outliers, indent=2))
    documented = not outliers or artifact.exists()
    ok = worst_oracle <= 1e-6 and worst_rederived <= 1e-6 and documented
    verdict(5, ok, f"60 random sets: engine vs 2D oracle max rel {worst_oracle:.1e}, re-derived "
                   f"E0 formula vs engine {worst_rederived:.1e} (tol 1e-6); printed E0 formula "
                   f"outliers {len(outliers)}/60 written to the discrepancy artifact")
    assert ok


def test_criterion_6_variational_certificates():
    worst, where = 0.0, ""
    for alpha in (math.pi, 2.0, 3.5, 4.712, 5.011):
        kinds = ("ground", "antisymmetric", "excited") if alpha in (math.pi, 2.0, 3.5) else (
            "ground", "antisymmetric")
        for kind in kinds:
            res = optimum(kind, alpha)
            if res.converged and res.best_energy.virial_residual > worst:
                worst, where = res.best_energy.virial_residual, f"{kind} at alpha={alpha:.4f}"
    cov = 0.0
    for kind in ("ground", "antisymmetric"):
        for alpha in (2.0, 4.5):
            p = TrialParams(1.4, 0.3, 0.85, 0.08)
            a = state_energy(kind, p, alpha, None, TIGHT_RULE)
            b = state_energy(kind, p.scaled(2.0), alpha, None, TIGHT_RULE)
            cov = max(cov, abs(b.kinetic / (4 * a.kinetic) - 1), abs(b.potential / (2 * a.potential) - 1))
    ok = worst <= 1e-3 and cov <= 1e-10
    verdict(6, ok, f"max virial residual {worst:.2e} ({where}) (tol 1e-3); scaling covariance "
                   f"{cov:.1e} (tol 1e-10)")
    assert ok


def test_criterion_7_orthogonality_normalisation():
    rng = np.random.default_rng(7)
    worst_ov = worst_printed = 0.0
    for alpha in (2.0, math.pi, 4.5):
        for p0, p2 in zip(random_params(rng, 5), random_params(rng, 5)):
            g = ground_state(p0, alpha)
            worst_ov = max(worst_ov, abs(overlap(g, excited_state(p2, p0, alpha))))
            a = printed_orthogonality_constant(OrthogonalityInputs(p0, p2, alpha))
            e = make_state("excited", p2, alpha, a=a, ground_params=p0)
            worst_printed = max(worst_printed, abs(overlap(g, e)))
    for alpha in (2.0, math.pi):
        res = optimum("excited", alpha)
        worst_ov = max(worst_ov, abs(overlap(optimum("ground", alpha).state(), res.state())))
    worst_n0 = 0.0
    for alpha in (2.0, math.pi, 4.5):
        for p in random_params(rng, 4):
            st = ground_state(p, alpha)
            _, norm = expectation_oracle_2d(st)
            n_2d = st.norm / math.sqrt(norm)
            worst_n0 = max(worst_n0, abs(n0_closed_form(p, alpha) / n_2d - 1))
    q, alpha = 0.3, 2.0
    const = abs(n0_closed_form(TrialParams(1.0, 1e-13, 1.0, q), alpha)
                / (4 * q * q / math.sqrt(3 * alpha)) - 1)
    ok = worst_ov <= 1e-8 and worst_n0 <= 1e-6 and const <= 1e-6
    verdict(7, ok, f"|<psi0|psi2>| max {worst_ov:.1e} (tol 1e-8) with a=(m0+m2+2)I3/I2 "
                   f"[printed I2/I3 ratio gives {worst_printed:.1e}]; N0 closed form vs 2D "
                   f"{worst_n0:.1e} (tol 1e-6); constant-gamma N0 {const:.1e}")
    assert ok


def test_criterion_8_splitting_machinery():
    alpha = 3.5
    p = TrialParams(1.4, 0.3, 0.85, 0.08)
    g = ground_state(p, alpha)
    null_grad = abs(splitting_eq2(single_well_from_state(g)))
    null_channel = max(abs(splitting_eq2(analytic_channel_state(a))) for a in (2.0, 3.5, 5.0))
    cr = current_residual(single_well_from_state(g), g, -0.03, -0.03, (60, 40, 40.0))
    identical = float(np.max(np.abs(cr.field)))
    splits = [abs(splitting_eq2(single_well_from_pair(optimum("ground", a),
                                                      optimum("antisymmetric", a))))
              for a in (2.0, 3.5, 5.0)]
    decreasing = splits[0] > splits[1] > splits[2]
    ok = null_grad <= 1e-10 and null_channel <= 1e-10 and identical == 0.0 and decreasing
    verdict(8, ok, f"null gradient {null_grad:.1e}, analytic channel {null_channel:.1e} "
                   f"(tol 1e-10); identical-state residual {identical:.1e}; |splitting| at "
                   f"2.0/3.5/5.0 = {splits[0]:.3e}/{splits[1]:.6e}/{splits[2]:.6e} Ha "
                   f"{'decreasing' if decreasing else 'NOT decreasing'}")
    assert ok


def _grid(path):
    doc = json.loads(Path(path).read_text())
    shape = doc["shape"]
    cols = doc["columns"]
    name = "e_phi" if "e_phi" in cols else "density"
    vals = np.array([np.nan if v is None else v for v in cols[name]]).reshape(shape)
    r = np.array(cols["r"]).reshape(shape)[:, 0]
    th = np.array(cols["theta"]).reshape(shape)[0]
    return r, th, vals


def _files(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(Path(root).rglob("*"))
            if p.is_file() and p.name != "manifest.json"}


def test_criterion_9_reproduction_artifacts(tmp_path):
    runs = [["potential", "--alpha", "0.9424778", "--grid", "64:64:40"],
            ["potential", "--alpha", "4.712389", "--grid", "64:64:40"],
            ["density", "--alpha", "1.657", "--state", "0"],
            ["density", "--alpha", "5.011", "--state", "1"]]
    codes = []
    for out in ("a", "b"):
        for args in runs:
            codes.append(main(args + ["--out", str(tmp_path / out)]))
    notes, ok = [], all(c == 0 for c in codes)
    root = tmp_path / "a"
    for alpha in (0.9424778, 4.712389):
        r, th, v = _grid(root / "potential" / f"alpha_{alpha:.6f}.json")
        inside = np.isfinite(v[0])
        prof = v[len(r) // 2, inside]
        # two wall channels: the potential is deepest at both walls and symmetric
        two = prof[0] < prof[len(prof) // 2] and prof[-1] < prof[len(prof) // 2] and \
            abs(prof[0] - prof[-1]) <= 1e-9 * abs(prof[0])
        ok &= two
        notes.append(f"potential {alpha}: wall/centre {prof[0] / prof[len(prof) // 2]:.2f}")
    r, th, v = _grid(root / "density" / "ground_alpha_1.657000.json")
    ang = (v * r[:, None]).sum(axis=0)
    peak = int(np.argmax(ang))
    centre = int(np.argmin(np.abs(th)))
    two = abs(th[peak]) > 0.1 and ang[centre] < ang[peak] and \
        abs(ang[peak] - ang[len(th) - 1 - peak]) <= 1e-9 * ang[peak]
    ok &= two
    notes.append(f"density 1.657 ground: peaks at theta=+-{abs(th[peak]):.3f}, "
                 f"centre/peak {ang[centre] / ang[peak]:.3f}")
    r, th, v = _grid(root / "density" / "antisymmetric_alpha_5.011000.json")
    ang = (v * r[:, None]).sum(axis=0)
    near = ang[np.abs(th) < 0.1].max() / ang.max()
    ok &= near <= 1e-3
    notes.append(f"density 5.011 antisymmetric: |theta|<0.1 share of peak {near:.1e}")
    same = _files(tmp_path / "a") == _files(tmp_path / "b")
    ok &= same
    notes.append("reruns byte-identical" if same else "reruns DIFFER")
    verdict(9, ok, "; ".join(notes))
    assert ok
