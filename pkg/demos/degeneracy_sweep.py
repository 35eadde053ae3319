"""Levels against opening angle and the onset of the symmetric/antisymmetric pairing.

Prints E0, E1 and E2 in eV over a coarse grid of opening angles and the
smallest angle from which the lowest pair stays within 0.05 eV.

Run with ``python demos/degeneracy_sweep.py``.
"""

import math

from wedgebound import HARTREE_EV, OptimizerConfig, degeneracy_onset, sweep

alphas = [3 * math.pi / 10, math.pi / 2, 2.0, math.pi, 3.5, 3 * math.pi / 2, 5.011, 5.8]
records = sweep(alphas, OptimizerConfig(restarts=4))

print(f"{'alpha':>8s} {'E0/eV':>10s} {'E1/eV':>10s} {'E2/eV':>10s} {'gap01/eV':>10s}  status")
for r in records:
    print(f"{r.alpha:8.4f} {r.E0 * HARTREE_EV:10.5f} {r.E1 * HARTREE_EV:10.5f} "
          f"{r.E2 * HARTREE_EV:10.5f} {r.gap01 * HARTREE_EV:10.2e}  {r.status}")

onset = degeneracy_onset(records, 0.05 / HARTREE_EV)
print(f"pair within 0.05 eV from alpha = {onset}")
