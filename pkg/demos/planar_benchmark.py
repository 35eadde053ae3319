"""Flat-surface benchmark: the two lowest levels at alpha = pi.

At alpha = pi the wedge is a plane and the image potential is -1/(4y). The
ground level should approach -1/32 hartree (-0.8504 eV) from above and the
first excited level -1/128 hartree (-0.2126 eV).

Run with ``python demos/planar_benchmark.py``.
"""

import math

from wedgebound import HARTREE_EV, OptimizerConfig, optimize_state

config = OptimizerConfig(restarts=4)
ground = optimize_state("ground", math.pi, config)
excited = optimize_state("excited", math.pi, config, ground=ground)

for label, res, exact in (("ground", ground, -1 / 32), ("excited", excited, -1 / 128)):
    e = res.best_energy
    print(f"{label:8s} E = {e.total * HARTREE_EV:+.6f} eV  (exact {exact * HARTREE_EV:+.6f} eV)  "
          f"virial {e.virial_residual:.1e}  params {res.best_params}")
