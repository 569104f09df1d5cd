"""Photon subtraction: squeezed light on a tap, photons counted on the reflected port.

Compares the phase-space pipeline with a brute-force Fock-space calculation.
Run:  python3 demos/02_optical_cat.py   (about a minute)
"""

import numpy as np

from torsion_wigner.fock_oracle import oracle_gps_cat
from torsion_wigner.phase_space import negativity_volume, symmetric_axis
from torsion_wigner.protocols import CatPrepConfig, gps_optical_cat

ax = symmetric_axis(18, 181)
print(" m  success      negativity  L-inf vs Fock  var(x)   var(p)")
for m in range(4):
    cfg = CatPrepConfig(r1=1.15, r2=-1.15, T_tap=0.909, m=m)
    res = gps_optical_cat(cfg, ax, ax)
    ref, prob = oracle_gps_cat(1.15, -1.15, 0.909, m, 1.0, ax, ax, truncation=60,
                               max_deficit=1e-4, max_leakage=1e-4)
    dist = np.max(np.abs(res.state.values - ref.values))
    _, _, var_x, var_p, _ = res.state.moments()
    print(f" {m}  {res.success_weight:.4e}  {negativity_volume(res.state):.4f}      "
          f"{dist:.1e}        {var_x:.3f}    {var_p:.3f}")
