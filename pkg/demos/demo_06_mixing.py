"""
Correlations and invariant regions
==================================

Starting from the invariant measure, the correlation between an indicator
at time 0 and at time n is estimated with a standard error.  For rational
alpha/pi a neighbourhood of a finite orbit set is invariant and the
correlation never decays.
"""

import math

from randbilliards import billiard, diagnostics
from randbilliards.billiard import PhasePoint
from randbilliards.feres import FeresParams
from randbilliards.geometry import make_table

table = make_table("flat", 1.0)
q = diagnostics.quarter_region(table)
res = diagnostics.mixing_correlation(table, FeresParams(0.5), q, q, [0, 1, 10, 50, 200], 400_000, seed=0)
for lag, c, se in zip(res.lags, res.estimates, res.std_errors):
    print(f"alpha=0.5   lag {lag:<4d} C = {c:.2e}  ({c / se:6.1f} SE)")

p8 = FeresParams.rational(1, 8)
lat = diagnostics.lattice_region(table, p8, math.pi / 16)
res = diagnostics.mixing_correlation(table, p8, lat, lat, [1, 10, 50], 400_000, seed=0)
for lag, c, se in zip(res.lags, res.estimates, res.std_errors):
    print(f"alpha=pi/8  lag {lag:<4d} C = {c:.2e}  ({c / se:6.1f} SE)")

# the fold of theta into [0, alpha] is a constant of motion for alpha = pi/n
traj = billiard.simulate(table, p8, PhasePoint(0.0, 1.3), 10_000, seed=2)
print("fold constant along 1e4 steps:", diagnostics.motion_constant_check(p8, traj))
