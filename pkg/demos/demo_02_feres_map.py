"""
The four-branch random reflection
=================================

Each collision redraws the angle with one of four affine branches.  The
branch probabilities depend on theta and always sum to one, and the
measure (1/2) sin(theta) d theta is left unchanged by one random step.
"""

import math

import numpy as np

from randbilliards import feres, measures
from randbilliards.feres import FeresParams

params = FeresParams(0.5)
print("breakpoints", np.round(params.breakpoints, 4))

for theta in (0.2, 1.0, math.pi / 2, 2.5):
    dist = feres.branch_distribution(params, theta)
    images = [feres.apply_branch(i, params, theta) for i in (1, 2, 3, 4)]
    print(f"theta={theta:.3f}  p={np.round(dist, 4)}  images={np.round(images, 4)}")

grid = np.linspace(0, math.pi, 10_002)[1:-1]
p = feres.branch_probabilities(params, grid)
print("max |sum p - 1| on a grid:", np.abs(p.sum(axis=1) - 1).max())

# the pushforward of mu equals mu on any interval
for a, b in ((0.1, 0.7), (1.0, 2.2), (2.9, 3.1)):
    print((a, b), measures.pushforward_mass(params, (a, b)), measures.liouville_mass(a, b))
