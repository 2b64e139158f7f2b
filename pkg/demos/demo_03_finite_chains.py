"""
Finite orbit sets for rational wedge angles
===========================================

When alpha/pi is rational the angle can only visit finitely many values.
The random map then restricts to a small Markov chain whose period and
stationary law can be computed exactly.
"""

import math

import numpy as np

from randbilliards import chain, measures
from randbilliards.feres import FeresParams

for (m, n), theta0 in (((1, 8), math.pi / 16), ((1, 7), math.pi / 14)):
    params = FeresParams.rational(m, n)
    summary = chain.chain_summary(params, theta0)
    print(f"alpha = {m}pi/{n}: {summary['n_states']} states, period {summary['period']}")
    print("  states / pi:", np.round(np.array(summary["states"]) / math.pi, 4))
    print("  stationary :", np.round(summary["stationary"], 4))

# a period-2 chain keeps alternating between two distributions
p8 = FeresParams.rational(1, 8)
d0 = measures.chain_evolution(p8, math.pi / 16, None, 400)
d1 = measures.chain_evolution(p8, math.pi / 16, None, 401)
print("alternating supports:", (d0 > 0).astype(int), (d1 > 0).astype(int))

# irrational alpha: the orbit set keeps growing
print("alpha = 0.5 truncated at 500 states:", chain.enumerate_states(FeresParams(0.5), 1.0, 500).truncated)
