"""
Attraction and repulsion along a single pair
============================================

The third phase scales NN attraction by ``d_adj / (2 sqrt(d^2 + 1))``.  Short
pairs are pulled harder, long pairs less, and beyond ``sqrt(c_nn - 1)`` the
NN term pushes instead of pulls.
"""

import numpy as np

from localmap import LocalMapConfig
from localmap.optim import attractive_force, force_profiles, nn_coefficient, repulsive_force

cfg = LocalMapConfig()

# sample both curves
(d, f), (_, g) = force_profiles(cfg, d_max=10.0, samples=1000)
print(f"NN force peaks at d = {d[np.argmax(f)]:.3f}")
print(f"FP force peaks at d = {d[np.argmax(g)]:.3f}")

# the sign of the NN force flips at sqrt(c_nn - 1)
for dist in (1.0, 2.9, 3.0, 3.1, 6.0):
    print(f"d = {dist:4.1f}  f = {float(attractive_force(dist, cfg)):+.5f}  "
          f"g = {float(repulsive_force(dist, cfg)):.5f}")

# the multiplier crosses 1 where d_adj / 2 = sqrt(d^2 + 1)
crossover = np.sqrt((cfg.d_adj / 2) ** 2 - 1)
print(f"coefficient at d = {crossover:.4f}: {float(nn_coefficient(crossover, cfg.d_adj)):.6f}")
