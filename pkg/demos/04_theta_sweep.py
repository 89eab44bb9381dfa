"""
Fidelity along a great circle
=============================

Directions (sin t, 0, cos t). A single direction's fidelity depends on t,
but averaging t with its antipode t + pi gives a constant for each
entangling scheme: 3/4 for parallel spins and (3 + sqrt 3)/6 for
antiparallel spins.
"""

import math

from orienteering.protocol import TABLE2_PAIRS, theta_sweep

grid = [2 * math.pi * k / 12 for k in range(12)]
rows = theta_sweep(grid, TABLE2_PAIRS[:2], shots=50000, seed=1)

print(f"{'scheme':>13} {'theta':>6} {'F(t)':>8} {'theory':>8} {'pair avg':>9} {'theory':>8}")
for r in rows:
    print(f"{r.scheme.value:>13} {math.degrees(r.theta):6.0f} {r.simulated:8.4f} {r.analytic:8.4f}"
          f" {r.pair_simulated:9.4f} {r.pair_analytic:8.4f}")
