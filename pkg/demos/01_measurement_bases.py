"""
The four measurements Bob can make
==================================

Two spins pointing along n arrive either parallel (n, n) or antiparallel
(n, -n). Bob decodes with one of five four-outcome measurements: two
entangling bases and three local Pauli pairs.
"""

import numpy as np

from orienteering import SchemeId, analytic_povm
from orienteering.bases import antiparallel_kets, concurrence, parallel_kets
from orienteering.states import Direction, encode, ket_to_bloch, sic_states

np.set_printoptions(precision=4, suppress=True)

# the parallel basis is built around the four SIC directions
print("SIC Bloch vectors (a regular tetrahedron):")
for k in sic_states():
    print("  ", ket_to_bloch(k).as_array())

# every basis ket of both entangling schemes is entangled
print("\nconcurrence of each basis ket")
print("  parallel    ", [round(concurrence(k), 4) for k in parallel_kets()])
print("  antiparallel", [round(concurrence(k), 4) for k in antiparallel_kets()])

# outcome probabilities for a direction near the north pole
n = Direction.normalized(0.2, -0.1, 1.0)
for scheme, mode in [(SchemeId.PARALLEL, "parallel"), (SchemeId.ANTIPARALLEL, "antiparallel"),
                     (SchemeId.ZX, "parallel")]:
    p = analytic_povm(scheme).probabilities(encode(n, mode))
    print(f"\n{scheme.value:>12} on {mode} spins: p = {p}")
    print("   guesses:")
    print(analytic_povm(scheme).guesses)
