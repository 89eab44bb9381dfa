"""
Entangling measurements from a five-step quantum walk
=====================================================

The first qubit becomes the walker position (+1 or -1) and the second the
polarization coin. Position-dependent coins followed by conditional
translations, and detectors at four walker sites, realize each measurement.
"""

import numpy as np

from orienteering import SchemeId, analytic_povm, builtin_schedule, extract_povm
from orienteering.walk import apply_coins, embed, run, translate

sched = builtin_schedule("parallel")

# step through the walk for |00> (a=1) and watch the amplitude spread
state = embed([1, 0, 0, 0])
for t, coins in enumerate(sched.steps, start=1):
    state = translate(apply_coins(state, coins))
    occupied = {x: tuple(np.round(v, 3)) for x, v in state.to_mapping(atol=1e-12).items()}
    print(f"after step {t}: {occupied}")

# the detectors turn the walk into a POVM on the original two qubits
_, probs = run([1, 0, 0, 0], sched)
print("\ndetector probabilities for |00>:", np.round(probs, 4), "(3/4 then 1/12 x 3)")

# check every built-in schedule against its target basis
for s in SchemeId:
    dev = np.max(np.abs(extract_povm(builtin_schedule(s)).elements - analytic_povm(s).elements))
    print(f"{s.value:>12}: max deviation from ideal basis {dev:.1e}")

# each coin is also a short stack of wave plates
print("\nwave plates of the parallel walk:")
for t, coins in enumerate(sched.steps, start=1):
    for x, c in sorted(coins.items()):
        plates = ", ".join(f"{p.kind.value} {p.degrees:.2f} deg" for p in c.plates)
        print(f"  step {t}, x={x:+d}: {plates}")
