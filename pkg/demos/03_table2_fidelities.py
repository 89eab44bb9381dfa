"""
Direction-by-direction fidelities
=================================

Alice sends each of the six octahedron directions 50000 times. The table
compares Monte Carlo means with the closed-form mean fidelity and shows the
Poisson-bootstrap error bars.
"""

from orienteering.protocol import OCTAHEDRON, TABLE2_PAIRS, analytic_mean_fidelity, direction_table

reports = direction_table(OCTAHEDRON, TABLE2_PAIRS, shots_per_direction=50000, seed=0)

header = "".join(f"{tuple(int(v) for v in d)!s:>16}" for d in OCTAHEDRON)
print(f"{'scheme':>13}{header}{'average':>18}")
for rep in reports:
    cells = "".join(f"{c.mean_fidelity:>9.4f}({c.std_dev * 1e4:3.0f})" for c in rep.cells)
    print(f"{rep.scheme.value:>13}{cells}   {rep.overall_mean:.4f}({rep.overall_std * 1e4:.0f})")
    theory = "".join(f"{analytic_mean_fidelity(c.direction, rep.scheme):>14.4f}  " for c in rep.cells)
    print(f"{'theory':>13}{theory}")

# parenthesized digits are the standard deviation in units of 1e-4
