"""Bare atom: the gamma = 64 double well.

Solves p^2/2 + V(x) on the default Fourier grid, prints the lowest levels,
the anharmonicity and the dipole matrix elements, and shows that translating
the potential leaves the spectrum alone.
"""
from dataclasses import replace

import numpy as np

from multigauge.atom import DoubleWell, PotentialSpec, matrix_elements, solve_atom

well = PotentialSpec(DoubleWell.from_gamma(64))
grid = well.default_grid()
print("B, C =", well.kind.B, well.kind.C, " wells at x = +-", well.length_scale)
print("grid:", grid.n_points, "points on", grid.x[0], "..", grid.x[-1])

basis = solve_atom(well(grid.x), grid, 6)
e = basis.energies
print("levels:", np.round(e, 8))
print("Delta = e1 - e0 =", basis.delta)
print("(e2 - e0) / Delta =", (e[2] - e[0]) / basis.delta)

# the lowest doublet is nearly degenerate and isolated: a good two-level system
m = matrix_elements(basis, M=2)
print("|<0|x|1>| =", abs(m.x[0, 1]), " |<0|p|1>| =", abs(m.p[0, 1]))
print("p01 / (Delta x01) =", abs(m.p[0, 1]) / (basis.delta * abs(m.x[0, 1])))

# moving the well moves the wavefunctions, not the energies
moved = replace(well, shift=well.length_scale)
g2 = moved.default_grid()
e2 = solve_atom(moved(g2.x), g2, 6).energies
print("max level change after translation:", np.abs(e2 - e).max())
