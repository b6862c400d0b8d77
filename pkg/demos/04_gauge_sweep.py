"""Searching for the best gauge.

Sweeps eta over [0, 1] for one resonant mode and reports, for each metric,
where the truncated model does best. Then locates the gauge where the
truncated ground state is a product state: the counter-rotating terms of the
two-level model cancel there once the photon frequency is dressed by the
A^2 term.
"""
import numpy as np
from scipy.optimize import brentq

from multigauge.atom import DoubleWell, PotentialSpec
from multigauge.hamiltonian import cavity_system, truncated_for_system
from multigauge.photon import bogoliubov_diagonalize
from multigauge.sweep import Range, SweepPlan, prepare_sweep, run_sweep

well = PotentialSpec(DoubleWell.from_gamma(64))
system = cavity_system(well, [1.0], 1.2)
grid = well.default_grid()

setup = prepare_sweep(system, grid, (10,), tol=1e-6)
print(setup.report.summary())
result = run_sweep(SweepPlan((Range.step(0.0, 1.0, 0.05),)), setup)

print(" eta    sigma     1-F       S_full    S_trunc")
for p, r in zip(result.points, result.reports):
    print(f"{p[0]:5.2f}  {r.sigma:8.5f}  {r.infidelity:8.2e}  {r.s_full:8.5f}  {r.s_trunc:8.2e}")
for metric, eta in result.argmins.items():
    print(f"argmin {metric}: {eta}")

m = truncated_for_system(system, "bare", 2, (0.5,), grid)
p01, x01 = abs(m.elements.p[0, 1]), abs(m.elements.x[0, 1])


def counter_rotating(eta):
    w = bogoliubov_diagonalize(system.modes, (eta,)).frequencies[0]
    return (1 - eta) * p01 - eta * w * x01


print("dressed Jaynes-Cummings gauge:", brentq(counter_rotating, 0, 1))
print("bare-photon estimate Delta / (Delta + omega):", 0.5)
