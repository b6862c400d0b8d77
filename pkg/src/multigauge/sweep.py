"""Gauge-parameter sweeps and optimal-gauge search.

A sweep fixes one physical configuration, converges its exact spectrum once,
and evaluates the truncated model on a grid of per-mode gauge vectors.
"""
from __future__ import annotations

import itertools
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .atom import solve_atom
from .hamiltonian import as_gauge, assemble_system, assemble_truncated, truncated_for_system
from .metrics import (
    MetricsReport,
    embed_truncated_state,
    entanglement_entropy,
    excitation_energies,
    ground_state_fidelity,
    spectral_deviation,
)
from .photon import DEFAULT_MAX_DIM, build_fock_space
from .spectra import ConvergenceReport, EigenRequest, converge, lowest_eigenpairs

log = logging.getLogger(__name__)

METRICS = ("sigma", "infidelity", "entropy_gap", "s_trunc", "s_full")
TIE_TOL = 1e-10
DEFAULT_MAX_POINTS = 20_000


class SweepError(RuntimeError):
    pass


@dataclass(frozen=True)
class Fixed:
    value: float

    def values(self):
        return np.array([float(self.value)])

    def describe(self, k):
        return f"eta_{k + 1} = {self.value:g}"


@dataclass(frozen=True)
class Range:
    lo: float
    hi: float
    n_steps: int

    def __post_init__(self):
        if int(self.n_steps) < 2:
            raise ValueError("a Range axis needs at least 2 steps")
        if not self.hi > self.lo:
            raise ValueError(f"empty range [{self.lo}, {self.hi}]")

    @classmethod
    def step(cls, lo, hi, step):
        return cls(lo, hi, int(round((hi - lo) / step)) + 1)

    def values(self):
        # rounded so that e.g. 0.05 * 7 prints and compares as 0.35
        return np.round(np.linspace(self.lo, self.hi, int(self.n_steps)), 12)


def _axis(spec):
    if isinstance(spec, (Fixed, Range)):
        return spec
    if isinstance(spec, (int, float)):
        return Fixed(float(spec))
    lo, hi, n = spec
    return Range(float(lo), float(hi), int(n))


@dataclass
class SweepPlan:
    """One axis per cavity mode plus the truncation settings.

    ``metrics`` selects what is evaluated; a plan that only needs ``sigma``
    skips the per-point full-model ground state.
    """

    axes: tuple
    metrics: tuple = METRICS
    M_levels: int = 2
    M_energies: int = 7
    basis_kind: str = "bare"
    max_points: int = DEFAULT_MAX_POINTS

    def __post_init__(self):
        self.axes = tuple(_axis(a) for a in self.axes)
        self.metrics = tuple(self.metrics)
        bad = [m for m in self.metrics if m not in METRICS + ("fidelity",)]
        if bad:
            raise ValueError(f"unknown metrics {bad}; choose from {METRICS}")
        if not any(isinstance(a, Range) for a in self.axes):
            raise ValueError("a sweep needs at least one Range axis")
        if self.n_points > self.max_points:
            raise ValueError(f"{self.n_points} sweep points exceed the budget {self.max_points}")

    @classmethod
    def uniform(cls, n_modes, step=0.05, **kw):
        return cls(tuple(Range.step(0.0, 1.0, step) for _ in range(n_modes)), **kw)

    @property
    def n_modes(self):
        return len(self.axes)

    @property
    def shape(self):
        return tuple(len(a.values()) for a in self.axes if isinstance(a, Range))

    @property
    def n_points(self):
        return int(np.prod([len(a.values()) for a in self.axes]))

    @property
    def needs_full_state(self):
        return any(m != "sigma" for m in self.metrics)

    def points(self):
        """Gauge vectors in row-major order of the axes."""
        return [tuple(float(v) for v in p) for p in itertools.product(*(a.values() for a in self.axes))]

    def fixed_axes(self):
        return [a.describe(k) for k, a in enumerate(self.axes) if isinstance(a, Fixed)]


@dataclass
class SweepSetup:
    """Gauge-independent inputs shared read-only by every sweep point."""

    system: object
    grid: object
    cutoffs: tuple
    exact_excitations: np.ndarray  # units of delta
    report: ConvergenceReport
    verified: bool = True
    solver_tol: float = 1e-8


def prepare_sweep(system, grid, cutoffs, tol=1e-6, k=8, max_dim=DEFAULT_MAX_DIM,
                  reference=None, check=None):
    """Converge the exact spectrum at ``reference`` (default: dipole gauge) and
    confirm it at ``check`` (default: Coulomb gauge) within 3 tol.

    If the check fails the controller is rerun at ``check`` starting from the
    reference settings, and the larger discretisation is kept.
    """
    K = system.n_modes
    reference = as_gauge([1.0] * K if reference is None else reference, K)
    check = as_gauge([0.0] * K if check is None else check, K)
    report, spec = converge(system, reference, grid, cutoffs, k=k, tol=tol, max_dim=max_dim)
    fock = build_fock_space(report.cutoffs, max_dim=max_dim)
    other = lowest_eigenpairs(EigenRequest(assemble_system(system, check, report.grid, fock), k=k, tol=1e-8))
    gap = float(np.abs(other.values - spec.energies).max() / system.delta)
    verified = gap <= 3 * tol
    log.info("gauge check %s vs %s: %.2e (tol %g)", reference.label(), check.label(), gap, tol)
    if not verified:
        log.warning("exact spectra at %s and %s differ by %.2e; reconverging at %s",
                    reference.label(), check.label(), gap, check.label())
        report, spec = converge(system, check, report.grid, report.cutoffs, k=k, tol=tol, max_dim=max_dim)
        verified = report.converged
    return SweepSetup(system, report.grid, tuple(report.cutoffs), spec.excitations.copy(), report, verified)


def evaluate_point(setup, plan, eta, bare_basis=None):
    """Metrics for one gauge vector. Failures come back as a flagged report."""
    gauge = as_gauge(eta, setup.system.n_modes)
    system, grid = setup.system, setup.grid
    conv = bool(setup.report.converged and setup.verified)
    try:
        fock = build_fock_space(setup.cutoffs)
        model = truncated_for_system(system, plan.basis_kind, plan.M_levels, gauge, grid, bare_basis=bare_basis)
        ht = assemble_truncated(model, fock)
        tr = lowest_eigenpairs(EigenRequest(ht, k=plan.M_energies + 1, tol=setup.solver_tol,
                                            want_vectors=True))
        e_tr = excitation_energies(tr.values, plan.M_energies, system.delta)
        sigma = spectral_deviation(setup.exact_excitations[: plan.M_energies], e_tr)
        out = dict(sigma=sigma)
        if plan.needs_full_state:
            s_trunc = entanglement_entropy(tr.vectors[:, 0], plan.M_levels, fock.dim)
            full = lowest_eigenpairs(EigenRequest(assemble_system(system, gauge, grid, fock), k=1,
                                                  tol=setup.solver_tol, want_vectors=True))
            Psi = full.vectors[:, 0]
            Psi = Psi / np.linalg.norm(Psi)
            psi = embed_truncated_state(tr.vectors[:, 0], model.basis, fock.dim, plan.M_levels)
            psi = psi / np.linalg.norm(psi)
            out.update(fidelity=ground_state_fidelity(psi, Psi), s_trunc=s_trunc,
                       s_full=entanglement_entropy(Psi, grid.n_points, fock.dim))
        return MetricsReport(gauge=tuple(gauge), M=plan.M_energies, converged=conv, **out)
    except Exception as exc:  # flagged point; the sweep carries on
        log.warning("sweep point %s failed: %s", gauge.label(), exc)
        return MetricsReport(gauge=tuple(gauge), M=plan.M_energies, converged=False,
                             error=f"{type(exc).__name__}: {exc}")


_WORKER = {}


def _init_worker(setup, plan):
    _WORKER["setup"], _WORKER["plan"] = setup, plan
    _WORKER["basis"] = _bare_basis(setup, plan)


def _bare_basis(setup, plan):
    if plan.basis_kind != "bare":
        return None
    return solve_atom(setup.system.potential(setup.grid.x), setup.grid, max(plan.M_levels, 4))


def _run_point(eta):
    return evaluate_point(_WORKER["setup"], _WORKER["plan"], eta, _WORKER["basis"])


@dataclass
class SweepResult:
    plan: SweepPlan
    points: list
    reports: list
    convergence: ConvergenceReport
    argmins: dict = field(default_factory=dict)
    config_hash: str = ""

    @property
    def fixed_axes(self):
        return self.plan.fixed_axes()

    @property
    def flags(self):
        return [not r.converged or bool(r.error) for r in self.reports]

    def values(self, metric):
        return np.array([r.value(metric) for r in self.reports], dtype=float)

    def surface(self, metric):
        """Metric values shaped over the Range axes."""
        return self.values(metric).reshape(self.plan.shape)

    def axis_values(self):
        return [a.values() for a in self.plan.axes if isinstance(a, Range)]


def run_sweep(plan, setup, jobs=1, config_hash=""):
    """Evaluate every gauge point of ``plan``. Output is independent of ``jobs``."""
    pts = plan.points()
    if jobs > 1 and len(pts) > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                                 initargs=(setup, plan)) as pool:
            reports = list(pool.map(_run_point, pts, chunksize=max(1, len(pts) // (4 * jobs))))
    else:
        basis = _bare_basis(setup, plan)
        reports = [evaluate_point(setup, plan, p, basis) for p in pts]
    result = SweepResult(plan, pts, reports, setup.report, config_hash=config_hash)
    for metric in plan_metrics(plan):
        try:
            result.argmins[metric] = find_optimal(result, metric)
        except SweepError as exc:
            log.warning("no optimum for %s: %s", metric, exc)
    return result


def plan_metrics(plan):
    """Minimisable metrics available from ``plan``'s evaluated quantities."""
    if not plan.needs_full_state:
        return ("sigma",)
    return METRICS


def find_optimal(result, metric):
    """Grid argmin of ``metric``; near-ties go to the lexicographically smallest eta."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
    vals = result.values(metric)
    ok = ~np.array(result.flags) & np.isfinite(vals)
    if not ok.any():
        raise SweepError(f"every sweep point is flagged or lacks {metric}")
    best = vals[ok].min()
    ties = [result.points[i] for i in np.flatnonzero(ok & (vals <= best + TIE_TOL))]
    return min(ties)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _header(result, extra=None):
    lines = [f"config_hash: {result.config_hash}",
             f"convergence: {result.convergence.summary()}"]
    lines += [f"fixed: {f}" for f in result.fixed_axes]
    lines += [f"{k}: {v}" for k, v in (extra or {}).items()]
    return "".join(f"# {line}\n" for line in lines)


def write_csv(result, path, extra=None):
    K = result.plan.n_modes
    cols = [f"eta_{k + 1}" for k in range(K)] + ["sigma", "fidelity", "S_full", "S_trunc", "converged", "error"]
    with open(path, "w") as fh:
        fh.write(_header(result, extra))
        fh.write(",".join(cols) + "\n")
        for p, r in zip(result.points, result.reports):
            row = [f"{v:.6g}" for v in p]
            row += [f"{v:.12g}" for v in (r.sigma, r.fidelity, r.s_full, r.s_trunc)]
            row += [str(int(r.converged and not r.error)), r.error.replace(",", ";")]
            fh.write(",".join(row) + "\n")
    return path


def summary_dict(result):
    return {
        "config_hash": result.config_hash,
        "n_points": len(result.points),
        "fixed_axes": result.fixed_axes,
        "argmins": {m: list(v) for m, v in result.argmins.items()},
        "minima": {m: float(result.values(m)[result.points.index(v)]) for m, v in result.argmins.items()},
        "flagged_points": [list(p) for p, f in zip(result.points, result.flags) if f],
        "convergence": result.convergence.to_dict(),
    }


def write_summary(result, path):
    with open(path, "w") as fh:
        json.dump(summary_dict(result), fh, indent=2)
    return path


def write_matrix(result, metric, path, extra=None):
    """gnuplot ``matrix nonuniform`` file for a sweep with two Range axes."""
    if len(result.plan.shape) != 2:
        raise SweepError("matrix output needs exactly two Range axes")
    ax, ay = result.axis_values()
    z = result.surface(metric)
    with open(path, "w") as fh:
        fh.write(_header(result, dict(metric=metric, **(extra or {}))))
        fh.write("# first row: count then axis-2 values; following rows: axis-1 value then metric\n")
        fh.write(" ".join([str(len(ay))] + [f"{v:.6g}" for v in ay]) + "\n")
        for i, x in enumerate(ax):
            fh.write(" ".join([f"{x:.6g}"] + [f"{v:.12g}" for v in z[i]]) + "\n")
    return path


def write_outputs(result, out_dir, stem="sweep"):
    os.makedirs(out_dir, exist_ok=True)
    paths = [write_csv(result, os.path.join(out_dir, f"{stem}.csv")),
             write_summary(result, os.path.join(out_dir, f"{stem}.json"))]
    if len(result.plan.shape) == 2:
        for metric in plan_metrics(result.plan):
            paths.append(write_matrix(result, metric, os.path.join(out_dir, f"{stem}_{metric}.dat")))
    return paths
