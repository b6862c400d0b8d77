"""Preset configurations and data emitters for the six reference figures.

Every emitted file is a comma-separated table with a header row and '#'
metadata lines (config hash, convergence summary). Columns:

fig1a, fig1b   ``g, kind, E_1 .. E_n``: one row per coupling and curve kind
               (exact, bare, renormalized), excitation energies in units of
               Delta; plus ``*_sigma.csv`` with ``g, sigma_bare, sigma_renormalized``.
fig2           ``eta, sigma_w<omega>.., infidelity_w<omega>..`` per frequency.
fig3, fig4     one sweep CSV (``eta_1.., sigma, ...``) and a gnuplot matrix
               file per panel.
fig5           ``eta, S_full, S_trunc, sigma, infidelity`` per panel.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass

import numpy as np

from .atom import solve_atom
from .config import RunConfig
from .hamiltonian import assemble_truncated, truncated_for_system
from .metrics import excitation_energies, spectral_deviation
from .photon import build_fock_space
from .runs import cached_exact, cached_sweep
from .spectra import EigenRequest, lowest_eigenpairs
from .sweep import write_csv, write_matrix, write_summary

log = logging.getLogger(__name__)

FIGURES = ("fig1a", "fig1b", "fig2", "fig3", "fig4", "fig5")
GAMMA = 64
FIG1_G = np.round(np.linspace(0.0, 1.5, 31), 10)
FIG2_OMEGAS = (0.5, 1.0, 5.0, 10.0)
FIG3_PAIRS = ((1, 0.5), (1, 10), (1, 30), (1, 200))
FIG4_TRIPLES = ((10, 30, 1), (50, 150, 1))
FIG5_PANELS = (((1,), 0.4), ((1,), 1.2), ((1, 20), 0.6))
ETA_AXIS = {"lo": 0.0, "hi": 1.0, "step": 0.05}


def base_config(omegas, g, tol=1e-6, **sections):
    raw = {
        "potential": {"kind": "double_well", "gamma": GAMMA},
        "modes": {"omegas": list(omegas), "g": float(g)},
        "numerics": {"tol": tol, "cutoffs": [10] * len(omegas)},
    }
    raw.update(sections)
    return RunConfig(raw)


@dataclass
class GScan:
    """Excitation energies versus coupling for the exact and truncated models."""

    g: np.ndarray
    exact: np.ndarray  # (n_g, n_levels), units of delta
    bare: np.ndarray
    renormalized: np.ndarray
    summaries: list
    hashes: list

    def sigma(self, kind):
        other = getattr(self, kind)
        return np.array([spectral_deviation(e, t) for e, t in zip(self.exact, other)])


def truncated_excitations(system, kind, gauge, grid, fock, n_levels, M_levels=2, bare_basis=None):
    model = truncated_for_system(system, kind, M_levels, gauge, grid, bare_basis=bare_basis)
    r = lowest_eigenpairs(EigenRequest(assemble_truncated(model, fock), k=n_levels + 1, tol=1e-9))
    return excitation_energies(r.values, n_levels, system.delta)


def g_scan(omegas, gs, eta=1.0, n_levels=7, M_levels=2, tol=1e-6, cache=None):
    """Dipole-gauge (by default) spectra for each g in ``gs``."""
    gauge = (float(eta),) * len(omegas)
    rows = {"exact": [], "bare": [], "renormalized": []}
    summaries, hashes = [], []
    for g in gs:
        cfg = base_config(omegas, g, tol)
        system = cfg.system()
        report, spec, key = cached_exact(cfg, gauge, cache, system=system, k=n_levels + 1)
        fock = build_fock_space(report.cutoffs)
        basis = solve_atom(system.potential(report.grid.x), report.grid, max(M_levels, 4))
        rows["exact"].append(spec.excitations[:n_levels])
        for kind in ("bare", "renormalized"):
            rows[kind].append(truncated_excitations(system, kind, gauge, report.grid, fock,
                                                    n_levels, M_levels, bare_basis=basis))
        summaries.append(report.summary())
        hashes.append(key)
    return GScan(np.asarray(gs, dtype=float), *(np.array(rows[k]) for k in rows), summaries, hashes)


def write_g_scan(scan, path):
    n = scan.exact.shape[1]
    with open(path, "w") as fh:
        for h, s in zip(scan.hashes, scan.summaries):
            fh.write(f"# config_hash: {h}\n# convergence: {s}\n")
        fh.write(",".join(["g", "kind"] + [f"E_{i + 1}" for i in range(n)]) + "\n")
        for i, g in enumerate(scan.g):
            for kind in ("exact", "bare", "renormalized"):
                vals = getattr(scan, kind)[i]
                fh.write(",".join([f"{g:.6g}", kind] + [f"{v:.12g}" for v in vals]) + "\n")
    sig_path = path.replace(".csv", "_sigma.csv")
    with open(sig_path, "w") as fh:
        fh.write(f"# config_hash: {scan.hashes[0] if scan.hashes else ''}\n")
        fh.write("g,sigma_bare,sigma_renormalized\n")
        for g, a, b in zip(scan.g, scan.sigma("bare"), scan.sigma("renormalized")):
            fh.write(f"{g:.6g},{a:.12g},{b:.12g}\n")
    return [path, sig_path]


def _sweep_1d(omegas, g, axes, metrics, tol, cache, jobs):
    cfg = base_config(omegas, g, tol, gauge={"axes": axes, "metrics": list(metrics)})
    return cached_sweep(cfg, cache, jobs)


def _eta_table(path, header, columns):
    names = list(columns)
    data = np.column_stack([columns[n] for n in names])
    with open(path, "w") as fh:
        fh.write("".join(f"# {h}\n" for h in header))
        fh.write(",".join(names) + "\n")
        for row in data:
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")
    return path


def reproduce(figure, out_dir, tol=1e-6, cache=None, jobs=1):
    """Run a figure preset and write its data files into ``out_dir/figure``."""
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    out = os.path.join(out_dir, figure)
    os.makedirs(out, exist_ok=True)
    paths = []
    if figure in ("fig1a", "fig1b"):
        omegas = (1.0,) if figure == "fig1a" else (1.0, 20.0)
        scan = g_scan(omegas, FIG1_G, tol=tol, cache=cache)
        paths += write_g_scan(scan, os.path.join(out, f"{figure}.csv"))
    elif figure == "fig2":
        cols, header = {}, []
        for w in FIG2_OMEGAS:
            res = _sweep_1d((w,), 0.8, [ETA_AXIS], ("sigma", "infidelity"), tol, cache, jobs)
            cols.setdefault("eta", np.array([p[0] for p in res.points]))
            cols[f"sigma_w{w:g}"] = res.values("sigma")
            cols[f"infidelity_w{w:g}"] = res.values("infidelity")
            header += [f"omega={w:g} config_hash: {res.config_hash}",
                       f"omega={w:g} convergence: {res.convergence.summary()}",
                       f"omega={w:g} argmin sigma={res.argmins['sigma']} infidelity={res.argmins['infidelity']}"]
        paths.append(_eta_table(os.path.join(out, "fig2.csv"), header, cols))
    elif figure in ("fig3", "fig4"):
        sets = FIG3_PAIRS if figure == "fig3" else FIG4_TRIPLES
        for label, omegas in zip("abcd", sets):
            axes = [ETA_AXIS, ETA_AXIS] + [1.0] * (len(omegas) - 2)
            cfg = base_config(omegas, 0.6, tol, gauge={"axes": axes, "metrics": ["sigma"]})
            res = cached_sweep(cfg, cache, jobs)
            stem = os.path.join(out, f"{figure}{label}")
            extra = {"omegas": list(omegas), "argmin_sigma": list(res.argmins["sigma"])}
            paths += [write_csv(res, stem + ".csv", extra), write_summary(res, stem + ".json"),
                      write_matrix(res, "sigma", stem + "_sigma.dat", extra)]
    else:
        for label, (omegas, g) in zip("abc", FIG5_PANELS):
            axes = [ETA_AXIS] if len(omegas) == 1 else [1.0, ETA_AXIS]
            res = _sweep_1d(omegas, g, axes, ("sigma", "infidelity", "entropy_gap"), tol, cache, jobs)
            eta = np.array([p[-1] for p in res.points])
            header = [f"config_hash: {res.config_hash}", f"convergence: {res.convergence.summary()}",
                      f"omegas={list(omegas)} g={g}"] + [f"fixed: {f}" for f in res.fixed_axes]
            cols = {"eta": eta, "S_full": res.values("s_full"), "S_trunc": res.values("s_trunc"),
                    "sigma": res.values("sigma"), "infidelity": res.values("infidelity")}
            paths.append(_eta_table(os.path.join(out, f"fig5{label}.csv"), header, cols))
    log.info("%s: wrote %d files to %s", figure, len(paths), out)
    return paths
