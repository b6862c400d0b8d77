"""Command-line entry point: ``multigauge {atom,exact,sweep,reproduce,cache}``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from .atom import matrix_elements, solve_atom_adaptive, write_basis_csv
from .cache import Cache
from .config import ConfigError, RunConfig
from .reproduce import FIGURES, reproduce
from .runs import cached_exact, cached_sweep
from .spectra import NotConvergedError
from .sweep import write_outputs

log = logging.getLogger("multigauge")


def _load(args):
    if not args.config:
        raise ConfigError("--config is required for this command")
    cfg = RunConfig.load(args.config)
    if args.tol is not None:
        cfg = cfg.updated(numerics={"tol": args.tol})
    if args.out is not None:
        cfg = cfg.updated(output=args.out)
    return cfg


def _cache(args):
    return Cache(enabled=not args.no_cache)


def cmd_atom(args):
    cfg = _load(args)
    pot = cfg.potential()
    n = max(cfg.data["truncation"]["M_levels"], 4)
    basis, grid = solve_atom_adaptive(pot, cfg.grid(pot), n)
    e = basis.energies
    ratio = (e[2] - e[0]) / (e[1] - e[0])
    print(f"grid: N={grid.n_points} x=[{grid.x_min:.4f}, {grid.x_max:.4f}] scheme={grid.scheme}")
    for i, ei in enumerate(e):
        print(f"eps_{i} = {ei:.10f}")
    print(f"Delta = {basis.delta:.10f}")
    print(f"anharmonicity (eps_2-eps_0)/(eps_1-eps_0) = {ratio:.6f}")
    me = matrix_elements(basis, M=2)
    print(f"<0|x|1> = {me.x[0, 1].real:.10f}  <0|p|1> = {me.p[0, 1].imag:.10f}i")
    os.makedirs(cfg.output, exist_ok=True)
    path = write_basis_csv(os.path.join(cfg.output, "atom.csv"), basis,
                           header=[f"config_hash: {cfg.hash('atom')}", f"anharmonicity: {float(ratio)!r}"])
    print(f"wrote {path}")
    return 0


def cmd_exact(args):
    cfg = _load(args)
    gauge = tuple(args.eta) if args.eta else cfg.gauge()
    try:
        report, spec, key = cached_exact(cfg, gauge, _cache(args))
    except NotConvergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not report.converged:
        print(f"warning: not converged; escalation trace: {report.summary()}", file=sys.stderr)
    print(report.summary())
    for i, x in enumerate(spec.excitations, 1):
        print(f"E_{i} - E_0 = {x:.10f} Delta")
    os.makedirs(cfg.output, exist_ok=True)
    path = os.path.join(cfg.output, "exact.csv")
    with open(path, "w") as fh:
        fh.write(f"# config_hash: {key}\n# convergence: {report.summary()}\n# gauge: {list(gauge)}\n")
        fh.write("i,energy,excitation_over_delta\n")
        for i, en in enumerate(spec.energies):
            fh.write(f"{i},{float(en)!r},{float((en - spec.energies[0]) / spec.delta)!r}\n")
    np.save(os.path.join(cfg.output, "ground_state.npy"), spec.ground_state)
    print(f"wrote {path}")
    return 0 if report.converged else 1


def cmd_sweep(args):
    cfg = _load(args)
    result = cached_sweep(cfg, _cache(args), jobs=args.jobs)
    for metric, eta in result.argmins.items():
        print(f"argmin {metric}: {list(eta)}")
    n_flag = sum(result.flags)
    if n_flag:
        print(f"warning: {n_flag} of {len(result.points)} points flagged", file=sys.stderr)
    for p in write_outputs(result, cfg.output):
        print(f"wrote {p}")
    return 0


def cmd_reproduce(args):
    out = args.out or "out"
    tol = args.tol if args.tol is not None else 1e-6
    for p in reproduce(args.figure, out, tol=tol, cache=_cache(args), jobs=args.jobs):
        print(f"wrote {p}")
    return 0


def cmd_cache(args):
    cache = Cache()
    if args.action == "clear":
        print(f"removed {cache.clear()} entries from {cache.root}")
        return 0
    entries = cache.entries()
    print(f"cache: {cache.root} ({len(entries)} entries)")
    for e in entries:
        print(f"{e['key'][:16]}  {e['kind']:<12} v{e['version']:<8} {e['bytes']:>10d} B")
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes for sweeps")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
    common.add_argument("--tol", type=float, metavar="X", help="convergence tolerance in units of Delta")
    common.add_argument("--no-cache", action="store_true", help="neither read nor write the result cache")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="multigauge", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("atom", parents=[common], help="bare atomic levels and matrix elements").set_defaults(func=cmd_atom)
    ex = sub.add_parser("exact", parents=[common], help="converged exact spectrum")
    ex.add_argument("--eta", type=float, nargs="+", help="gauge vector (one entry per mode)")
    ex.set_defaults(func=cmd_exact)
    sub.add_parser("sweep", parents=[common], help="gauge sweep with metrics").set_defaults(func=cmd_sweep)
    rp = sub.add_parser("reproduce", parents=[common], help="figure presets")
    rp.add_argument("figure", choices=FIGURES)
    rp.set_defaults(func=cmd_reproduce)
    ca = sub.add_parser("cache", parents=[common], help="inspect or clear the result cache")
    ca.add_argument("action", choices=("list", "clear"))
    ca.set_defaults(func=cmd_cache)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
