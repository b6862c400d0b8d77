"""Lowest eigenpairs of Hermitian operators and grid/cutoff convergence control."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .atom import Grid
from .hamiltonian import FullHamiltonian, as_gauge, assemble_system
from .photon import DEFAULT_MAX_DIM, FockSpace, build_fock_space

log = logging.getLogger(__name__)

DENSE_LIMIT = 2000


class NotConvergedError(RuntimeError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


@dataclass
class EigenRequest:
    """``operator`` may be a FullHamiltonian, a scipy sparse matrix or an ndarray.

    ``tol`` bounds the residual norm ``|Hv - lv| <= tol * max(1, |l|)``.
    ``method`` is ``"auto"`` (dense below DENSE_LIMIT), ``"dense"`` or ``"iterative"``.
    """

    operator: object
    k: int = 1
    tol: float = 1e-8
    want_vectors: bool = False
    method: str = "auto"
    max_iter: int = 500

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray | None
    residuals: np.ndarray
    iterations: int = 0


def _dim(op):
    return op.dim if isinstance(op, FullHamiltonian) else op.shape[0]


def _dense(op):
    if isinstance(op, FullHamiltonian):
        return op.to_dense()
    if sp.issparse(op):
        return op.toarray()
    return np.asarray(op)


def lowest_eigenpairs(req: EigenRequest) -> EigenResult:
    op = req.operator
    n = _dim(op)
    k = min(req.k, n)
    method = req.method
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "iterative"
    if method == "dense":
        h = _dense(op)
        h = 0.5 * (h + h.conj().T)
        w, v = scipy.linalg.eigh(h, subset_by_index=[0, k - 1], driver="evr")
        res = np.linalg.norm(h @ v - v * w, axis=0)
        return EigenResult(w, v if req.want_vectors else None, res)
    if method != "iterative":
        raise ValueError(f"unknown method {method!r}")

    if isinstance(op, FullHamiltonian):
        apply, precond, start = op.matvec, op.precondition, op.start_block
    else:
        apply, precond, start = _matrix_adapters(op)
    block = min(n, k + min(k, 4) + 2)
    w, v, res, it = davidson(apply, precond, start(block), k, req.tol, req.max_iter)
    return EigenResult(w, v if req.want_vectors else None, res, it)


def _matrix_adapters(m):
    m = sp.csr_matrix(m) if not sp.issparse(m) else m.tocsr()
    diag = m.diagonal().real

    def apply(x):
        return m @ x

    def precond(r, theta, floor=1e-3):
        den = diag[:, None] - np.asarray(theta)[None, :]
        den = np.where(np.abs(den) < floor, np.where(den < 0, -floor, floor), den)
        return r / den

    def start(b):
        order = np.argsort(diag, kind="stable")[:b]
        x = np.zeros((m.shape[0], len(order)), dtype=complex)
        x[order, np.arange(len(order))] = 1.0
        return x

    return apply, precond, start


def _project_out(V, T):
    # V^H T computed as (T^H V)^H so only the thin block is conjugated
    return T - V @ (T.conj().T @ V).conj().T


def _orthonormal_columns(V, T, drop=1e-10):
    """Orthonormal basis of the part of span(T) orthogonal to span(V)."""
    scale = np.linalg.norm(T, axis=0)
    keep = scale > 0
    if not keep.any():
        return T[:, :0]
    T = T[:, keep] / scale[keep]
    for _ in range(2):
        if V.shape[1]:
            T = _project_out(V, T)
        gram = T.conj().T @ T
        w, U = np.linalg.eigh(0.5 * (gram + gram.conj().T))
        good = w > drop**2 * max(1.0, float(w.max(initial=0.0)))
        if not good.any():
            return T[:, :0]
        T = T @ (U[:, good] / np.sqrt(w[good]))
    return T


def davidson(apply, precond, X0, k, tol, max_iter=500, max_subspace=None):
    """Block Davidson iteration with full reorthogonalisation and thick restarts.

    With ``precond`` returning its input unchanged this spans the same block
    Krylov space as block Lanczos. Deterministic: no random numbers, fixed
    order of all reductions.
    """
    b = X0.shape[1]
    max_subspace = max(6 * b, 40) if max_subspace is None else max_subspace
    V = _orthonormal_columns(np.zeros((X0.shape[0], 0), dtype=complex), X0.astype(complex))
    AV = np.asarray(apply(V), dtype=complex)
    G = V.conj().T @ AV
    best = None
    for it in range(1, max_iter + 1):
        G = 0.5 * (G + G.conj().T)
        theta, S = np.linalg.eigh(G)
        X = V @ S[:, :k]
        R = AV @ S[:, :k] - X * theta[:k]
        rn = np.linalg.norm(R, axis=0)
        best = rn
        if np.all(rn <= tol * np.maximum(1.0, np.abs(theta[:k]))):
            return theta[:k], X, rn, it
        # expand with preconditioned residuals of the wanted and a few buffer pairs
        extra = np.arange(min(b, theta.size))
        Xe = V @ S[:, extra]
        Re = AV @ S[:, extra] - Xe * theta[extra]
        T = precond(Re, theta[extra])
        if V.shape[1] + extra.size > max_subspace:
            keep = min(V.shape[1], max(2 * k, b))
            V, AV = V @ S[:, :keep], AV @ S[:, :keep]
            G = np.diag(theta[:keep]).astype(complex)
        T = _orthonormal_columns(V, T)
        if T.shape[1] == 0:
            T = _orthonormal_columns(V, Re)
            if T.shape[1] == 0:
                break
        AT = np.asarray(apply(T), dtype=complex)
        cross = (AT.conj().T @ V).conj().T  # V^H A T
        G = np.block([[G, cross], [cross.conj().T, T.conj().T @ AT]])
        V = np.hstack([V, T])
        AV = np.hstack([AV, AT])
    raise NotConvergedError(f"Davidson did not converge in {max_iter} iterations", best)


# ---------------------------------------------------------------------------
# convergence controller
# ---------------------------------------------------------------------------


@dataclass
class Escalation:
    knob: str  # "start", "grid" or "cutoffs"
    n_points: int
    cutoffs: tuple
    drift: float | None  # max eigenvalue change vs previous level, units of delta


@dataclass
class ConvergenceReport:
    grid: Grid
    cutoffs: tuple
    trace: list = field(default_factory=list)
    converged: bool = False
    tol: float = 0.0

    @property
    def drifts(self):
        return [e.drift for e in self.trace if e.drift is not None]

    def summary(self) -> str:
        steps = "; ".join(
            f"{e.knob}:N={e.n_points},n_max={list(e.cutoffs)}"
            + ("" if e.drift is None else f",drift={e.drift:.2e}")
            for e in self.trace
        )
        return (f"converged={self.converged} tol={self.tol:g} n_points={self.grid.n_points} "
                f"cutoffs={list(self.cutoffs)} [{steps}]")

    def to_dict(self):
        return {
            "converged": self.converged,
            "tol": self.tol,
            "grid": {"x_min": self.grid.x_min, "x_max": self.grid.x_max,
                     "n_points": self.grid.n_points, "scheme": self.grid.scheme},
            "cutoffs": list(self.cutoffs),
            "trace": [{"knob": e.knob, "n_points": e.n_points, "cutoffs": list(e.cutoffs),
                       "drift": e.drift} for e in self.trace],
        }

    @classmethod
    def from_dict(cls, d):
        g = d["grid"]
        rep = cls(Grid(g["x_min"], g["x_max"], g["n_points"], g["scheme"]), tuple(d["cutoffs"]),
                  converged=d["converged"], tol=d["tol"])
        rep.trace = [Escalation(e["knob"], e["n_points"], tuple(e["cutoffs"]), e["drift"])
                     for e in d["trace"]]
        return rep


@dataclass
class ExactSpectrum:
    energies: np.ndarray  # absolute, ascending
    ground_state: np.ndarray
    grid: Grid
    fock: FockSpace
    delta: float

    @property
    def excitations(self):
        """Excitation energies E_i - E_0 in units of delta, i >= 1."""
        return (self.energies[1:] - self.energies[0]) / self.delta


def solve_exact(system, gauge, grid, fock, k, tol=1e-8, want_vectors=True):
    h = assemble_system(system, gauge, grid, fock)
    res = lowest_eigenpairs(EigenRequest(h, k=k, tol=tol, want_vectors=want_vectors))
    return res


def converge(system, gauge, grid, cutoffs, k=8, tol=1e-6, max_steps=8,
             max_dim=DEFAULT_MAX_DIM, cutoff_step=4, solver_tol=1e-7):
    """Refine grid and photon cutoffs alternately until the lowest ``k``
    eigenvalues move by less than ``tol`` (units of delta) under both.

    The grid knob doubles ``n_points``; the cutoff knob adds ``cutoff_step``
    to every mode. A knob whose last escalation already moved the spectrum by
    less than ``tol`` is not escalated again. A grid doubling that moves the
    spectrum by less than ``tol`` certifies the coarser grid, which is kept
    for the remaining steps. Returns (report, spectrum at the final level).
    """
    gauge = as_gauge(gauge, system.n_modes)
    fock = build_fock_space(cutoffs, max_dim=max_dim)
    report = ConvergenceReport(grid, fock.cutoffs, tol=tol)
    res = solve_exact(system, gauge, grid, fock, k, solver_tol)
    report.trace.append(Escalation("start", grid.n_points, fock.cutoffs, None))
    last = {"grid": None, "cutoffs": None}
    knob = "grid"
    for _ in range(max_steps):
        if last["grid"] is not None and last["grid"] < tol:
            knob = "cutoffs"
        elif last["cutoffs"] is not None and last["cutoffs"] < tol:
            knob = "grid"
        if knob == "grid":
            new_grid, new_fock = grid.refined(2), fock
        else:
            new_grid, new_fock = grid, fock.escalated(cutoff_step)
        if new_grid.n_points * new_fock.dim > max_dim:
            log.warning("convergence budget exhausted at dimension %d", new_grid.n_points * new_fock.dim)
            break
        new = solve_exact(system, gauge, new_grid, new_fock, k, solver_tol)
        drift = float(np.abs(new.values - res.values).max() / system.delta)
        log.info("escalate %s: N=%d cutoffs=%s drift=%.3e", knob, new_grid.n_points,
                 new_fock.cutoffs, drift)
        report.trace.append(Escalation(knob, new_grid.n_points, new_fock.cutoffs, drift))
        last[knob] = drift
        if not (knob == "grid" and drift < tol):
            grid, fock, res = new_grid, new_fock, new
        report.grid, report.cutoffs = grid, fock.cutoffs
        if all(v is not None and v < tol for v in last.values()):
            report.converged = True
            break
        knob = "cutoffs" if knob == "grid" else "grid"
    spectrum = ExactSpectrum(res.values.copy(), res.vectors[:, 0].copy(), grid, fock, system.delta)
    return report, spectrum
