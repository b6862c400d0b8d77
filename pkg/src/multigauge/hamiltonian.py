"""Mixed-gauge cavity QED Hamiltonians: exact (grid x Fock) and truncated.

Every operator here uses the atom-first tensor layout: a state on
(grid or atomic levels) x (Fock space) is stored row-major with the atomic
index slowest, so ``state.reshape(n_atom, fock.dim)`` is its coefficient
matrix. The per-mode gauge transformation never appears explicitly; each
gauge is assembled directly in its transformed form.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .atom import (
    AtomBasis,
    Grid,
    PotentialSpec,
    build_effective_potential,
    calibrate_vacuum_amplitude,
    matrix_elements,
    solve_atom,
    solve_atom_adaptive,
)
from .photon import FockSpace, ModeSpec, mode_operator

HERMITICITY_TOL = 1e-12
BASIS_KINDS = ("bare", "renormalized")


class GaugeRangeWarning(UserWarning):
    pass


class AssemblyError(RuntimeError):
    pass


@dataclass(frozen=True)
class GaugeVector:
    """Per-mode gauge parameters; 0 is Coulomb, 1 is dipole."""

    etas: tuple

    def __post_init__(self):
        etas = tuple(float(e) for e in np.atleast_1d(self.etas))
        if not etas:
            raise ValueError("gauge vector needs at least one entry")
        if not all(math.isfinite(e) for e in etas):
            raise ValueError(f"gauge parameters must be finite, got {etas}")
        if any(e < 0 or e > 1 for e in etas):
            warnings.warn(f"gauge {etas} lies outside [0, 1]", GaugeRangeWarning, stacklevel=3)
        object.__setattr__(self, "etas", etas)

    @classmethod
    def coulomb(cls, n_modes):
        return cls((0.0,) * n_modes)

    @classmethod
    def dipole(cls, n_modes):
        return cls((1.0,) * n_modes)

    @classmethod
    def uniform(cls, eta, n_modes):
        return cls((float(eta),) * n_modes)

    def __len__(self):
        return len(self.etas)

    def __iter__(self):
        return iter(self.etas)

    def __getitem__(self, k):
        return self.etas[k]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.etas, dtype=dtype)

    def label(self, fmt="{:.4f}"):
        return "(" + ", ".join(fmt.format(e) for e in self.etas) + ")"


def as_gauge(gauge, n_modes=None):
    g = gauge if isinstance(gauge, GaugeVector) else GaugeVector(tuple(np.atleast_1d(gauge)))
    if n_modes is not None and len(g) != n_modes:
        raise ValueError(f"gauge has {len(g)} entries but there are {n_modes} modes")
    return g


# ---------------------------------------------------------------------------
# physical configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CavitySystem:
    """A potential plus calibrated cavity modes, in absolute units.

    ``delta`` is the bare transition energy the dimensionless inputs were
    resolved against; ``photon_shift`` holds optional per-mode displacements
    s_k (b_k -> b_k - i s_k) applied to the photonic operators.
    """

    potential: PotentialSpec
    modes: tuple
    delta: float
    g: float
    photon_shift: tuple | None = None

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def amplitude(self) -> float:
        return self.modes[0].amplitude

    def with_shift(self, shift):
        return CavitySystem(self.potential, self.modes, self.delta, self.g,
                            None if shift is None else tuple(float(s) for s in shift))

    def with_potential(self, potential):
        return CavitySystem(potential, self.modes, self.delta, self.g, self.photon_shift)


def cavity_system(potential, omegas_over_delta, g_over_delta, grid=None, n_levels=4):
    """Resolve frequencies and coupling given in units of the bare transition.

    The bare atom is solved once on ``grid`` (default: the potential's default
    grid) to obtain Delta and <0|p|1>; all modes share the vacuum amplitude
    A = g / |<0|p|1>|.
    """
    grid = potential.default_grid() if grid is None else grid
    basis, _ = solve_atom_adaptive(potential, grid, n_levels)
    delta = basis.delta
    g = float(g_over_delta) * delta
    amp = calibrate_vacuum_amplitude(basis, g)
    modes = tuple(ModeSpec(float(w) * delta, amp) for w in np.atleast_1d(omegas_over_delta))
    return CavitySystem(potential, modes, delta, g)


# ---------------------------------------------------------------------------
# photonic pieces shared by the exact and truncated models
# ---------------------------------------------------------------------------


@lru_cache(maxsize=256)
def _mode_op(fock, k, kind):
    return mode_operator(fock, k, kind)


@dataclass(frozen=True, eq=False)
class PhotonicTerms:
    """Fock-space factors of one gauge.

    ``H = Ha x 1 + p x coupling_p - x x coupling_x + 1 x photonic``; ``tilt``
    is the extra linear atomic potential produced by a photon shift.
    """

    coupling_p: sp.csr_matrix
    coupling_x: sp.csr_matrix
    photonic: sp.csr_matrix
    tilt: float


def photonic_terms(fock, modes, gauge, photon_shift=None):
    K = len(modes)
    if fock.n_modes != K:
        raise ValueError(f"Fock space has {fock.n_modes} modes, system has {K}")
    gauge = as_gauge(gauge, K)
    shift = np.zeros(K) if photon_shift is None else np.asarray(photon_shift, dtype=float)
    F = fock.dim
    cp = sp.csr_matrix((F, F), dtype=float)
    cx = sp.csr_matrix((F, F), dtype=complex)
    hp = sp.csr_matrix((F, F), dtype=complex)
    tilt = 0.0
    for k, (eta, mode) in enumerate(zip(gauge, modes)):
        quad = _mode_op(fock, k, "position")
        mom = _mode_op(fock, k, "momentum")
        cp = cp + (1.0 - eta) * mode.amplitude * quad
        cx = cx + eta * mode.omega * mode.amplitude * mom
        hp = hp + mode.omega * _mode_op(fock, k, "number")
        s = shift[k]
        if s:
            hp = hp + mode.omega * (s * s * sp.identity(F) - s * mom)
            tilt += 2.0 * eta * mode.omega * mode.amplitude * s
    hp = hp + 0.5 * (cp @ cp)
    if not np.any(hp.imag.data):
        hp = hp.real
    return PhotonicTerms(cp.tocsr(), cx.tocsr(), hp.tocsr(), tilt)


def _herm_residual(m):
    if sp.issparse(m):
        d = (m - m.conj().T).tocoo().data
        return float(np.abs(d).max()) if d.size else 0.0
    return float(np.abs(m - m.conj().T).max())


def _maxabs(m):
    if sp.issparse(m):
        return float(np.abs(m.data).max()) if m.nnz else 0.0
    return float(np.abs(m).max())


# ---------------------------------------------------------------------------
# exact Hamiltonian
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FullHamiltonian:
    """Mixed-gauge Hamiltonian on grid x Fock, stored as Kronecker factors.

    The matrix is ``atomic x 1 + momentum x coupling_p - diag(x) x coupling_x
    + 1 x photonic``. Use :meth:`matvec` for products and :meth:`to_sparse`
    when an explicit matrix is needed.
    """

    grid: Grid
    potential: PotentialSpec
    modes: tuple
    gauge: GaugeVector
    fock: FockSpace
    atomic: np.ndarray
    momentum: np.ndarray
    terms: PhotonicTerms
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_atom(self) -> int:
        return self.grid.n_points

    @property
    def dim(self) -> int:
        return self.n_atom * self.fock.dim

    @property
    def shape(self):
        return (self.dim, self.dim)

    @property
    def dtype(self):
        return np.complex128

    def matvec(self, v):
        v = np.asarray(v)
        single = v.ndim == 1
        V = v.reshape(self.dim, -1)
        N, F, b = self.n_atom, self.fock.dim, V.shape[1]
        T = V.reshape(N, F, b).astype(complex, copy=False)
        flat = T.reshape(N, F * b)
        out = (self.atomic @ flat).reshape(N, F, b)
        t = self.terms
        pt = (self.momentum @ flat).reshape(N, F, b)
        out += _apply_right(t.coupling_p, pt)
        x = self.grid.x
        out -= x[:, None, None] * _apply_right(t.coupling_x, T)
        out += _apply_right(t.photonic, T)
        out = out.reshape(self.dim, b)
        return out[:, 0] if single else out

    __matmul__ = matvec

    def hermiticity_residual(self) -> float:
        t = self.terms
        xmax = float(np.abs(self.grid.x).max())
        scale = max(_maxabs(self.atomic), _maxabs(t.photonic),
                    _maxabs(self.momentum) * _maxabs(t.coupling_p),
                    xmax * _maxabs(t.coupling_x), 1e-300)
        res = max(
            _herm_residual(self.atomic),
            _herm_residual(self.momentum) * _maxabs(t.coupling_p),
            _herm_residual(t.coupling_p) * _maxabs(self.momentum),
            _herm_residual(t.coupling_x) * xmax,
            _herm_residual(t.photonic),
        )
        return res / scale

    def to_sparse(self, drop=0.0):
        """Explicit CSR matrix (for small systems, dumps, and cross-checks)."""
        t = self.terms
        N = self.n_atom
        eye_f = sp.identity(self.fock.dim, format="csr")
        atomic = sp.csr_matrix(np.where(np.abs(self.atomic) > drop, self.atomic, 0.0))
        mom = sp.csr_matrix(np.where(np.abs(self.momentum) > drop, self.momentum, 0.0))
        h = sp.kron(atomic, eye_f, format="csr")
        h = h + sp.kron(mom, t.coupling_p, format="csr")
        h = h - sp.kron(sp.diags(self.grid.x), t.coupling_x, format="csr")
        h = h + sp.kron(sp.identity(N), t.photonic, format="csr")
        return h.tocsr()

    def to_dense(self):
        return self.to_sparse().toarray()

    # -- solver support ----------------------------------------------------

    def _unperturbed(self):
        if "h0" not in self._cache:
            e, w = np.linalg.eigh(self.atomic)
            d = self.terms.photonic.diagonal().real
            self._cache["h0"] = (e, w, np.add.outer(e, d))
        return self._cache["h0"]

    def precondition(self, r, theta, floor=1e-3):
        """Approximate (H0 - theta)^-1 r with H0 = atomic x 1 + 1 x diag(photonic)."""
        e, w, e0 = self._unperturbed()
        N, F = self.n_atom, self.fock.dim
        R = r.reshape(N, F, -1)
        b = R.shape[2]
        Rt = (w.T @ R.reshape(N, F * b)).reshape(N, F, b)
        den = e0[:, :, None] - np.asarray(theta)[None, None, :]
        den = np.where(np.abs(den) < floor, np.where(den < 0, -floor, floor), den)
        Rt = Rt / den
        return (w @ Rt.reshape(N, F * b)).reshape(N * F, b)

    def start_block(self, b):
        """The ``b`` lowest product eigenstates of H0, as columns."""
        e, w, e0 = self._unperturbed()
        order = np.argsort(e0.ravel(), kind="stable")[:b]
        N, F = self.n_atom, self.fock.dim
        out = np.zeros((N * F, len(order)), dtype=complex)
        for col, flat in enumerate(order):
            i, n = divmod(int(flat), F)
            out[n::F, col] = w[:, i]
        return out


def _apply_right(op, T):
    """sum_m op[n, m] T[:, m, :] for a sparse Fock operator ``op``."""
    N, F, b = T.shape
    moved = np.ascontiguousarray(T.transpose(1, 0, 2)).reshape(F, N * b)
    return (op @ moved).reshape(F, N, b).transpose(1, 0, 2)


def assemble_full(grid, potential, modes, gauge, fock, photon_shift=None):
    """Exact Hamiltonian in the mixed gauge ``gauge``.

    Atomic part: kinetic + V_eff (including the eta_k^2 omega_k A_k^2 x^2
    renormalisation); couplings (1 - eta_k) A_k p (b_k + b_k^dag) and
    -eta_k omega_k A_k x i(b_k^dag - b_k); photonic part with the A^2 term.
    """
    modes = tuple(modes)
    gauge = as_gauge(gauge, len(modes))
    terms = photonic_terms(fock, modes, gauge, photon_shift)
    veff = build_effective_potential(potential, modes, gauge, grid) + terms.tilt * grid.x
    atomic = grid.kinetic_dense() + np.diag(veff)
    h = FullHamiltonian(grid, potential, modes, gauge, fock, atomic, grid.momentum(), terms)
    res = h.hermiticity_residual()
    if res > HERMITICITY_TOL:
        raise AssemblyError(f"assembled Hamiltonian is not Hermitian (residual {res:.2e})")
    return h


def assemble_system(system, gauge, grid, fock):
    return assemble_full(grid, system.potential, system.modes, gauge, fock, system.photon_shift)


def dump_coo(path, matrix, header=None):
    """Write ``row col re im`` lines for every stored nonzero."""
    m = matrix.to_sparse() if isinstance(matrix, FullHamiltonian) else sp.coo_matrix(matrix)
    m = m.tocoo()
    with open(path, "w") as fh:
        if header:
            for line in str(header).splitlines():
                fh.write(f"# {line}\n")
        fh.write(f"# shape {m.shape[0]} {m.shape[1]} nnz {m.nnz}\n")
        for r, c, v in zip(m.row, m.col, m.data.astype(complex)):
            fh.write(f"{r} {c} {float(v.real)!r} {float(v.imag)!r}\n")
    return path


# ---------------------------------------------------------------------------
# truncated models
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TruncatedModel:
    """Projection onto the lowest M atomic levels (bare or renormalised basis).

    ``atomic`` is the projected atomic Hamiltonian (M x M), ``elements`` the
    projected x, p, x^2 tables. The two-level coefficients (``delta``,
    ``delta_k``, ``g_c``, ``g_d``) refer to levels 0 and 1; ``delta_k`` is
    ``None`` for the renormalised basis where it is absorbed into the levels.
    """

    M: int
    basis_kind: str
    gauge: GaugeVector
    modes: tuple
    basis: AtomBasis
    atomic: np.ndarray
    elements: object
    delta: float
    delta_k: np.ndarray | None
    g_c: np.ndarray
    g_d: np.ndarray
    photon_shift: tuple | None = None


def build_truncated_model(basis_kind, M, modes, gauge, grid, potential,
                          photon_shift=None, bare_basis=None, n_levels=None):
    """Project the gauge-``gauge`` Hamiltonian onto M atomic levels.

    ``bare`` keeps the eigenstates of the bare atom for every gauge (pass
    ``bare_basis`` to reuse one); ``renormalized`` re-solves the atom with
    the gauge-dependent effective potential.
    """
    if basis_kind not in BASIS_KINDS:
        raise ValueError(f"basis_kind must be one of {BASIS_KINDS}, got {basis_kind!r}")
    if M < 2:
        raise ValueError("truncated models need M >= 2")
    modes = tuple(modes)
    gauge = as_gauge(gauge, len(modes))
    n_levels = max(M, 4) if n_levels is None else n_levels
    etas = np.asarray(gauge)
    weights = [e**2 * m.omega * m.amplitude**2 for e, m in zip(etas, modes)]
    shift = None if photon_shift is None else np.asarray(photon_shift, dtype=float)
    tilt = 0.0
    if shift is not None:
        tilt = 2.0 * sum(e * m.omega * m.amplitude * s for e, m, s in zip(etas, modes, shift))

    if basis_kind == "bare":
        basis = bare_basis
        if basis is None or basis.grid != grid or basis.n_levels < M:
            basis = solve_atom(potential(grid.x), grid, n_levels)
        me = matrix_elements(basis, M=M)
        atomic = np.diag(basis.energies[:M]).astype(complex)
        atomic = atomic + sum(weights) * me.xsq + tilt * me.x
        delta_k = np.array([w * (me.xsq[1, 1] - me.xsq[0, 0]).real / 2 for w in weights])
    else:
        veff = build_effective_potential(potential, modes, gauge, grid) + tilt * grid.x
        basis = solve_atom(veff, grid, n_levels, weights=tuple(weights))
        me = matrix_elements(basis, M=M)
        atomic = np.diag(basis.energies[:M]).astype(complex)
        delta_k = None

    delta = float(basis.energies[1] - basis.energies[0])
    scale = max(abs(basis.energies[0]), abs(basis.energies[1]), 1.0)
    if delta < 1e-10 * scale:
        warnings.warn("the two lowest atomic levels are nearly degenerate", RuntimeWarning, stacklevel=2)
    amps = np.array([m.amplitude for m in modes])
    omegas = np.array([m.omega for m in modes])
    g_c = 1j * amps * me.p[0, 1]
    g_d = omegas * amps * me.x[0, 1]
    return TruncatedModel(
        M=M, basis_kind=basis_kind, gauge=gauge, modes=modes, basis=basis,
        atomic=0.5 * (atomic + atomic.conj().T), elements=me, delta=delta,
        delta_k=delta_k, g_c=g_c, g_d=g_d,
        photon_shift=None if shift is None else tuple(shift),
    )


def truncated_for_system(system, basis_kind, M, gauge, grid, bare_basis=None):
    return build_truncated_model(basis_kind, M, system.modes, gauge, grid, system.potential,
                                 photon_shift=system.photon_shift, bare_basis=bare_basis)


def assemble_truncated(model, fock):
    """Sparse Hermitian matrix of the truncated model on (M levels) x Fock."""
    # the photon shift's atomic tilt already sits in model.atomic
    terms = photonic_terms(fock, model.modes, model.gauge, model.photon_shift)
    me = model.elements
    eye_f = sp.identity(fock.dim, format="csr")
    h = sp.kron(sp.csr_matrix(model.atomic), eye_f, format="csr")
    h = h + sp.kron(sp.csr_matrix(me.p), terms.coupling_p, format="csr")
    h = h - sp.kron(sp.csr_matrix(me.x), terms.coupling_x, format="csr")
    h = h + sp.kron(sp.identity(model.M), terms.photonic, format="csr")
    h = h.tocsr()
    res = _herm_residual(h) / max(_maxabs(h), 1e-300)
    if res > HERMITICITY_TOL:
        raise AssemblyError(f"truncated Hamiltonian is not Hermitian (residual {res:.2e})")
    return h
