"""Truncated multimode Fock spaces and the quadratic photonic Hamiltonian."""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment

DEFAULT_MAX_DIM = 4_000_000
OPERATOR_KINDS = ("annihilate", "create", "position", "momentum", "number")


class CapacityError(ValueError):
    pass


class InstabilityError(ValueError):
    pass


@dataclass(frozen=True)
class ModeSpec:
    """One cavity mode: frequency ``omega`` and vacuum amplitude ``amplitude`` (A_k)."""

    omega: float
    amplitude: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"mode frequency must be positive, got {self.omega}")
        if self.amplitude < 0:
            raise ValueError("vacuum amplitude must be non-negative")


@dataclass(frozen=True)
class FockSpace:
    cutoffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "cutoffs", tuple(int(c) for c in self.cutoffs))

    @property
    def n_modes(self) -> int:
        return len(self.cutoffs)

    @property
    def dims(self) -> tuple:
        return tuple(c + 1 for c in self.cutoffs)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def index(self, occupations) -> int:
        """Flat index of an occupation tuple (mode 0 varies slowest)."""
        occ = tuple(int(n) for n in occupations)
        if len(occ) != self.n_modes or any(not 0 <= n <= c for n, c in zip(occ, self.cutoffs)):
            raise IndexError(f"occupation {occ} outside cutoffs {self.cutoffs}")
        return int(np.ravel_multi_index(occ, self.dims))

    def occupations(self, index) -> tuple:
        return tuple(int(n) for n in np.unravel_index(int(index), self.dims))

    def occupation_table(self) -> np.ndarray:
        """(dim, n_modes) array of photon numbers for every basis state."""
        grids = np.meshgrid(*[np.arange(d) for d in self.dims], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def escalated(self, step=4) -> "FockSpace":
        return FockSpace(tuple(c + step for c in self.cutoffs))


def build_fock_space(cutoffs, max_dim=DEFAULT_MAX_DIM):
    cutoffs = tuple(int(c) for c in cutoffs)
    if not cutoffs:
        raise ValueError("at least one mode is required")
    if any(c < 1 for c in cutoffs):
        raise ValueError(f"photon cutoffs must be >= 1, got {cutoffs}")
    space = FockSpace(cutoffs)
    if space.dim > max_dim:
        raise CapacityError(f"Fock dimension {space.dim} exceeds the budget {max_dim}")
    return space


def _single_mode(kind, n_max):
    n = np.arange(1, n_max + 1)
    a = sp.diags(np.sqrt(n), 1, shape=(n_max + 1, n_max + 1), format="csr")
    if kind == "annihilate":
        return a
    if kind == "create":
        return a.T.tocsr()
    if kind == "position":
        return (a + a.T).tocsr()
    if kind == "momentum":
        return (1j * (a.T - a)).tocsr()
    if kind == "number":
        return sp.diags(np.arange(n_max + 1, dtype=float), 0, format="csr")
    raise ValueError(f"unknown operator kind {kind!r}; use one of {OPERATOR_KINDS}")


def mode_operator(space, k, kind):
    """Single-mode operator ``kind`` acting on slot ``k`` of ``space``.

    ``position`` is b + b^dag and ``momentum`` is i (b^dag - b).
    """
    if not 0 <= k < space.n_modes:
        raise IndexError(f"mode index {k} out of range for {space.n_modes} modes")
    factors = [sp.identity(d, format="csr") for d in space.dims]
    factors[k] = _single_mode(kind, space.cutoffs[k])
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), factors)


def quadrature_matrix(modes, gauge):
    """Real symmetric 2K x 2K matrix of the photonic Hamiltonian in (X, P).

    With X = (b + b^dag)/sqrt(2), P = i(b^dag - b)/sqrt(2) the photonic part is
    ``0.5 * [X; P]^T M [X; P] - sum(omega)/2``.
    """
    omega = np.array([m.omega for m in modes], dtype=float)
    c = np.array([(1.0 - e) * m.amplitude for e, m in zip(gauge, modes)], dtype=float)
    K = omega.size
    mat = np.zeros((2 * K, 2 * K))
    mat[:K, :K] = np.diag(omega) + 2.0 * np.outer(c, c)
    mat[K:, K:] = np.diag(omega)
    return mat


def symplectic_form(K):
    J = np.zeros((2 * K, 2 * K))
    J[:K, K:] = np.eye(K)
    J[K:, :K] = -np.eye(K)
    return J


@dataclass(frozen=True)
class BogoliubovResult:
    frequencies: np.ndarray
    transform: np.ndarray  # columns express (X, P) in terms of normal-mode quadratures

    @property
    def zero_point_energy(self) -> float:
        return 0.5 * float(self.frequencies.sum())

    def symplectic_residual(self) -> float:
        K = self.frequencies.size
        J = symplectic_form(K)
        S = self.transform
        return float(np.abs(S @ J @ S.T - J).max())


def bogoliubov_diagonalize(modes, gauge):
    """Normal modes of ``[sum_k (1-eta_k) A_k (b_k + b_k^dag)]^2 / 2 + sum_k omega_k n_k``.

    Returns the normal-mode frequencies, ordered by the bare mode each one
    overlaps most, and the real symplectic map S with ``(X, P) = S (X~, P~)``
    and ``S^T M S = diag(w~, w~)``.
    """
    modes = list(modes)
    if not modes:
        raise ValueError("at least one mode is required")
    if len(gauge) != len(modes):
        raise ValueError("gauge and modes have different lengths")
    K = len(modes)
    mat = quadrature_matrix(modes, gauge)
    kx = mat[:K, :K]
    omega = np.diag(mat[K:, K:])
    root = np.sqrt(omega)
    w2, O = np.linalg.eigh(root[:, None] * kx * root[None, :])
    if np.any(w2 <= 0):
        raise InstabilityError("photonic quadratic form is not positive definite")
    # label normal modes by the bare mode they overlap most with
    _, cols = linear_sum_assignment(-np.abs(O))
    w2, O = w2[cols], O[:, cols]
    O = O * np.where(np.diag(O) < 0, -1.0, 1.0)[None, :]
    w = np.sqrt(w2)
    sx = root[:, None] * O / np.sqrt(w)[None, :]
    sp_ = O * np.sqrt(w)[None, :] / root[:, None]
    S = np.zeros((2 * K, 2 * K))
    S[:K, :K] = sx
    S[K:, K:] = sp_
    return BogoliubovResult(w, S)
