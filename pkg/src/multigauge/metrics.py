"""Gauge-quality metrics: spectral deviation, ground-state fidelity, entanglement."""
from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

ENTROPY_FLOOR = 1e-12
NORM_TOL = 1e-6


@dataclass(frozen=True)
class MetricsReport:
    """Metrics for one gauge point. Energies in units of delta; entropies in nats."""

    gauge: tuple
    sigma: float = float("nan")
    fidelity: float = float("nan")
    s_full: float = float("nan")
    s_trunc: float = float("nan")
    M: int = 7
    converged: bool = True
    error: str = ""

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity

    @property
    def entropy_gap(self) -> float:
        return abs(self.s_full - self.s_trunc)

    def value(self, metric):
        if metric in ("sigma", "fidelity", "s_full", "s_trunc"):
            return getattr(self, metric)
        if metric == "infidelity":
            return self.infidelity
        if metric == "entropy_gap":
            return self.entropy_gap
        raise KeyError(f"unknown metric {metric!r}")

    def to_dict(self):
        return asdict(self)


def spectral_deviation(exact, truncated):
    """Root-mean-square difference of two lists of excitation energies."""
    exact = np.asarray(exact, dtype=float)
    truncated = np.asarray(truncated, dtype=float)
    if exact.shape != truncated.shape or exact.ndim != 1 or exact.size == 0:
        raise ValueError(f"need two equal-length 1D arrays, got {exact.shape} and {truncated.shape}")
    return float(np.sqrt(np.mean((exact - truncated) ** 2)))


def excitation_energies(energies, M, delta=1.0):
    """First M excitation energies above the lowest level, divided by ``delta``."""
    e = np.sort(np.asarray(energies, dtype=float))
    if e.size < M + 1:
        raise ValueError(f"need {M + 1} eigenvalues for {M} excitations, got {e.size}")
    return (e[1 : M + 1] - e[0]) / delta


def embed_truncated_state(state, basis, fock_dim, M=None):
    """Map a state on (M levels) x Fock onto grid x Fock.

    Coefficient c[i, n] becomes sum_i c[i, n] psi_i(x_j) sqrt(dx).
    """
    state = np.asarray(state)
    if M is None:
        M, rem = divmod(state.size, fock_dim)
        if rem:
            raise ValueError(f"state length {state.size} is not a multiple of the Fock dimension {fock_dim}")
    if state.size != M * fock_dim:
        raise ValueError(f"state length {state.size} does not match {M} x {fock_dim}")
    if basis.n_levels < M:
        raise ValueError(f"basis has {basis.n_levels} levels, state needs {M}")
    c = state.reshape(M, fock_dim)
    return (basis.grid_vectors(M) @ c).reshape(-1)


def project_full_state(state, basis, fock_dim, M):
    """Inverse of :func:`embed_truncated_state` on the truncated subspace."""
    u = basis.grid_vectors(M)
    psi = np.asarray(state).reshape(u.shape[0], fock_dim)
    return (u.T @ psi).reshape(-1)


def ground_state_fidelity(psi, Psi):
    """|<psi|Psi>|^2 for two normalised states on the same space."""
    psi = np.asarray(psi).ravel()
    Psi = np.asarray(Psi).ravel()
    if psi.shape != Psi.shape:
        raise ValueError(f"states live in different spaces: {psi.shape} vs {Psi.shape}")
    for name, v in (("psi", psi), ("Psi", Psi)):
        n = np.linalg.norm(v)
        if abs(n - 1.0) > NORM_TOL:
            raise ValueError(f"{name} is not normalised (norm {n:.8f})")
    return float(abs(np.vdot(psi, Psi)) ** 2)


def schmidt_coefficients(state, atom_dim, fock_dim):
    state = np.asarray(state)
    if state.size != atom_dim * fock_dim:
        raise ValueError(f"state length {state.size} != {atom_dim} x {fock_dim}")
    return np.linalg.svd(state.reshape(atom_dim, fock_dim), compute_uv=False)


def entanglement_entropy(state, atom_dim, fock_dim):
    """Von Neumann entropy (natural log) of either reduced density matrix."""
    s = schmidt_coefficients(state, atom_dim, fock_dim)
    s = s[s > ENTROPY_FLOOR]
    p = s**2
    p = p / p.sum()
    return float(max(0.0, -np.sum(p * np.log(p))))


def photonic_entropy(state, atom_dim, fock_dim):
    """Entropy from the explicit photonic reduced density matrix (dense route)."""
    c = np.asarray(state).reshape(atom_dim, fock_dim)
    rho = c.T @ c.conj()
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    w = w[w > ENTROPY_FLOOR**2]
    return float(max(0.0, -np.sum(w * np.log(w))))


def atomic_entropy(state, atom_dim, fock_dim):
    c = np.asarray(state).reshape(atom_dim, fock_dim)
    rho = c @ c.conj().T
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    w = w[w > ENTROPY_FLOOR**2]
    return float(max(0.0, -np.sum(w * np.log(w))))
