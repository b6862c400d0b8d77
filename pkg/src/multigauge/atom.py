"""One-dimensional atom on a uniform grid.

Units are hbar = m = q = 1 everywhere. Wavefunctions are stored as real
grid vectors normalised so that ``sum(psi**2) * dx == 1``.

Two derivative schemes are available on a :class:`Grid`:

``"fourier"``
    Spectral (sinc / Fourier-grid) kinetic energy and momentum. Converges
    exponentially and keeps the gauge-transformed Hamiltonians unitarily
    equivalent to machine precision on coarse grids. This is the default.
``"fd2"``
    Second-order central differences, Dirichlet boundaries.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.linalg import eigh_tridiagonal

SCHEMES = ("fourier", "fd2")
BOUNDARY_DENSITY_MAX = 1e-12
SIGN_THRESHOLD = 1e-6


class DomainTooSmallError(ValueError):
    """A kept eigenstate has non-negligible density on the grid boundary."""

    def __init__(self, level, density):
        self.level = level
        self.density = density
        super().__init__(
            f"level {level} has boundary density {density:.3e} "
            f"(limit {BOUNDARY_DENSITY_MAX:g}); widen the grid"
        )


class DegenerateTransitionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_points: int
    scheme: str = "fourier"

    def __post_init__(self):
        if self.n_points < 16:
            raise ValueError(f"n_points must be >= 16, got {self.n_points}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; use one of {SCHEMES}")

    @classmethod
    def symmetric(cls, half_width, n_points, center=0.0, scheme="fourier"):
        return cls(center - half_width, center + half_width, int(n_points), scheme)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def center(self) -> float:
        return 0.5 * (self.x_min + self.x_max)

    def shifted(self, d) -> "Grid":
        return replace(self, x_min=self.x_min + d, x_max=self.x_max + d)

    def refined(self, factor=2) -> "Grid":
        """Same domain, ``factor`` times as many points."""
        return replace(self, n_points=int(self.n_points * factor))

    def widened(self, factor=1.25) -> "Grid":
        """Wider domain at (approximately) the same spacing."""
        half = 0.5 * (self.x_max - self.x_min) * factor
        n = int(np.ceil(2 * half / self.dx)) + 1
        return Grid.symmetric(half, n, center=self.center, scheme=self.scheme)

    def kinetic(self):
        """Matrix of p^2/2: dense for ``fourier``, (diag, offdiag) bands for ``fd2``."""
        n, dx = self.n_points, self.dx
        if self.scheme == "fd2":
            return np.full(n, 1.0 / dx**2), np.full(n - 1, -0.5 / dx**2)
        k = _wavenumbers(n, dx)
        return _fourier_matrix(0.5 * k**2).real

    def momentum(self) -> np.ndarray:
        """Dense Hermitian matrix of p (purely imaginary)."""
        n, dx = self.n_points, self.dx
        if self.scheme == "fd2":
            p = np.zeros((n, n), dtype=complex)
            i = np.arange(n - 1)
            p[i, i + 1] = -0.5j / dx
            p[i + 1, i] = 0.5j / dx
            return p
        k = _wavenumbers(n, dx)
        if n % 2 == 0:
            # the Nyquist component has no definite sign
            k[n // 2] = 0.0
        p = _fourier_matrix(k)
        return 1j * (0.5 * (p.imag - p.imag.T))

    def kinetic_dense(self) -> np.ndarray:
        t = self.kinetic()
        if self.scheme == "fd2":
            d, e = t
            return np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
        return t


def _wavenumbers(n, dx):
    # the periodic cell has length n * dx
    return 2.0 * np.pi * np.fft.fftfreq(n, d=dx)


def _fourier_matrix(symbol):
    n = symbol.size
    eye = np.eye(n)
    m = np.fft.ifft(symbol[:, None] * np.fft.fft(eye, axis=0), axis=0)
    return 0.5 * (m + m.conj().T)


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DoubleWell:
    """V(x) = C x^4 - B x^2."""

    B: float
    C: float = 1.0

    def __post_init__(self):
        if not (self.B > 0 and self.C > 0):
            raise ValueError("double well needs B > 0 and C > 0")

    @classmethod
    def from_gamma(cls, gamma):
        """C = 1 and B = gamma**(1/3), so that B**3 / C**2 == gamma."""
        if not gamma > 0:
            raise ValueError("gamma must be positive")
        return cls(B=float(np.cbrt(gamma)), C=1.0)

    @property
    def gamma(self) -> float:
        return self.B**3 / self.C**2

    @property
    def length_scale(self) -> float:
        """Position of the minima, sqrt(B / 2C)."""
        return float(np.sqrt(self.B / (2 * self.C)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.C * x**4 - self.B * x**2


@dataclass(frozen=True)
class Harmonic:
    omega0: float

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")

    @property
    def length_scale(self) -> float:
        return float(1.0 / np.sqrt(self.omega0))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * self.omega0**2 * x**2


@dataclass(frozen=True)
class Tabulated:
    """Potential sampled at ``x_values``; linearly interpolated elsewhere."""

    x_values: tuple
    v_values: tuple

    def __post_init__(self):
        x = np.asarray(self.x_values, dtype=float)
        if x.ndim != 1 or x.size < 2 or len(self.v_values) != x.size:
            raise ValueError("tabulated potential needs matching 1D x and V columns")
        if np.any(np.diff(x) <= 0):
            raise ValueError("tabulated x values must be strictly increasing")

    @classmethod
    def from_file(cls, path):
        """Read a two-column text file (x, V); '#' lines are comments."""
        data = np.loadtxt(path, comments="#", ndmin=2)
        if data.shape[1] != 2:
            raise ValueError(f"{path}: expected two columns, found {data.shape[1]}")
        order = np.argsort(data[:, 0])
        return cls(tuple(data[order, 0]), tuple(data[order, 1]))

    @property
    def length_scale(self) -> float:
        x = np.asarray(self.x_values)
        return float(0.25 * (x[-1] - x[0]))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        xt = np.asarray(self.x_values)
        if x.min() < xt[0] - 1e-12 or x.max() > xt[-1] + 1e-12:
            raise ValueError("grid extends beyond the tabulated potential")
        return np.interp(x, xt, np.asarray(self.v_values))


@dataclass(frozen=True)
class PotentialSpec:
    """Bare potential ``kind(x - shift) + tilt * x``."""

    kind: DoubleWell | Harmonic | Tabulated
    shift: float = 0.0
    tilt: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.kind(x - self.shift) + self.tilt * x

    @property
    def length_scale(self) -> float:
        return self.kind.length_scale

    def default_grid(self, half_width_factor=3.5, n_points=64, scheme="fourier"):
        """Grid centred on the shift; half-width in units of the length scale."""
        return Grid.symmetric(
            half_width_factor * self.length_scale, n_points, center=self.shift, scheme=scheme
        )


def build_effective_potential(spec, modes, gauge, grid):
    """Bare potential plus the gauge-dependent x^2 renormalisation.

    ``V(x - d) + s*x + sum_k eta_k**2 * omega_k * A_k**2 * x**2``
    """
    etas = np.asarray(gauge, dtype=float)
    if etas.size != len(modes):
        raise ValueError(f"gauge has {etas.size} entries but there are {len(modes)} modes")
    x = grid.x
    return spec(x) + renormalisation_weight(modes, etas) * x**2


def renormalisation_weight(modes, etas):
    etas = np.asarray(etas, dtype=float)
    return float(sum(e**2 * m.omega * m.amplitude**2 for e, m in zip(etas, modes)))


# ---------------------------------------------------------------------------
# eigenpairs and matrix elements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AtomBasis:
    energies: np.ndarray
    wavefunctions: np.ndarray  # (n_points, n_levels)
    grid: Grid
    weights: tuple = ()  # eta_k^2 omega_k A_k^2 per mode; zeros for the bare basis

    @property
    def n_levels(self) -> int:
        return self.energies.size

    @property
    def delta(self) -> float:
        return float(self.energies[1] - self.energies[0])

    def grid_vectors(self, m=None) -> np.ndarray:
        """Unit-norm grid vectors ``psi_i * sqrt(dx)`` for the lowest ``m`` levels."""
        m = self.n_levels if m is None else m
        return self.wavefunctions[:, :m] * np.sqrt(self.grid.dx)

    def overlap(self) -> np.ndarray:
        return self.wavefunctions.T @ self.wavefunctions * self.grid.dx


def solve_atom(potential, grid, n_levels, weights=()):
    """Lowest ``n_levels`` eigenpairs of p^2/2 + diag(potential).

    Raises
    ------
    DomainTooSmallError
        If any kept level has boundary density above 1e-12.
    """
    potential = np.asarray(potential, dtype=float)
    if potential.shape != (grid.n_points,):
        raise ValueError("potential must be sampled on the grid")
    if n_levels < 1 or n_levels > grid.n_points // 4:
        raise ValueError(f"n_levels must lie in [1, n_points/4], got {n_levels}")
    if grid.scheme == "fd2":
        d, e = grid.kinetic()
        w, v = eigh_tridiagonal(d + potential, e, select="i", select_range=(0, n_levels - 1))
    else:
        h = grid.kinetic() + np.diag(potential)
        w, v = np.linalg.eigh(h)
        w, v = w[:n_levels], v[:, :n_levels]
    v = _fix_signs(v / np.sqrt(grid.dx))
    density = np.maximum(v[0] ** 2, v[-1] ** 2)
    bad = np.flatnonzero(density >= BOUNDARY_DENSITY_MAX)
    if bad.size:
        raise DomainTooSmallError(int(bad[0]), float(density[bad[0]]))
    return AtomBasis(w.copy(), v, grid, tuple(weights))


def solve_atom_adaptive(spec, grid, n_levels, weight=0.0, max_widenings=8):
    """Like :func:`solve_atom` but widens the grid until the boundary check passes.

    ``weight`` is the coefficient of the extra x^2 term. Returns (basis, grid).
    """
    for _ in range(max_widenings + 1):
        try:
            return solve_atom(spec(grid.x) + weight * grid.x**2, grid, n_levels), grid
        except DomainTooSmallError:
            grid = grid.widened()
    raise DomainTooSmallError(-1, float("nan"))


def _fix_signs(v):
    v = np.array(v, copy=True)
    for i in range(v.shape[1]):
        col = v[:, i]
        idx = np.flatnonzero(np.abs(col) > SIGN_THRESHOLD)
        if idx.size and col[idx[0]] < 0:
            v[:, i] = -col
    return v


@dataclass(frozen=True)
class MatrixElements:
    x: np.ndarray
    p: np.ndarray
    xsq: np.ndarray

    @property
    def size(self) -> int:
        return self.x.shape[0]


def matrix_elements(basis, grid=None, M=None):
    """<i|x|j>, <i|p|j>, <i|x^2|j> for the lowest ``M`` levels."""
    grid = basis.grid if grid is None else grid
    M = basis.n_levels if M is None else M
    if M > basis.n_levels:
        raise ValueError(f"M={M} exceeds the {basis.n_levels} levels in the basis")
    u = basis.grid_vectors(M)
    x = grid.x
    xm = u.T @ (x[:, None] * u)
    xsq = u.T @ ((x**2)[:, None] * u)
    pm = u.T @ (grid.momentum() @ u)
    return MatrixElements(
        x=(0.5 * (xm + xm.T)).astype(complex),
        p=0.5 * (pm + pm.conj().T),
        xsq=(0.5 * (xsq + xsq.T)).astype(complex),
    )


def calibrate_vacuum_amplitude(basis, g_target):
    """Vacuum amplitude A with g = A |<0|p|1>| (m = q = 1)."""
    p01 = abs(matrix_elements(basis, M=2).p[0, 1])
    if p01 == 0:
        raise DegenerateTransitionError("<0|p|1> vanishes; coupling cannot be calibrated")
    return float(g_target) / p01


def write_basis_csv(path, basis, M=None, header=()):
    """Energy table followed by matrix-element tables (one row per (i, j)).

    ``header`` lines are written first as '#' comments.
    """
    me = matrix_elements(basis, M=M)
    delta = basis.delta
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        fh.write(f"# delta={delta!r} n_points={basis.grid.n_points} scheme={basis.grid.scheme}\n")
        w = csv.writer(fh)
        w.writerow(["i", "energy", "energy_over_delta"])
        for i, e in enumerate(basis.energies):
            w.writerow([i, repr(float(e)), repr(float((e - basis.energies[0]) / delta))])
        w.writerow([])
        w.writerow(["i", "j", "x", "p_imag", "xsq"])
        for i in range(me.size):
            for j in range(me.size):
                w.writerow([i, j, repr(me.x[i, j].real), repr(me.p[i, j].imag), repr(me.xsq[i, j].real)])
    return path
