"""Finite-difference eigensolver for a particle in an infinite price well.

The operator ``-(hbar^2 / 2m) psi'' + s V psi`` is discretized with
second-order central differences on the bin centers. Walls sit at
``p_min`` and ``p_max`` by default. A mirrored ghost value just outside
each wall forces ``psi = 0`` on the wall, which keeps the eigenvalues
second-order accurate. ``boundary="node"`` instead truncates the matrix,
putting the zero half a bin outside the grid, which is only first order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .exceptions import ConvergenceError, DomainError, ValidationError
from .potential import PotentialProfile, PriceGrid

BOUNDARIES = ("face", "node")


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless scales of the market Schrödinger equation.

    Only ``potential_scale * mass * L**2 / hbar_eff**2`` changes the shape
    of the eigenstates; the rest sets the energy unit.
    """

    hbar_eff: float = 1.0
    mass: float = 1.0
    potential_scale: float = 1.0

    def __post_init__(self):
        if not self.hbar_eff > 0:
            raise DomainError(f"hbar_eff must be > 0, got {self.hbar_eff}")
        if not self.mass > 0:
            raise DomainError(f"mass must be > 0, got {self.mass}")
        if not self.potential_scale >= 0:
            raise DomainError(f"potential_scale must be >= 0, got {self.potential_scale}")


@dataclass(frozen=True)
class Hamiltonian:
    """Symmetric tridiagonal matrix stored as its two distinct diagonals."""

    grid: PriceGrid
    diagonal: np.ndarray
    offdiagonal: np.ndarray
    params: ModelParams

    def dense(self) -> np.ndarray:
        return (np.diag(self.diagonal) + np.diag(self.offdiagonal, 1)
                + np.diag(self.offdiagonal, -1))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diagonal * x
        y[:-1] += self.offdiagonal * x[1:]
        y[1:] += self.offdiagonal * x[:-1]
        return y


@dataclass(frozen=True)
class EigenSolution:
    grid: PriceGrid
    energies: np.ndarray
    states: np.ndarray  # shape (m, k); row n is psi_{n+1}
    params: ModelParams


@dataclass(frozen=True)
class ForecastDensity:
    grid: PriceGrid
    mass: np.ndarray
    mode: str = "ground"
    temperature: float | None = None


def assemble_hamiltonian(grid: PriceGrid, potential: PotentialProfile,
                         params: ModelParams = ModelParams(),
                         boundary: str = "face") -> Hamiltonian:
    if potential.grid != grid:
        raise ValidationError("potential and grid do not match")
    if boundary not in BOUNDARIES:
        raise ValidationError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    h = grid.bin_width
    kinetic = params.hbar_eff ** 2 / (2 * params.mass * h ** 2)
    diagonal = 2 * kinetic + params.potential_scale * np.asarray(potential.v, dtype=float)
    if boundary == "face":
        diagonal[0] += kinetic
        diagonal[-1] += kinetic
    offdiagonal = np.full(grid.k - 1, -kinetic)
    return Hamiltonian(grid, diagonal, offdiagonal, params)


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(vec) > 1e-12 * np.abs(vec).max())
    return -vec if vec[nz[0]] < 0 else vec


def solve_eigenpairs(hamiltonian: Hamiltonian, m: int) -> EigenSolution:
    """Lowest ``m`` eigenpairs, normalized so that ``sum(psi**2) * 2 eps = 1``.

    Each state is signed so its first non-negligible component is positive.
    """
    k = hamiltonian.grid.k
    if not 1 <= m <= k:
        raise ValidationError(f"number of states must be in [1, {k}], got {m}")
    try:
        energies, vectors = eigh_tridiagonal(
            hamiltonian.diagonal, hamiltonian.offdiagonal,
            select="i", select_range=(0, m - 1), lapack_driver="stemr",
        )
    except LinAlgError as exc:
        raise ConvergenceError(f"tridiagonal eigensolve failed for k={k}, m={m}: {exc}") from exc
    h = hamiltonian.grid.bin_width
    states = np.empty((m, k))
    for n in range(m):
        psi = vectors[:, n] / np.sqrt(np.sum(vectors[:, n] ** 2) * h)
        states[n] = _fix_sign(psi)
    return EigenSolution(hamiltonian.grid, np.asarray(energies), states, hamiltonian.params)


def solve_well(potential: PotentialProfile, params: ModelParams = ModelParams(),
               m: int = 1, boundary: str = "face") -> EigenSolution:
    return solve_eigenpairs(assemble_hamiltonian(potential.grid, potential, params, boundary), m)


def forecast_density(solution: EigenSolution, mode: str = "ground",
                     temperature: float | None = None) -> ForecastDensity:
    """Per-bin price probability from the eigenstates.

    ``"ground"`` uses ``|psi_1|^2``. ``"boltzmann"`` mixes every returned
    state with weights proportional to ``exp(-E_n / temperature)``.
    """
    h = solution.grid.bin_width
    if mode == "ground":
        mass = solution.states[0] ** 2 * h
    elif mode == "boltzmann":
        if temperature is None or not temperature > 0:
            raise DomainError(f"temperature must be > 0, got {temperature}")
        shifted = solution.energies - solution.energies[0]
        w = np.exp(-shifted / temperature)
        w /= w.sum()
        mass = w @ (solution.states ** 2) * h
    else:
        raise ValidationError(f"unknown forecast mode {mode!r}")
    mass = mass / mass.sum()
    return ForecastDensity(solution.grid, mass, mode, temperature if mode == "boltzmann" else None)
