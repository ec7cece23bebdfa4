"""Technical-analysis patterns read off the potential and the wave function.

Support and resistance are potential peaks. A channel breakout is the
probability mass beyond the outer peaks. A trend line is the potential
migrating toward where the density sits. Bounces and breaks at a trend
line are reflection and transmission through a barrier.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, ValidationError
from .potential import PotentialProfile
from .solver import ForecastDensity, ModelParams, forecast_density, solve_well


@dataclass(frozen=True)
class BarrierLevel:
    price: float
    prominence: float
    index: int


@dataclass(frozen=True)
class BarrierSet:
    levels: tuple[BarrierLevel, ...]
    min_prominence: float

    def __len__(self):
        return len(self.levels)

    @property
    def prices(self) -> list[float]:
        return [lvl.price for lvl in self.levels]


@dataclass(frozen=True)
class TunnelingResult:
    transmission: float
    reflection: float
    energy: float


def _plateaus(v: np.ndarray):
    """Yield (start, end) of every maximal run of equal values."""
    start = 0
    for i in range(1, v.size + 1):
        if i == v.size or v[i] != v[start]:
            yield start, i - 1
            start = i


def _saddle(v: np.ndarray, height: float, indices) -> float | None:
    """Lowest value crossed on the way to the first strictly higher sample."""
    lowest = height
    for i in indices:
        if v[i] > height:
            return lowest
        lowest = min(lowest, v[i])
    return None


def peak_prominences(values) -> list[tuple[int, float]]:
    """Interior local maxima and their topographic prominence.

    Plateaus count once, at their center bin. A peak with no higher ground
    on either side is measured against zero, so on a max-normalized profile
    the global maximum has prominence equal to its height, 1.
    """
    v = np.asarray(values, dtype=float)
    found = []
    for s, e in _plateaus(v):
        if s == 0 or e == v.size - 1:
            continue
        height = v[s]
        if not (v[s - 1] < height and v[e + 1] < height):
            continue
        saddles = [
            x for x in (_saddle(v, height, range(s - 1, -1, -1)),
                        _saddle(v, height, range(e + 1, v.size)))
            if x is not None
        ]
        key_col = max(saddles) if saddles else 0.0
        found.append(((s + e) // 2, height - key_col))
    return found


def detect_barriers(potential: PotentialProfile, min_prominence: float = 0.25) -> BarrierSet:
    if not 0 < min_prominence <= 1:
        raise DomainError(f"min_prominence must be in (0, 1], got {min_prominence}")
    v = np.asarray(potential.v, dtype=float)
    scale = v.max() if v.size else 0.0
    if scale <= 0:
        return BarrierSet((), min_prominence)
    centers = potential.grid.centers
    levels = tuple(
        BarrierLevel(float(centers[j]), float(prom), int(j))
        for j, prom in peak_prominences(v / scale)
        if prom >= min_prominence
    )
    return BarrierSet(levels, min_prominence)


def breakout_direction(density: ForecastDensity, barriers: BarrierSet) -> tuple[float, float, float]:
    """(p_up, p_down, p_inside) for the channel between the outermost barriers."""
    if len(barriers) < 2:
        raise ValidationError("no channel: need at least 2 barriers")
    k = density.grid.k
    lower = barriers.levels[0].index
    upper = barriers.levels[-1].index
    if not 0 <= lower < upper < k:
        raise ValidationError("barrier indices do not fit the density grid")
    mass = np.asarray(density.mass, dtype=float)
    p_down = float(mass[:lower].sum())
    p_up = float(mass[upper + 1:].sum())
    p_inside = float(mass[lower:upper + 1].sum())
    total = p_up + p_down + p_inside
    return p_up / total, p_down / total, p_inside / total


def _wavenumber(energy: float, level: float, params: ModelParams) -> complex:
    return cmath.sqrt(2 * params.mass * (energy - level)) / params.hbar_eff


def slab_transfer_matrix(wavenumber: complex, width: float) -> np.ndarray:
    """Maps ``(psi, psi')`` across one constant-potential slab.

    The determinant is exactly ``cos^2 + sin^2 = 1`` (probability flux is
    conserved).
    """
    q = complex(wavenumber)
    if q == 0:
        return np.array([[1.0, width], [0.0, 1.0]], dtype=complex)
    c = cmath.cos(q * width)
    s = cmath.sin(q * width)
    return np.array([[c, s / q], [-q * s, c]], dtype=complex)


def transmission_reflection(
    potential: PotentialProfile,
    params: ModelParams,
    energy: float,
    region: tuple[int, int],
) -> TunnelingResult:
    """Scattering of a plane wave incident from below across bins ``region``.

    ``region`` is a half-open bin range. Each bin is a constant slab of
    height ``potential_scale * V``. Outside the region the potential is held
    flat at the level of the neighbouring bin (the region's own edge bin when
    it touches the grid boundary).
    """
    k = potential.grid.k
    i0, i1 = region
    if not 0 <= i0 < i1 <= k:
        raise ValidationError(f"region {region} must be a non-empty bin range inside [0, {k}]")
    if not energy > 0:
        raise DomainError(f"energy must be > 0, got {energy}")
    levels = params.potential_scale * np.asarray(potential.v, dtype=float)
    left = levels[i0 - 1] if i0 > 0 else levels[i0]
    right = levels[i1] if i1 < k else levels[i1 - 1]
    if energy <= left and energy <= right:
        raise DomainError("no open channel: energy is below both asymptotic levels")
    if energy <= left or energy <= right:
        # only one side propagates, so everything that comes in goes back out
        return TunnelingResult(0.0, 1.0, float(energy))

    h = potential.grid.bin_width
    total = np.eye(2, dtype=complex)
    for j in range(i0, i1):
        total = slab_transfer_matrix(_wavenumber(energy, levels[j], params), h) @ total

    k_left = _wavenumber(energy, left, params).real
    k_right = _wavenumber(energy, right, params).real
    # unknowns (r, t): psi_left = e^{ikx} + r e^{-ikx}, psi_right = t e^{ik'(x - L)}
    (m11, m12), (m21, m22) = total
    ik = 1j * k_left
    system = np.array([[m11 - ik * m12, -1.0], [m21 - ik * m22, -1j * k_right]])
    rhs = -np.array([m11 + ik * m12, m21 + ik * m22])
    r, t = np.linalg.solve(system, rhs)
    transmission = float(k_right / k_left * abs(t) ** 2)
    reflection = float(abs(r) ** 2)
    if abs(transmission + reflection - 1) > 1e-8:
        raise DomainError(
            f"flux not conserved at E={energy}: T+R-1={transmission + reflection - 1:.3e}"
        )
    return TunnelingResult(transmission, reflection, float(energy))


def tunneling_sweep(potential, params, energies, region) -> list[TunnelingResult]:
    return [transmission_reflection(potential, params, e, region) for e in energies]


def trend_migration_step(potential: PotentialProfile, density: ForecastDensity,
                         build_rate: float, decay_rate: float) -> PotentialProfile:
    """One constructor/destructor update of the potential.

    Existing potential fades by ``decay_rate`` and new potential is laid
    down where the density is, in proportion to ``build_rate``; the result
    is rescaled to a maximum of 1.
    """
    for name, rate in (("build_rate", build_rate), ("decay_rate", decay_rate)):
        if not 0 <= rate <= 1:
            raise DomainError(f"{name} must be in [0, 1], got {rate}")
    if potential.grid != density.grid:
        raise ValidationError("potential and density grids differ")
    mass = np.asarray(density.mass, dtype=float)
    peak = mass.max()
    built = mass / peak if peak > 0 else np.zeros_like(mass)
    updated = (1 - decay_rate) * np.asarray(potential.v, dtype=float) + build_rate * built
    scale = updated.max()
    if scale <= 0:
        return PotentialProfile(potential.grid, np.zeros_like(updated), 0.0, dict(potential.meta))
    return PotentialProfile(potential.grid, updated / scale, float(scale), dict(potential.meta))


def run_migration(potential: PotentialProfile, steps: int, params: ModelParams = ModelParams(),
                  build_rate: float = 0.1, decay_rate: float = 0.1,
                  boundary: str = "face") -> list[PotentialProfile]:
    """Alternate ground-state solves and migration steps; returns ``steps + 1`` frames."""
    if steps < 1:
        raise ValidationError(f"steps must be >= 1, got {steps}")
    frames = [potential]
    for _ in range(steps):
        current = frames[-1]
        density = forecast_density(solve_well(current, params, 1, boundary))
        frames.append(trend_migration_step(current, density, build_rate, decay_rate))
    return frames


def center_of_mass(grid, weights) -> float:
    w = np.asarray(weights, dtype=float)
    return float(np.dot(grid.centers, w) / w.sum())
