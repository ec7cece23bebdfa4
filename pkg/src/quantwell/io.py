"""CSV and JSON serialization of profiles, eigenstates and analysis results.

Floats are written with ``repr`` (shortest round-trip form), so identical
inputs always give byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .analysis import BarrierSet, TunnelingResult, center_of_mass
from .exceptions import ParseError, ValidationError
from .potential import HeldSharesProfile, PotentialProfile, PriceGrid, normalized_potential
from .solver import EigenSolution, ForecastDensity


def _f(x) -> float:
    return float(x)


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def price_value_csv(grid: PriceGrid, values) -> str:
    rows = ["price,value"]
    rows += [f"{_f(p)!r},{_f(v)!r}" for p, v in zip(grid.centers, values)]
    return "\n".join(rows) + "\n"


def held_shares_json(profile: HeldSharesProfile) -> dict:
    return {
        "kind": "held_shares",
        "grid": profile.grid.to_dict(),
        "horizon": profile.horizon,
        "placed_volume": profile.placed_volume,
        "dropped_volume": profile.dropped_volume,
        "dropped_fraction": profile.dropped_fraction,
        "values": [_f(x) for x in profile.n],
    }


def potential_json(profile: PotentialProfile) -> dict:
    return {
        "kind": "potential",
        "grid": profile.grid.to_dict(),
        "normalization": profile.normalization,
        "meta": profile.meta,
        "values": [_f(x) for x in profile.v],
    }


def eigensolution_json(solution: EigenSolution) -> dict:
    p = solution.params
    return {
        "kind": "eigensolution",
        "grid": solution.grid.to_dict(),
        "params": {"hbar_eff": p.hbar_eff, "mass": p.mass, "potential_scale": p.potential_scale},
        "energies": [_f(e) for e in solution.energies],
        "states": [[_f(x) for x in row] for row in solution.states],
    }


def energies_csv(solution: EigenSolution) -> str:
    rows = ["n,energy"] + [f"{n},{_f(e)!r}" for n, e in enumerate(solution.energies, start=1)]
    return "\n".join(rows) + "\n"


def density_json(density: ForecastDensity) -> dict:
    return {
        "kind": "forecast_density",
        "grid": density.grid.to_dict(),
        "mode": density.mode,
        "temperature": density.temperature,
        "values": [_f(x) for x in density.mass],
    }


def barriers_json(barriers: BarrierSet) -> dict:
    return {
        "kind": "barriers",
        "min_prominence": barriers.min_prominence,
        "levels": [
            {"price": lvl.price, "prominence": lvl.prominence, "index": lvl.index}
            for lvl in barriers.levels
        ],
    }


def barriers_csv(barriers: BarrierSet) -> str:
    rows = ["price,prominence,index"]
    rows += [f"{lvl.price!r},{lvl.prominence!r},{lvl.index}" for lvl in barriers.levels]
    return "\n".join(rows) + "\n"


def tunneling_csv(results: list[TunnelingResult]) -> str:
    rows = ["energy,transmission,reflection"]
    rows += [f"{r.energy!r},{r.transmission!r},{r.reflection!r}" for r in results]
    return "\n".join(rows) + "\n"


def tunneling_json(results: list[TunnelingResult]) -> dict:
    return {
        "kind": "tunneling_sweep",
        "rows": [
            {"energy": r.energy, "transmission": r.transmission, "reflection": r.reflection}
            for r in results
        ],
    }


def migration_json(frames: list[PotentialProfile]) -> dict:
    grid = frames[0].grid
    return {
        "kind": "migration",
        "grid": grid.to_dict(),
        "center_of_mass": [
            center_of_mass(grid, f.v) if np.any(f.v) else None for f in frames
        ],
        "frames": [[_f(x) for x in f.v] for f in frames],
    }


def migration_csv(frames: list[PotentialProfile]) -> str:
    rows = ["step,price,value"]
    for step, frame in enumerate(frames):
        rows += [f"{step},{_f(p)!r},{_f(v)!r}" for p, v in zip(frame.grid.centers, frame.v)]
    return "\n".join(rows) + "\n"


def _grid_from_centers(centers: np.ndarray) -> PriceGrid:
    if centers.size < 2:
        raise ValidationError("a potential file needs at least 2 rows")
    steps = np.diff(centers)
    step = (centers[-1] - centers[0]) / (centers.size - 1)
    if step <= 0 or np.max(np.abs(steps - step)) > 1e-9 * max(1.0, abs(step)):
        raise ValidationError("potential prices must be equally spaced and increasing")
    eps = step / 2
    return PriceGrid(float(centers[0] - eps), float(centers[-1] + eps), int(centers.size))


def read_potential(path: str | Path) -> PotentialProfile:
    """Load a potential from ``price,value`` CSV or from the JSON written by ``potential``.

    Values are rescaled to a maximum of 1.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FileNotFoundError(f"potential file not found: {path}") from None
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
            g = data["grid"]
            grid = PriceGrid(float(g["p_min"]), float(g["p_max"]), int(g["k"]))
            values = np.array(data["values"], dtype=float)
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"{path}: not a potential JSON file ({exc})") from None
        return normalized_potential(grid, values)
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].lower() != "price,value":
        raise ParseError(f"{path}: expected header 'price,value'", 1)
    prices, values = [], []
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != 2:
            raise ParseError(f"{path}: expected 2 columns", lineno)
        try:
            prices.append(float(parts[0]))
            values.append(float(parts[1]))
        except ValueError:
            raise ParseError(f"{path}: unparseable number", lineno) from None
    grid = _grid_from_centers(np.array(prices))
    return normalized_potential(grid, np.array(values))
