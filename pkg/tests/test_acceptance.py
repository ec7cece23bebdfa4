"""Acceptance gate: one PASS/FAIL line per criterion at the required tolerance.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also repeated in the terminal summary.
"""

import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

from quantwell.analysis import (
    BarrierLevel,
    BarrierSet,
    breakout_direction,
    center_of_mass,
    transmission_reflection,
    trend_migration_step,
)
from quantwell.cli import main
from quantwell.decay import (
    ConstantExponential,
    GaussianHolding,
    VolatilityLinked,
    decay_constant,
    survival_weight,
    turnover_probability,
)
from quantwell.oracles import analytic_flat_well_energy, analytic_rectangular_barrier_T, brute_force_held_shares
from quantwell.potential import accumulate_held_shares, build_price_grid, normalized_potential
from quantwell.solver import ForecastDensity, ModelParams, forecast_density, solve_well
from quantwell.synthetic import (
    BimodalAccumulation,
    Lcg64,
    SidewaysChannel,
    SyntheticSpec,
    TrendingWalk,
    generate_series,
)


def flat(k, length=1.0):
    return normalized_potential(build_price_grid(0, length, k), np.zeros(k))


def test_1_decay_identities(criterion):
    worst_identity = 0.0
    for i in range(100):
        p = i / 100
        lam = decay_constant(turnover_probability(p * 1e6, 1e6))
        worst_identity = max(worst_identity, abs(math.exp(-lam) - (1 - p)))
    worst_comp = 0.0
    rng = Lcg64(1)
    for _ in range(500):
        law = ConstantExponential(5 * rng.uniform())
        t1, t2 = 10 * rng.uniform(), 10 * rng.uniform()
        lhs = survival_weight(law, t1 + t2)
        worst_comp = max(worst_comp, abs(lhs - survival_weight(law, t1) * survival_weight(law, t2)))
    criterion(1, "decay identities", worst_identity <= 1e-14 and worst_comp <= 1e-12,
              f"max |e^-lambda - (1-P)| = {worst_identity:.2e} <= 1e-14, "
              f"max composition error = {worst_comp:.2e} <= 1e-12")


def _oracle_case(seed):
    rng = Lcg64(seed)
    choice = seed % 3
    if choice == 0:
        proc = TrendingWalk(0.002 * (rng.uniform() - 0.5), 0.01 + 0.03 * rng.uniform())
    elif choice == 1:
        proc = SidewaysChannel(10.0, 12.0, 0.1 + 0.8 * rng.uniform())
    else:
        proc = BimodalAccumulation((10.0, 14.0))
    series = generate_series(SyntheticSpec(60 + seed, proc, seed=seed))
    mode = ("close", "uniform", "gauss")[(seed // 3) % 3]
    law = (
        ConstantExponential(0.2 * rng.uniform()),
        GaussianHolding(1 + 15 * rng.uniform()),
        VolatilityLinked(0.01 * rng.uniform(), 0.001 * rng.uniform(), 10),
    )[(seed // 9) % 3]
    pad = 0.1 * (series.highs.max() - series.lows.min())
    # grids that clip the data on one side are part of the mix
    p_min = series.lows.min() + (pad if seed % 5 == 0 else -pad)
    grid = build_price_grid(p_min, series.highs.max() + pad, 50 + seed)
    return series, grid, law, mode


def test_2_oracle_equivalence(criterion):
    worst = 0.0
    for seed in range(50):
        series, grid, law, mode = _oracle_case(seed)
        fast = accumulate_held_shares(series, grid, law, mode)
        slow = brute_force_held_shares(series, grid, law, mode)
        assert fast.horizon == slow.horizon
        scale = np.maximum(np.abs(slow.n), np.finfo(float).tiny)
        nonzero = (fast.n != 0) | (slow.n != 0)
        if nonzero.any():
            worst = max(worst, float(np.max(np.abs(fast.n - slow.n)[nonzero] / scale[nonzero])))
    criterion(2, "held-shares oracle equivalence", worst <= 1e-12,
              f"50 series, max relative error per bin = {worst:.2e} <= 1e-12")


def test_3_flat_well_spectrum(criterion):
    params = ModelParams()
    sol = solve_well(flat(1000), params, 5)
    e1_err = abs(sol.energies[0] / analytic_flat_well_energy(1, 1.0, params) - 1)
    ratio_err = max(abs(sol.energies[n - 1] / sol.energies[0] / n ** 2 - 1) for n in range(1, 6))
    exact = analytic_flat_well_energy(1, 1.0, params)
    errs = [abs(solve_well(flat(k), params, 1).energies[0] - exact) for k in (250, 500, 1000)]
    orders = [math.log2(errs[0] / errs[1]), math.log2(errs[1] / errs[2])]
    ok = e1_err <= 0.005 and ratio_err <= 0.005 and all(abs(o - 2) <= 0.1 for o in orders)
    criterion(3, "flat-well spectrum", ok,
              f"E1 rel err {e1_err:.2e}, max E_n/E_1 vs n^2 rel err {ratio_err:.2e} (both <= 5e-3), "
              f"observed orders {orders[0]:.3f}, {orders[1]:.3f} (~2)")


def test_4_normalization_orthogonality(criterion):
    rng = Lcg64(4)
    worst_norm = worst_overlap = worst_density = 0.0
    for case in range(20):
        k = 50 + int(300 * rng.uniform())
        values = np.array([rng.uniform() for _ in range(k)])
        p_min = 5 + 10 * rng.uniform()
        pot = normalized_potential(build_price_grid(p_min, p_min + 1 + 4 * rng.uniform(), k), values)
        params = ModelParams(0.5 + rng.uniform(), 0.5 + rng.uniform(), 50 * rng.uniform())
        sol = solve_well(pot, params, 6, "node" if case % 4 == 0 else "face")
        gram = sol.states @ sol.states.T * pot.grid.bin_width
        worst_norm = max(worst_norm, float(np.max(np.abs(np.diag(gram) - 1))))
        worst_overlap = max(worst_overlap, float(np.max(np.abs(gram - np.diag(np.diag(gram))))))
        for dens in (forecast_density(sol), forecast_density(sol, "boltzmann", 0.1 + 100 * rng.uniform())):
            worst_density = max(worst_density, abs(float(dens.mass.sum()) - 1))
    ok = worst_norm <= 1e-10 and worst_overlap <= 1e-8 and worst_density <= 1e-10
    criterion(4, "normalization and orthogonality", ok,
              f"norm err {worst_norm:.2e} <= 1e-10, overlap {worst_overlap:.2e} <= 1e-8, "
              f"density sum err {worst_density:.2e} <= 1e-10")


def test_5_tunneling_oracle(criterion):
    worst_t = worst_flux = 0.0
    for i in range(20):
        v0 = 2.0 + 38.0 * ((7 * i) % 20) / 19
        width = 0.3 + 1.7 * ((3 * i) % 20) / 19
        ratio = 0.2 + 0.7 * i / 19
        slabs, pad = 40, 10
        v = np.zeros(slabs + 2 * pad)
        v[pad:pad + slabs] = 1.0
        h = width / slabs
        pot = normalized_potential(build_price_grid(0, v.size * h, v.size), v)
        params = ModelParams(potential_scale=v0)
        r = transmission_reflection(pot, params, ratio * v0, (pad - 3, pad + slabs + 3))
        expected = analytic_rectangular_barrier_T(ratio * v0, v0, width, params)
        worst_t = max(worst_t, abs(r.transmission / expected - 1))
        worst_flux = max(worst_flux, abs(r.transmission + r.reflection - 1))
    criterion(5, "tunneling oracle", worst_t <= 0.01 and worst_flux <= 1e-8,
              f"20 points, E/V0 in [0.2, 0.9]: max T rel err {worst_t:.2e} <= 1e-2, "
              f"max |T+R-1| {worst_flux:.2e} <= 1e-8")


def test_6_barrier_detection(criterion, tmp_path):
    peaks = (10.0, 14.0)
    misses = []
    for seed in range(10):
        out = tmp_path / str(seed)
        assert main(["synth", "--seed", str(seed), "--peaks", "10,14", "--out", str(out)]) == 0
        src = str(out / "synthetic.csv")
        common = ["--input", src, "--free-float", "2e7", "--intraday", "gauss", "--out", str(out)]
        assert main(["ingest", *common]) == 0
        assert main(["potential", *common, "--format", "json"]) == 0
        assert main(["analyze", "barriers", "--potential", str(out / "potential.json"),
                     "--format", "json", "--out", str(out)]) == 0
        grid = json.loads((out / "potential.json").read_text())["grid"]
        bin_width = (grid["p_max"] - grid["p_min"]) / grid["k"]
        levels = [lvl["price"] for lvl in json.loads((out / "barriers.json").read_text())["levels"]]
        ok = len(levels) == 2 and all(abs(a - b) <= bin_width for a, b in zip(sorted(levels), peaks))
        if not ok:
            misses.append((seed, levels))
    criterion(6, "barrier detection", not misses,
              f"10 seeds, exactly two levels within one bin of 10 and 14; misses: {misses or 'none'}")


def test_7_breakout(criterion):
    g = build_price_grid(0, 1, 201)
    x = g.centers
    mass = np.exp(-((x - 0.5) / 0.15) ** 2)
    mass = (mass + mass[::-1]) / 2
    sym = ForecastDensity(g, mass / mass.sum())
    lo, hi = 60, 140
    chan = BarrierSet((BarrierLevel(x[lo], 1.0, lo), BarrierLevel(x[hi], 1.0, hi)), 0.5)
    p_up, p_down, _ = breakout_direction(sym, chan)
    asym = abs(p_up - p_down)

    k = 1000
    fg = build_price_grid(0, 1, k)
    dens = forecast_density(solve_well(flat(k)))
    lo, hi = k // 4, 3 * k // 4
    fchan = BarrierSet((BarrierLevel(fg.centers[lo], 1.0, lo), BarrierLevel(fg.centers[hi], 1.0, hi)), 0.5)
    f_up, f_down, _ = breakout_direction(dens, fchan)

    def sine_sq(t):
        return 2 * math.sin(math.pi * t) ** 2

    tail_err = max(abs(f_down - quad(sine_sq, 0, fg.edges[lo])[0]),
                   abs(f_up - quad(sine_sq, fg.edges[hi + 1], 1)[0]))
    criterion(7, "breakout symmetry", asym <= 1e-10 and tail_err <= 1e-6,
              f"|p_up - p_down| = {asym:.2e} <= 1e-10, flat-well tail err {tail_err:.2e} <= 1e-6")


def test_8_migration_direction(criterion):
    rng = Lcg64(8)
    wrong = 0
    identity_ok = True
    for _ in range(100):
        k = 60 + int(200 * rng.uniform())
        g = build_price_grid(0, 1, k)
        center = 0.15 + 0.7 * rng.uniform()
        width = 0.02 + 0.1 * rng.uniform()
        pot = normalized_potential(g, np.exp(-((g.centers - center) / width) ** 2))
        params = ModelParams(potential_scale=1 + 100 * rng.uniform())
        dens = forecast_density(solve_well(pot, params))
        build, decay = 0.01 + 0.99 * rng.uniform(), 0.99 * rng.uniform()
        before = center_of_mass(g, pot.v)
        after = center_of_mass(g, trend_migration_step(pot, dens, build, decay).v)
        target = center_of_mass(g, dens.mass)
        # strictly toward the target without overshooting it
        if not (abs(after - target) < abs(before - target) and (after - before) * (target - before) > 0):
            wrong += 1
        identity_ok &= np.array_equal(trend_migration_step(pot, dens, 0.0, 0.0).v, pot.v)
    criterion(8, "migration direction", wrong == 0 and identity_ok,
              f"{100 - wrong}/100 configurations move toward the density, zero rates identity: {identity_ok}")


def _cli_runs(base, fmt):
    synth = base / "synth"
    data = synth / "synthetic.csv"
    pot_src = synth / "peak.csv"
    runs = [["synth", "--seed", "9", "--days", "150"]]
    market = ["--input", str(data), "--free-float", "2e7", "--intraday", "gauss"]
    runs += [["ingest", *market], ["potential", *market],
             ["forecast", *market, "--states", "4", "--forecast", "boltzmann", "--temperature", "20"]]
    pot = ["--potential", str(pot_src), "--potential-scale", "200"]
    runs += [["analyze", "barriers", *market], ["analyze", "breakout", *market, "--potential-scale", "200"],
             ["analyze", "tunnel", *pot, "--e-min", "1", "--e-max", "300", "--e-steps", "30"],
             ["analyze", "migrate", *pot, "--steps", "5"]]
    return [r + ["--format", fmt] for r in runs]


def _run_all(base, fmt):
    base.mkdir()
    for i, argv in enumerate(_cli_runs(base, fmt)):
        out = base / "synth" if argv[0] == "synth" else base / f"run{i}"
        assert main([*argv, "--out", str(out)]) == 0, argv
        if argv[0] == "synth":
            k = 100
            rows = ["price,value"] + [f"{(j + 0.5) / k!r},{math.exp(-((j - 40) / 6) ** 2)!r}" for j in range(k)]
            (out / "peak.csv").write_text("\n".join(rows) + "\n")
    return {p.relative_to(base): p.read_bytes() for p in sorted(base.rglob("*")) if p.is_file()}


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_9_determinism(criterion, tmp_path, fmt):
    first = _run_all(tmp_path / "a", fmt)
    second = _run_all(tmp_path / "b", fmt)
    differ = sorted(str(p) for p in first if first[p] != second.get(p))
    commands = {argv[0] if argv[0] != "analyze" else f"analyze {argv[1]}" for argv in _cli_runs(tmp_path, fmt)}
    ok = first.keys() == second.keys() and not differ and len(first) > len(commands)
    criterion(9, f"determinism ({fmt} outputs)", ok,
              f"{len(commands)} commands, {len(first)} files byte-identical; differing: {differ or 'none'}")
