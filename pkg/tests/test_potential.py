import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from quantwell.decay import ConstantExponential, GaussianHolding
from quantwell.exceptions import ValidationError
from quantwell.potential import (
    HeldSharesProfile,
    accumulate_held_shares,
    build_price_grid,
    distribute_intraday_volume,
    normalized_potential,
    potential_from_held_shares,
)
from quantwell.synthetic import SyntheticSpec, TrendingWalk, generate_series

from conftest import bar, flat_bar, series_from


def test_grid_examples():
    g = build_price_grid(0, 10, 5)
    assert g.eps == 1
    np.testing.assert_array_equal(g.centers, [1, 3, 5, 7, 9])
    g = build_price_grid(2, 6, 2)
    assert g.eps == 1
    np.testing.assert_array_equal(g.centers, [3, 5])
    with pytest.raises(ValidationError):
        build_price_grid(3, 3, 4)
    with pytest.raises(ValidationError):
        build_price_grid(0, 1, 1)


def test_bin_assignment_half_open():
    g = build_price_grid(0, 10, 5)
    assert g.bin_index(0) == 0
    assert g.bin_index(2) == 1
    assert g.bin_index(1.999) == 0
    assert g.bin_index(10) == 4
    assert g.bin_index(10.01) is None
    assert g.bin_index(-0.01) is None


@pytest.mark.parametrize("mode", ["close", "uniform", "gauss"])
def test_point_mass_day(mode):
    g = build_price_grid(0, 10, 5)
    out = distribute_intraday_volume(flat_bar(0, 5.0, 100), g, mode)
    np.testing.assert_array_equal(out, [0, 0, 100, 0, 0])


def test_uniform_spanning_four_bins():
    g = build_price_grid(0, 8, 4)
    out = distribute_intraday_volume(bar(0, 4, 8, 0, 4, 100), g, "uniform")
    np.testing.assert_allclose(out, [25, 25, 25, 25], rtol=1e-15)


def test_close_point_mode():
    g = build_price_grid(0, 10, 5)
    out = distribute_intraday_volume(bar(0, 3, 8, 1, 7.5, 40), g, "close")
    np.testing.assert_array_equal(out, [0, 0, 0, 40, 0])


@pytest.mark.parametrize("close", [9.4, 10.0, 10.6, 11.0])
def test_truncated_gaussian_matches_quadrature(close):
    g = build_price_grid(8.9, 11.5, 26)
    low, high = 9.0, 11.0
    b = bar(0, low, high, low, min(close, high), 100)
    out = distribute_intraday_volume(b, g, "gauss")
    mu, sd = b.close, (high - low) / 4

    def pdf(x):
        return math.exp(-0.5 * ((x - mu) / sd) ** 2)

    norm = quad(pdf, low, high, epsabs=0, epsrel=1e-13, points=[mu])[0]
    edges = g.edges
    for j in range(g.k):
        a, c = max(edges[j], low), min(edges[j + 1], high)
        expected = 0.0 if c <= a else 100 * quad(pdf, a, c, epsabs=0, epsrel=1e-13)[0] / norm
        assert out[j] == pytest.approx(expected, rel=1e-9, abs=1e-300)


def test_volume_outside_grid_dropped():
    g = build_price_grid(0, 4, 4)
    out = distribute_intraday_volume(bar(0, 3, 6, 2, 5, 100), g, "uniform")
    assert out.sum() == pytest.approx(50)


def test_two_day_accumulation():
    series = series_from([flat_bar(0, 5, 100), flat_bar(1, 5, 60)], 1e9)
    g = build_price_grid(0, 10, 5)
    prof = accumulate_held_shares(series, g, ConstantExponential(math.log(2)), "close", horizon=1)
    assert prof.n[2] == pytest.approx(110, rel=1e-15)
    assert prof.n.sum() == pytest.approx(110, rel=1e-15)


def test_single_day_accumulation():
    b = bar(0, 5, 6, 4, 5.5, 300)
    g = build_price_grid(3, 7, 8)
    prof = accumulate_held_shares(series_from([b], 100), g, ConstantExponential(0.4), "uniform")
    np.testing.assert_array_equal(prof.n, distribute_intraday_volume(b, g, "uniform"))


def _double_loop(series, grid, rate, horizon):
    # direct evaluation with per-bin overlap arithmetic written out longhand
    k = grid.k
    w = (grid.p_max - grid.p_min) / k
    n = [0.0] * k
    last = len(series.bars) - 1
    for i in range(last - horizon, last + 1):
        b = series.bars[i]
        for j in range(k):
            lo, hi = grid.p_min + j * w, grid.p_min + (j + 1) * w
            overlap = max(0.0, min(hi, b.high) - max(lo, b.low))
            n[j] += b.volume * overlap / (b.high - b.low) * math.exp(-rate * (last - i))
    return np.array(n)


def test_ten_day_uniform_matches_double_loop():
    series = generate_series(SyntheticSpec(10, TrendingWalk(0.002, 0.02), seed=11))
    g = build_price_grid(series.lows.min() - 0.05, series.highs.max() + 0.05, 40)
    prof = accumulate_held_shares(series, g, ConstantExponential(0.1), "uniform", horizon=9)
    expected = _double_loop(series, g, 0.1, 9)
    nz = expected > 0
    np.testing.assert_allclose(prof.n[nz], expected[nz], rtol=1e-12)
    assert np.all(prof.n[~nz] <= 1e-9 * expected.max())


def test_disjoint_grid():
    series = series_from([bar(0, 5, 6, 4, 5.5, 300)], 100)
    with pytest.raises(ValidationError, match="disjoint"):
        accumulate_held_shares(series, build_price_grid(10, 20, 4), ConstantExponential(0.1), "uniform")


def test_potential_as_written_single_bin():
    g = build_price_grid(0, 6, 3)
    prof = HeldSharesProfile(g, np.array([0.0, 4.0, 0.0]), horizon=1)
    pot = potential_from_held_shares(prof, "written")
    np.testing.assert_array_equal(pot.v, [0, 1, 0])
    assert pot.normalization == 12


def test_potential_pure_count_flat():
    g = build_price_grid(0, 6, 3)
    pot = potential_from_held_shares(HeldSharesProfile(g, np.full(3, 7.0), 1), "count")
    np.testing.assert_array_equal(pot.v, [1, 1, 1])


def test_potential_zero_profile():
    g = build_price_grid(0, 6, 3)
    pot = potential_from_held_shares(HeldSharesProfile(g, np.zeros(3), 1))
    np.testing.assert_array_equal(pot.v, 0)
    assert pot.normalization == 0


def test_wider_window_sums_neighbours():
    g = build_price_grid(0, 10, 5)
    prof = HeldSharesProfile(g, np.array([1.0, 2.0, 3.0, 4.0, 5.0]), 1)
    pot = potential_from_held_shares(prof, "count", window_radius=3)
    raw = np.array([3.0, 6.0, 9.0, 12.0, 9.0])
    np.testing.assert_allclose(pot.v, raw / raw.max())


@pytest.mark.parametrize("smoothing", ["count", "written"])
def test_bimodal_argmax_preserved(smoothing):
    g = build_price_grid(0, 20, 40)
    x = g.centers
    # peaks on bin centers; a peak between two centers is a tie either mode may break
    n = 3 * np.exp(-((x - 5.25) / 1.2) ** 2) + 2 * np.exp(-((x - 14.25) / 1.2) ** 2)
    pot = potential_from_held_shares(HeldSharesProfile(g, n, 1), smoothing)
    left, right = slice(0, 20), slice(20, 40)
    assert np.argmax(pot.v[left]) == np.argmax(n[left])
    assert np.argmax(pot.v[right]) == np.argmax(n[right])


def test_normalized_potential_rejects_negative():
    with pytest.raises(ValidationError):
        normalized_potential(build_price_grid(0, 1, 2), [1.0, -1.0])


spec_seeds = st.integers(min_value=0, max_value=2**32)


@settings(max_examples=30, deadline=None)
@given(spec_seeds, st.sampled_from(["close", "uniform"]))
def test_volume_conservation(seed, mode):
    series = generate_series(SyntheticSpec(5, TrendingWalk(0.0, 0.03), seed=seed))
    g = build_price_grid(series.lows.min(), series.highs.max(), 30)
    for b in series.bars:
        out = distribute_intraday_volume(b, g, mode)
        assert out.sum() == pytest.approx(b.volume, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(spec_seeds, st.floats(min_value=0, max_value=2), st.floats(min_value=0, max_value=2))
def test_monotone_in_lambda(seed, l1, l2):
    series = generate_series(SyntheticSpec(15, TrendingWalk(0.001, 0.02), seed=seed))
    g = build_price_grid(series.lows.min(), series.highs.max(), 25)
    lo, hi = sorted((l1, l2))
    n_lo = accumulate_held_shares(series, g, ConstantExponential(lo), "uniform", 14).n
    n_hi = accumulate_held_shares(series, g, ConstantExponential(hi), "uniform", 14).n
    assert np.all(n_hi <= n_lo * (1 + 1e-12) + 1e-12)


@settings(max_examples=20, deadline=None)
@given(spec_seeds)
def test_grid_refinement(seed):
    series = generate_series(SyntheticSpec(12, TrendingWalk(0.0, 0.02), seed=seed))
    lo, hi = series.lows.min(), series.highs.max()
    coarse = build_price_grid(lo, hi, 20)
    fine = build_price_grid(lo, hi, 40)
    law = GaussianHolding(4.0)
    n_c = accumulate_held_shares(series, coarse, law, "uniform", 11).n
    n_f = accumulate_held_shares(series, fine, law, "uniform", 11).n
    np.testing.assert_allclose(n_f[0::2] + n_f[1::2], n_c, rtol=1e-9, atol=1e-9 * n_c.max())


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(min_value=0, max_value=1e6), min_size=2, max_size=30))
def test_nonzero_potential_has_unit_max(values):
    g = build_price_grid(0, 1, len(values))
    pot = potential_from_held_shares(HeldSharesProfile(g, np.array(values), 1))
    assert np.all(pot.v >= 0)
    if max(values) > 0:
        assert pot.v.max() == 1.0
