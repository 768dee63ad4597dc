import math

import mpmath
import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from firecover.fire import (
    FireFront,
    FireModelParams,
    Fronts,
    GridSpec,
    IncrementalRaster,
    NumericDomainError,
    WindParams,
    WindSample,
    advance,
    ellipse_offset,
    fire_region,
    intensity_at,
    length_to_breadth,
    prune,
    rasterize,
    sample_wind,
    spread_step,
)


def offset_oracle(R, U):
    # straight from the growth-ellipse relations, at 50 digits, ratio form for HB
    mpmath.mp.dps = 50
    R, U = mpmath.mpf(R), mpmath.mpf(U)
    LB = mpmath.mpf("0.936") * mpmath.exp(mpmath.mpf("0.2566") * U) + mpmath.mpf("0.461") * mpmath.exp(
        -mpmath.mpf("0.1548") * U) - mpmath.mpf("0.397")
    s = mpmath.sqrt(max(LB ** 2 - 1, 0))
    HB = (LB + s) / (LB - s)
    return LB, HB, (R - R / HB) / 2


def test_offset_zero_wind_exact():
    assert length_to_breadth(0.0) == 1.0
    assert ellipse_offset(1.0, 0.0) == 0.0
    assert ellipse_offset(3.7, 0.0) == 0.0


def test_offset_zero_rate():
    assert ellipse_offset(0.0, 7.0) == 0.0


def test_offset_reference_value():
    LB, HB, c = offset_oracle(1, 5)
    assert float(LB) == pytest.approx(3.192, abs=1e-3)
    assert float(HB) == pytest.approx(38.7, abs=0.05)
    assert float(c) == pytest.approx(0.487, abs=1e-3)
    assert ellipse_offset(1.0, 5.0) == pytest.approx(float(c), rel=1e-12, abs=1e-12)


@given(st.floats(0, 10), st.floats(0, 30))
@example(3.0, 9.678064866074774e-08)  # light wind: LB**2 - 1 cancels if formed naively
def test_offset_matches_oracle(R, U):
    assert ellipse_offset(R, U) == pytest.approx(float(offset_oracle(R, U)[2]), rel=1e-11, abs=1e-12)


@given(st.floats(0.01, 10), st.floats(0, 30), st.floats(0, 30))
def test_offset_monotone_in_wind_and_bounded(R, U1, U2):
    lo, hi = sorted((U1, U2))
    assert ellipse_offset(R, lo) <= ellipse_offset(R, hi) + 1e-15
    assert 0.0 <= ellipse_offset(R, hi) < R / 2


def test_offset_rejects_negative():
    with pytest.raises(NumericDomainError):
        ellipse_offset(-1.0, 1.0)
    with pytest.raises(NumericDomainError):
        ellipse_offset(1.0, -1.0)


def test_wind_degenerate():
    rng = np.random.default_rng(0)
    w = sample_wind(rng, WindParams(mu_speed=5, sigma_speed=0, mu_theta=math.pi / 8, sigma_theta=0))
    assert w.U == 5.0
    assert w.theta == pytest.approx(math.pi / 8, abs=1e-15)


def test_wind_deterministic():
    p = WindParams(mu_speed=5, sigma_speed=2, mu_theta=math.pi / 8, sigma_theta=1)
    a, b = np.random.default_rng(42), np.random.default_rng(42)
    assert [sample_wind(a, p) for _ in range(20)] == [sample_wind(b, p) for _ in range(20)]


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=50)
def test_wind_ranges(seed):
    w = sample_wind(np.random.default_rng(seed), WindParams(5, 2, math.pi / 8, 1))
    assert w.U >= 0
    assert 0 <= w.theta < 2 * math.pi


def test_advance_examples():
    np.testing.assert_allclose(advance(np.array([0.0, 0.0]), 1.0, 0.0, 1.0), [0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(advance(np.array([0.0, 0.0]), 2.0, math.pi / 2, 1.0), [2.0, 0.0], atol=1e-15)


@given(st.floats(0, 2 * math.pi), st.floats(0, 5), st.floats(-100, 100), st.floats(-100, 100))
def test_advance_distance(theta, c, x, y):
    out = advance(np.array([x, y]), c, theta, 1.0)
    assert math.hypot(out[0] - x, out[1] - y) == pytest.approx(c, abs=1e-9)


def small_params(**kw):
    grid = GridSpec(origin=(0.0, 0.0), cell_size=1.0, nx=64, ny=64)
    base = dict(lam=0.01, dt=1.0, ignition_threshold=0.01, grid=grid)
    base.update(kw)
    return FireModelParams(**base)


def test_zero_wind_keeps_positions():
    p = small_params()
    fr = Fronts.from_list([FireFront((10.5, 10.5), (2, 2), 0, 1.0), FireFront((30.2, 40.7), (2, 2), 0, 1.0)])
    out = spread_step(fr, WindSample(0.0, 1.0), 1, p)
    assert len(out) == 2
    np.testing.assert_array_equal(out.pos, fr.pos)
    np.testing.assert_array_equal(out.cursor, fr.cursor)


def test_spread_ignites_neighbour_cell_once():
    p = small_params()
    fr = Fronts.from_list([FireFront((10.5, 10.9), (2, 2), 0, 1.0)])
    wind = WindSample(5.0, 0.0)  # pushes +y, c ~ 0.487
    out = spread_step(fr, wind, 1, p)
    assert len(out) == 2
    assert out.birth_t.tolist() == [0, 1]
    assert p.grid.cell_of(out.pos[1:])[0].tolist() == [11]
    # original cursor stays clipped to its home cell
    assert out.cursor[0, 1] <= 11.0
    # a second step does not re-ignite the burned cell from the old front
    b = np.zeros(p.grid.shape, dtype=bool)
    b[10, 10] = b[11, 10] = True
    again = spread_step(out, wind, 2, p, b)
    cells = set(zip(*p.grid.cell_of(again.pos)))
    assert len(cells) == len(again)


def test_spread_budget():
    p = small_params(new_front_budget=1)
    fr = Fronts.from_list([FireFront((10.5, 10.9), (2, 2), 0, 1.0), FireFront((20.5, 20.9), (2, 2), 0, 1.0)])
    out = spread_step(fr, WindSample(5.0, 0.0), 1, p)
    assert len(out) == 3
    np.testing.assert_allclose(out.pos[2, 0], 10.5)


def test_prune_drops_old_fronts():
    p = small_params(prune_ratio=math.exp(-1.0))
    fr = Fronts.from_list([FireFront((1, 1), (1, 1), 0, 1.0), FireFront((2, 2), (1, 1), 50, 1.0)])
    assert len(prune(fr, 100, p)) == 2
    assert len(prune(fr, 101, p)) == 1


def test_intensity_examples():
    f = [FireFront((3.0, 4.0), (1.0, 1.0), 0, 0.2)]
    assert intensity_at((3.0, 4.0), [], 0, 0.01) == 0.0
    assert intensity_at((3.0, 4.0), f, 0, 0.01) == pytest.approx(1 / (2 * math.pi), rel=1e-15)
    assert intensity_at((3.0, 4.0), f, 100, 0.01) == pytest.approx(math.exp(-1) / (2 * math.pi), rel=1e-14)
    assert intensity_at((3.0, 4.0), f, 100, 0.01) == pytest.approx(0.05855, abs=1e-5)


def test_rasterize_empty_and_peak():
    p = small_params()
    assert not rasterize([], 5, p).cells.any()
    f = [FireFront((10.5, 20.5), (1.0, 1.0), 0, 0.2)]
    g = rasterize(f, 100, p)
    assert g.cells[20, 10] == pytest.approx(math.exp(-1) / (2 * math.pi), rel=1e-13)


@given(st.lists(st.tuples(st.floats(0, 64), st.floats(0, 64), st.floats(1, 6), st.floats(1, 6),
                          st.integers(0, 20)), min_size=1, max_size=6), st.integers(20, 60))
@settings(max_examples=30, deadline=None)
def test_rasterize_matches_pointwise(sources, t):
    p = small_params(grid=GridSpec((0.0, 0.0), 4.0, 16, 16), source_strength=3.0)
    fr = [FireFront((x, y), (sx, sy), b, 0.2) for x, y, sx, sy, b in sources]
    g = rasterize(fr, t, p)
    xs, ys = p.grid.x_centers(), p.grid.y_centers()
    for r in (0, 7, 15):
        for c in (0, 9, 15):
            want = intensity_at((xs[c], ys[r]), fr, t, p.lam, p.source_strength)
            assert g.cells[r, c] == pytest.approx(want, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("sigma_cells", [3, 4, 7])
def test_grid_integrates_to_decay(sigma_cells):
    p = small_params(grid=GridSpec((0.0, 0.0), 2.0, 100, 100), source_strength=5.0)
    s = 2.0 * sigma_cells
    g = rasterize([FireFront((101.3, 98.6), (s, s), 10, 0.2)], 60, p)
    total = g.cells.sum() * p.grid.cell_area
    assert total == pytest.approx(5.0 * math.exp(-0.5), rel=0.02)


def test_constant_without_wind_or_decay():
    p = small_params(lam=0.0)
    fr = Fronts.from_list([FireFront((20.5, 20.5), (3, 3), 0, 1.0)])
    first = rasterize(fr, 0, p).cells
    for t in range(1, 20):
        fr = spread_step(fr, WindSample(0.0, 0.3), t, p)
    np.testing.assert_array_equal(rasterize(fr, 19, p).cells, first)


def test_incremental_raster_tracks_reference():
    p = small_params(grid=GridSpec((0.0, 0.0), 2.0, 40, 40), lam=0.05, prune_ratio=1e-3, source_strength=50.0)
    fr = Fronts.from_list([FireFront((40.0, 40.0), (4, 4), 0, 2.0)])
    raster = IncrementalRaster(p, fr, 0)
    rng = np.random.default_rng(3)
    burned = np.zeros(p.grid.shape, dtype=bool)
    burned[p.grid.cell_of(fr.pos)] = True
    for t in range(1, 400):
        n_old = len(fr)
        grown = spread_step(fr, sample_wind(rng, WindParams(5, 2, 0.4, 1)), t, p, burned)
        born = np.zeros(len(grown), dtype=bool)
        born[n_old:] = True
        keep = np.ones(len(grown), dtype=bool)
        keep &= (t - grown.birth_t) <= -math.log(p.prune_ratio) / p.lam
        raster.add(grown.select(born & keep))
        raster.remove(grown.select(~born & ~keep))
        fr = grown.select(keep)
        if t % 50 == 0:
            ref = rasterize(fr, t, p).cells
            np.testing.assert_allclose(raster.grid_at(t).cells, ref, rtol=1e-8, atol=1e-9 * ref.max())


def test_fire_region():
    p = small_params()
    g = rasterize([FireFront((30, 30), (3, 3), 0, 0.2)], 0, p)
    assert not fire_region(g, 1e9).any()
    np.testing.assert_array_equal(fire_region(g, np.nextafter(0, 1)), g.cells > 0)
