import numpy as np
import pytest
from hypothesis import given, strategies as st

from phylink.errors import DimensionError, EmptyPilotSet, NegativeNoise
from phylink.grid import (
    Estimate,
    PilotMask,
    Region,
    distance_maps,
    interpolate_time,
    ls_estimate,
    make_pilot_mask,
    region_partition,
)


def brute_distances(mask, w=1.55):
    """Min over all pilot coordinates, axis by axis."""
    pts = np.argwhere(mask)
    ts, fs = set(pts[:, 0]), set(pts[:, 1])
    n_t, n_f = mask.shape
    dt = np.array([[min(abs(t - p) for p in ts) for _ in range(n_f)] for t in range(n_t)])
    df = np.array([[min(abs(f - p) for p in fs) for f in range(n_f)] for _ in range(n_t)])
    dt[mask] = 0
    df[mask] = 0
    return dt, df, df + w * dt


def test_default_mask_has_144_pilots(default_mask):
    assert default_mask.pilot_count == 144
    assert list(default_mask.pilot_symbols) == [1, 10]
    assert default_mask.mask[[1, 10]].all()


def test_single_re_grid():
    m = make_pilot_mask(1, 1, [0])
    assert m.mask.tolist() == [[True]]


@pytest.mark.parametrize("bad", [[], [14], [-1]])
def test_mask_rejects_bad_symbols(bad):
    with pytest.raises((EmptyPilotSet, IndexError)):
        make_pilot_mask(14, 72, bad)


def test_all_pilot_mask_has_zero_distances():
    d = distance_maps(PilotMask(np.ones((4, 5), bool)))
    assert not d.d_score.any() and not d.d_t.any() and not d.d_f.any()


def test_single_pilot_distance():
    m = np.zeros((4, 5), bool)
    m[0, 0] = True
    d = distance_maps(PilotMask(m))
    assert (d.d_t[2, 3], d.d_f[2, 3]) == (2, 3)
    assert d.d_score[2, 3] == pytest.approx(3 + 1.55 * 2)


def test_full_band_distance_matches_brute_force(default_mask):
    d = distance_maps(default_mask)
    dt, df, ds = brute_distances(default_mask.mask)
    np.testing.assert_array_equal(d.d_t, dt)
    np.testing.assert_array_equal(d.d_f, df)
    np.testing.assert_allclose(d.d_score, ds)
    assert d.d_score[5, 0] == pytest.approx(6.2)


@given(st.lists(st.tuples(st.integers(0, 7), st.integers(0, 9)), min_size=1, max_size=12))
def test_distance_bounds(points):
    m = np.zeros((8, 10), bool)
    for t, f in points:
        m[t, f] = True
    d = distance_maps(PilotMask(m))
    assert np.all(d.d_score >= d.d_f)
    assert np.all(d.d_score >= 1.55 * d.d_t - 1e-12)
    assert not d.d_score[m].any()
    _, _, ds = brute_distances(m)
    np.testing.assert_allclose(d.d_score, ds)


def _one_node(score, pilot=False):
    from phylink.grid import DistanceMaps

    # node of interest at (0, 0); (0, 1) is always a pilot
    arr = np.array([[score, 0.0]])
    return DistanceMaps(d_t=np.zeros((1, 2)), d_f=arr, d_score=arr), PilotMask(np.array([[pilot, True]]))


@pytest.mark.parametrize(
    "score, pilot, label",
    [(1.7, False, Region.NEAR), (0.0, True, Region.PILOT), (6.1, False, Region.FAR), (3.55, False, Region.MID), (1.71, False, Region.MID)],
)
def test_region_thresholds(score, pilot, label):
    d, m = _one_node(score, pilot)
    assert region_partition(d, m)[0, 0] == label


def test_regions_partition_grid(default_mask):
    labels = region_partition(distance_maps(default_mask), default_mask)
    counts = [(labels == r).sum() for r in Region]
    assert sum(counts) == labels.size
    assert counts[Region.PILOT] == 144


def test_noiseless_ls_exact_at_pilots(default_mask, rng):
    h = rng.standard_normal((2, 14, 72)) + 1j * rng.standard_normal((2, 14, 72))
    ls = ls_estimate(h, default_mask, 0.0, rng)
    np.testing.assert_array_equal(ls.h[:, default_mask.mask], h[:, default_mask.mask])
    assert not ls.var.any()


def test_noiseless_ls_is_reproducible(default_mask):
    h = np.ones((1, 14, 72), complex)
    a = ls_estimate(h, default_mask, 0.0, np.random.default_rng(3))
    b = ls_estimate(h, default_mask, 0.0, np.random.default_rng(3))
    np.testing.assert_array_equal(a.h, b.h)


def test_constant_channel_interpolates_to_constant(default_mask, rng):
    h = np.full((1, 14, 72), 0.3 - 0.7j)
    ls = ls_estimate(h, default_mask, 0.0, rng)
    np.testing.assert_allclose(ls.h, h, atol=1e-15)


def test_linear_interpolation_value(default_mask):
    vals = np.zeros((1, 14, 72), complex)
    vals[0, 1, 5] = 1.0
    vals[0, 10, 5] = 10.0
    out = interpolate_time(vals, default_mask)
    assert out[0, 4, 5] == pytest.approx(1 + (4 - 1) / 9 * 9)
    # held constant beyond the outer pilots
    assert out[0, 0, 5] == 1.0 and out[0, 13, 5] == 10.0


def test_ls_errors(default_mask, rng):
    with pytest.raises(NegativeNoise):
        ls_estimate(np.zeros((1, 14, 72)), default_mask, -1.0, rng)
    with pytest.raises(DimensionError):
        ls_estimate(np.zeros((1, 13, 72)), default_mask, 1.0, rng)
    with pytest.raises(DimensionError):
        Estimate(np.zeros((1, 2, 3)), np.zeros((1, 2, 2)))


def test_noise_variance(rng, default_mask):
    ls = ls_estimate(np.zeros((4, 14, 72)), default_mask, 0.5, rng)
    assert np.mean(np.abs(ls.h[:, default_mask.mask]) ** 2) == pytest.approx(0.5, rel=0.1)
