import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpseg.core import (
    ChangePointSet,
    CoefficientPath,
    DimensionError,
    Moments,
    RegressionSeries,
    SegmentInterval,
    TilingError,
    change_count,
    coefficient_mse,
    path_from_changes,
    piecewise_path,
    segment_values,
)


class TestRegressionSeries:
    def test_shapes(self):
        data = RegressionSeries(np.zeros((5, 3)), np.zeros(5))
        assert (data.n, data.p) == (5, 3)

    def test_row_mismatch(self):
        with pytest.raises(DimensionError):
            RegressionSeries(np.zeros((5, 3)), np.zeros(4))

    def test_too_short(self):
        with pytest.raises(ValueError):
            RegressionSeries(np.zeros((1, 3)), np.zeros(1))

    @pytest.mark.parametrize("bad", [np.nan, np.inf])
    def test_non_finite(self, bad):
        x = np.zeros((4, 2))
        x[2, 1] = bad
        with pytest.raises(ValueError):
            RegressionSeries(x, np.zeros(4))

    def test_immutable(self):
        data = RegressionSeries(np.zeros((3, 1)), np.zeros(3))
        with pytest.raises(ValueError):
            data.y[0] = 1.0


class TestChangeCount:
    def test_constant(self):
        assert change_count(CoefficientPath(np.ones((3, 17)))) == 0

    def test_one_change(self):
        assert change_count(CoefficientPath(np.array([[1.0, 1.0, 2.0, 2.0]]))) == 1

    def test_alternating(self):
        assert change_count(CoefficientPath(np.array([[1.0, 2.0, 1.0, 2.0]]))) == 3

    def test_change_points_match(self):
        path = CoefficientPath(np.array([[0.0, 0.0, 1.0, 1.0, 3.0]]))
        assert path.change_points().points == (2, 4)

    @given(st.lists(st.integers(-2, 2), min_size=2, max_size=30))
    def test_bounded(self, vals):
        c = change_count(CoefficientPath(np.array([vals], dtype=float)))
        assert 0 <= c <= len(vals) - 1
        assert c == sum(a != b for a, b in zip(vals, vals[1:]))


class TestMSE:
    def test_equal(self):
        b = np.arange(6.0).reshape(2, 3)
        assert coefficient_mse(CoefficientPath(b), CoefficientPath(b)) == 0.0

    def test_scalar(self):
        assert coefficient_mse(CoefficientPath(np.ones((1, 2))), CoefficientPath(np.zeros((1, 2)))) == 1.0

    def test_two_features(self):
        est = CoefficientPath(np.array([[1.0, 0.0], [0.0, 2.0]]))
        assert coefficient_mse(est, CoefficientPath(np.zeros((2, 2)))) == pytest.approx(2.5)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            coefficient_mse(CoefficientPath(np.ones((1, 2))), CoefficientPath(np.ones((2, 2))))


class TestPiecewisePath:
    def test_single_tile(self):
        path = piecewise_path([(SegmentInterval(0, 6), [1.0, -2.0])])
        assert change_count(path) == 0
        np.testing.assert_array_equal(path.beta[:, 3], [1.0, -2.0])

    def test_two_tiles(self):
        path = piecewise_path([(SegmentInterval(0, 2), [1.0]), (SegmentInterval(2, 4), [3.0])])
        assert path.change_points().points == (2,)

    def test_equal_neighbours_collapse(self):
        tiles = [(SegmentInterval(0, 2), [1.0]), (SegmentInterval(2, 4), [1.0]), (SegmentInterval(4, 6), [5.0])]
        path = piecewise_path(tiles)
        assert change_count(path) == 1
        assert path.change_points().points == (4,)

    def test_unsorted_tiles(self):
        tiles = [(SegmentInterval(2, 4), [3.0]), (SegmentInterval(0, 2), [1.0])]
        np.testing.assert_array_equal(piecewise_path(tiles).beta[0], [1, 1, 3, 3])

    def test_gap(self):
        with pytest.raises(TilingError, match="gap"):
            piecewise_path([(SegmentInterval(0, 2), [1.0]), (SegmentInterval(3, 4), [3.0])])

    def test_overlap(self):
        with pytest.raises(TilingError, match="overlap"):
            piecewise_path([(SegmentInterval(0, 3), [1.0]), (SegmentInterval(2, 4), [3.0])])

    def test_not_starting_at_zero(self):
        with pytest.raises(TilingError):
            piecewise_path([(SegmentInterval(1, 4), [1.0])])

    @given(st.lists(st.integers(1, 5), min_size=1, max_size=6), st.data())
    def test_roundtrip_segments(self, lengths, data):
        bounds = np.concatenate([[0], np.cumsum(lengths)])
        vals = []
        for _ in lengths:
            v = data.draw(st.integers(-3, 3))
            while vals and v == vals[-1]:
                v += 7
            vals.append(v)
        tiles = [(SegmentInterval(int(a), int(b)), [float(v)]) for a, b, v in zip(bounds, bounds[1:], vals)]
        path = piecewise_path(tiles)
        assert path.change_points().points == tuple(int(b) for b in bounds[1:-1])
        assert [float(v[0]) for v in segment_values(path)] == [float(v) for v in vals]


class TestChangePointSet:
    def test_validation(self):
        with pytest.raises(ValueError):
            ChangePointSet((5, 3), 10)
        with pytest.raises(ValueError):
            ChangePointSet((0,), 10)
        with pytest.raises(ValueError):
            ChangePointSet((10,), 10)

    def test_from_unsorted(self):
        cps = ChangePointSet.from_unsorted([7, 3, 7], 10)
        assert cps.points == (3, 7)
        assert cps.k == 2

    def test_segments(self):
        segs = ChangePointSet((3, 7), 10).segments()
        assert segs == [SegmentInterval(0, 3), SegmentInterval(3, 7), SegmentInterval(7, 10)]

    def test_path_from_changes(self):
        path = path_from_changes(ChangePointSet((2,), 4), [[1.0], [2.0]])
        np.testing.assert_array_equal(path.beta[0], [1, 1, 2, 2])
        with pytest.raises(DimensionError):
            path_from_changes(ChangePointSet((2,), 4), [[1.0]])


def test_segment_interval():
    assert len(SegmentInterval(2, 7)) == 5
    with pytest.raises(ValueError):
        SegmentInterval(3, 3)
    with pytest.raises(ValueError):
        SegmentInterval(-1, 3)


def test_moments_match_direct_sums(rng):
    x = rng.standard_normal((9, 3))
    y = rng.standard_normal(9)
    mom = Moments.from_series(RegressionSeries(x, y))
    s, e = 2, 7
    np.testing.assert_allclose(mom.xx[e] - mom.xx[s], x[s:e].T @ x[s:e], atol=1e-12)
    np.testing.assert_allclose(mom.xy[e] - mom.xy[s], x[s:e].T @ y[s:e], atol=1e-12)
    assert mom.yy[e] - mom.yy[s] == pytest.approx(y[s:e] @ y[s:e])
    assert (mom.n, mom.p) == (9, 3)
