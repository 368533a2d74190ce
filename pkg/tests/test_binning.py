import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metaorders.binning import bin_with_edges, linear_bin, log_bin
from metaorders.errors import DataError, ParameterError


class TestLogBin:
    def test_single_point_single_bin(self):
        curve = log_bin([1.0], [5.0], n_bins=1)
        assert curve.count.tolist() == [1]
        assert curve.mean_y.tolist() == [5.0]

    def test_two_close_points_average(self):
        curve = log_bin([1.0, 1.0001], [2.0, 4.0], n_bins=1)
        assert curve.mean_y.tolist() == [3.0]
        assert curve.count.tolist() == [2]

    def test_brute_force_bin_means(self):
        rng = np.random.Generator(np.random.Philox(11))
        x = 10.0 ** rng.uniform(-5, 0, size=1000)
        y = x.copy()
        curve = log_bin(x, y, n_bins=40)
        # independent oracle: per-point scan against the curve's own edges
        edges = curve.bin_edges
        for b in range(40):
            members = [
                yi
                for xi, yi in zip(x, y)
                if (edges[b] <= xi < edges[b + 1]) or (b == 39 and xi == edges[40])
            ]
            if members:
                assert curve.count[b] == len(members)
                assert curve.mean_y[b] == pytest.approx(sum(members) / len(members), rel=1e-12)
                assert min(members) <= curve.mean_y[b] <= max(members)
            else:
                assert curve.count[b] == 0
                assert np.isnan(curve.mean_y[b])
        assert curve.count.sum() == 1000

    def test_positive_x_required(self):
        with pytest.raises(DataError):
            log_bin([1.0, -2.0], [0.0, 0.0], n_bins=4)
        with pytest.raises(ParameterError):
            log_bin([1.0], [0.0], n_bins=0)

    def test_empty_input_empty_curve(self):
        curve = log_bin([], [], n_bins=10)
        assert curve.bin_centers.size == 0
        assert curve.count.size == 0

    def test_identical_x_degenerate_bin(self):
        curve = log_bin([2.0, 2.0, 2.0], [1.0, 2.0, 3.0], n_bins=7)
        assert curve.count.tolist() == [3]
        assert curve.mean_y.tolist() == [2.0]

    def test_endpoints_included(self):
        x = [1e-3, 1.0]
        curve = log_bin(x, [1.0, 2.0], n_bins=5)
        assert curve.count.sum() == 2
        assert curve.count[0] == 1 and curve.count[-1] == 1

    def test_stderr_definition(self):
        curve = log_bin([1.0, 1.01, 1.02], [1.0, 2.0, 3.0], n_bins=1)
        assert curve.stderr[0] == pytest.approx(np.std([1, 2, 3], ddof=1) / np.sqrt(3))


class TestLinearAndEdgeBinning:
    def test_linear_bin_centers(self):
        curve = linear_bin([0.1, 0.9], [1.0, 3.0], n_bins=2, lo=0.0, hi=1.0)
        assert curve.bin_centers.tolist() == [0.25, 0.75]
        assert curve.mean_y.tolist() == [1.0, 3.0]

    def test_bin_with_edges_top_inclusive(self):
        edges = np.array([1.0, 2.0, 4.0])
        curve = bin_with_edges([1.0, 2.0, 4.0], [1.0, 2.0, 3.0], edges)
        assert curve.count.tolist() == [1, 2]


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.floats(min_value=1e-6, max_value=1e6, allow_nan=False),
            st.floats(min_value=-1e3, max_value=1e3, allow_nan=False),
        ),
        min_size=1,
        max_size=200,
    ),
    st.integers(min_value=1, max_value=50),
)
def test_counts_partition_points(pairs, n_bins):
    x = [p[0] for p in pairs]
    y = [p[1] for p in pairs]
    curve = log_bin(x, y, n_bins=n_bins)
    assert curve.count.sum() == len(pairs)
    occupied = curve.count > 0
    assert np.all(np.isfinite(curve.mean_y[occupied]))
