import numpy as np
import pytest

from conftest import packet_array
from mcsadapt.errors import ConfigError, DataError
from mcsadapt.stats import (
    PerCell,
    distance_bin_edges,
    gaussian_kde,
    kde_rsrp,
    per_by_distance,
    per_by_mcs_area,
)


class TestKde:
    def test_peak_at_single_value_cluster(self):
        values = np.array([5.0, 5.0, 5.0, 5.0])
        grid, density = gaussian_kde(values, bandwidth=0.1)
        assert grid[np.argmax(density)] == pytest.approx(5.0, abs=0.05)

    def test_trapezoid_integral_is_one(self):
        rng = np.random.default_rng(0)
        values = rng.normal(size=500)
        grid, density = gaussian_kde(values)
        assert np.trapezoid(density, grid) == pytest.approx(1.0, abs=1e-2)

    def test_standard_normal_density_at_zero(self):
        rng = np.random.default_rng(1)
        values = rng.normal(size=10_000)
        grid, density = gaussian_kde(values)
        at_zero = density[np.argmin(np.abs(grid))]
        assert at_zero == pytest.approx(0.3989, abs=0.03)

    def test_scott_bandwidth_default(self):
        rng = np.random.default_rng(2)
        values = rng.normal(size=100)
        # same curve when passing Scott's bandwidth explicitly
        sigma = values.std(ddof=1)
        g1, d1 = gaussian_kde(values)
        g2, d2 = gaussian_kde(values, bandwidth=sigma * 100 ** (-1 / 5))
        assert np.array_equal(g1, g2) and np.array_equal(d1, d2)

    def test_constant_data_needs_explicit_bandwidth(self):
        with pytest.raises(DataError):
            gaussian_kde(np.array([1.0, 1.0, 1.0]))

    def test_kde_rsrp_skips_thin_areas_and_uses_measured_only(self):
        good = packet_array([(1000 + k, k, True, {"rsrp": -90.0 + k}) for k in range(20)])
        thin = packet_array([(2000, 0, True)])
        ghost = packet_array([(3000 + k, k, False, {"rsrp": -50.0}) for k in range(20)])
        ghost.interpolated[:] = True
        curves = kde_rsrp({"park": good, "tunnel": thin, "avenue": ghost})
        assert set(curves) == {"park"}


class TestPerByMcsArea:
    def test_all_decoded_zero_per(self):
        packets = packet_array([(1000 + m, m, True) for m in range(20)])
        cells = per_by_mcs_area({"park": packets})
        assert all(c.per == 0.0 for c in cells if c.transmissions)

    def test_none_decoded_full_per(self):
        packets = packet_array([(1000 + m, m, False) for m in range(20)])
        cells = per_by_mcs_area({"park": packets})
        assert all(c.per == 1.0 for c in cells if c.transmissions)

    def test_three_of_four_decoded(self):
        rows = [(1000, 5, True), (1020, 5, True), (1040, 5, True), (1060, 5, False)]
        cells = per_by_mcs_area({"park": packet_array(rows)})
        cell = next(c for c in cells if c.mcs == 5)
        assert cell.per == 0.25 and cell.transmissions == 4 and cell.decodes == 3

    def test_recomputation_matches_counts(self):
        rng = np.random.default_rng(3)
        rows = [(1000 + k, int(rng.integers(0, 20)), bool(rng.integers(0, 2))) for k in range(200)]
        cells = per_by_mcs_area({"a": packet_array(rows)})
        for c in cells:
            if c.transmissions:
                assert abs(c.per - (1 - c.decodes / c.transmissions)) < 1e-12

    def test_partition_completeness(self):
        rng = np.random.default_rng(4)
        rows = [(1000 + k, int(rng.integers(0, 20)), True) for k in range(150)]
        packets = packet_array(rows)
        cells = per_by_mcs_area({"a": packets})
        assert sum(c.transmissions for c in cells) == len(packets)

    def test_invalid_cell_rejected(self):
        with pytest.raises(DataError):
            PerCell(group="x", mcs=0, transmissions=1, decodes=2, per=0.0)


class TestPerByDistance:
    def test_single_bin_matches_area_totals(self):
        rng = np.random.default_rng(5)
        rows = [(1000 + k, int(rng.integers(0, 20)), bool(rng.integers(0, 2))) for k in range(100)]
        packets = packet_array(rows)
        dist = rng.uniform(0, 90, size=100)
        cells = per_by_distance(packets, dist, np.array([0.0, 100.0]))
        area_cells = per_by_mcs_area({"all": packets})
        for got, want in zip(cells, area_cells):
            assert (got.mcs, got.transmissions, got.decodes) == (want.mcs, want.transmissions, want.decodes)

    def test_decode_iff_close(self):
        rows = [(1000 + k, 5, k < 10) for k in range(20)]
        packets = packet_array(rows)
        dist = np.array([50.0] * 10 + [150.0] * 10)
        cells = per_by_distance(packets, dist, np.array([0.0, 100.0, 200.0]))
        near = next(c for c in cells if c.group == "[0,100)" and c.mcs == 5)
        far = next(c for c in cells if c.group == "[100,200)" and c.mcs == 5)
        assert near.per == 0.0 and far.per == 1.0

    def test_bin_populations_sum_to_total(self):
        rng = np.random.default_rng(6)
        rows = [(1000 + k, int(rng.integers(0, 20)), True) for k in range(120)]
        packets = packet_array(rows)
        dist = rng.uniform(0, 240, size=120)
        edges = distance_bin_edges(float(dist.max()), 25.0)
        cells = per_by_distance(packets, dist, edges)
        assert sum(c.transmissions for c in cells) == len(packets)

    def test_empty_bins_emitted_with_nan(self):
        packets = packet_array([(1000, 0, True)])
        cells = per_by_distance(packets, np.array([10.0]), np.array([0.0, 25.0, 50.0]))
        empty = [c for c in cells if c.group == "[25,50)"]
        assert len(empty) == 20
        assert all(c.transmissions == 0 and np.isnan(c.per) for c in empty)

    def test_unsorted_edges_rejected(self):
        packets = packet_array([(1000, 0, True)])
        with pytest.raises(ConfigError):
            per_by_distance(packets, np.array([1.0]), np.array([10.0, 0.0]))
