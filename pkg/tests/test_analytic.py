import math

import mpmath
import numpy as np
import pytest
from scipy import special

from eepn_cpe_workbench.analytic import (
    ber_floor,
    ber_floor_bwa,
    ber_floor_nlms,
    ber_floor_vv,
    bwa_position_variance,
    comparison_notes,
    eepn_variance,
    erfc,
    figure_grid,
    floor_curves,
    implied_vv_variance,
    laser_pn_variance,
    relative_spread,
    sigma2_at_nlms_floor,
    total_variance,
    vv_nlms_crossover,
)
from eepn_cpe_workbench.models import ALGORITHMS, SUPPORTED_ORDERS, LaserConfig, LinkConfig

mpmath.mp.dps = 40


def reference_floor(n: int, position_variances: list[float]) -> float:
    """High-precision mean of erfc(pi/(n*sqrt(2)*sigma_p)) / log2 n."""
    terms = [mpmath.erfc(mpmath.pi / (n * mpmath.sqrt(2) * mpmath.sqrt(v))) for v in position_variances]
    return float(mpmath.fsum(terms) / len(terms) / math.log2(n))


class TestErfc:
    def test_matches_high_precision(self) -> None:
        """Test erfc against 40-digit mpmath values."""
        x = np.linspace(-5.0, 26.0, 1000)
        expected = np.array([float(mpmath.erfc(value)) for value in x])
        np.testing.assert_allclose(erfc(x), expected, rtol=1e-10, atol=0)

    def test_reflection(self) -> None:
        x = np.linspace(0.0, 6.0, 61)
        np.testing.assert_allclose(erfc(-x), 2 - np.asarray(erfc(x)), atol=1e-15)

    def test_cutoff(self) -> None:
        assert erfc(26.0) > 0
        assert erfc(30.5) == 0.0
        assert erfc(math.inf) == 0.0

    def test_scalar_in_scalar_out(self) -> None:
        assert isinstance(erfc(0.5), float)
        assert erfc(np.array([0.0, 1.0])).shape == (2,)


class TestVariances:
    def test_laser(self) -> None:
        lasers = LaserConfig(delta_f_tx=100e3, delta_f_lo=100e3)
        assert laser_pn_variance(lasers, 1 / 28e9) == pytest.approx(4.488e-5, rel=1e-3)
        assert laser_pn_variance(LaserConfig(delta_f_tx=0, delta_f_lo=100e3), 1e-9) == pytest.approx(6.2832e-4, rel=1e-4)

    def test_eepn(self, long_haul_link: LinkConfig) -> None:
        lasers = LaserConfig(delta_f_tx=100e3, delta_f_lo=100e3)
        assert eepn_variance(lasers, long_haul_link, 1 / 28e9) == pytest.approx(1.2031e-3, rel=1e-3)
        assert eepn_variance(lasers, None, 1 / 28e9) == 0.0
        assert eepn_variance(LaserConfig(delta_f_tx=100e3, delta_f_lo=0), long_haul_link, 1 / 28e9) == 0.0

    def test_eepn_scales_with_symbol_rate(self, long_haul_link: LinkConfig) -> None:
        lasers = LaserConfig(delta_f_tx=0, delta_f_lo=100e3)
        ratio = eepn_variance(lasers, long_haul_link, 1 / 56e9) / eepn_variance(lasers, long_haul_link, 1 / 28e9)
        assert ratio == pytest.approx(2.0)

    def test_total(self, long_haul_link: LinkConfig) -> None:
        breakdown = total_variance(LaserConfig(delta_f_tx=100e3, delta_f_lo=100e3), long_haul_link, 1 / 28e9)
        assert breakdown.sigma2_total == pytest.approx(1.248e-3, rel=1e-3)
        assert breakdown.sigma2_total == breakdown.sigma2_tx_lo + breakdown.sigma2_eepn
        assert breakdown.rho == 0.0


class TestNlmsFloor:
    @pytest.mark.parametrize("n", SUPPORTED_ORDERS)
    def test_closed_form(self, n: int) -> None:
        sigma2 = np.logspace(-4, 0, 9)
        expected = special.erfc(math.pi / (n * math.sqrt(2) * np.sqrt(sigma2))) / math.log2(n)
        np.testing.assert_allclose(ber_floor_nlms(n, sigma2), expected, rtol=1e-14)

    def test_high_precision_value(self) -> None:
        assert ber_floor_nlms(4, 0.09) == pytest.approx(reference_floor(4, [0.09]), rel=1e-12)
        assert ber_floor_nlms(4, 0.09) == pytest.approx(4.42e-3, rel=0.01)

    def test_zero_variance(self) -> None:
        assert ber_floor_nlms(16, 0.0) == 0.0

    def test_saturation(self) -> None:
        for n in SUPPORTED_ORDERS:
            assert ber_floor_nlms(n, 1e8) == pytest.approx(1 / math.log2(n), rel=1e-3)

    @pytest.mark.parametrize("sigma2", [-1e-3, math.nan, math.inf])
    def test_invalid_variance(self, sigma2: float) -> None:
        with pytest.raises(ValueError, match="nonnegative"):
            ber_floor_nlms(4, sigma2)


class TestBwaFloor:
    def test_position_variance(self) -> None:
        assert bwa_position_variance(1, 2, 1.0) == pytest.approx(0.25)
        assert bwa_position_variance(1, 15, 1.0) == pytest.approx(1015 / 225)
        assert bwa_position_variance(8, 15, 1.0) == pytest.approx(implied_vv_variance(1.0, 15))
        assert bwa_position_variance(1, 1, 1.0) == 0.0

    def test_position_variance_is_symmetric(self) -> None:
        for p in range(1, 11):
            assert bwa_position_variance(p, 10, 2e-3) == pytest.approx(bwa_position_variance(11 - p, 10, 2e-3))

    @pytest.mark.parametrize("p", [0, 16])
    def test_position_outside_block(self, p: int) -> None:
        with pytest.raises(ValueError, match="outside the block"):
            bwa_position_variance(p, 15, 1e-3)

    @pytest.mark.parametrize("n, sigma2, block_size", [(4, 0.02, 15), (8, 5e-3, 10), (64, 1e-4, 5)])
    def test_high_precision_value(self, n: int, sigma2: float, block_size: int) -> None:
        # sigma_p^2 = sigma^2/N^2 * (sum of m^2 over the increments before and after p)
        variances = [
            sigma2 / block_size**2 * (sum(m * m for m in range(1, p)) + sum(m * m for m in range(1, block_size - p + 1)))
            for p in range(1, block_size + 1)
        ]
        assert ber_floor_bwa(n, sigma2, block_size) == pytest.approx(reference_floor(n, variances), rel=1e-10)

    def test_single_symbol_block(self) -> None:
        assert ber_floor_bwa(4, 0.1, 1) == 0.0

    def test_worse_than_nlms(self) -> None:
        sigma2 = np.logspace(-3, -1, 5)
        assert np.all(np.asarray(ber_floor_bwa(4, sigma2, 15)) > np.asarray(ber_floor_nlms(4, sigma2)))


class TestVvFloor:
    @pytest.mark.parametrize("block_size", [1, 2, 14])
    def test_degenerate_window(self, block_size: int) -> None:
        with pytest.raises(ValueError, match="degenerate window"):
            ber_floor_vv(4, 1e-2, block_size)

    @pytest.mark.parametrize("block_size", [3, 11, 15, 21])
    def test_equals_nlms_at_implied_variance(self, block_size: int) -> None:
        sigma2 = np.array([1e-2, 3e-2, 0.1])
        np.testing.assert_allclose(
            ber_floor_vv(8, sigma2, block_size),
            ber_floor_nlms(8, implied_vv_variance(sigma2, block_size)),
            rtol=1e-9,
        )

    def test_implied_variance(self) -> None:
        assert implied_vv_variance(1.0, 3) == pytest.approx(2 / 9)
        assert implied_vv_variance(1.0, 15) == pytest.approx(224 / 180)

    def test_crossover(self) -> None:
        """Test that VV beats NLMS for N_VV <= 11 and loses from 13 on."""
        crossover = vv_nlms_crossover()
        assert crossover == pytest.approx(12.0828, abs=1e-4)
        assert 6 * crossover / (crossover**2 - 1) == pytest.approx(0.5)

        grid = np.logspace(-3, 0, 31)
        nlms = np.asarray(ber_floor_nlms(4, grid))
        assert np.all(np.asarray(ber_floor_vv(4, grid, 11)) < nlms)
        assert np.all(np.asarray(ber_floor_vv(4, grid, 13)) > nlms)
        assert np.all(np.asarray(ber_floor_vv(4, grid, 15)) > nlms)

    def test_notes(self) -> None:
        assert "6 + sqrt(37)" in comparison_notes()
        assert "above the NLMS floor" in comparison_notes(15)
        assert "below the NLMS floor" in comparison_notes(11)

    def test_notes_name_measured_discrepancies(self) -> None:
        notes = comparison_notes()
        assert "block edges" in notes
        assert "cycle-slips by 2*pi/n" in notes


class TestFloorCurves:
    def test_dispatch(self) -> None:
        assert ber_floor("nlms", 8, 0.01) == ber_floor_nlms(8, 0.01)
        assert ber_floor("bwa", 8, 0.01, 9) == ber_floor_bwa(8, 0.01, 9)
        assert ber_floor("vv", 8, 0.01, 9) == ber_floor_vv(8, 0.01, 9)

    @pytest.mark.parametrize("n", SUPPORTED_ORDERS)
    def test_monotone_and_bounded(self, n: int) -> None:
        curve = floor_curves(n, np.logspace(-6, 2, 200))
        for algorithm in ALGORITHMS:
            floors = curve.column(algorithm)
            assert np.all(np.diff(floors) >= 0)
            assert np.all((floors >= 0) & (floors <= 1 / math.log2(n) + 1e-15))

    def test_higher_order_has_higher_floor(self) -> None:
        grid = np.array([0.05, 0.1, 0.3])
        low, high = floor_curves(4, grid), floor_curves(64, grid)
        for algorithm in ALGORITHMS:
            assert np.all(high.column(algorithm) > low.column(algorithm))

    def test_zero_variance_row(self) -> None:
        curve = floor_curves(4, np.array([0.0, 1e-2]))
        assert (curve.nlms[0], curve.bwa[0], curve.vv[0]) == (0.0, 0.0, 0.0)

    @pytest.mark.parametrize("grid", [[], [1e-3, 1e-3], [1e-2, 1e-3]])
    def test_invalid_grid(self, grid: list[float]) -> None:
        with pytest.raises(ValueError, match="sigma2 grid"):
            floor_curves(4, np.array(grid))


class TestFigureData:
    def test_sigma2_at_nlms_floor(self) -> None:
        for n in SUPPORTED_ORDERS:
            assert ber_floor_nlms(n, sigma2_at_nlms_floor(n, 1e-3)) == pytest.approx(1e-3, rel=1e-9)
        with pytest.raises(ValueError, match="outside"):
            sigma2_at_nlms_floor(4, 0.5)

    @pytest.mark.parametrize("n", SUPPORTED_ORDERS)
    def test_grid_covers_visible_range(self, n: int) -> None:
        grid = figure_grid(n)
        assert grid.size == 41
        assert np.all(np.diff(grid) > 0)

        curve = floor_curves(n, grid)
        largest_at_start = max(curve.nlms[0], curve.bwa[0], curve.vv[0])
        assert largest_at_start == pytest.approx(1e-6, rel=1e-6)
        ceiling = 1 / math.log2(n)
        for algorithm in ALGORITHMS:
            top = curve.column(algorithm)[-1]
            assert curve.nlms[-1] <= top <= ceiling
            assert top >= 0.75 * ceiling

    def test_spread_shrinks_with_order(self) -> None:
        """Test that the three floors draw closer for higher-order formats."""
        spreads = [relative_spread(n) for n in SUPPORTED_ORDERS]
        assert all(0 < spread < 1 for spread in spreads)
        assert all(a > b for a, b in zip(spreads, spreads[1:]))
