"""
시장 데이터 서비스 테스트
"""

import numpy as np
import pytest

from app.errors import MarketDataError
from app.schemas.market import FactorModelSpec, PriceSeries
from app.services import market_data
from app.utils.linalg_utils import LinalgUtils


def _series(prices) -> PriceSeries:
    prices = np.asarray(prices, dtype=float)
    return PriceSeries(
        prices=prices,
        asset_labels=[f"a{i}" for i in range(prices.shape[0])],
        time_axis=list(range(prices.shape[1])),
    )


class TestLoadPrices:
    """가격 CSV 파싱"""

    def test_three_row_csv(self, price_csv_factory):
        """헤더 포함 3행 → N=2, T′=2"""
        path = price_csv_factory("t,A,B\n1,100,50\n2,110,45\n")
        series = market_data.load_prices(path)
        assert series.n_assets == 2
        assert series.n_times == 2
        assert series.asset_labels == ["A", "B"]
        assert series.time_axis == [1, 2]
        np.testing.assert_allclose(series.prices, [[100, 110], [50, 45]])

    def test_zero_price_reports_row_and_asset(self, price_csv_factory):
        path = price_csv_factory("time,A,B\n1,100,50\n2,110,0\n")
        with pytest.raises(MarketDataError) as exc:
            market_data.load_prices(path)
        assert exc.value.code == "non_positive_price"
        assert "non-positive price at (row 2, asset B)" in exc.value.message

    def test_single_asset_rejected(self, price_csv_factory):
        path = price_csv_factory("time,A\n1,100\n2,110\n")
        with pytest.raises(MarketDataError) as exc:
            market_data.load_prices(path)
        assert exc.value.code == "too_few_assets"
        assert "N ≥ 2 required" in exc.value.message

    def test_missing_file(self, tmp_path):
        with pytest.raises(MarketDataError) as exc:
            market_data.load_prices(tmp_path / "nope.csv")
        assert exc.value.code == "missing_file"

    def test_non_numeric_cell(self, price_csv_factory):
        path = price_csv_factory("time,A,B\n1,100,50\n2,abc,45\n")
        with pytest.raises(MarketDataError) as exc:
            market_data.load_prices(path)
        assert exc.value.code == "non_numeric"
        assert exc.value.context["asset"] == "A"

    def test_ragged_row(self, price_csv_factory):
        path = price_csv_factory("time,A,B\n1,100,50\n2,110\n")
        with pytest.raises(MarketDataError) as exc:
            market_data.load_prices(path)
        assert exc.value.code == "ragged_row"

    def test_extra_field_row(self, price_csv_factory):
        path = price_csv_factory("time,A,B\n1,100,50\n2,110,45,7\n")
        with pytest.raises(MarketDataError) as exc:
            market_data.load_prices(path)
        assert exc.value.code == "ragged_row"
        assert exc.value.context["row"] == 2

    def test_quoted_comma_is_not_ragged(self, price_csv_factory):
        path = price_csv_factory('time,"Fund, Class A",B\n1,100,50\n2,110,45\n')
        series = market_data.load_prices(path)
        assert series.asset_labels == ["Fund, Class A", "B"]
        np.testing.assert_allclose(series.prices, [[100, 110], [50, 45]])

    def test_unordered_time(self, price_csv_factory):
        path = price_csv_factory("time,A,B\n2,100,50\n1,110,45\n")
        with pytest.raises(MarketDataError) as exc:
            market_data.load_prices(path)
        assert exc.value.code == "unordered_time"

    def test_date_axis_kept_as_text(self, price_csv_factory):
        path = price_csv_factory("date,A,B\n2024-01-01,100,50\n2024-01-02,101,51\n")
        series = market_data.load_prices(path)
        assert series.time_axis == ["2024-01-01", "2024-01-02"]


class TestComputeReturns:
    """수익률, 기대수익률, 공분산"""

    def test_simple_return(self):
        panel = market_data.compute_returns(_series([[100.0, 110.0, 121.0], [50.0, 50.0, 50.0]]))
        np.testing.assert_allclose(panel.returns[0], [0.10, 0.10])

    def test_constant_prices_give_zero_panel(self):
        panel = market_data.compute_returns(_series(np.full((2, 4), 42.0)))
        assert np.all(panel.returns == 0)
        assert np.all(panel.expected_return == 0)
        assert np.all(panel.covariance == 0)

    def test_covariance_matches_direct_summation(self, rng):
        prices = 100.0 * np.cumprod(1.0 + rng.normal(0, 0.02, (2, 4)), axis=1)
        panel = market_data.compute_returns(_series(prices))
        y = panel.returns
        r = y.mean(axis=1)
        expected = np.zeros((2, 2))
        for t in range(y.shape[1]):
            d = y[:, t] - r
            expected += np.outer(d, d)
        expected /= y.shape[1] - 1
        assert panel.n_times == 3
        np.testing.assert_allclose(panel.covariance, expected, atol=1e-12)

    def test_norm_identity(self, rng):
        """|ỹ|² = (T−1)·trΣ"""
        panel = market_data.panel_from_returns(rng.normal(0.001, 0.02, (5, 12)))
        assert panel.norm_y_tilde**2 == pytest.approx(11 * panel.trace_sigma, rel=1e-10)

    def test_row_mean_of_centered_returns_is_zero(self, rng):
        panel = market_data.panel_from_returns(rng.normal(0.0, 0.05, (3, 7)))
        centered = panel.returns - panel.expected_return[:, None]
        np.testing.assert_allclose(centered.mean(axis=1), 0.0, atol=1e-12)

    def test_price_rescaling_invariance(self, rng):
        prices = 100.0 * np.cumprod(1.0 + rng.normal(0, 0.02, (3, 6)), axis=1)
        scaled = prices.copy()
        scaled[1] *= 7.5
        a = market_data.compute_returns(_series(prices))
        b = market_data.compute_returns(_series(scaled))
        np.testing.assert_allclose(a.returns, b.returns, atol=1e-14)

    def test_dt_period(self):
        panel = market_data.compute_returns(_series([[100.0, 105.0, 110.0, 121.0], [1, 2, 3, 4]]), 2)
        assert panel.n_times == 2
        assert panel.returns[0, 0] == pytest.approx(0.10)

    @pytest.mark.parametrize("dt_period", [3, 4])
    def test_period_too_long(self, dt_period):
        with pytest.raises(MarketDataError) as exc:
            market_data.compute_returns(_series(np.ones((2, 3)) * 10), dt_period)
        assert exc.value.code in {"invalid_period", "too_few_times"}

    def test_single_return_rejected(self):
        with pytest.raises(MarketDataError, match="need T ≥ 2"):
            market_data.compute_returns(_series([[100.0, 110.0], [50.0, 45.0]]))

    def test_json_export_keys(self, rng):
        panel = market_data.panel_from_returns(rng.normal(0, 0.01, (2, 4)))
        assert set(panel.to_json_dict()) == {"returns", "expected_return", "covariance", "norms"}


class TestGenerateSynthetic:
    """팩터 모델 합성 가격"""

    def _rank(self, series: PriceSeries) -> int:
        sigma = market_data.compute_returns(series).covariance
        return LinalgUtils.numerical_rank(sigma, rel_tol=1e-8)

    def test_single_factor_rank_one(self):
        model = FactorModelSpec(n_factors=1, idiosyncratic_scale=0.0, seed=7)
        assert self._rank(market_data.generate_synthetic(model, 8, 20)) == 1

    def test_three_factor_rank(self):
        model = FactorModelSpec(n_factors=3, idiosyncratic_scale=0.0, seed=7)
        assert self._rank(market_data.generate_synthetic(model, 16, 40)) == 3

    def test_deterministic(self):
        model = FactorModelSpec(seed=99)
        a = market_data.generate_synthetic(model, 4, 10)
        b = market_data.generate_synthetic(model, 4, 10)
        np.testing.assert_array_equal(a.prices, b.prices)

    def test_prices_positive(self):
        model = FactorModelSpec(loadings_scale=2.0, idiosyncratic_scale=1.0, seed=3)
        series = market_data.generate_synthetic(model, 4, 30)
        assert np.all(series.prices > 0)

    def test_invalid_dimensions(self):
        with pytest.raises(MarketDataError):
            market_data.generate_synthetic(FactorModelSpec(), 1, 10)
        with pytest.raises(MarketDataError):
            market_data.generate_synthetic(FactorModelSpec(n_factors=3), 2, 10)
