"""
시장 데이터 서비스

가격 이력을 읽거나 합성하고, 수익률 / 기대수익률 / 표본 공분산을 계산한다.
"""

import csv
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from app.errors import MarketDataError
from app.schemas.market import FactorModelSpec, PriceSeries, ReturnsPanel

logger = logging.getLogger(__name__)


def _parse_time_axis(column: pd.Series) -> list[int | str]:
    """정수 틱이면 int 로, 아니면 문자열로 유지하고 증가 순서를 확인"""
    raw = column.str.strip()
    numeric = pd.to_numeric(raw, errors="coerce")
    if numeric.notna().all() and np.all(np.mod(numeric.to_numpy(), 1) == 0):
        axis: list[int | str] = [int(v) for v in numeric]
        order = numeric.to_numpy()
    else:
        axis = raw.tolist()
        parsed = pd.to_datetime(raw, errors="coerce")
        if parsed.isna().any():
            return axis
        order = parsed.to_numpy()
    for i in range(1, len(order)):
        if not order[i] > order[i - 1]:
            raise MarketDataError(
                f"time axis not increasing at row {i + 1}", code="unordered_time", row=i + 1
            )
    return axis


def load_prices(path: str | Path, format: str = "csv") -> PriceSeries:
    """
    CSV 가격 파일 읽기

    헤더는 ``time,<asset>...`` 형식이며 첫 열이 시간 축이다.
    오류 메시지의 row 는 헤더를 제외한 1부터 시작하는 데이터 행 번호다.
    """
    if format != "csv":
        raise MarketDataError(f"unsupported price format: {format}", code="invalid_format")
    path = Path(path)
    if not path.is_file():
        raise MarketDataError(f"price file not found: {path}", code="missing_file", path=str(path))

    # 따옴표 안의 쉼표는 필드 구분자가 아님
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if any(cell.strip() for cell in row)]
    if not rows:
        raise MarketDataError(f"empty price file: {path}", code="too_few_times")
    width = len(rows[0])
    for row, fields in enumerate(rows[1:], start=1):
        if len(fields) != width:
            raise MarketDataError(
                f"ragged row at row {row}: expected {width} fields, found {len(fields)}",
                code="ragged_row",
                row=row,
            )
    if width - 1 < 2:
        raise MarketDataError("N ≥ 2 required", code="too_few_assets", n_assets=width - 1)

    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    if len(frame) < 2:
        raise MarketDataError("T′ ≥ 2 required", code="too_few_times", n_times=len(frame))

    labels = [str(col).strip() for col in frame.columns[1:]]
    cells = frame.iloc[:, 1:].apply(lambda col: col.str.strip())
    values = cells.apply(pd.to_numeric, errors="coerce")

    bad = np.argwhere(values.isna().to_numpy())
    if len(bad):
        row, col = bad[0]
        raise MarketDataError(
            f"non-numeric cell at (row {row + 1}, asset {labels[col]})",
            code="non_numeric",
            row=int(row + 1),
            asset=labels[col],
        )
    matrix = values.to_numpy(dtype=float)
    nonpositive = np.argwhere(~(matrix > 0))
    if len(nonpositive):
        row, col = nonpositive[0]
        raise MarketDataError(
            f"non-positive price at (row {row + 1}, asset {labels[col]})",
            code="non_positive_price",
            row=int(row + 1),
            asset=labels[col],
        )

    time_axis = _parse_time_axis(frame.iloc[:, 0].astype(str))
    series = PriceSeries(prices=matrix.T, asset_labels=labels, time_axis=time_axis)
    logger.info(f"가격 데이터 로드 완료: {path.name} (N={series.n_assets}, T′={series.n_times})")
    return series


def panel_from_returns(
    returns, asset_labels: list[str] | None = None, dt_period: int = 1
) -> ReturnsPanel:
    """
    수익률 행렬에서 ReturnsPanel 구성

    T = 1 이면 1/(T−1) 공분산이 정의되지 않으므로 Σ 를 0 행렬로 둔다
    (상태 준비 전용 패널).
    """
    y = np.atleast_2d(np.asarray(returns, dtype=float))
    n, t = y.shape
    r = y.mean(axis=1)
    centered = y - r[:, None]
    if t >= 2:
        sigma = centered @ centered.T / (t - 1)
        sigma = (sigma + sigma.T) / 2
    else:
        sigma = np.zeros((n, n))
    return ReturnsPanel(
        returns=y,
        expected_return=r,
        covariance=sigma,
        norm_y=float(np.linalg.norm(y)),
        norm_y_prime=float(np.linalg.norm(y.sum(axis=1))),
        norm_y_tilde=float(np.linalg.norm(centered)),
        asset_labels=asset_labels or [],
        dt_period=dt_period,
    )


def compute_returns(p: PriceSeries, dt_period: int = 1) -> ReturnsPanel:
    """y_s(t) = (Π_s(t+Δt) − Π_s(t)) / Π_s(t), R 와 1/(T−1) 정규화 Σ"""
    if dt_period < 1:
        raise MarketDataError(f"dt_period must be positive, got {dt_period}", code="invalid_period")
    if dt_period >= p.n_times:
        raise MarketDataError(
            f"dt_period {dt_period} must be smaller than T′ = {p.n_times}", code="invalid_period"
        )
    if p.n_times - dt_period < 2:
        raise MarketDataError("need T ≥ 2", code="too_few_times")

    prices = p.prices
    y = (prices[:, dt_period:] - prices[:, :-dt_period]) / prices[:, :-dt_period]
    panel = panel_from_returns(y, list(p.asset_labels), dt_period)
    logger.debug(
        f"수익률 계산: N={panel.n_assets}, T={panel.n_times}, trΣ={panel.trace_sigma:.6e}"
    )
    return panel


def generate_synthetic(model: FactorModelSpec, n_assets: int, n_times: int) -> PriceSeries:
    """
    팩터 모델 합성 가격: r(t) = L·f(t) + ε(t) + drift

    가우시안 팩터와 잡음, 수익률은 −0.9 에서 아래로 잘라 가격을 양수로 유지한다.
    """
    if n_assets < 2 or n_times < 3:
        raise MarketDataError(
            f"invalid dimensions: need n_assets ≥ 2 and n_times ≥ 3, got {n_assets}, {n_times}",
            code="invalid_dimensions",
        )
    if model.n_factors > n_assets:
        raise MarketDataError(
            f"n_factors ({model.n_factors}) must not exceed N ({n_assets})", code="invalid_dimensions"
        )
    if model.drift is None:
        drift = np.zeros(n_assets)
    else:
        drift = np.asarray(model.drift, dtype=float)
        if drift.shape != (n_assets,):
            raise MarketDataError(
                f"drift has length {drift.shape[0]}, expected {n_assets}", code="invalid_dimensions"
            )

    rng = np.random.default_rng(model.seed)
    steps = n_times - 1
    loadings = rng.normal(0.0, model.loadings_scale, size=(n_assets, model.n_factors))
    factors = rng.normal(0.0, 1.0, size=(model.n_factors, steps))
    noise = rng.normal(0.0, 1.0, size=(n_assets, steps)) * model.idiosyncratic_scale
    step_returns = np.clip(loadings @ factors + noise + drift[:, None], -0.9, None)

    growth = np.cumprod(1.0 + step_returns, axis=1)
    prices = 100.0 * np.concatenate([np.ones((n_assets, 1)), growth], axis=1)
    logger.info(
        f"합성 가격 생성: N={n_assets}, T′={n_times}, factors={model.n_factors}, seed={model.seed}"
    )
    return PriceSeries(
        prices=prices,
        asset_labels=[f"asset_{i:02d}" for i in range(n_assets)],
        time_axis=list(range(n_times)),
    )
