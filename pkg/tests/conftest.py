"""
공통 테스트 설정 및 픽스처
"""

import math

import numpy as np
import pytest

from app.config import settings

# 두 자산 대칭 예제: R ≈ (0.05, 0.05), Σ = (0.02/3)·I
SYMMETRIC_PRICES = {
    "A": [100.0, 115.0, 109.25, 114.7125, 120.448125],
    "B": [100.0, 105.0, 110.25, 126.7875, 120.448125],
}


@pytest.fixture(autouse=True)
def no_log_files(monkeypatch):
    """테스트는 로그 파일을 만들지 않음"""
    monkeypatch.setattr(settings, "log_to_file", False)


@pytest.fixture
def rng():
    return np.random.default_rng(seed=42)


@pytest.fixture
def decoupled_toy():
    """
    R = (1, 0), Π = (0, 1), Σ = 1.5·I

    M̂ 고윳값은 2/3, −1/6 (각 2중) 이라 t0 = 0.75π 에서 위상이 정확히 표현된다.
    """
    return np.array([1.0, 0.0]), np.array([0.0, 1.0]), 1.5 * np.eye(2)


@pytest.fixture
def representable_m_hat(rng):
    """t0 = π 에서 위상 λ·2^{n−1} 이 정수인 4×4 대칭 행렬과 우변"""
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    m_hat = q @ np.diag([0.5, 0.25, -0.125, 0.0625]) @ q.T
    return (m_hat + m_hat.T) / 2, rng.standard_normal(4), math.pi


def write_price_csv(path, columns: dict[str, list[float]], time_label: str = "time") -> str:
    """time,<자산>... 형식 가격 파일 작성"""
    labels = list(columns)
    n_rows = len(columns[labels[0]])
    lines = [",".join([time_label, *labels])]
    for t in range(n_rows):
        lines.append(",".join([str(t + 1), *(repr(columns[a][t]) for a in labels)]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


@pytest.fixture
def symmetric_csv(tmp_path):
    return write_price_csv(tmp_path / "symmetric.csv", SYMMETRIC_PRICES)


@pytest.fixture
def price_csv_factory(tmp_path):
    """임의 내용 CSV 작성기"""

    def factory(text: str, name: str = "prices.csv") -> str:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return factory
