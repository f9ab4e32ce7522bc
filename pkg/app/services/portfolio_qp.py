"""
Markowitz 등식 제약 QP 의 정확한 고전 풀이 서비스

모든 양자 결과의 기준(oracle)이 되는 KKT 시스템 조립, 의사역행렬 풀이,
κ 절단 의사역행렬, 효율적 프런티어 계산을 제공한다.
"""

import logging
from collections.abc import Sequence
from concurrent.futures import Future, ThreadPoolExecutor, as_completed

import numpy as np
import pandas as pd
from scipy import linalg

from app.config import settings
from app.errors import InfeasibleTargetError, InvalidInputError, QfolioError
from app.schemas.portfolio import (
    BudgetMode,
    FrontierCurve,
    FrontierPoint,
    FrontierWarning,
    KKTSystem,
    PortfolioSolution,
)
from app.validators import CommonValidators

logger = logging.getLogger(__name__)

PINV_CUTOFF = 1e-12
FEASIBILITY_TOL = 1e-8


def build_kkt(
    r,
    pi,
    sigma,
    mu: float,
    xi: float,
    budget_mode: BudgetMode | str = BudgetMode.PRICES,
) -> KKTSystem:
    """
    M = [[0, 0, Rᵀ], [0, 0, Πᵀ], [R, Π, Σ]], b = (μ, ξ, 0⃗)

    budget_mode=unit 이면 Π 대신 1 벡터를 사용한다.
    """
    budget_mode = BudgetMode(budget_mode)
    sigma = CommonValidators.validate_symmetric(sigma, "Σ")
    n = sigma.shape[0]
    r = CommonValidators.validate_vector(r, "R", n)
    pi = CommonValidators.validate_vector(pi, "Π", n)
    trace = float(np.trace(sigma))
    if trace == 0:
        raise InvalidInputError("zero-trace Σ")
    if budget_mode is BudgetMode.UNIT:
        pi = np.ones(n)

    m = np.zeros((n + 2, n + 2))
    m[0, 2:] = m[2:, 0] = r
    m[1, 2:] = m[2:, 1] = pi
    m[2:, 2:] = (sigma + sigma.T) / 2
    rhs = np.zeros(n + 2)
    rhs[0], rhs[1] = mu, xi
    return KKTSystem(
        m_matrix=m, m_hat=m / trace, rhs=rhs, mu=float(mu), xi=float(xi), budget_mode=budget_mode
    )


def _pinv_parts(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    evals, evecs = linalg.eigh(m)
    scale = float(np.max(np.abs(evals))) if evals.size else 0.0
    nonzero = np.abs(evals) >= PINV_CUTOFF * scale if scale > 0 else np.zeros_like(evals, dtype=bool)
    return evals, evecs, nonzero


def solve_exact(k: KKTSystem) -> PortfolioSolution:
    """x = M⁺b (고윳값 분해 의사역행렬, |λ| < 1e−12·max|λ| 는 0 으로 취급)"""
    evals, evecs, nonzero = _pinv_parts(k.m_matrix)
    b = k.rhs
    beta = evecs.T @ b
    x = evecs[:, nonzero] @ (beta[nonzero] / evals[nonzero])

    # b 가 range(M) 밖 성분을 가지면 제약이 모순
    outside = b - evecs[:, nonzero] @ beta[nonzero]
    b_norm = float(np.linalg.norm(b))
    if float(np.linalg.norm(outside)) > FEASIBILITY_TOL * max(b_norm, 1e-300):
        raise InfeasibleTargetError("infeasible target", mu=k.mu, xi=k.xi)

    w = x[2:]
    achieved_return = float(k.expected_return @ w)
    achieved_budget = float(k.budget_vector @ w)
    if abs(achieved_return - k.mu) > FEASIBILITY_TOL * max(1.0, abs(k.mu)) or abs(
        achieved_budget - k.xi
    ) > FEASIBILITY_TOL * max(1.0, abs(k.xi)):
        raise InfeasibleTargetError("infeasible target", mu=k.mu, xi=k.xi)

    risk = portfolio_risk(w, k.covariance)
    logger.debug(f"KKT 풀이: μ={k.mu:.6g}, ξ={k.xi:.6g}, risk={risk:.6e}")
    return PortfolioSolution(
        eta=float(x[0]),
        theta=float(x[1]),
        weights=w,
        achieved_return=achieved_return,
        achieved_budget=achieved_budget,
        risk=max(risk, 0.0),
    )


def pseudo_inverse_kappa(m_hat, b, kappa: float) -> tuple[np.ndarray, float]:
    """
    κ 절단 의사역행렬 Σ_{|λ_j| ≥ 1/κ} (β_j/λ_j)|u_j⟩ 와 ε_κ

    ε_κ 는 전체 의사역행렬 결과와의 ℓ₂ 거리다.
    """
    if not kappa > 0:
        raise InvalidInputError(f"kappa must be positive, got {kappa}")
    m_hat = CommonValidators.validate_symmetric(m_hat, "M̂")
    b = CommonValidators.validate_vector(b, "b", m_hat.shape[0])
    evals, evecs, nonzero = _pinv_parts(m_hat)
    beta = evecs.T @ b
    full = evecs[:, nonzero] @ (beta[nonzero] / evals[nonzero])
    keep = nonzero & (np.abs(evals) >= 1.0 / kappa)
    x = evecs[:, keep] @ (beta[keep] / evals[keep])
    return x, float(np.linalg.norm(x - full))


def spectrum(m_hat, b) -> list[tuple[float, float]]:
    """(λ_j, β_j = ⟨u_j|b̂⟩) 목록, 고윳값 오름차순"""
    evals, evecs = linalg.eigh(np.asarray(m_hat, dtype=float))
    b = np.asarray(b, dtype=float)
    norm = np.linalg.norm(b)
    beta = evecs.T @ (b / norm if norm > 0 else b)
    return [(float(lam), float(bet)) for lam, bet in zip(evals, beta)]


def min_nonzero_eigenvalue(m_hat) -> float:
    evals, _, nonzero = _pinv_parts(np.asarray(m_hat, dtype=float))
    if not np.any(nonzero):
        raise InvalidInputError("matrix has no nonzero eigenvalue")
    return float(np.min(np.abs(evals[nonzero])))


def portfolio_risk(w, sigma) -> float:
    """wᵀΣw"""
    w = np.asarray(w, dtype=float)
    sigma = CommonValidators.validate_square(np.asarray(sigma, dtype=float), "Σ")
    CommonValidators.validate_vector(w, "w", sigma.shape[0])
    return float(w @ sigma @ w)


def _validate_frontier_inputs(r, pi, sigma, mu_grid: Sequence[float], xi: float, budget_mode) -> None:
    if len(mu_grid) == 0:
        raise InvalidInputError("mu grid must not be empty")
    # 입력 자체 오류는 점별 누락이 아니라 즉시 실패
    build_kkt(r, pi, sigma, float(mu_grid[0]), xi, budget_mode)


def frontier(
    r,
    pi,
    sigma,
    mu_grid: Sequence[float],
    xi: float,
    budget_mode: BudgetMode | str = BudgetMode.PRICES,
    max_workers: int | None = None,
) -> FrontierCurve:
    """μ 격자마다 solve_exact, 실현 불가능한 점은 경고와 함께 제외 (격자 순서 유지)"""
    _validate_frontier_inputs(r, pi, sigma, mu_grid, xi, budget_mode)
    results: list[FrontierPoint | FrontierWarning | None] = [None] * len(mu_grid)

    def solve_point(mu: float) -> FrontierPoint:
        solution = solve_exact(build_kkt(r, pi, sigma, mu, xi, budget_mode))
        return FrontierPoint(mu=mu, min_risk=solution.risk, weights=solution.weights)

    # ThreadPoolExecutor 로 격자점 병렬 처리
    with ThreadPoolExecutor(max_workers=max_workers or settings.max_workers) as executor:
        future_to_index: dict[Future, int] = {
            executor.submit(solve_point, float(mu)): i for i, mu in enumerate(mu_grid)
        }
        for future in as_completed(list(future_to_index.keys())):
            i = future_to_index[future]
            mu = float(mu_grid[i])
            try:
                results[i] = future.result()
            except QfolioError as e:
                logger.warning(f"프런티어 점 제외 (μ={mu:.6g}): {e.message}")
                results[i] = FrontierWarning(index=i, mu=mu, code=e.code, message=e.message)
            except Exception as e:
                logger.error(f"프런티어 점 계산 오류 (μ={mu:.6g}): {str(e)}")
                results[i] = FrontierWarning(index=i, mu=mu, code="internal_error", message=str(e))

    points = [res for res in results if isinstance(res, FrontierPoint)]
    warnings = [res for res in results if isinstance(res, FrontierWarning)]
    logger.info(f"프런티어 계산 완료. 성공: {len(points)}, 제외: {len(warnings)}")
    return FrontierCurve(points=points, warnings=warnings)


def frontier_to_frame(curve: FrontierCurve) -> pd.DataFrame:
    """CSV 내보내기용 (mu, risk)"""
    return pd.DataFrame({"mu": curve.mus, "risk": curve.risks}, columns=["mu", "risk"])


def frontier_to_json(curve: FrontierCurve) -> dict:
    return {
        "points": [
            {"mu": p.mu, "risk": p.min_risk, "weights": p.weights.tolist()} for p in curve.points
        ],
        "warnings": [w.model_dump(mode="json") for w in curve.warnings],
    }
