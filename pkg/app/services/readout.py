"""
판독 서비스

|w⟩ 에서 고전적으로 쓸모 있는 정보를 꺼낸다: SWAP 테스트 기반 위험/중첩 추정,
섹터 비중, 포트폴리오 비교, 롱/숏 샘플링 추정기와 오차 분석, 양자 프런티어.
"""

import logging
import math
from collections.abc import Iterable, Sequence
from concurrent.futures import Future, ThreadPoolExecutor, as_completed

import numpy as np
import pandas as pd

from app.config import settings
from app.errors import DimensionMismatchError, InvalidInputError, QfolioError
from app.schemas.hhl import HHLConfig
from app.schemas.portfolio import (
    BudgetMode,
    FrontierWarning,
    QuantumFrontierCurve,
    QuantumFrontierPoint,
)
from app.schemas.quantum import DensityMatrix, QuantumState, RegisterLayout
from app.schemas.readout import (
    AssetRanking,
    PortfolioComparison,
    SamplingErrorReport,
    SamplingResult,
    SwapTestEstimate,
)
from app.services import hhl_solver, portfolio_qp, qsim_core
from app.utils.linalg_utils import LinalgUtils
from app.validators import CommonValidators

logger = logging.getLogger(__name__)

BOUND_TOL = 1e-10


# ---------------------------------------------------------------------------
# SWAP 테스트
# ---------------------------------------------------------------------------

def _padded_density(x: QuantumState | DensityMatrix) -> np.ndarray:
    if isinstance(x, QuantumState):
        psi = x.amplitudes
        return np.outer(psi, psi.conj())
    return LinalgUtils.pad_matrix(x.matrix, LinalgUtils.next_pow2(x.dim))


def _padded_dim(x: QuantumState | DensityMatrix) -> int:
    if isinstance(x, QuantumState):
        return int(x.amplitudes.shape[0])
    return LinalgUtils.next_pow2(x.dim)


def _swap_acceptance_pure(a: QuantumState, b: QuantumState) -> float:
    """보조 큐비트 H → 제어 SWAP → H 회로의 |0⟩ 확률"""
    k = LinalgUtils.n_qubits_for(a.amplitudes.shape[0])
    layout = RegisterLayout.of(("anc", 1), ("A", k), ("B", k))
    amps = np.kron([1.0, 0.0], np.kron(a.amplitudes, b.amplitudes))
    state = QuantumState(amplitudes=amps, layout=layout)
    state = qsim_core.hadamard_all(state, "anc")
    state = qsim_core.apply_unitary(
        state, LinalgUtils.swap_operator(2**k), ["A", "B"], control=("anc", 1), check=False
    )
    state = qsim_core.hadamard_all(state, "anc")
    return float(state.marginal("anc")[0])


def swap_test(
    a: QuantumState | DensityMatrix,
    b: QuantumState | DensityMatrix,
    shots: int = 0,
    seed: int = 0,
) -> SwapTestEstimate:
    """
    수락 확률 p = (1 + F)/2, F = |⟨a|b⟩|² (순수) 또는 tr(ρ_a ρ_b) (혼합)

    shots=0 은 정확 모드, 그 외에는 이항 샘플링으로 p̂ 를 얻고 overlap = clip(2p̂ − 1, 0, 1).
    """
    if shots < 0:
        raise InvalidInputError(f"shots must be >= 0, got {shots}")
    if _padded_dim(a) != _padded_dim(b):
        raise DimensionMismatchError(
            f"swap test inputs have dimensions {_padded_dim(a)} and {_padded_dim(b)}"
        )
    if isinstance(a, QuantumState) and isinstance(b, QuantumState):
        p = _swap_acceptance_pure(a, b)
    else:
        fidelity = float(np.real(np.trace(_padded_density(a) @ _padded_density(b))))
        p = (1.0 + fidelity) / 2.0
    p = float(np.clip(p, 0.5, 1.0))

    if shots == 0:
        return SwapTestEstimate(
            overlap=float(np.clip(2.0 * p - 1.0, 0.0, 1.0)),
            shots=0,
            std_error=0.0,
            acceptance_probability=p,
        )
    rng = np.random.default_rng(seed)
    p_hat = float(rng.binomial(shots, p)) / shots
    return SwapTestEstimate(
        overlap=float(np.clip(2.0 * p_hat - 1.0, 0.0, 1.0)),
        shots=shots,
        std_error=2.0 * math.sqrt(p_hat * (1.0 - p_hat) / shots),
        acceptance_probability=p_hat,
    )


def risk_estimate(
    w_state: QuantumState,
    rho_sigma: DensityMatrix,
    trace_sigma: float,
    shots: int = 0,
    seed: int = 0,
) -> float:
    """
    trΣ · overlap(|w⟩, Σ/trΣ) = ⟨w|Σ|w⟩ (정규화된 |w⟩ 기준)

    통화 단위 위험은 여기에 물리적 배분 노름 ‖w‖² 을 곱한다 (hhl_solver.physical_solution).
    """
    return trace_sigma * swap_test(w_state, rho_sigma, shots, seed).overlap


def _probabilities(w_state: QuantumState, n: int | None = None) -> np.ndarray:
    probs = np.abs(w_state.amplitudes) ** 2
    return probs if n is None else probs[:n]


def sector_weight(
    w_state: QuantumState, sector_mask: Iterable[int], shots: int = 0, seed: int = 0
) -> float:
    """Σ_{j∈mask} |w_j|² (정확 모드) 또는 샘플링 추정"""
    mask = sorted({int(j) for j in sector_mask})
    if not mask:
        raise InvalidInputError("empty sector mask")
    probs = _probabilities(w_state)
    if mask[0] < 0 or mask[-1] >= probs.shape[0]:
        raise InvalidInputError(f"sector mask outside [0, {probs.shape[0]})")
    if shots == 0:
        return float(np.sum(probs[mask]))
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, probs / probs.sum())
    return float(np.sum(counts[mask])) / shots


def sector_weight_std_error(weight: float, shots: int) -> float:
    """샘플링 섹터 비중의 이항 표준오차"""
    if shots < 1:
        return 0.0
    return math.sqrt(weight * (1.0 - weight) / shots)


def compare_portfolio(
    w_state: QuantumState,
    candidate: QuantumState,
    shots: int = 0,
    threshold: float = 0.9,
    seed: int = 0,
) -> PortfolioComparison:
    """overlap ≥ threshold 이면 수락"""
    estimate = swap_test(w_state, candidate, shots, seed)
    return PortfolioComparison(
        overlap=estimate.overlap,
        accepted=estimate.overlap >= threshold,
        threshold=threshold,
        std_error=estimate.std_error,
    )


# ---------------------------------------------------------------------------
# 롱/숏 샘플링
# ---------------------------------------------------------------------------

def sample_portfolio(
    w_state: QuantumState,
    r_vector,
    m_samples: int,
    seed: int,
    sigma=None,
) -> SamplingResult:
    """
    |w_j|² 에서 M 개 인덱스를 뽑아 w′_j = sgn(R_j)·√(M_j/M) 구성

    Z = R_j / w′_j 추정기는 R_j = 0 인 샘플을 제외하고 dropped 로 센다.
    excess_risk 는 sigma 가 주어질 때만 계산한다.
    """
    if m_samples < 1:
        raise InvalidInputError(f"m_samples must be >= 1, got {m_samples}")
    r = CommonValidators.validate_vector(r_vector, "R")
    n = r.shape[0]
    amps = w_state.amplitudes
    if amps.shape[0] < n:
        raise DimensionMismatchError(f"state has {amps.shape[0]} amplitudes for {n} assets")
    probs = np.abs(amps[:n]) ** 2
    probs = probs / probs.sum()

    rng = np.random.default_rng(seed)
    counts = rng.multinomial(m_samples, probs)
    freq = counts / m_samples
    signs = np.where(r < 0, -1.0, 1.0)
    w_prime = signs * np.sqrt(freq)

    usable = (counts > 0) & (r != 0)
    dropped = int(np.sum(counts[(counts > 0) & (r == 0)]))
    kept = m_samples - dropped
    if kept > 0:
        z = np.zeros(n)
        z[usable] = r[usable] / w_prime[usable]
        est_return = float(np.sum(counts * z) / kept)
        est_second = float(np.sum(counts * z**2) / kept)
    else:
        est_return = est_second = 0.0
    if dropped:
        logger.warning(f"R_j = 0 인 샘플 {dropped}개를 Z 추정에서 제외")

    excess = None
    if sigma is not None:
        sigma = CommonValidators.validate_symmetric(sigma, "Σ")
        w = amps[:n]
        w = w / np.linalg.norm(w)
        excess = float(w_prime @ sigma @ w_prime - np.real(np.vdot(w, sigma @ w)))

    return SamplingResult(
        counts={int(j): int(c) for j, c in enumerate(counts) if c > 0},
        total=m_samples,
        w_prime=w_prime,
        est_return=est_return,
        est_return_second_moment=est_second,
        excess_risk=excess,
        sigma_j=np.sqrt(freq * (1.0 - freq) / m_samples),
        dropped=dropped,
        support_size=int(np.sum(counts > 0)),
    )


def sampling_error_report(
    result: SamplingResult, oracle_w, sigma, r_vector=None
) -> SamplingErrorReport:
    """ε_w = ‖w − w′‖₂ 와 |w′ᵀΣw′ − wᵀΣw| ≤ 2‖Σ‖₂ε_w 확인"""
    w = CommonValidators.validate_vector(oracle_w, "w", result.w_prime.shape[0])
    norm = np.linalg.norm(w)
    if norm == 0:
        raise InvalidInputError("zero oracle portfolio")
    w = w / norm
    sigma = CommonValidators.validate_symmetric(sigma, "Σ")
    w_prime = result.w_prime
    epsilon = float(np.linalg.norm(w - w_prime))
    difference = abs(float(w_prime @ sigma @ w_prime - w @ sigma @ w))
    bound = 2.0 * LinalgUtils.operator_norm(sigma) * epsilon

    variance_term = None
    if r_vector is not None:
        r = CommonValidators.validate_vector(r_vector, "R", w.shape[0])
        support = np.abs(w) > 0
        p = w[support] ** 2
        variance_term = float(
            np.sum(r[support] ** 2 * np.sqrt((1.0 - p) / (result.total * p)))
        )
    return SamplingErrorReport(
        epsilon_w=epsilon,
        risk_difference=difference,
        bound=bound,
        bound_satisfied=difference <= bound + BOUND_TOL,
        sigma_j=result.sigma_j,
        variance_term=variance_term,
        support_size=result.support_size,
    )


# ---------------------------------------------------------------------------
# 자산 순위
# ---------------------------------------------------------------------------

def _ranking(probs: np.ndarray, shots: int, seed: int) -> AssetRanking:
    probs = probs / probs.sum()
    if shots > 0:
        counts = np.random.default_rng(seed).multinomial(shots, probs)
        scores = counts / shots
    else:
        scores = probs
    order = np.argsort(-scores, kind="stable")
    return AssetRanking(order=order, scores=scores, shots=shots)


def rank_assets_by_return(r_state: QuantumState, n_assets: int, shots: int = 0, seed: int = 0) -> AssetRanking:
    """|R⟩ 측정: |Σ_t y_s(t)| 가 큰 자산이 앞에 온다"""
    return _ranking(_probabilities(r_state, n_assets), shots, seed)


def rank_assets_by_variance(rho: DensityMatrix, shots: int = 0, seed: int = 0) -> AssetRanking:
    """ρ = Σ/trΣ 를 자산 기저에서 측정: 분산 Σ_jj 순"""
    return _ranking(np.clip(np.real(np.diag(rho.matrix)), 0.0, None), shots, seed)


# ---------------------------------------------------------------------------
# 양자 프런티어
# ---------------------------------------------------------------------------

def point_seeds(seed: int, n: int) -> list[int]:
    """SeedSequence 로 격자점별 독립 시드 생성"""
    seed = CommonValidators.validate_seed(seed)
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def frontier_quantum(
    r,
    pi,
    sigma,
    mu_grid: Sequence[float],
    xi: float,
    cfg: HHLConfig,
    shots: int = 0,
    budget_mode: BudgetMode | str = BudgetMode.PRICES,
    max_workers: int | None = None,
) -> QuantumFrontierCurve:
    """
    μ 마다 hhl_solve → extract_w → risk_estimate, 고전 위험과 충실도를 함께 기록

    실패한 점은 경고로 남기고 계속 진행한다. 결과는 격자 순서를 유지한다.
    """
    if len(mu_grid) == 0:
        raise InvalidInputError("mu grid must not be empty")
    sigma = CommonValidators.validate_symmetric(sigma, "Σ")
    trace_sigma = float(np.trace(sigma))
    portfolio_qp.build_kkt(r, pi, sigma, float(mu_grid[0]), xi, budget_mode)
    rho_sigma = DensityMatrix(matrix=sigma / trace_sigma)
    seeds = point_seeds(cfg.seed, len(mu_grid))

    def solve_point(index: int, mu: float) -> QuantumFrontierPoint:
        kkt = portfolio_qp.build_kkt(r, pi, sigma, mu, xi, budget_mode)
        classical = portfolio_qp.solve_exact(kkt)
        result = hhl_solver.hhl_solve(kkt, cfg.model_copy(update={"seed": seeds[index]}))
        w_state, _ = hhl_solver.extract_w(result)
        physical = hhl_solver.physical_solution(result, kkt)
        scale = float(physical.weights @ physical.weights)
        estimate = swap_test(w_state, rho_sigma, shots, seeds[index])
        direction = classical.direction()
        fidelity = float(abs(np.vdot(w_state.amplitudes[: len(direction)], direction)) ** 2)
        return QuantumFrontierPoint(
            mu=mu,
            min_risk=classical.risk,
            weights=classical.weights,
            risk_quantum=scale * trace_sigma * estimate.overlap,
            fidelity=min(fidelity, 1.0),
            p_w=result.p_w,
            epsilon_kappa=result.epsilon_kappa,
            risk_std_error=scale * trace_sigma * estimate.std_error,
        )

    results: list[QuantumFrontierPoint | FrontierWarning | None] = [None] * len(mu_grid)
    with ThreadPoolExecutor(max_workers=max_workers or settings.max_workers) as executor:
        future_to_index: dict[Future, int] = {
            executor.submit(solve_point, i, float(mu)): i for i, mu in enumerate(mu_grid)
        }
        for future in as_completed(list(future_to_index.keys())):
            i = future_to_index[future]
            mu = float(mu_grid[i])
            try:
                results[i] = future.result()
            except QfolioError as e:
                logger.warning(f"양자 프런티어 점 제외 (μ={mu:.6g}): {e.message}")
                results[i] = FrontierWarning(index=i, mu=mu, code=e.code, message=e.message)
            except Exception as e:
                logger.error(f"양자 프런티어 점 계산 오류 (μ={mu:.6g}): {str(e)}")
                results[i] = FrontierWarning(index=i, mu=mu, code="internal_error", message=str(e))

    points = [res for res in results if isinstance(res, QuantumFrontierPoint)]
    warnings = [res for res in results if isinstance(res, FrontierWarning)]
    logger.info(f"양자 프런티어 계산 완료. 성공: {len(points)}, 제외: {len(warnings)}")
    return QuantumFrontierCurve(points=points, warnings=warnings)


def quantum_frontier_to_frame(curve: QuantumFrontierCurve) -> pd.DataFrame:
    """CSV 내보내기용 (mu, risk_classical, risk_quantum, fidelity)"""
    return pd.DataFrame(
        [
            {
                "mu": p.mu,
                "risk_classical": p.min_risk,
                "risk_quantum": p.risk_quantum,
                "fidelity": p.fidelity,
            }
            for p in curve.points
        ],
        columns=["mu", "risk_classical", "risk_quantum", "fidelity"],
    )
