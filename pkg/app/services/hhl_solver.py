"""
HHL 양자 선형 시스템 풀이 서비스

M̂|x⟩ = |μ, ξ, 0⟩ 에 대해 위상 추정, κ 조건 고윳값 역전(보조 큐비트 회전),
언컴퓨트, 사후 선택을 시뮬레이션하고 결과를 통화 단위로 되돌린다.
"""

import logging
import math

import numpy as np
from scipy import linalg

from app.config import settings
from app.errors import ConfigurationError, InvalidInputError, NullBranchError, RotationOverflowError
from app.schemas.hamiltonian import HamiltonianParts
from app.schemas.hhl import HHLConfig, HHLResult, SpectralComponent
from app.schemas.portfolio import KKTSystem, PortfolioSolution
from app.schemas.quantum import DensityMatrix, QuantumState, RegisterLayout
from app.services import hamiltonian_sim, portfolio_qp, qsim_core
from app.utils.linalg_utils import LinalgUtils
from app.validators import CommonValidators

logger = logging.getLogger(__name__)

KAPPA_TOL = 1e-12


# ---------------------------------------------------------------------------
# 구성 요소
# ---------------------------------------------------------------------------

def prepare_rhs(mu: float, xi: float, dim: int) -> QuantumState:
    """(μ|1⟩ + ξ|2⟩)/√(μ²+ξ²) 를 시스템 레지스터에 준비"""
    if dim < 2:
        raise InvalidInputError(f"dim must be >= 2, got {dim}")
    if mu == 0 and xi == 0:
        raise InvalidInputError("zero vector")
    vec = np.zeros(dim)
    vec[0], vec[1] = mu, xi
    return qsim_core.encode_vector(vec, "sys")


def auto_t0(m_hat) -> float:
    """π/(2·Gershgorin(M̂)): 모든 위상이 [−1/4, 1/4] 안에 들어온다"""
    bound = LinalgUtils.gershgorin_bound(np.asarray(m_hat, dtype=float))
    if bound == 0:
        raise InvalidInputError("matrix is zero")
    return math.pi / (2.0 * bound)


def decode_phase(x, n_phase_bits: int, t0: float):
    """위상 레지스터 값 → λ̃ = x_signed·2π/(t0·2^n)"""
    return LinalgUtils.twos_complement(x, n_phase_bits) * 2.0 * math.pi / (t0 * 2**n_phase_bits)


def phase_estimation(blocks: np.ndarray, rhs: QuantumState, n_phase_bits: int) -> QuantumState:
    """
    Σ_j β_j |λ̃_j⟩|u_j⟩ 생성

    rhs 는 "sys" 레지스터 상태, blocks[j] = U(t0·j) 이다. 위상 레지스터는
    x = λ·t0·2^n/2π 를 담는다.
    """
    phase = qsim_core.allocate_state(RegisterLayout.of(("phase", n_phase_bits)))
    state = qsim_core.tensor_product(phase, rhs)
    state = qsim_core.hadamard_all(state, "phase")
    state = qsim_core.apply_block_diagonal(state, "phase", "sys", blocks)
    return qsim_core.apply_unitary(state, LinalgUtils.qft_matrix(n_phase_bits), "phase", check=False)


def inversion_map(n_phase_bits: int, t0: float, kappa: float) -> dict[int, float]:
    """|λ̃| ≥ 1/κ 인 위상 값 x → 1/λ̃ (나머지는 회전 없음)"""
    xs = np.arange(2**n_phase_bits)
    lams = decode_phase(xs, n_phase_bits, t0)
    keep = np.abs(lams) >= (1.0 / kappa) * (1.0 - KAPPA_TOL)
    return {int(x): float(1.0 / lam) for x, lam, k in zip(xs, lams, keep) if k and lam != 0}


def eigenvalue_inversion(
    pe_state: QuantumState, kappa: float, c_constant: float, t0: float
) -> QuantumState:
    """
    보조 큐비트 "anc" 를 붙이고 |λ̃⟩ 분기마다 |1⟩ 진폭 C/λ̃ 로 회전

    |λ̃| < 1/κ 분기는 |1⟩ 진폭 0 (하드 필터). 부호 있는 고윳값은 2의 보수로 해석한다.
    """
    n_bits = pe_state.layout.size("phase")
    anc = qsim_core.allocate_state(RegisterLayout.of(("anc", 1)))
    state = qsim_core.tensor_product(pe_state, anc)
    try:
        return qsim_core.controlled_amplitude_rotation(
            state, "phase", inversion_map(n_bits, t0, kappa), "anc", c_constant
        )
    except RotationOverflowError as e:
        raise RotationOverflowError("C too large for κ", kappa=kappa, c_constant=c_constant) from e


def _inversion_blocks(n_phase_bits: int, t0: float, kappa: float, c_constant: float) -> np.ndarray:
    sines = np.zeros(2**n_phase_bits)
    for x, value in inversion_map(n_phase_bits, t0, kappa).items():
        sines[x] = c_constant * value
    if np.max(np.abs(sines)) > 1.0 + KAPPA_TOL:
        raise RotationOverflowError("C too large for κ", kappa=kappa, c_constant=c_constant)
    sines = np.clip(sines, -1.0, 1.0)
    cosines = np.sqrt(1.0 - sines**2)
    return np.array([[[c, -s], [s, c]] for c, s in zip(cosines, sines)])


def suggest_kappa(m_hat, margin: float = 2.0, rhs=None, support_tol: float = 1e-8) -> float:
    """
    margin / |λ_min(nonzero)|: 모든 비영 고윳값을 유지하는 κ

    rhs 가 주어지면 |β_j| ≥ support_tol 인 고윳값만 본다 (β 는 정규화된 b̂ 기준). b 가 없는
    방향까지 유지하면 위상 추정 누설이 작은 |λ̃| 구간에서 증폭된다.
    """
    if margin < 1:
        raise InvalidInputError(f"margin must be >= 1, got {margin}")
    if rhs is None:
        return margin / portfolio_qp.min_nonzero_eigenvalue(m_hat)
    components = portfolio_qp.spectrum(m_hat, rhs)
    floor = portfolio_qp.PINV_CUTOFF * max(abs(lam) for lam, _ in components)
    relevant = [abs(lam) for lam, beta in components if abs(beta) >= support_tol and abs(lam) > floor]
    if not relevant:
        raise InvalidInputError("right-hand side has no support on nonzero eigenvalues")
    return margin / min(relevant)


# ---------------------------------------------------------------------------
# 진화 블록
# ---------------------------------------------------------------------------

def _exact_blocks(m_pad: np.ndarray, t0: float, n_bits: int) -> np.ndarray:
    evals, evecs = linalg.eigh(m_pad)
    times = t0 * np.arange(2**n_bits)
    phases = np.exp(-1j * np.outer(times, evals))
    return np.einsum("ak,jk,bk->jab", evecs, phases, evecs.conj())


def _trotter_blocks(
    parts: HamiltonianParts, m_pad: np.ndarray, t0: float, n_bits: int, steps: int
) -> tuple[np.ndarray, float]:
    d = m_pad.shape[0]
    step = hamiltonian_sim.embed_unitary(hamiltonian_sim.trotter_step(parts, t0 / steps), d)
    unitaries = [np.linalg.matrix_power(step, steps * 2**k) for k in range(n_bits)]
    error = max(
        LinalgUtils.operator_norm(u - LinalgUtils.hermitian_expm(m_pad, t))
        for u, t in zip(unitaries, hamiltonian_sim.power_of_two_times(t0, n_bits))
    )
    return hamiltonian_sim.controlled_evolution(unitaries), error


# ---------------------------------------------------------------------------
# 상태 벡터 / 밀도 행렬 파이프라인
# ---------------------------------------------------------------------------

def _solve_pure(
    blocks: np.ndarray, b_pad: np.ndarray, cfg: HHLConfig, t0: float
) -> tuple[QuantumState, float, float]:
    n = cfg.n_phase_bits
    rhs = qsim_core.encode_vector(b_pad, "sys")
    state = phase_estimation(blocks, rhs, n)
    state = eigenvalue_inversion(state, cfg.kappa, cfg.c_value, t0)

    # 위상 레지스터 언컴퓨트
    state = qsim_core.apply_unitary(state, LinalgUtils.qft_matrix(n).conj().T, "phase", check=False)
    state = qsim_core.apply_block_diagonal(state, "phase", "sys", blocks.conj().transpose(0, 2, 1))
    state = qsim_core.hadamard_all(state, "phase")

    state, p_w = qsim_core.postselect(state, "anc", 1)
    state, p_phase = qsim_core.postselect(state, "phase", 0)
    return state, p_w, p_phase


def _solve_density(
    parts: HamiltonianParts, b_pad: np.ndarray, cfg: HHLConfig, t0: float
) -> tuple[DensityMatrix, float, float]:
    n = cfg.n_phase_bits
    d = b_pad.shape[0]
    layout = RegisterLayout.of(
        ("phase", n), ("sys", LinalgUtils.n_qubits_for(d)), ("anc", 1),
        qubit_cap=settings.density_qubit_cap,
    )
    amps = np.kron(np.kron(np.eye(2**n)[0], b_pad / np.linalg.norm(b_pad)), [1.0, 0.0])
    rho = qsim_core.density_from_state(QuantumState(amplitudes=amps, layout=layout))
    hadamard = LinalgUtils.uniform_unitary(2**n, 2**n)
    rho = qsim_core.apply_unitary_density(rho, hadamard, "phase")

    copies = cfg.density_copies
    dim = parts.dim
    times = t0 * np.arange(2**n) / copies
    r_blocks = hamiltonian_sim.controlled_star_blocks(parts.expected_return, 1, dim, times, d)
    pi_blocks = hamiltonian_sim.controlled_star_blocks(parts.budget_vector, 2, dim, times, d)
    rho_sys = np.zeros((d, d))
    rho_sys[2:dim, 2:dim] = parts.sigma_density().matrix.real
    angles = parts.tau_scale * times

    # Π, R, Σ 순서로 적용하면 행렬 곱 e^{−iH_Σ} e^{−iH_R} e^{−iH_Π} 가 된다
    for _ in range(copies):
        rho = qsim_core.apply_block_diagonal_density(rho, "phase", "sys", pi_blocks)
        rho = qsim_core.apply_block_diagonal_density(rho, "phase", "sys", r_blocks)
        rho = hamiltonian_sim.controlled_density_step(rho, rho_sys, "phase", "sys", angles)
    rho = qsim_core.apply_unitary_density(rho, LinalgUtils.qft_matrix(n), "phase")

    rho = qsim_core.apply_block_diagonal_density(
        rho, "phase", "anc", _inversion_blocks(n, t0, cfg.kappa, cfg.c_value)
    )

    rho = qsim_core.apply_unitary_density(rho, LinalgUtils.qft_matrix(n).conj().T, "phase")
    r_inv = r_blocks.conj().transpose(0, 2, 1)
    pi_inv = pi_blocks.conj().transpose(0, 2, 1)
    for _ in range(copies):
        rho = hamiltonian_sim.controlled_density_step(rho, rho_sys, "phase", "sys", -angles)
        rho = qsim_core.apply_block_diagonal_density(rho, "phase", "sys", r_inv)
        rho = qsim_core.apply_block_diagonal_density(rho, "phase", "sys", pi_inv)
    rho = qsim_core.apply_unitary_density(rho, hadamard, "phase")

    rho, p_w = qsim_core.postselect_density(rho, "anc", 1)
    rho, p_phase = qsim_core.postselect_density(rho, "phase", 0)
    return rho, p_w, p_phase


def _dominant_state(rho: DensityMatrix) -> QuantumState:
    evals, evecs = linalg.eigh(rho.matrix)
    vec = evecs[:, int(np.argmax(evals))]
    k = int(np.argmax(np.abs(vec)))
    vec = vec * np.conj(vec[k]) / abs(vec[k])
    return QuantumState(amplitudes=vec / np.linalg.norm(vec), layout=rho.layout)


def hhl_linear_solve(
    matrix,
    rhs,
    cfg: HHLConfig,
    parts: HamiltonianParts | None = None,
    trace_sigma: float = 1.0,
) -> HHLResult:
    """
    대칭 행렬 M̂ 와 우변 b 에 대한 HHL

    trotter / density_exp 백엔드는 KKT 분해(parts)가 필요하다.
    """
    m_hat = CommonValidators.validate_symmetric(matrix, "M̂")
    dim = m_hat.shape[0]
    b = CommonValidators.validate_vector(rhs, "b", dim)
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0:
        raise InvalidInputError("zero vector")
    if cfg.evolution_backend != "exact" and parts is None:
        raise ConfigurationError(f"{cfg.evolution_backend} backend needs a KKT decomposition")

    d = LinalgUtils.next_pow2(dim)
    m_pad = LinalgUtils.pad_matrix(m_hat, d)
    b_pad = LinalgUtils.pad_vector(b, d)
    n = cfg.n_phase_bits
    t0 = cfg.t0 if cfg.t0 is not None else auto_t0(m_pad)
    c_value = cfg.c_value

    warnings: list[str] = []
    evals = linalg.eigvalsh(m_hat)
    max_phase = float(np.max(np.abs(evals))) * t0 / (2.0 * math.pi)
    if max_phase >= 0.5:
        message = f"phase aliasing: max |λ|·t0/2π = {max_phase:.4f} ≥ 1/2"
        logger.warning(message)
        warnings.append(message)

    spectrum = [
        SpectralComponent(lambda_=lam, beta=beta, retained=abs(lam) >= 1.0 / cfg.kappa)
        for lam, beta in portfolio_qp.spectrum(m_hat, b)
    ]
    x_kappa, epsilon_kappa = portfolio_qp.pseudo_inverse_kappa(m_hat, b, cfg.kappa)

    effective = None
    solution_density = None
    evolution_error = 0.0
    if cfg.evolution_backend == "density_exp":
        rho, p_w, p_phase = _solve_density(parts, b_pad, cfg, t0)
        solution_density = rho.matrix
        solution_state = _dominant_state(rho)
        exact_state, _, _ = _solve_pure(_exact_blocks(m_pad, t0, n), b_pad, cfg, t0)
        evolution_error = LinalgUtils.trace_distance(
            rho.matrix, np.outer(exact_state.amplitudes, exact_state.amplitudes.conj())
        )
    else:
        if cfg.evolution_backend == "trotter":
            blocks, evolution_error = _trotter_blocks(parts, m_pad, t0, n, cfg.trotter_steps)
        else:
            blocks = _exact_blocks(m_pad, t0, n)
        solution_state, p_w, p_phase = _solve_pure(blocks, b_pad, cfg, t0)

    if parts is not None:
        try:
            effective = hamiltonian_sim.effective_rank(
                parts.sigma_density(), parts.tau_scale * t0 * 2**n
            )
        except ValueError:
            effective = None

    x_norm = float(np.linalg.norm(x_kappa))
    if x_norm > 0:
        overlap = np.vdot(solution_state.amplitudes[:dim], x_kappa / x_norm)
        fidelity = float(min(abs(overlap) ** 2, 1.0))
    else:
        fidelity = 0.0

    rescale = math.sqrt(p_w) * b_norm / c_value * trace_sigma
    logger.info(
        f"HHL 완료: backend={cfg.evolution_backend}, bits={n}, κ={cfg.kappa:.4g}, "
        f"p_w={p_w:.4e}, fidelity={fidelity:.6f}"
    )
    return HHLResult(
        solution_state=solution_state,
        dim=dim,
        p_w=min(p_w, 1.0),
        rescale=rescale,
        spectrum=spectrum,
        epsilon_kappa=epsilon_kappa,
        fidelity_vs_oracle=fidelity,
        phase_success_probability=min(p_phase, 1.0),
        kappa=cfg.kappa,
        c_constant=c_value,
        t0=t0,
        n_phase_bits=n,
        backend=cfg.evolution_backend,
        evolution_error=evolution_error,
        effective_rank=effective,
        rhs_norm=b_norm,
        trace_sigma=trace_sigma,
        solution_density=solution_density,
        warnings=warnings,
    )


def hhl_solve(kkt: KKTSystem, cfg: HHLConfig) -> HHLResult:
    """prepare_rhs → phase_estimation → eigenvalue_inversion → 언컴퓨트 → anc=1 사후 선택"""
    try:
        parts = hamiltonian_sim.decompose_kkt(kkt, t_total=cfg.t0 or 1.0, n_steps=cfg.trotter_steps)
    except ValueError:
        # 음의 대각합 Σ 는 정확한 백엔드에서만 허용
        if cfg.evolution_backend != "exact":
            raise
        parts = None
    return hhl_linear_solve(
        kkt.m_hat, kkt.rhs, cfg, parts=parts, trace_sigma=float(np.trace(kkt.covariance))
    )


# ---------------------------------------------------------------------------
# 판독 / 단위 환산
# ---------------------------------------------------------------------------

def rescale_factor(p_w: float, mu: float, xi: float, c_constant: float, trace_sigma: float) -> float:
    """√(p_w(μ²+ξ²)/C²)·trΣ"""
    p_w = CommonValidators.validate_positive(p_w, "p_w")
    c_constant = CommonValidators.validate_positive(c_constant, "c_constant")
    return math.sqrt(p_w * (mu**2 + xi**2) / c_constant**2) * trace_sigma


def extract_w(result: HHLResult) -> tuple[QuantumState, float]:
    """자산 블록(성분 3..N+2)으로 사영하고 재정규화"""
    block = result.solution_vector()[2:]
    prob = float(np.sum(np.abs(block) ** 2))
    if block.size == 0 or prob < qsim_core.NULL_BRANCH_TOL:
        raise NullBranchError("zero asset block")
    return qsim_core.encode_vector(block, "w"), prob


def physical_solution(result: HHLResult, kkt: KKTSystem) -> PortfolioSolution:
    """
    정규화된 해를 통화 단위 (η, θ, w) 로 환산: x = rescale·x̂/(trΣ)²

    전역 위상은 가장 큰 성분을 실수 양수로 만든 뒤 bᵀMx > 0 이 되도록 부호를 정한다.
    """
    x_hat = result.solution_vector()
    k = int(np.argmax(np.abs(x_hat)))
    x_hat = np.real(x_hat * np.conj(x_hat[k]) / abs(x_hat[k]))
    x = result.rescale * x_hat / result.trace_sigma**2
    if float(kkt.rhs @ (kkt.m_matrix @ x)) < 0:
        x = -x
    w = x[2:]
    return PortfolioSolution(
        eta=float(x[0]),
        theta=float(x[1]),
        weights=w,
        achieved_return=float(kkt.expected_return @ w),
        achieved_budget=float(kkt.budget_vector @ w),
        risk=max(portfolio_qp.portfolio_risk(w, kkt.covariance), 0.0),
        kappa_used=result.kappa,
        epsilon_kappa=result.epsilon_kappa,
    )
