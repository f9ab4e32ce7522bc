"""
해밀토니안 시뮬레이션 서비스

M̂ 를 H_Σ, H_R, H_Π 세 부분으로 나누고 각각의 시간 진화를 만든다.
H_Σ 는 밀도 행렬 지수화(부분 SWAP), H_R/H_Π 는 별 그래프 고유기저의
닫힌 형태 지수, 전체는 1차 Lie–Trotter 곱으로 합성한다.
"""

import logging
import math
from collections.abc import Callable, Sequence

import numpy as np
from scipy import linalg

from app.errors import DimensionMismatchError, InvalidInputError
from app.schemas.hamiltonian import HamiltonianParts, SimulatedEvolution
from app.schemas.portfolio import KKTSystem
from app.schemas.quantum import DensityMatrix
from app.services import state_prep
from app.utils.linalg_utils import LinalgUtils
from app.validators import CommonValidators

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# 분해
# ---------------------------------------------------------------------------

def star_matrix(v, center: int, dim: int) -> np.ndarray:
    """center 행/열 꼬리에 v 를 둔 (N+2)×(N+2) 별 그래프 행렬 (center 는 1 또는 2)"""
    v = _check_star(v, center, dim, allow_zero=True)
    h = np.zeros((dim, dim))
    h[center - 1, 2:] = h[2:, center - 1] = v
    return h


def decompose_kkt(kkt: KKTSystem, t_total: float = 1.0, n_steps: int = 1) -> HamiltonianParts:
    """M̂ = (Σ ⊕ 0)/trM + star(R)/trM + star(Π)/trM"""
    if n_steps < 1:
        raise InvalidInputError(f"n_steps must be >= 1, got {n_steps}")
    dim = kkt.dim
    trace_m = kkt.trace
    h_sigma = np.zeros((dim, dim))
    h_sigma[2:, 2:] = kkt.covariance / trace_m
    return HamiltonianParts(
        h_sigma=h_sigma,
        h_r=star_matrix(kkt.expected_return, 1, dim) / trace_m,
        h_pi=star_matrix(kkt.budget_vector, 2, dim) / trace_m,
        trace_m=trace_m,
        trace_sigma=float(np.trace(kkt.covariance)),
        trotter_dt=t_total / n_steps,
        n_steps=n_steps,
    )


# ---------------------------------------------------------------------------
# 밀도 행렬 지수화
# ---------------------------------------------------------------------------

def _partial_swap(dim: int, dt: float) -> np.ndarray:
    # S² = I 이므로 e^{−iS·dt} = cos(dt)·I − i·sin(dt)·S
    return math.cos(dt) * np.eye(dim * dim) - 1j * math.sin(dt) * LinalgUtils.swap_operator(dim)


def density_exponentiation_step(rho: DensityMatrix, sigma: DensityMatrix, dt: float) -> DensityMatrix:
    """tr₁{e^{−iS·dt} (ρ ⊗ σ) e^{iS·dt}} 를 두 배 공간에서 정확히 계산"""
    if rho.dim != sigma.dim:
        raise DimensionMismatchError(f"ρ is {rho.dim}-dimensional, σ is {sigma.dim}-dimensional")
    d = rho.dim
    u = _partial_swap(d, dt)
    joint = u @ np.kron(rho.matrix, sigma.matrix) @ u.conj().T
    out = np.einsum("ijik->jk", joint.reshape(d, d, d, d))
    return DensityMatrix(matrix=(out + out.conj().T) / 2, layout=sigma.layout)


def simulate_density_hamiltonian(
    rho: DensityMatrix, sigma0: DensityMatrix, t: float, n_copies: int
) -> DensityMatrix:
    """ρ 사본 n_copies 개로 e^{−iρt} σ0 e^{iρt} 근사 (스텝당 dt = t/n_copies)"""
    if n_copies < 1:
        raise InvalidInputError(f"n_copies must be >= 1, got {n_copies}")
    dt = t / n_copies
    state = sigma0
    for _ in range(n_copies):
        state = density_exponentiation_step(rho, state, dt)
    return state


def density_exponentiation_error(
    rho: DensityMatrix, sigma0: DensityMatrix, t: float, n_copies: int
) -> float:
    """정확한 e^{−iρt}σ0e^{iρt} 와의 대각합 거리"""
    approx = simulate_density_hamiltonian(rho, sigma0, t, n_copies)
    u = LinalgUtils.hermitian_expm(rho.matrix, t)
    exact = u @ sigma0.matrix @ u.conj().T
    return LinalgUtils.trace_distance(approx.matrix, exact)


def controlled_density_step(
    x: DensityMatrix, rho: np.ndarray, control: str, target: str, angles: np.ndarray
) -> DensityMatrix:
    """
    제어 레지스터 값 j 마다 각도 Δ_j 의 부분 SWAP 을 ρ 사본과 적용한 뒤 사본을 대각합

    블록 (j, j′) 은 c_j c_j′ X + i c_j s_j′ Xρ − i s_j c_j′ ρX + s_j s_j′ (tr_D X) ⊗ ρ 가 된다.
    """
    layout = x.layout
    if layout is None:
        raise DimensionMismatchError("controlled step needs a register layout")
    c_axis = layout.index(control)
    t_axis = layout.index(target)
    dims = layout.dims
    n = len(dims)
    n_ctrl, d = dims[c_axis], dims[t_axis]
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d, d):
        raise DimensionMismatchError(f"ρ of shape {rho.shape} does not act on register {target}")
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (n_ctrl,):
        raise DimensionMismatchError(f"expected {n_ctrl} angles, got {angles.shape}")

    others = [i for i in range(n) if i not in (c_axis, t_axis)]
    order = [c_axis, t_axis, *others]
    perm = order + [i + n for i in order]
    rest = int(np.prod([dims[i] for i in others]))
    tensor = np.transpose(x.matrix.reshape(dims + dims), perm)
    shape = tensor.shape
    xt = tensor.reshape(n_ctrl, d, rest, n_ctrl, d, rest)

    c = np.cos(angles)[:, None, None, None, None, None]
    s = np.sin(angles)[:, None, None, None, None, None]
    cc = np.cos(angles)[None, None, None, :, None, None]
    sc = np.sin(angles)[None, None, None, :, None, None]

    x_rho = np.einsum("jarkbs,bc->jarkcs", xt, rho)
    rho_x = np.einsum("ab,jbrkcs->jarkcs", rho, xt)
    traced = np.einsum("jarkas->jrks", xt)
    swapped = np.einsum("jrks,ab->jarkbs", traced, rho)
    out = c * cc * xt + 1j * c * sc * x_rho - 1j * s * cc * rho_x + s * sc * swapped

    out = np.transpose(out.reshape(shape), np.argsort(perm)).reshape(layout.dim, layout.dim)
    # 채널 출력은 구성상 밀도 행렬
    return DensityMatrix.model_construct(matrix=(out + out.conj().T) / 2, layout=layout)


def effective_rank(rho: DensityMatrix, t: float) -> int:
    """시간 t 에서 실효적으로 시뮬레이션되는 고윳값 수 (λ ≥ 1/t²)"""
    if t <= 0:
        return 0
    return int(np.sum(rho.eigenvalues() >= 1.0 / t**2))


# ---------------------------------------------------------------------------
# 별 그래프
# ---------------------------------------------------------------------------

def _check_star(v, center: int, dim: int, allow_zero: bool = False) -> np.ndarray:
    v = CommonValidators.validate_vector(v, "v")
    if center not in (1, 2):
        raise InvalidInputError(f"center must be 1 or 2, got {center}")
    if dim != v.shape[0] + 2:
        raise DimensionMismatchError(f"dim must be len(v) + 2 = {v.shape[0] + 2}, got {dim}")
    if not allow_zero and not np.any(v != 0):
        raise InvalidInputError("zero vector")
    return v


def star_eigensystem(v, center: int, dim: int) -> tuple[float, float, np.ndarray, np.ndarray]:
    """λ± = ±‖v‖, 고유벡터 (|center⟩ + (1/λ±)Σ v_s|s+2⟩)/√2"""
    v = _check_star(v, center, dim)
    lam = float(np.linalg.norm(v))
    vecs = []
    for sign in (1.0, -1.0):
        vec = np.zeros(dim)
        vec[center - 1] = 1.0
        vec[2:] = v / (sign * lam)
        vecs.append(vec / math.sqrt(2.0))
    return lam, -lam, vecs[0], vecs[1]


def star_exponential(v, center: int, dim: int, t: float) -> np.ndarray:
    """
    고유기저 변환으로 만든 e^{−iH_star t}

    |center⟩ 와 |3⟩ 사이 Hadamard 혼합, |3⟩ → |v̂⟩ 회전 계단(KP), 두 고유벡터에
    위상 e^{∓i‖v‖t}, 역변환 순서. 자산 블록은 2의 거듭제곱으로 패딩 후 잘라낸다.
    """
    v = _check_star(v, center, dim)
    lam = float(np.linalg.norm(v))
    kp = state_prep.kp_unitary(state_prep.kp_build(v))
    work = 2 + kp.shape[0]
    c = center - 1

    mix = np.eye(work)
    mix[c, c] = mix[2, c] = mix[c, 2] = 1.0 / math.sqrt(2.0)
    mix[2, 2] = -1.0 / math.sqrt(2.0)
    q = linalg.block_diag(np.eye(2), kp) @ mix

    phases = np.ones(work, dtype=complex)
    phases[c] = np.exp(-1j * lam * t)
    phases[2] = np.exp(1j * lam * t)
    u = (q * phases) @ q.T
    return u[:dim, :dim]


def star_factor(v: np.ndarray, center: int, dim: int, t: float) -> np.ndarray:
    if not np.any(v != 0):
        return np.eye(dim, dtype=complex)
    return star_exponential(v, center, dim, t)


# ---------------------------------------------------------------------------
# 시간 진화
# ---------------------------------------------------------------------------

def trotter_step(parts: HamiltonianParts, dt: float) -> np.ndarray:
    """e^{−iH_Σ dt} e^{−iH_R dt} e^{−iH_Π dt}"""
    dim = parts.dim
    return (
        LinalgUtils.hermitian_expm(parts.h_sigma, dt)
        @ star_factor(parts.expected_return, 1, dim, dt)
        @ star_factor(parts.budget_vector, 2, dim, dt)
    )


def exact_evolution(m_hat, t: float) -> SimulatedEvolution:
    m_hat = CommonValidators.validate_symmetric(m_hat, "M̂")
    return SimulatedEvolution(
        method="exact", t_total=t, unitary=LinalgUtils.hermitian_expm(m_hat, t)
    )


def trotter_evolution(parts: HamiltonianParts, t: float, n_steps: int) -> SimulatedEvolution:
    """1차 Lie 곱 공식, error_bound 는 정확한 e^{−iM̂t} 와의 연산자 노름 거리"""
    if n_steps < 1:
        raise InvalidInputError(f"n_steps must be >= 1, got {n_steps}")
    u = np.linalg.matrix_power(trotter_step(parts, t / n_steps), n_steps)
    exact = LinalgUtils.hermitian_expm(parts.total(), t)
    error = LinalgUtils.operator_norm(u - exact)
    logger.debug(f"Trotter 진화: t={t:.4g}, steps={n_steps}, error={error:.3e}")
    return SimulatedEvolution(
        method="trotter", t_total=t, n_steps=n_steps, error_bound=error, unitary=u
    )


def power_of_two_times(t0: float, n_bits: int) -> list[float]:
    return [t0 * 2**k for k in range(n_bits)]


def controlled_evolution(unitaries: Sequence[np.ndarray]) -> np.ndarray:
    """
    U(t_k), t_k = t0·2^k 로부터 Σ_j |j⟩⟨j| ⊗ Π_k U(t_k)^{j_k} 블록 생성

    제어 값 j 의 k 번째 비트(LSB 가 k=0)가 U(t_k) 적용 여부를 정한다.
    """
    if not unitaries:
        raise InvalidInputError("at least one controlled evolution is required")
    dim = unitaries[0].shape[0]
    for u in unitaries:
        if u.shape != (dim, dim):
            raise DimensionMismatchError("controlled evolutions must share a dimension")
    n_bits = len(unitaries)
    blocks = np.empty((2**n_bits, dim, dim), dtype=complex)
    blocks[0] = np.eye(dim)
    for k, u in enumerate(unitaries):
        half = 2**k
        blocks[half : 2 * half] = u @ blocks[:half]
    return blocks


def evolution_blocks(
    evolve: Callable[[float], np.ndarray], t0: float, n_bits: int
) -> np.ndarray:
    """evolve(t) 로 2의 거듭제곱 시간 유니터리를 만들어 controlled_evolution 에 전달"""
    return controlled_evolution([evolve(t) for t in power_of_two_times(t0, n_bits)])


def embed_unitary(u: np.ndarray, dim: int) -> np.ndarray:
    """패딩 차원에는 항등을 두는 임베딩"""
    out = np.eye(dim, dtype=complex)
    out[: u.shape[0], : u.shape[1]] = u
    return out


def controlled_star_blocks(
    v: np.ndarray, center: int, dim: int, times: np.ndarray, pad_dim: int
) -> np.ndarray:
    """제어 값 j 마다 e^{−iH_star·times[j]} 를 pad_dim 으로 임베딩한 블록"""
    return np.array([embed_unitary(star_factor(v, center, dim, float(t)), pad_dim) for t in times])
