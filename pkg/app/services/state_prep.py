"""
상태 준비 서비스

qRAM 쿼리 모델을 시뮬레이션하고 입력 상태 |χ⟩, |R⟩, |χ̃⟩ 와 공분산 밀도 행렬,
KP 부분노름 트리 기반 결정적 준비를 구성한다.
"""

import logging
import math
from collections.abc import Sequence

import numpy as np
from scipy import linalg

from app.errors import DimensionMismatchError, InvalidInputError, NullBranchError, RotationOverflowError
from app.schemas.market import PriceSeries, ReturnsPanel
from app.schemas.quantum import DensityMatrix, QuantumState, RegisterLayout
from app.schemas.state_prep import (
    KPTree,
    PrepOutcome,
    QramOracle,
    SparsityOracle,
    TraceSigmaEstimate,
)
from app.services import qsim_core
from app.utils.linalg_utils import LinalgUtils
from app.validators import CommonValidators

logger = logging.getLogger(__name__)

ROTATION_TOL = 1e-12


# ---------------------------------------------------------------------------
# qRAM 오라클
# ---------------------------------------------------------------------------

def quantize(values, m_frac: int | None, scale: float = 1.0) -> np.ndarray:
    """round(v/scale·2^m)/2^m·scale, m_frac 이 없으면 그대로"""
    values = np.asarray(values, dtype=float)
    if m_frac is None:
        return values.copy()
    step = 2.0**m_frac
    return np.round(values / scale * step) / step * scale


def build_oracle(table, m_frac: int | None = None, scale: float = 1.0) -> QramOracle:
    """값 테이블에서 코드북 오라클 생성"""
    table = np.asarray(table, dtype=float)
    if not np.all(np.isfinite(table)):
        raise InvalidInputError("oracle table contains non-finite entries")
    quantized = quantize(table, m_frac, scale)
    distinct = np.unique(quantized[quantized != 0.0])
    codebook = np.concatenate([[0.0], distinct])
    codes = np.zeros(table.shape, dtype=np.int64)
    nonzero = quantized != 0.0
    codes[nonzero] = np.searchsorted(distinct, quantized[nonzero]) + 1

    if m_frac is None:
        m_bits = 64
    else:
        top = float(np.max(np.abs(quantized), initial=0.0)) / scale
        m_bits = 1 + m_frac + max(int(math.ceil(math.log2(top + 1.0))), 0)
    return QramOracle(
        table=table,
        m_bits=m_bits,
        m_frac=m_frac,
        scale=scale,
        codebook=codebook,
        codes=codes,
        data_width=max(LinalgUtils.n_qubits_for(len(codebook)), 1),
    )


def price_oracle(prices: PriceSeries, m_frac: int | None = None) -> QramOracle:
    """|t⟩|s⟩|0⟩ → |t⟩|s⟩|Π_s(t)⟩ (테이블 모양 T′×N)"""
    return build_oracle(prices.prices.T, m_frac)


def returns_oracle(prices: PriceSeries, dt_period: int = 1, m_frac: int | None = None) -> QramOracle:
    """
    가격 단어에서 가역적으로 계산한 수익률 오라클

    가격 오라클이 돌려주는 (양자화된) 가격으로 y_s(t) 를 계산한다.
    """
    if not 1 <= dt_period < prices.n_times:
        raise InvalidInputError(f"dt_period {dt_period} outside [1, {prices.n_times})")
    words = price_oracle(prices, m_frac).values
    y = (words[dt_period:] - words[:-dt_period]) / words[:-dt_period]
    return build_oracle(y, m_frac)


def covariance_element_oracle(sigma, m_frac: int | None = None) -> QramOracle:
    """|j, k⟩|0⟩ → |j, k⟩|Σ_jk⟩"""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise InvalidInputError(f"covariance must be square, got {sigma.shape}")
    return build_oracle(sigma, m_frac)


def sparsity_oracle(matrix, tol: float = 0.0) -> SparsityOracle:
    """행마다 비영 열을 앞에, 나머지 열을 뒤에 둔 순열 오라클"""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"matrix must be square, got {a.shape}")
    mask = np.abs(a) > tol
    perms = [np.concatenate([np.flatnonzero(row), np.flatnonzero(~row)]) for row in mask]
    return SparsityOracle(permutation=np.array(perms), sparsity=mask.sum(axis=1))


def oracle_query(
    o: QramOracle,
    s: QuantumState,
    index_register: str | Sequence[str],
    data_register: str,
    control: tuple[str, int] | None = None,
    uncompute: bool = False,
) -> QuantumState:
    """
    Σα_i|i⟩|0⟩ → Σα_i|i⟩|d_i⟩

    uncompute=True 는 같은 XOR 쿼리를 다시 적용해 데이터 레지스터를 비운다.
    """
    names = [index_register] if isinstance(index_register, str) else list(index_register)
    if len(names) != o.codes.ndim:
        raise InvalidInputError(
            f"oracle indexes {o.codes.ndim} registers, got {len(names)}", registers=names
        )
    shape = tuple(s.layout.register_dim(name) for name in names)
    if any(d < n for d, n in zip(shape, o.codes.shape)):
        raise InvalidInputError(f"index registers {names} too small for table {o.codes.shape}")
    return qsim_core.apply_xor_table(
        s, names, data_register, o.padded_codes(shape), control, require_clean=not uncompute
    )


def sparsity_query(o: SparsityOracle, s: QuantumState, row_register: str, col_register: str) -> QuantumState:
    """|i⟩|l⟩ → |i⟩|g(i, l)⟩ (행 레지스터로 제어되는 순열 블록)"""
    dim = s.layout.register_dim(row_register)
    if s.layout.register_dim(col_register) != dim or dim < o.n:
        raise InvalidInputError("row and column registers must match the oracle size")
    blocks = np.tile(np.eye(dim), (dim, 1, 1))
    for i, perm in enumerate(o.permutation):
        block = np.eye(dim)
        block[:, : o.n] = 0.0
        block[perm, np.arange(o.n)] = 1.0
        blocks[i] = block
    return qsim_core.apply_block_diagonal(s, row_register, col_register, blocks)


# ---------------------------------------------------------------------------
# 수익률 상태 준비
# ---------------------------------------------------------------------------

def _resolve_delta(values: np.ndarray, delta: float | None) -> float:
    top = float(np.max(np.abs(values), initial=0.0))
    if top == 0.0:
        raise NullBranchError("post-selection on null branch", reason="all-zero returns")
    if delta is None:
        return 1.0 / top
    delta = CommonValidators.validate_positive(delta, "delta")
    if delta * top > 1.0 + ROTATION_TOL:
        raise RotationOverflowError(f"delta·max|y| = {delta * top:.6g} exceeds 1", delta=delta)
    return float(delta)


def _panel_oracle(panel: ReturnsPanel, m_frac: int | None, oracle: QramOracle | None) -> QramOracle:
    """주어진 y_s(t) 오라클을 쓰거나 패널 수익률로 새로 만든다 (테이블 모양 T×N)"""
    if oracle is None:
        return build_oracle(panel.returns.T, m_frac)
    expected = (panel.n_times, panel.n_assets)
    if oracle.codes.shape != expected:
        raise DimensionMismatchError(
            f"returns oracle table is {oracle.codes.shape}, expected {expected}"
        )
    return oracle


def _index_layout(t: int, n: int, *extra: tuple[str, int]) -> RegisterLayout:
    return RegisterLayout.of(
        ("t", LinalgUtils.n_qubits_for(t)), ("s", LinalgUtils.n_qubits_for(n)), *extra
    )


def prepare_chi(
    panel: ReturnsPanel,
    delta: float | None = None,
    m_frac: int | None = None,
    oracle: QramOracle | None = None,
) -> PrepOutcome:
    """
    |χ⟩ = Σ_{t,s} y_s(t)/|y| |t⟩|s⟩ 준비

    균등 중첩 → 오라클 → δ·y 조건부 회전 → 언컴퓨트 → 보조 큐비트 |1⟩ 사후 선택.
    성공 확률은 δ²Σy²/(TN). oracle 이 주어지면 (예: returns_oracle) 그 값을 쓴다.
    """
    oracle = _panel_oracle(panel, m_frac, oracle)
    n, t = panel.n_assets, panel.n_times
    delta = _resolve_delta(oracle.values, delta)

    layout = _index_layout(t, n, ("c", oracle.data_width), ("a", 1))
    state = qsim_core.allocate_state(layout)
    state = qsim_core.uniform_transform(state, "t", t)
    state = qsim_core.uniform_transform(state, "s", n)
    state = oracle_query(oracle, state, ["t", "s"], "c")
    state = qsim_core.controlled_amplitude_rotation(state, "c", oracle.value_map, "a", delta)
    state = oracle_query(oracle, state, ["t", "s"], "c", uncompute=True)
    state, _ = qsim_core.postselect(state, "c", 0)
    state, prob = qsim_core.postselect(state, "a", 1)

    logger.debug(f"|χ⟩ 준비: N={n}, T={t}, δ={delta:.6g}, P_χ={prob:.6e}")
    return PrepOutcome(state=state, success_probability=prob, delta_used=delta, n_times=t, n_assets=n)


def prepare_R_state(chi: PrepOutcome, t_register: str = "t") -> PrepOutcome:
    """시간 레지스터 균등 변환 후 |0⟩ 사후 선택: |R⟩ ∝ Σ_s (Σ_t y_s(t))|s⟩, P_R = |y′|²/(T|y|²)"""
    state = qsim_core.uniform_transform(chi.state, t_register, chi.n_times)
    state, prob = qsim_core.postselect(state, t_register, 0)
    logger.debug(f"|R⟩ 준비: P_R={prob:.6e}")
    return PrepOutcome(
        state=state,
        success_probability=prob,
        delta_used=chi.delta_used,
        n_times=chi.n_times,
        n_assets=chi.n_assets,
    )


def prepare_chi_tilde(
    panel: ReturnsPanel,
    delta: float | None = None,
    m_frac: int | None = None,
    oracle: QramOracle | None = None,
) -> PrepOutcome:
    """
    평균 조정 수익률 |χ̃⟩ = Σ_{t,s} (y_s(t) − ȳ_s)/|ỹ| |t⟩|s⟩ 준비

    레지스터 t, s (인덱스), a (분기), b (시간 평균용 복사 인덱스), c (데이터),
    d, e (회전 보조 큐비트). a=1 분기는 평균 ȳ_s 를 d 에, a=0 분기는 y_s(t) 를
    e 에 기록한 뒤 (|0⟩+|1⟩)/√2 ⊗ |0⟩_b ⊗ |1⟩_d ⊗ |1⟩_e 로 사영하면 차이가 남는다.
    성공 확률은 δ²|ỹ|²/(4TN).
    """
    oracle = _panel_oracle(panel, m_frac, oracle)
    n, t = panel.n_assets, panel.n_times
    delta = _resolve_delta(oracle.values, delta)
    t_bits = LinalgUtils.n_qubits_for(t)

    layout = _index_layout(
        t, n, ("a", 1), ("b", t_bits), ("c", oracle.data_width), ("d", 1), ("e", 1)
    )
    state = qsim_core.allocate_state(layout)
    state = qsim_core.uniform_transform(state, "t", t)
    state = qsim_core.uniform_transform(state, "s", n)
    # 평균 분기(a=1)에 −1 부호
    state = qsim_core.hadamard_all(state, "a")
    state = qsim_core.pauli_z(state, "a")

    # a=1: d 에 δ·ȳ_s
    state = qsim_core.uniform_transform(state, "b", t, control=("a", 1))
    state = oracle_query(oracle, state, ["b", "s"], "c", control=("a", 1))
    state = qsim_core.controlled_amplitude_rotation(
        state, "c", oracle.value_map, "d", delta, control=("a", 1)
    )
    state = qsim_core.pauli_x(state, "d", control=("a", 0))
    state = oracle_query(oracle, state, ["b", "s"], "c", control=("a", 1), uncompute=True)
    state = qsim_core.uniform_transform(state, "b", t, control=("a", 1))

    # a=0: e 에 δ·y_s(t)
    state = oracle_query(oracle, state, ["t", "s"], "c", control=("a", 0))
    state = qsim_core.controlled_amplitude_rotation(
        state, "c", oracle.value_map, "e", delta, control=("a", 0)
    )
    state = oracle_query(oracle, state, ["t", "s"], "c", control=("a", 0), uncompute=True)
    state = qsim_core.pauli_x(state, "e", control=("a", 1))

    state, _ = qsim_core.postselect(state, "c", 0)
    plus = np.array([1.0, 1.0]) / math.sqrt(2.0)
    target = np.kron(np.kron(plus, np.eye(2**t_bits)[0]), np.kron([0.0, 1.0], [0.0, 1.0]))
    state, prob = qsim_core.postselect_projector(state, ["a", "b", "d", "e"], target)

    logger.debug(f"|χ̃⟩ 준비: N={n}, T={t}, δ={delta:.6g}, P_χ̃={prob:.6e}")
    return PrepOutcome(state=state, success_probability=prob, delta_used=delta, n_times=t, n_assets=n)


def covariance_density(chi_tilde: PrepOutcome) -> DensityMatrix:
    """시간 레지스터 부분 대각합: ρ = Σ/trΣ (N×N 로 잘라냄)"""
    rho = qsim_core.partial_trace(chi_tilde.state, "t")
    n = chi_tilde.n_assets
    block = rho.matrix[:n, :n]
    return DensityMatrix(matrix=(block + block.conj().T) / 2)


def estimate_trace_sigma(p_chi_tilde: float, delta: float, n_times: int, n_assets: int) -> float:
    """trΣ = 4TN·P_χ̃ / (δ²(T−1))"""
    if n_times == 1:
        raise InvalidInputError("trace estimate needs T ≥ 2")
    if p_chi_tilde < 0 or delta <= 0 or n_times < 1 or n_assets < 1:
        raise InvalidInputError("trace estimate inputs must be positive")
    return 4.0 * n_times * n_assets * p_chi_tilde / (delta**2 * (n_times - 1))


def estimate_trace_sigma_from_trials(
    outcome: PrepOutcome, shots: int, seed: int
) -> TraceSigmaEstimate:
    """사후 선택 성공을 Bernoulli 시행으로 샘플링해 trΣ 와 이항 표준오차 추정"""
    if shots < 1:
        raise InvalidInputError(f"shots must be >= 1, got {shots}")
    rng = np.random.default_rng(seed)
    p_hat = float(rng.binomial(shots, outcome.success_probability)) / shots
    factor = estimate_trace_sigma(1.0, outcome.delta_used, outcome.n_times, outcome.n_assets)
    return TraceSigmaEstimate(
        trace_sigma=factor * p_hat,
        std_error=factor * math.sqrt(p_hat * (1.0 - p_hat) / shots),
        p_hat=p_hat,
        shots=shots,
    )


# ---------------------------------------------------------------------------
# KP 트리
# ---------------------------------------------------------------------------

def _levels_from_leaves(leaves: np.ndarray, depth: int) -> list[np.ndarray]:
    levels = [leaves]
    for _ in range(depth):
        child = levels[0]
        levels.insert(0, child[0::2] + child[1::2])
    return levels


def kp_build(v, m_frac: int | None = None) -> KPTree:
    """잎에 v_i² 와 부호, 내부 노드에 자식 합을 저장한 트리 (O(N))"""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size == 0 or not np.any(v != 0):
        raise InvalidInputError("zero vector")
    depth = LinalgUtils.n_qubits_for(v.size)
    squares = v**2
    scale = float(squares.max())
    if m_frac is not None:
        squares = quantize(squares, m_frac, scale)
    leaves = LinalgUtils.pad_vector(squares, 2**depth)
    return KPTree(
        depth=depth,
        levels=_levels_from_leaves(leaves, depth),
        leaf_signs=np.where(v < 0, -1.0, 1.0),
        n=v.size,
        m_frac=m_frac,
        scale=scale,
    )


def kp_update(tree: KPTree, index: int, new_value: float) -> KPTree:
    """잎 하나를 바꾸고 루트까지의 경로만 다시 계산한 새 트리"""
    if not 0 <= index < tree.n:
        raise InvalidInputError(f"index {index} out of range [0, {tree.n})")
    levels = [level.copy() for level in tree.levels]
    signs = tree.leaf_signs.copy()
    leaf = float(new_value) ** 2
    if tree.m_frac is not None:
        leaf = float(quantize(leaf, tree.m_frac, tree.scale))
    levels[tree.depth][index] = leaf
    signs[index] = -1.0 if new_value < 0 else 1.0
    node = index
    for level in range(tree.depth - 1, -1, -1):
        node //= 2
        levels[level][node] = levels[level + 1][2 * node] + levels[level + 1][2 * node + 1]
    return KPTree(
        depth=tree.depth,
        levels=levels,
        leaf_signs=signs,
        n=tree.n,
        m_frac=tree.m_frac,
        scale=tree.scale,
    )


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]])


def _level_rotations(tree: KPTree, level: int) -> np.ndarray:
    children = tree.levels[level + 1]
    thetas = 2.0 * np.arctan2(np.sqrt(children[1::2]), np.sqrt(children[0::2]))
    return np.array([_rotation(theta) for theta in thetas])


def _padded_signs(tree: KPTree) -> np.ndarray:
    signs = np.ones(2**tree.depth)
    signs[: tree.n] = tree.leaf_signs
    return signs


def kp_prepare(tree: KPTree, register: str = "q") -> QuantumState:
    """
    결정적 준비: 레벨마다 상위 큐비트 값으로 제어되는 2차원 회전, 잎에서 부호 적용

    사후 선택 없이 sign_i·|v_i|/‖v‖ 를 만든다.
    """
    if tree.root <= 0:
        raise InvalidInputError("zero vector")
    amps = np.zeros(2**tree.depth, dtype=complex)
    amps[0] = 1.0
    for level in range(tree.depth):
        layout = RegisterLayout.of(
            ("prefix", level), ("q", 1), ("rest", tree.depth - level - 1)
        )
        state = QuantumState(amplitudes=amps, layout=layout)
        state = qsim_core.apply_block_diagonal(state, "prefix", "q", _level_rotations(tree, level))
        amps = state.amplitudes
    state = QuantumState(amplitudes=amps, layout=RegisterLayout.of((register, tree.depth)))
    return qsim_core.apply_unitary(state, np.diag(_padded_signs(tree)), register, check=False)


def kp_unitary(tree: KPTree) -> np.ndarray:
    """회전 계단과 부호를 곱한 2^depth 차원 직교 행렬 (첫 열 = v/‖v‖)"""
    dim = 2**tree.depth
    u = np.eye(dim)
    for level in range(tree.depth):
        rest = np.eye(2 ** (tree.depth - level - 1))
        step = linalg.block_diag(*[np.kron(r, rest) for r in _level_rotations(tree, level)])
        u = step @ u
    return np.diag(_padded_signs(tree)) @ u
