"""
밀집 상태 벡터 / 밀도 행렬 시뮬레이터

이름 있는 레지스터 단위로 게이트 적용, 사후 선택, 부분 대각합, 샘플링을 제공한다.
진폭 텐서는 레지스터마다 하나의 축을 가지며 배치 순서대로 최상위 자리부터 놓인다.
"""

import logging
from collections.abc import Callable, Mapping, Sequence

import numpy as np

from app.errors import (
    DimensionMismatchError,
    InvalidInputError,
    NullBranchError,
    RegisterError,
    RotationOverflowError,
)
from app.schemas.quantum import DensityMatrix, QuantumState, RegisterLayout
from app.utils.linalg_utils import LinalgUtils
from app.validators import CommonValidators

logger = logging.getLogger(__name__)

NULL_BRANCH_TOL = 1e-14
ROTATION_TOL = 1e-12
CLEAN_TOL = 1e-12

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]])

Control = tuple[str, int]


# ---------------------------------------------------------------------------
# 텐서 프리미티브
# ---------------------------------------------------------------------------

def _apply_to_axes(tensor: np.ndarray, mat: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """tensor 의 axes 축들(앞쪽이 최상위)에 행렬 mat 적용"""
    k = len(axes)
    moved = np.moveaxis(tensor, list(axes), list(range(k)))
    shape = moved.shape
    d = int(np.prod(shape[:k]))
    out = (mat @ moved.reshape(d, -1)).reshape(shape)
    return np.moveaxis(out, list(range(k)), list(axes))


def _on_branch(
    tensor: np.ndarray,
    control: tuple[int, int] | None,
    axes: Sequence[int],
    fn: Callable[[np.ndarray, list[int]], np.ndarray],
) -> np.ndarray:
    """control=(축, 값) 분기에서만 fn 을 적용"""
    if control is None:
        return fn(tensor, list(axes))
    c_axis, value = control
    if c_axis in axes:
        raise RegisterError("control register cannot also be a target")
    idx: list = [slice(None)] * tensor.ndim
    idx[c_axis] = value
    adjusted = [a - 1 if a > c_axis else a for a in axes]
    out = np.array(tensor, dtype=complex, copy=True)
    out[tuple(idx)] = fn(tensor[tuple(idx)], adjusted)
    return out


def _resolve_control(layout: RegisterLayout, control: Control | None) -> tuple[int, int] | None:
    if control is None:
        return None
    name, value = control
    axis = layout.index(name)
    if not 0 <= value < layout.dims[axis]:
        raise RegisterError(f"control value {value} outside register {name}")
    return axis, value


def _targets(layout: RegisterLayout, targets: str | Sequence[str]) -> list[int]:
    names = [targets] if isinstance(targets, str) else list(targets)
    if len(set(names)) != len(names):
        raise RegisterError(f"repeated target registers: {names}")
    return [layout.index(name) for name in names]


def _rebuild(tensor: np.ndarray, layout: RegisterLayout) -> QuantumState:
    return QuantumState(amplitudes=np.asarray(tensor, dtype=complex).reshape(-1), layout=layout)


# ---------------------------------------------------------------------------
# 상태 생성
# ---------------------------------------------------------------------------

def allocate_state(layout: RegisterLayout) -> QuantumState:
    """|0…0⟩ 상태 할당"""
    amps = np.zeros(layout.dim, dtype=complex)
    amps[0] = 1.0
    logger.debug(f"상태 할당: {layout.registers} ({layout.total_qubits} qubits)")
    return QuantumState(amplitudes=amps, layout=layout)


def encode_vector(vec, register: str, n_qubits: int | None = None) -> QuantumState:
    """정규화된 고전 벡터를 단일 레지스터 진폭으로 (부족한 자리는 0 으로 채움)"""
    arr = np.asarray(vec, dtype=complex).reshape(-1)
    norm = np.linalg.norm(arr)
    if norm == 0:
        raise NullBranchError("cannot encode the zero vector")
    n = LinalgUtils.n_qubits_for(len(arr)) if n_qubits is None else n_qubits
    if 2**n < len(arr):
        raise DimensionMismatchError(f"{len(arr)} amplitudes do not fit in {n} qubits")
    amps = LinalgUtils.pad_vector(arr / norm, 2**n)
    return QuantumState(amplitudes=amps, layout=RegisterLayout.of((register, n)))


def tensor_product(*states: QuantumState) -> QuantumState:
    """서로 다른 레지스터를 가진 상태들의 곱상태"""
    layout = states[0].layout
    amps = states[0].amplitudes
    for state in states[1:]:
        layout = layout.concat(state.layout)
        amps = np.kron(amps, state.amplitudes)
    return QuantumState(amplitudes=amps, layout=layout)


# ---------------------------------------------------------------------------
# 게이트
# ---------------------------------------------------------------------------

def apply_unitary(
    s: QuantumState,
    u,
    targets: str | Sequence[str],
    control: Control | None = None,
    check: bool = True,
) -> QuantumState:
    """targets 레지스터(나열 순서대로 최상위부터)에 유니터리 적용"""
    axes = _targets(s.layout, targets)
    dim = int(np.prod([s.layout.dims[a] for a in axes]))
    u = np.asarray(u, dtype=complex)
    if u.shape != (dim, dim):
        raise DimensionMismatchError(f"unitary of shape {u.shape} does not act on dimension {dim}")
    if check:
        CommonValidators.validate_unitary(u)
    tensor = _on_branch(
        s.tensor(),
        _resolve_control(s.layout, control),
        axes,
        lambda sub, ax: _apply_to_axes(sub, u, ax),
    )
    return _rebuild(tensor, s.layout)


def hadamard_all(s: QuantumState, register: str, control: Control | None = None) -> QuantumState:
    """레지스터 전체에 H^{⊗k}"""
    dim = s.layout.register_dim(register)
    return apply_unitary(s, LinalgUtils.uniform_unitary(dim, dim), register, control, check=False)


def uniform_transform(
    s: QuantumState, register: str, support: int, control: Control | None = None
) -> QuantumState:
    """
    앞쪽 support 개 기저에 대한 균등 중첩 준비 (대합 변환)

    support 가 레지스터 차원과 같으면 hadamard_all 과 동일하다.
    """
    dim = s.layout.register_dim(register)
    return apply_unitary(s, LinalgUtils.uniform_unitary(dim, support), register, control, check=False)


def pauli_x(s: QuantumState, register: str, control: Control | None = None) -> QuantumState:
    if s.layout.size(register) != 1:
        raise RegisterError(f"X gate needs a 1-qubit register, {register} has {s.layout.size(register)}")
    return apply_unitary(s, PAULI_X, register, control, check=False)


def pauli_z(s: QuantumState, register: str) -> QuantumState:
    if s.layout.size(register) != 1:
        raise RegisterError(f"Z gate needs a 1-qubit register, {register} has {s.layout.size(register)}")
    return apply_unitary(s, PAULI_Z, register, check=False)


def apply_block_diagonal(
    s: QuantumState, control: str, targets: str | Sequence[str], blocks: np.ndarray
) -> QuantumState:
    """Σ_j |j⟩⟨j|_control ⊗ B_j 적용 (블록은 유니터리라고 가정)"""
    c_axis = s.layout.index(control)
    t_axes = _targets(s.layout, targets)
    if c_axis in t_axes:
        raise RegisterError("control register cannot also be a target")
    n_blocks = s.layout.dims[c_axis]
    dim = int(np.prod([s.layout.dims[a] for a in t_axes]))
    blocks = np.asarray(blocks, dtype=complex)
    if blocks.shape != (n_blocks, dim, dim):
        raise DimensionMismatchError(
            f"expected blocks of shape {(n_blocks, dim, dim)}, got {blocks.shape}"
        )
    axes = [c_axis, *t_axes]
    moved = np.moveaxis(s.tensor(), axes, list(range(len(axes))))
    shape = moved.shape
    flat = moved.reshape(n_blocks, dim, -1)
    out = np.einsum("jab,jbr->jar", blocks, flat).reshape(shape)
    return _rebuild(np.moveaxis(out, list(range(len(axes))), axes), s.layout)


def controlled_amplitude_rotation(
    s: QuantumState,
    value_register: str,
    value_map: Mapping[int, float],
    ancilla: str,
    delta: float,
    control: Control | None = None,
) -> QuantumState:
    """|v⟩|0⟩ → |v⟩(√(1−δ²v²)|0⟩ + δv|1⟩), 매핑 없는 값은 0 으로 취급"""
    if s.layout.size(ancilla) != 1:
        raise RegisterError(f"ancilla {ancilla} must be a single qubit")
    v_axis = s.layout.index(value_register)
    a_axis = s.layout.index(ancilla)
    dv = s.layout.dims[v_axis]
    values = np.zeros(dv)
    for key, val in value_map.items():
        if 0 <= int(key) < dv:
            values[int(key)] = float(val)
    sines = delta * values
    if np.max(np.abs(sines), initial=0.0) > 1.0 + ROTATION_TOL:
        raise RotationOverflowError(
            "rotation amplitude overflow",
            max_amplitude=float(np.max(np.abs(sines))),
        )
    sines = np.clip(sines, -1.0, 1.0)
    cosines = np.sqrt(1.0 - sines**2)

    def rotate(sub: np.ndarray, axes: list[int]) -> np.ndarray:
        moved = np.moveaxis(sub, axes, [-2, -1])
        if np.sum(np.abs(moved[..., 1]) ** 2) > CLEAN_TOL:
            raise RegisterError(f"ancilla {ancilla} is not in |0⟩")
        a0 = moved[..., 0]
        new = np.stack([cosines * a0, sines * a0], axis=-1)
        return np.moveaxis(new, [-2, -1], axes)

    tensor = _on_branch(s.tensor(), _resolve_control(s.layout, control), [v_axis, a_axis], rotate)
    return _rebuild(tensor, s.layout)


def apply_xor_table(
    s: QuantumState,
    index_registers: str | Sequence[str],
    data_register: str,
    codes: np.ndarray,
    control: Control | None = None,
    require_clean: bool = True,
) -> QuantumState:
    """
    |i⟩|x⟩ → |i⟩|x ⊕ codes[i]⟩ 순열 유니터리

    codes 는 인덱스 레지스터 차원들의 모양을 가진 정수 배열이다.
    require_clean 이면 데이터 레지스터가 모든 분기에서 |0⟩ 이어야 한다.
    """
    idx_axes = _targets(s.layout, index_registers)
    d_axis = s.layout.index(data_register)
    codes = np.asarray(codes, dtype=np.int64)
    expected = tuple(s.layout.dims[a] for a in idx_axes)
    if codes.shape != expected:
        raise DimensionMismatchError(f"code table of shape {codes.shape}, expected {expected}")
    d_dim = s.layout.dims[d_axis]
    if codes.size and codes.max() >= d_dim:
        raise DimensionMismatchError(
            f"data register {data_register} too narrow for code {int(codes.max())}"
        )

    n_index = int(np.prod(expected))
    perm = np.bitwise_xor(np.arange(d_dim)[None, :], codes.reshape(-1, 1))

    def query(sub: np.ndarray, axes: list[int]) -> np.ndarray:
        moved = np.moveaxis(sub, axes, list(range(len(axes))))
        shape = moved.shape
        flat = moved.reshape(n_index, d_dim, -1)
        if require_clean and np.sum(np.abs(flat[:, 1:, :]) ** 2) > CLEAN_TOL:
            raise RegisterError("data register occupied", register=data_register)
        # XOR 는 대합이므로 새 진폭[x] = 이전 진폭[x ⊕ code]
        out = np.take_along_axis(flat, perm[:, :, None], axis=1).reshape(shape)
        return np.moveaxis(out, list(range(len(axes))), axes)

    tensor = _on_branch(
        s.tensor(), _resolve_control(s.layout, control), [*idx_axes, d_axis], query
    )
    return _rebuild(tensor, s.layout)


# ---------------------------------------------------------------------------
# 측정 / 사후 선택
# ---------------------------------------------------------------------------

def postselect(s: QuantumState, register: str, outcome: int) -> tuple[QuantumState, float]:
    """레지스터를 outcome 으로 사후 선택하고 해당 레지스터를 제거"""
    axis = s.layout.index(register)
    if not 0 <= outcome < s.layout.dims[axis]:
        raise RegisterError(f"outcome {outcome} outside register {register}")
    block = np.take(s.tensor(), outcome, axis=axis)
    prob = float(np.sum(np.abs(block) ** 2))
    if prob < NULL_BRANCH_TOL:
        raise NullBranchError("post-selection on null branch", register=register, outcome=outcome)
    state = _rebuild(block / np.sqrt(prob), s.layout.without([register]))
    return state, prob


def postselect_projector(
    s: QuantumState, registers: str | Sequence[str], target_state
) -> tuple[QuantumState, float]:
    """|target⟩⟨target| 사영 후 registers 제거"""
    names = [registers] if isinstance(registers, str) else list(registers)
    axes = _targets(s.layout, names)
    dim = int(np.prod([s.layout.dims[a] for a in axes]))
    target = np.asarray(target_state, dtype=complex).reshape(-1)
    if target.shape[0] != dim:
        raise DimensionMismatchError(f"target of length {target.shape[0]} for dimension {dim}")
    if abs(np.linalg.norm(target) - 1.0) > 1e-10:
        raise InvalidInputError("projector target must be normalized")
    moved = np.moveaxis(s.tensor(), axes, list(range(len(axes))))
    rest_shape = moved.shape[len(axes):]
    block = (target.conj() @ moved.reshape(dim, -1)).reshape(rest_shape)
    prob = float(np.sum(np.abs(block) ** 2))
    if prob < NULL_BRANCH_TOL:
        raise NullBranchError("post-selection on null branch", registers=names)
    state = _rebuild(block / np.sqrt(prob), s.layout.without(names))
    return state, prob


def partial_trace(s: QuantumState, traced: str | Sequence[str]) -> DensityMatrix:
    """traced 레지스터들에 대한 부분 대각합"""
    names = [traced] if isinstance(traced, str) else list(traced)
    tr_axes = _targets(s.layout, names)
    kept_axes = [i for i in range(len(s.layout.registers)) if i not in tr_axes]
    if not kept_axes:
        raise RegisterError("cannot trace out every register")
    kept_layout = s.layout.without(names)
    moved = np.moveaxis(s.tensor(), kept_axes, list(range(len(kept_axes))))
    a = moved.reshape(kept_layout.dim, -1)
    rho = a @ a.conj().T
    return DensityMatrix(matrix=(rho + rho.conj().T) / 2, layout=kept_layout)


def measure_samples(s: QuantumState, register: str, shots: int, seed: int) -> dict[int, int]:
    """Born 규칙 샘플링 히스토그램 (시드 고정 시 결정적)"""
    if shots < 1:
        raise InvalidInputError(f"shots must be >= 1, got {shots}")
    probs = s.marginal(register)
    probs = probs / probs.sum()
    rng = np.random.default_rng(CommonValidators.validate_seed(seed))
    counts = rng.multinomial(shots, probs)
    return {int(i): int(c) for i, c in enumerate(counts) if c > 0}


def state_to_json(s: QuantumState | DensityMatrix) -> dict:
    """디버그용 JSON 덤프"""
    return s.model_dump(mode="json")


# ---------------------------------------------------------------------------
# 밀도 행렬 연산
# ---------------------------------------------------------------------------

def density_from_state(s: QuantumState) -> DensityMatrix:
    return DensityMatrix.from_state(s)


def _density_tensor(rho: DensityMatrix) -> tuple[np.ndarray, int]:
    if rho.layout is None:
        raise RegisterError("density matrix has no register layout")
    dims = rho.layout.dims
    return rho.matrix.reshape(dims + dims), len(dims)


def _trusted_density(matrix: np.ndarray, layout: RegisterLayout | None) -> DensityMatrix:
    # 유니터리/채널 적용 결과는 검증을 생략
    return DensityMatrix.model_construct(matrix=matrix, layout=layout)


def apply_unitary_density(
    rho: DensityMatrix,
    u,
    targets: str | Sequence[str],
    control: Control | None = None,
) -> DensityMatrix:
    """ρ → UρU† (control 이 있으면 |c⟩⟨c|⊗U + (I−|c⟩⟨c|)⊗I)"""
    tensor, n = _density_tensor(rho)
    axes = _targets(rho.layout, targets)
    u = np.asarray(u, dtype=complex)
    ctrl = _resolve_control(rho.layout, control)
    col_ctrl = None if ctrl is None else (ctrl[0] + n, ctrl[1])
    # 행 인덱스에는 U, 열 인덱스에는 U* 작용
    tensor = _on_branch(tensor, ctrl, axes, lambda sub, ax: _apply_to_axes(sub, u, ax))
    tensor = _on_branch(
        tensor, col_ctrl, [a + n for a in axes], lambda sub, ax: _apply_to_axes(sub, u.conj(), ax)
    )
    return _trusted_density(tensor.reshape(rho.layout.dim, rho.layout.dim), rho.layout)


def apply_block_diagonal_density(
    rho: DensityMatrix, control: str, targets: str | Sequence[str], blocks: np.ndarray
) -> DensityMatrix:
    """ρ_{j,j'} → B_j ρ_{j,j'} B_{j'}†"""
    tensor, n = _density_tensor(rho)
    layout = rho.layout
    c_axis = layout.index(control)
    t_axes = _targets(layout, targets)
    n_blocks = layout.dims[c_axis]
    dim = int(np.prod([layout.dims[a] for a in t_axes]))
    blocks = np.asarray(blocks, dtype=complex)
    if blocks.shape != (n_blocks, dim, dim):
        raise DimensionMismatchError(f"expected blocks of shape {(n_blocks, dim, dim)}")
    for offset, conj in ((0, False), (n, True)):
        axes = [c_axis + offset, *[a + offset for a in t_axes]]
        moved = np.moveaxis(tensor, axes, list(range(len(axes))))
        shape = moved.shape
        flat = moved.reshape(n_blocks, dim, -1)
        b = blocks.conj() if conj else blocks
        out = np.einsum("jab,jbr->jar", b, flat).reshape(shape)
        tensor = np.moveaxis(out, list(range(len(axes))), axes)
    return _trusted_density(tensor.reshape(layout.dim, layout.dim), layout)


def postselect_density(rho: DensityMatrix, register: str, outcome: int) -> tuple[DensityMatrix, float]:
    """밀도 행렬 사후 선택 (레지스터 제거, 재정규화)"""
    tensor, n = _density_tensor(rho)
    axis = rho.layout.index(register)
    if not 0 <= outcome < rho.layout.dims[axis]:
        raise RegisterError(f"outcome {outcome} outside register {register}")
    block = np.take(np.take(tensor, outcome, axis=axis + n), outcome, axis=axis)
    new_layout = rho.layout.without([register])
    m = block.reshape(new_layout.dim, new_layout.dim)
    prob = float(np.real(np.trace(m)))
    if prob < NULL_BRANCH_TOL:
        raise NullBranchError("post-selection on null branch", register=register, outcome=outcome)
    return _trusted_density(m / prob, new_layout), prob


def partial_trace_density(rho: DensityMatrix, traced: str | Sequence[str]) -> DensityMatrix:
    tensor, n = _density_tensor(rho)
    names = [traced] if isinstance(traced, str) else list(traced)
    layout = rho.layout.without(names)
    if not layout.registers:
        raise RegisterError("cannot trace out every register")
    # 큰 축부터 제거해야 남은 열 축 위치가 n 만큼 떨어져 유지된다
    for axis in sorted(_targets(rho.layout, names), reverse=True):
        tensor = np.trace(tensor, axis1=axis, axis2=axis + n)
        n -= 1
    m = tensor.reshape(layout.dim, layout.dim)
    return DensityMatrix(matrix=(m + m.conj().T) / 2, layout=layout)
