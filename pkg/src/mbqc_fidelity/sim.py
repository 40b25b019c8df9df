"""Dense simulation of ideal and noisy MBQC on small resource states.

Basis index convention: qubit 0 is the most significant bit, so a state vector
reshaped to ``(2,) * n`` has qubit ``q`` on axis ``q``.

Measuring qubit ``i`` at angle ``theta`` applies ``H exp(i theta Z)`` and then reads
out Z, i.e. it measures in the XY-plane basis ``exp(-i theta Z) H |s>``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .errors import DENSE_CAP, ValidationError, check_cap
from .pauli import PauliWord
from .resource import ResourceState, SignedGroup, excited_state

CLIFFORD_ANGLES = (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


@dataclass
class PureState:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.n,):
            raise ValidationError(f"expected {1 << self.n} amplitudes, got {self.amplitudes.shape}")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1) > 1e-10:
            raise ValidationError(f"state is not normalised (norm {norm})")

    def density(self) -> "DensityState":
        return DensityState(self.n, np.outer(self.amplitudes, self.amplitudes.conj()))

    def fidelity(self, other: "PureState") -> float:
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)


@dataclass
class DensityState:
    n: int
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        dim = 1 << self.n
        if self.matrix.shape != (dim, dim):
            raise ValidationError(f"expected a {dim}x{dim} matrix, got {self.matrix.shape}")
        if abs(np.trace(self.matrix) - 1) > 1e-9:
            raise ValidationError(f"trace is {np.trace(self.matrix).real}, expected 1")
        if np.max(np.abs(self.matrix - self.matrix.conj().T)) > 1e-9:
            raise ValidationError("density matrix is not Hermitian")

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityState":
        return cls(n, np.eye(1 << n, dtype=complex) / (1 << n))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix).min())


# ---------------------------------------------------------------------------
# low-level kernels


def _dense_mask(mask: int, n: int) -> int:
    out = 0
    for q in range(n):
        if (mask >> q) & 1:
            out |= 1 << (n - 1 - q)
    return out


def _parity_signs(n: int, dz: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.uint64)
    return 1 - 2 * (np.bitwise_count(idx & np.uint64(dz)) & 1).astype(np.int8)


def apply_pauli(word: PauliWord, arr: np.ndarray) -> np.ndarray:
    """``word @ arr`` for a vector or a matrix of column vectors."""
    n = word.n
    dx, dz = _dense_mask(word.x, n), _dense_mask(word.z, n)
    coef = 1j ** ((word.phase + (word.x & word.z).bit_count()) % 4)
    signs = _parity_signs(n, dz)
    if arr.ndim > 1:
        signs = signs.reshape(-1, *([1] * (arr.ndim - 1)))
    idx = np.arange(1 << n) ^ dx
    return coef * (signs * arr)[idx]


def conjugate_pauli(word: PauliWord, rho: np.ndarray) -> np.ndarray:
    """``word @ rho @ word^+``."""
    n = word.n
    dx, dz = _dense_mask(word.x, n), _dense_mask(word.z, n)
    idx = np.arange(1 << n) ^ dx
    s = _parity_signs(n, dz)[idx]
    return (s[:, None] * s[None, :]) * rho[np.ix_(idx, idx)]


def pauli_expectation(rho: np.ndarray, word: PauliWord) -> complex:
    """``tr(rho @ word)``."""
    n = word.n
    dx, dz = _dense_mask(word.x, n), _dense_mask(word.z, n)
    coef = 1j ** ((word.phase + (word.x & word.z).bit_count()) % 4)
    idx = np.arange(1 << n)
    return coef * np.sum(rho[idx, idx ^ dx] * _parity_signs(n, dz))


def apply_1q(gate: np.ndarray, qubit: int, n: int, arr: np.ndarray) -> np.ndarray:
    rest = arr.shape[1:]
    t = arr.reshape((1 << qubit, 2, 1 << (n - qubit - 1)) + rest)
    t = np.tensordot(gate, t, axes=([1], [1]))
    return np.moveaxis(t, 0, 1).reshape(arr.shape)


def controlled_pauli(control: int, word: PauliWord, arr: np.ndarray) -> np.ndarray:
    """``|0><0|_c (x) I + |1><1|_c (x) word``; ``word`` must act trivially on the control."""
    n = word.n
    if (word.support >> control) & 1:
        raise ValidationError("controlled Pauli acts on its own control qubit")
    sel = (np.arange(1 << n) >> (n - 1 - control)) & 1 == 1
    out = arr.copy()
    out[sel] = apply_pauli(word, arr)[sel]
    return out


def rotation_gate(theta: float) -> np.ndarray:
    """``H exp(i theta Z)``: rotates the XY-plane basis at angle ``theta`` onto Z."""
    return _H @ np.diag([np.exp(1j * theta), np.exp(-1j * theta)])


def _angle_map(state: ResourceState, angles) -> dict[int, float]:
    if isinstance(angles, Mapping):
        out = {int(q): float(a) for q, a in angles.items()}
        if sorted(out) != sorted(state.order):
            raise ValidationError("angle map must cover exactly the measured qubits")
        return out
    angles = list(angles)
    if len(angles) != len(state.order):
        raise ValidationError(f"expected {len(state.order)} angles, got {len(angles)}")
    return {q: float(a) for q, a in zip(state.order, angles)}


# ---------------------------------------------------------------------------
# ideal states and measurement-free MBQC


def stabilizer_vector(generators: Sequence[PauliWord], n: int, cap: int = DENSE_CAP) -> np.ndarray:
    """The unique common +1 eigenvector, phase-fixed so the first nonzero amplitude is real positive."""
    check_cap("dense state", n, cap)
    dim = 1 << n
    for ref in range(dim):
        v = np.zeros(dim, dtype=complex)
        v[ref] = 1
        for g in generators:
            v = 0.5 * (v + apply_pauli(g, v))
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            v /= norm
            lead = v[np.flatnonzero(np.abs(v) > 1e-12)[0]]
            return v * (abs(lead) / lead)
    raise ValidationError("generators have no common +1 eigenvector")


def ideal_vector(state: ResourceState, cap: int = DENSE_CAP) -> PureState:
    return PureState(state.n, stabilizer_vector(state.group.generators, state.n, cap))


def signed_group_vector(group: SignedGroup, cap: int = DENSE_CAP) -> PureState:
    return PureState(group.n, stabilizer_vector(group.generators, group.n, cap))


def _gamma_columns(state: ResourceState, amap: dict[int, float], arr: np.ndarray) -> np.ndarray:
    n = state.n
    for i in state.order:
        arr = apply_1q(rotation_gate(amap[i]), i, n, arr)
        arr = controlled_pauli(i, state.flow.r_ops[i], arr)
    return arr


def apply_gamma(state: ResourceState, angles, target: Union[PureState, DensityState], cap: int = DENSE_CAP):
    """Measurement-free MBQC unitary: per measured qubit in temporal order, rotate then controlled-R."""
    check_cap("dense Gamma", state.n, cap)
    amap = _angle_map(state, angles)
    if isinstance(target, PureState):
        return PureState(state.n, _gamma_columns(state, amap, target.amplitudes))
    a = _gamma_columns(state, amap, target.matrix)
    b = _gamma_columns(state, amap, a.conj().T).conj().T
    return DensityState(state.n, b)


def gamma_matrix(state: ResourceState, angles, cap: int = DENSE_CAP) -> np.ndarray:
    check_cap("dense Gamma", state.n, cap)
    return _gamma_columns(state, _angle_map(state, angles), np.eye(1 << state.n, dtype=complex))


def _measured_key(state: ResourceState) -> np.ndarray:
    """For each basis index, the outcome string on the measured qubits (bit k <-> k-th measured qubit)."""
    n = state.n
    idx = np.arange(1 << n)
    key = np.zeros(1 << n, dtype=np.int64)
    for k, q in enumerate(sorted(state.measured)):
        key |= ((idx >> (n - 1 - q)) & 1) << k
    return key


def measured_outcome_slices(state: ResourceState) -> list[np.ndarray]:
    """Basis indices grouped by measurement outcome ``s`` (index into the list)."""
    key = _measured_key(state)
    return [np.flatnonzero(key == s) for s in range(1 << len(state.measured))]


def ideal_output(state: ResourceState, angles, cap: int = DENSE_CAP, check: bool = True, seed: int = 0) -> PureState:
    """Output-qubit state ``psi(theta)`` (outputs in ascending qubit order).

    Taken from outcome ``s = 0...0`` of ``Gamma |S>``; with ``check`` the result is
    compared against three random other outcomes and ``s = 1...1``.
    """
    v = apply_gamma(state, angles, ideal_vector(state, cap), cap).amplitudes
    slices = measured_outcome_slices(state)
    M = len(state.measured)
    row = v[slices[0]]
    psi = row / np.linalg.norm(row)
    if check and M:
        rng = np.random.default_rng(seed)
        others = {len(slices) - 1, *rng.integers(0, len(slices), size=3).tolist()}
        for s in others:
            r = v[slices[s]]
            p = float(np.vdot(r, r).real)
            if abs(p - 2.0 ** -M) > 1e-10 or abs(abs(np.vdot(psi, r)) ** 2 / p - 1) > 1e-10:
                raise RuntimeError(f"output depends on measurement outcome {s}: flow is not valid")
    return PureState(len(state.outputs), psi)


# ---------------------------------------------------------------------------
# noise


NOISE_KINDS = ("depolarizing", "dephasing", "coherent_z", "global_mix", "excited_mix")


@dataclass(frozen=True)
class NoiseModel:
    kind: str
    p: float = 0.0
    weights: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValidationError(f"unknown noise model {self.kind!r}")
        if self.kind == "excited_mix":
            if any(w < 0 for w in self.weights.values()) or sum(self.weights.values()) > 1 + 1e-12:
                raise ValidationError("excited_mix weights must be nonnegative and sum to at most 1")
        elif self.kind != "coherent_z" and not 0 <= self.p <= 1:
            raise ValidationError(f"{self.kind} probability must lie in [0, 1], got {self.p}")

    def __str__(self) -> str:
        if self.kind == "excited_mix":
            return "excited_mix:" + ",".join(f"{k}={w}" for k, w in sorted(self.weights.items()))
        return f"{self.kind}:{self.p}"


def parse_noise(text: str) -> Optional[NoiseModel]:
    """``depolarizing:0.01``, ``dephasing:0.02``, ``coherent_z:0.05``, ``global_mix:0.1``,
    ``excited_mix:k=weight,...`` or ``none``."""
    text = text.strip()
    if text in ("", "none"):
        return None
    kind, _, arg = text.partition(":")
    try:
        if kind == "excited_mix":
            weights = {}
            for part in arg.split(","):
                k, _, w = part.partition("=")
                weights[int(k)] = float(w)
            return NoiseModel(kind, weights=weights)
        return NoiseModel(kind, float(arg))
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"cannot parse noise model {text!r}") from None


def _letter_word(n: int, q: int, letter: str) -> PauliWord:
    return PauliWord.single(n, q, letter)


def apply_noise(rho: DensityState, model: Optional[NoiseModel], state: Optional[ResourceState] = None,
                cap: int = DENSE_CAP) -> DensityState:
    """Exact channel application (Kraus sums)."""
    if model is None:
        return rho
    n = rho.n
    check_cap("dense noise channel", n, cap)
    m = rho.matrix
    if model.kind == "depolarizing":
        for q in range(n):
            twirl = sum(conjugate_pauli(_letter_word(n, q, L), m) for L in "XYZ")
            m = (1 - model.p) * m + (model.p / 3) * twirl
    elif model.kind == "dephasing":
        for q in range(n):
            m = (1 - model.p) * m + model.p * conjugate_pauli(_letter_word(n, q, "Z"), m)
    elif model.kind == "coherent_z":
        # exp(-i eps Z / 2) on every qubit
        ones = np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(float)
        phase = np.exp(-0.5j * model.p * (n - 2 * ones))
        m = phase[:, None] * m * phase.conj()[None, :]
    elif model.kind == "global_mix":
        m = (1 - model.p) * m + model.p * np.trace(m) * np.eye(1 << n) / (1 << n)
    else:
        if state is None:
            raise ValidationError("excited_mix needs the resource state")
        tr = np.trace(m)
        out = (1 - sum(model.weights.values())) * m
        for k, w in model.weights.items():
            v = signed_group_vector(excited_state(state, k), cap).amplitudes
            out = out + w * tr * np.outer(v, v.conj())
        m = out
    return DensityState(n, m)


# ---------------------------------------------------------------------------
# MBQC fidelity


def _apply_output_pauli(t: np.ndarray, axis: int, nq: int, letter: str) -> np.ndarray:
    """Conjugate the reduced density tensor by a single-qubit Pauli on ``axis``."""
    for ax in (axis, nq + axis):
        if letter in "ZY":
            shape = [1] * t.ndim
            shape[ax] = 2
            t = t * np.array([1, -1]).reshape(shape)
        if letter in "XY":
            t = np.flip(t, axis=ax)
    return t


def _adaptive_fidelity(state: ResourceState, rho: np.ndarray, amap: dict[int, float], psi: np.ndarray) -> float:
    n = state.n
    order = state.order
    outputs = state.outputs.mask
    total = 0.0
    stack = [(rho.reshape((2,) * (2 * n)), list(range(n)), 0, 0)]
    while stack:
        t, qubits, k, flips = stack.pop()
        if k == len(order):
            dim = 1 << len(qubits)
            total += float(np.vdot(psi, t.reshape(dim, dim) @ psi).real)
            continue
        i = order[k]
        theta = -amap[i] if (flips >> i) & 1 else amap[i]
        row = rotation_gate(theta)
        ax = qubits.index(i)
        m = len(qubits)
        rest = qubits[:ax] + qubits[ax + 1:]
        for s in (0, 1):
            b = row[s]
            t2 = np.tensordot(b, t, axes=([0], [ax]))
            t2 = np.tensordot(t2, b.conj(), axes=([m - 1 + ax], [0]))
            dim = 1 << (m - 1)
            p = np.trace(t2.reshape(dim, dim)).real if m > 1 else t2.real
            if p < 1e-14:
                continue
            new_flips = flips
            if s:
                r = state.flow.r_ops[i]
                new_flips ^= r.x & ~outputs
                for pos, q in enumerate(rest):
                    if (outputs >> q) & 1 and (r.support >> q) & 1:
                        t2 = _apply_output_pauli(t2, pos, m - 1, r.letter(q))
            stack.append((t2, rest, k + 1, new_flips))
    return total


def mbqc_fidelity_at(state: ResourceState, rho: DensityState, angles, cap: int = DENSE_CAP,
                     cross_check: bool = True, psi: Optional[PureState] = None) -> float:
    """Outcome-averaged fidelity of adaptive MBQC on ``rho`` at fixed angles.

    Qubits are measured in temporal order; outcome 1 on qubit ``i`` flips the angle
    of later measured qubits where ``R_i`` acts as X and applies ``R_i`` to the outputs.
    Outcomes of probability below 1e-14 are skipped.
    """
    check_cap("adaptive MBQC simulation", state.n, cap)
    amap = _angle_map(state, angles)
    if psi is None:
        psi = ideal_output(state, amap, cap)
    value = _adaptive_fidelity(state, rho.matrix, amap, psi.amplitudes)
    if cross_check:
        from .omega import build_omega_theta

        ref = float(np.trace(rho.matrix @ build_omega_theta(state, amap, cap)).real)
        if abs(ref - value) > 1e-9:
            raise RuntimeError(f"adaptive fidelity {value} disagrees with tr(rho Omega(theta)) = {ref}")
    return value


@dataclass(frozen=True)
class AngleSpec:
    mode: str
    count: int = 0
    angles: tuple[float, ...] = ()
    seed: int = 0

    MODES = ("explicit", "mc_uniform", "mc_clifford", "exhaustive_clifford")

    def __post_init__(self):
        if self.mode not in self.MODES:
            raise ValidationError(f"unknown angle mode {self.mode!r}")
        if self.mode in ("mc_uniform", "mc_clifford") and self.count <= 0:
            raise ValidationError("Monte Carlo angle modes need a positive sample count")
        if self.mode == "explicit" and any(not 0 <= a < 2 * math.pi for a in self.angles):
            raise ValidationError("explicit angles must lie in [0, 2pi)")


def parse_angles(text: str, seed: int = 0) -> AngleSpec:
    """``mc:10000``, ``clifford_mc:10000``, ``clifford_exact`` or ``explicit:0.1,0.3,...``."""
    kind, _, arg = text.strip().partition(":")
    try:
        if kind == "mc":
            return AngleSpec("mc_uniform", count=int(arg), seed=seed)
        if kind == "clifford_mc":
            return AngleSpec("mc_clifford", count=int(arg), seed=seed)
        if kind == "clifford_exact":
            return AngleSpec("exhaustive_clifford", seed=seed)
        if kind == "explicit":
            return AngleSpec("explicit", angles=tuple(float(a) for a in arg.split(",") if a), seed=seed)
    except ValueError:
        pass
    raise ValidationError(f"cannot parse angle spec {text!r}")


@dataclass(frozen=True)
class AngleAverage:
    mean: float
    stderr: float
    count: int
    mode: str


def average_mbqc_fidelity(state: ResourceState, rho: DensityState, spec: AngleSpec, cap: int = DENSE_CAP,
                          method: str = "adaptive") -> AngleAverage:
    """MBQC fidelity averaged over measurement angles.

    ``method`` selects the per-angle evaluation: ``"adaptive"`` simulates the measurements,
    ``"gamma"`` evaluates ``tr(rho Omega(theta))``.
    """
    check_cap("dense MBQC simulation", state.n, cap)
    M = len(state.order)
    if spec.mode == "explicit":
        grid = [spec.angles]
    elif spec.mode == "exhaustive_clifford":
        if M > 8:
            raise ValidationError("exhaustive Clifford averaging needs at most 8 measured qubits")
        grid = itertools.product(CLIFFORD_ANGLES, repeat=M)
    else:
        rng = np.random.default_rng(spec.seed)
        if spec.mode == "mc_uniform":
            grid = rng.uniform(0, 2 * math.pi, size=(spec.count, M))
        else:
            grid = np.asarray(CLIFFORD_ANGLES)[rng.integers(0, 4, size=(spec.count, M))]
    if method == "adaptive":
        def evaluate(th):
            return mbqc_fidelity_at(state, rho, th, cap, cross_check=False)
    elif method == "gamma":
        from .omega import build_omega_theta

        def evaluate(th):
            return float(np.trace(rho.matrix @ build_omega_theta(state, th, cap)).real)
    else:
        raise ValidationError(f"unknown method {method!r}")
    values = np.array([evaluate(list(th)) for th in grid])
    stderr = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 and spec.mode != "exhaustive_clifford" else 0.0
    return AngleAverage(float(values.mean()), stderr, len(values), spec.mode)


# ---------------------------------------------------------------------------
# expectations


def expectation(rho: DensityState, terms) -> float:
    """``tr(rho @ sum)`` for a PauliSum."""
    total = 0j
    for w, c in terms.items():
        total += float(c) * pauli_expectation(rho.matrix, w)
    if abs(total.imag) > 1e-10:
        raise RuntimeError(f"expectation has imaginary part {total.imag}")
    return float(total.real)


def state_fidelity(rho: DensityState, state: ResourceState, cap: int = DENSE_CAP) -> float:
    """``<S|rho|S>`` from the stabilizer expansion, cross-checked against the vector sandwich."""
    from .resource import enumerate_group

    check_cap("dense state fidelity", state.n, cap)
    total = sum(pauli_expectation(rho.matrix, g) for g in enumerate_group(state.group)).real / (1 << state.n)
    v = ideal_vector(state, cap).amplitudes
    direct = float(np.vdot(v, rho.matrix @ v).real)
    if abs(total - direct) > 1e-9:
        raise RuntimeError(f"stabilizer expansion {total} disagrees with <S|rho|S> = {direct}")
    return float(total)
