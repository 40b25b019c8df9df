"""Stabilizer resource states with flow.

A :class:`ResourceState` bundles a complete stabilizer group, the set of output
qubits and a flow: a total temporal order on the measured qubits together with a
correction operator ``R_i`` for each measured qubit ``i`` such that

1. ``Z_i R_i`` is an element of the group (with sign +1),
2. ``R_i`` acts as X or I on every measured qubit,
3. every qubit in the support of ``R_i`` comes strictly after ``i``
   (output qubits count as later than all measured qubits).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np

from .errors import ENUMERATION_CAP, FlowError, NoFlowError, ValidationError, check_cap
from .gf2 import Gf2Basis, solve_masked
from .pauli import PauliWord, QubitSet, commutes, format_pauli, mul, parse


# ---------------------------------------------------------------------------
# stabilizer groups


@dataclass(frozen=True)
class StabilizerGroup:
    n: int
    generators: tuple[PauliWord, ...]

    @cached_property
    def _basis(self) -> Gf2Basis:
        return Gf2Basis(g.symplectic for g in self.generators)

    @property
    def is_complete(self) -> bool:
        return len(self.generators) == self.n

    def element(self, combo: int) -> PauliWord:
        """Product of the generators selected by the bits of ``combo``."""
        out = PauliWord.identity(self.n)
        k = 0
        while combo:
            if combo & 1:
                out = mul(out, self.generators[k])
            combo >>= 1
            k += 1
        return out

    def decompose(self, word: PauliWord) -> Optional[int]:
        """Generator subset whose product equals ``word`` up to phase, or None."""
        if word.n != self.n:
            raise ValidationError(f"dimension mismatch: {word.n} vs {self.n}")
        return self._basis.express(word.symplectic)

    def signed_element(self, word: PauliWord) -> Optional[PauliWord]:
        """The group element carrying the same letters as ``word``, if any."""
        combo = self.decompose(word)
        return None if combo is None else self.element(combo)

    def contains(self, word: PauliWord) -> bool:
        g = self.signed_element(word)
        return g is not None and g.phase == word.phase


def check_group(gens: Sequence[PauliWord], n: Optional[int] = None) -> StabilizerGroup:
    """Validate a list of generators: Hermitian, pairwise commuting, GF(2)-independent."""
    gens = tuple(gens)
    if n is None:
        if not gens:
            raise ValidationError("cannot infer qubit count from an empty generator list")
        n = gens[0].n
    for k, g in enumerate(gens):
        if g.n != n:
            raise ValidationError(f"generator {k} has {g.n} qubits, expected {n}")
        if not g.is_hermitian:
            raise ValidationError(f"generator {k} ({format_pauli(g)}) has non-Hermitian phase")
    for a in range(len(gens)):
        for b in range(a + 1, len(gens)):
            if not commutes(gens[a], gens[b]):
                raise ValidationError(f"generators {a} and {b} do not commute")
    basis = Gf2Basis()
    for k, g in enumerate(gens):
        if not basis.add(g.symplectic):
            raise ValidationError(f"generator {k} ({format_pauli(g)}) is dependent on earlier generators")
    return StabilizerGroup(n, gens)


def enumerate_group(group: StabilizerGroup, cap: int = ENUMERATION_CAP) -> Iterator[PauliWord]:
    """Yield all ``2**k`` signed elements in Gray-code order (one multiplication each)."""
    k = len(group.generators)
    check_cap("group enumeration", k, cap)
    g = PauliWord.identity(group.n)
    yield g
    for step in range(1, 1 << k):
        flip = (step & -step).bit_length() - 1
        g = mul(g, group.generators[flip])
        yield g


def group_arrays(generators: Sequence[PauliWord], n: int, cap: int = ENUMERATION_CAP):
    """All products of ``generators`` as numpy arrays ``(x, z, sign)``.

    Element ``idx`` is the product over generators ``k`` with bit ``k`` of ``idx`` set.
    Requires ``n <= 64``.
    """
    check_cap("group enumeration", len(generators), cap)
    if n > 64:
        raise ValidationError("vectorised enumeration supports at most 64 qubits")
    x = np.zeros(1, dtype=np.uint64)
    z = np.zeros(1, dtype=np.uint64)
    e = np.zeros(1, dtype=np.uint8)
    for g in generators:
        gx, gz = np.uint64(g.x), np.uint64(g.z)
        ge = (g.phase + (g.x & g.z).bit_count()) % 4
        cross = np.bitwise_count(z & gx).astype(np.uint8)
        e = np.concatenate([e, (e + ge + 2 * cross) % 4])
        x = np.concatenate([x, x ^ gx])
        z = np.concatenate([z, z ^ gz])
    phase = (e.astype(np.int16) - np.bitwise_count(x & z)) % 4
    if np.any(phase % 2):
        raise ValidationError("generators do not commute: non-Hermitian product found")
    sign = np.where(phase == 0, 1, -1).astype(np.int8)
    return x, z, sign


# ---------------------------------------------------------------------------
# flow and resource states


@dataclass(frozen=True)
class Flow:
    order: tuple[int, ...]
    r_ops: Mapping[int, PauliWord]


@dataclass(frozen=True)
class ResourceState:
    group: StabilizerGroup
    outputs: QubitSet
    flow: Flow

    def __post_init__(self):
        if not self.group.is_complete:
            raise ValidationError(
                f"resource state needs {self.group.n} generators, got {len(self.group.generators)}"
            )
        if self.outputs.n != self.group.n:
            raise ValidationError("output set and group disagree on qubit count")
        measured = sorted(self.measured)
        if sorted(self.flow.order) != measured:
            raise ValidationError(f"temporal order {list(self.flow.order)} is not a permutation of {measured}")
        if sorted(self.flow.r_ops) != measured:
            raise ValidationError("R operators must be given for exactly the measured qubits")
        for q, r in self.flow.r_ops.items():
            if r.n != self.n:
                raise ValidationError(f"R operator for qubit {q} has wrong qubit count")

    @property
    def n(self) -> int:
        return self.group.n

    @property
    def measured(self) -> QubitSet:
        return self.outputs.complement()

    @property
    def order(self) -> tuple[int, ...]:
        return self.flow.order

    def r_stabilizer(self, i: int) -> PauliWord:
        return mul(PauliWord.single(self.n, i, "Z"), self.flow.r_ops[i])

    @cached_property
    def r_stabilizers(self) -> tuple[PauliWord, ...]:
        """``Z_i R_i`` for each measured qubit, in temporal order."""
        return tuple(self.r_stabilizer(i) for i in self.order)

    @cached_property
    def t_stabilizers(self) -> tuple[PauliWord, ...]:
        return tuple(derive_t_stabilizers(self))

    @classmethod
    def from_order(cls, group: StabilizerGroup, outputs: QubitSet, order: Sequence[int]) -> "ResourceState":
        r_ops = derive_r_operators(group, outputs, order)
        return cls(group, outputs, Flow(tuple(order), r_ops))


@dataclass(frozen=True)
class FlowFailure:
    qubit: int
    condition: str
    message: str


@dataclass(frozen=True)
class FlowVerdict:
    failures: tuple[FlowFailure, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def first(self) -> Optional[FlowFailure]:
        return self.failures[0] if self.failures else None

    def __bool__(self) -> bool:
        return self.ok


# condition names, in the order they are checked per qubit
CONDITIONS = ("x_or_identity", "later_support", "stabilizer", "entangled")


def verify_flow(state: ResourceState) -> FlowVerdict:
    """Check the flow conditions for every measured qubit, in temporal order.

    Every failure is reported; ``verdict.first`` names the earliest one.
    """
    n = state.n
    meas = state.measured.mask
    pos = {q: k for k, q in enumerate(state.order)}
    failures = []
    for i in state.order:
        r = state.flow.r_ops[i]
        if r.z & meas:
            bad = [q for q in range(n) if (r.z & meas) >> q & 1]
            failures.append(FlowFailure(i, "x_or_identity", f"R_{i} acts as Z or Y on measured qubit(s) {bad}"))
        early = [q for q in range(n) if (r.support >> q) & 1 and q in pos and pos[q] <= pos[i]]
        if early:
            failures.append(FlowFailure(i, "later_support", f"R_{i} acts on qubit(s) {early} not later than {i}"))
        zr = state.r_stabilizer(i)
        if not zr.is_hermitian or not state.group.contains(zr):
            failures.append(FlowFailure(i, "stabilizer", f"Z_{i}R_{i} = {format_pauli(zr)} is not a stabilizer"))
    for q in range(n):
        zq = PauliWord.single(n, q, "Z")
        if all(commutes(zq, g) for g in state.group.generators):
            failures.append(FlowFailure(q, "entangled", f"qubit {q} is disentangled (Z_{q} commutes with the group)"))
    return FlowVerdict(tuple(failures))


def derive_r_operators(group: StabilizerGroup, outputs: QubitSet, order: Sequence[int]) -> dict[int, PauliWord]:
    """Solve for a correction operator for every measured qubit, given a temporal order."""
    n = group.n
    meas = outputs.complement()
    if sorted(order) != sorted(meas):
        raise ValidationError(f"order {list(order)} is not a permutation of the measured qubits")
    vecs = [g.symplectic for g in group.generators]
    z_meas = meas.mask << n
    r_ops = {}
    x_done = 0
    for i in order:
        x_done |= 1 << i
        # z fixed on every measured qubit (1 at i), x zero on i and everything before it
        mask = z_meas | x_done
        combo = solve_masked(vecs, mask, 1 << (n + i))
        if combo is None:
            raise NoFlowError(i)
        h = group.element(combo)
        r_ops[i] = mul(PauliWord.single(n, i, "Z"), h)
    return r_ops


def _canonical_basis(words: Sequence[PauliWord], priority: Sequence[int]) -> list[PauliWord]:
    """Fully reduced echelon form (via group multiplication) with pivots chosen in ``priority`` order."""
    rows = list(words)
    pivots: list[tuple[int, PauliWord]] = []
    free = list(range(len(rows)))
    for bit in priority:
        hit = next((r for r in free if (rows[r].symplectic >> bit) & 1), None)
        if hit is None:
            continue
        free.remove(hit)
        for r in range(len(rows)):
            if r != hit and (rows[r].symplectic >> bit) & 1:
                rows[r] = mul(rows[r], rows[hit])
        pivots.append((hit, rows[hit]))
    if free:
        raise ValidationError("words are not independent")
    return [rows[r] for r, _ in pivots]


def derive_t_stabilizers(state: ResourceState) -> list[PauliWord]:
    """Complete the R-stabilizers to a generating set and push Z letters off the measured qubits.

    The result is returned in a canonical reduced form, ordered so that the ``j``-th
    word pivots on the ``j``-th output qubit where possible.
    """
    n = state.n
    meas = state.measured.mask
    rstab = {i: state.r_stabilizer(i) for i in state.order}
    basis = Gf2Basis(w.symplectic for w in rstab.values())
    if basis.rank != len(rstab):
        raise FlowError("R-stabilizers are not independent")
    extras = [g for g in state.group.generators if basis.add(g.symplectic)]
    if len(extras) != len(state.outputs):
        raise FlowError(f"expected {len(state.outputs)} T-stabilizers, found {len(extras)}")
    ts = []
    for e in extras:
        for i in state.order:
            if (e.z >> i) & 1:
                e = mul(e, rstab[i])
        if e.z & meas:
            raise FlowError("could not clear Z letters from the measured qubits")
        if not state.group.contains(e):
            raise FlowError(f"{format_pauli(e)} is not a group element; flow is inconsistent")
        ts.append(e)
    outs = state.outputs.indices()
    priority = [n + q for q in outs] + outs + [q for q in range(n) if q not in state.outputs]
    return _canonical_basis(ts, priority)


# ---------------------------------------------------------------------------
# builders


def graph_state_generators(n: int, edges) -> list[PauliWord]:
    """``X_v`` times ``Z`` on every neighbour of ``v``."""
    nbrs = [0] * n
    for a, b in edges:
        nbrs[a] |= 1 << b
        nbrs[b] |= 1 << a
    return [PauliWord(n, 1 << v, nbrs[v], 0) for v in range(n)]


def cluster_1d(N: int) -> ResourceState:
    if N < 2:
        raise ValidationError("1D cluster needs N >= 2")
    gens = graph_state_generators(N, [(q, q + 1) for q in range(N - 1)])
    group = StabilizerGroup(N, tuple(gens))
    return ResourceState.from_order(group, QubitSet.from_indices(N, [N - 1]), list(range(N - 1)))


def cluster_2d(rows: int, cols: int) -> ResourceState:
    """Open-boundary 2D cluster; qubit ``r * cols + c``, outputs in the last column.

    Measured qubits are ordered column by column (left to right, top to bottom).
    """
    if rows < 2 or cols < 2:
        raise ValidationError("2D cluster needs rows, cols >= 2")
    n = rows * cols
    edges = []
    for r in range(rows):
        for c in range(cols):
            q = r * cols + c
            if c + 1 < cols:
                edges.append((q, q + 1))
            if r + 1 < rows:
                edges.append((q, q + cols))
    group = StabilizerGroup(n, tuple(graph_state_generators(n, edges)))
    outputs = QubitSet.from_indices(n, [r * cols + cols - 1 for r in range(rows)])
    order = [r * cols + c for c in range(cols - 1) for r in range(rows)]
    return ResourceState.from_order(group, outputs, order)


# ---------------------------------------------------------------------------
# excited states


@dataclass(frozen=True)
class SignedGroup:
    base: StabilizerGroup
    sign_flips: frozenset = field(default_factory=frozenset)

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def generators(self) -> tuple[PauliWord, ...]:
        return tuple(g.negate() if k in self.sign_flips else g for k, g in enumerate(self.base.generators))

    def as_group(self) -> StabilizerGroup:
        return StabilizerGroup(self.n, self.generators)


def excited_state(state: ResourceState, k: int) -> SignedGroup:
    """The state with the T-stabilizer labelled by output qubit ``k`` flipped to eigenvalue -1.

    T-stabilizers are labelled by the outputs in ascending order.
    """
    outs = state.outputs.indices()
    if k not in outs:
        raise ValidationError(f"{k} is not an output qubit (outputs: {outs})")
    base = StabilizerGroup(state.n, state.r_stabilizers + state.t_stabilizers)
    return SignedGroup(base, frozenset({len(state.r_stabilizers) + outs.index(k)}))


# ---------------------------------------------------------------------------
# JSON


def state_to_dict(state: ResourceState, sign_flips: Sequence[int] = ()) -> dict:
    doc = {
        "n": state.n,
        "generators": [format_pauli(g) for g in state.group.generators],
        "outputs": state.outputs.indices(),
        "order": list(state.order),
        "r_ops": {str(q): format_pauli(state.flow.r_ops[q]) for q in state.order},
    }
    if sign_flips:
        doc["sign_flips"] = sorted(sign_flips)
    return doc


def state_from_dict(doc: Mapping) -> ResourceState:
    """Parse the resource-state schema. Missing ``r_ops`` are derived from ``order``."""
    try:
        n = int(doc["n"])
        gens = [parse(t) for t in doc["generators"]]
        outputs = QubitSet.from_indices(n, [int(q) for q in doc["outputs"]])
        order = [int(q) for q in doc["order"]]
    except KeyError as exc:
        raise ValidationError(f"missing field {exc.args[0]!r} in resource-state document") from None
    group = check_group(gens, n)
    if "r_ops" not in doc or doc["r_ops"] is None:
        return ResourceState.from_order(group, outputs, order)
    r_ops = {int(q): parse(t) for q, t in doc["r_ops"].items()}
    return ResourceState(group, outputs, Flow(tuple(order), r_ops))


def sign_flips_from_dict(doc: Mapping) -> frozenset:
    return frozenset(int(k) for k in doc.get("sign_flips", ()))


def load_state(path) -> ResourceState:
    return state_from_dict(json.loads(Path(path).read_text()))


def save_state(state: ResourceState, path, sign_flips: Sequence[int] = ()) -> None:
    Path(path).write_text(json.dumps(state_to_dict(state, sign_flips), indent=2) + "\n")
