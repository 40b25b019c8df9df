"""Sampling stabilizers with probability equal to their Omega coefficient.

Start from a uniformly random product of T-stabilizers, then walk the measured
qubits in temporal order; whenever the current word acts as X or Y on qubit ``i``
(anticommutes with ``Z_i``), multiply by ``Z_i R_i`` with probability 1/2.
Each result ``g`` is drawn with probability ``2**-(|O| + w_M(g))``.

Randomness is counter based: sample ``j`` under seed ``s`` always consumes the
same Philox block, so batches can be split, reordered or parallelised freely.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import ValidationError, check_cap
from .pauli import PauliWord, mul, weight_on
from .resource import ResourceState, StabilizerGroup, enumerate_group, group_arrays

_WORDS_PER_BLOCK = 4  # Philox4x64 emits four 64-bit words per counter step
EXACT_CAP = 14


def _key(seed: int, purpose: int) -> int:
    if not 0 <= seed < 1 << 64:
        raise ValidationError("seed must be a 64-bit unsigned integer")
    return seed | (purpose << 64)


def _blocks_for(nbits: int) -> int:
    return max(1, -(-nbits // (64 * _WORDS_PER_BLOCK)))


def raw_words(seed: int, start: int, count: int, nbits: int, purpose: int = 0) -> np.ndarray:
    """Random words for samples ``start .. start+count-1``; row ``j`` covers at least ``nbits`` bits."""
    blocks = _blocks_for(nbits)
    bg = np.random.Philox(key=_key(seed, purpose), counter=start * blocks)
    width = blocks * _WORDS_PER_BLOCK
    return bg.random_raw(count * width).reshape(count, width)


@dataclass(frozen=True)
class RngStream:
    seed: int
    index: int = 0
    purpose: int = 0

    def bits(self, nbits: int) -> int:
        row = raw_words(self.seed, self.index, 1, nbits, self.purpose)[0]
        value = 0
        for k, w in enumerate(row.tolist()):
            value |= int(w) << (64 * k)
        return value & ((1 << nbits) - 1)


def uniforms(seed: int, count: int, purpose: int) -> np.ndarray:
    """``count`` doubles in [0, 1) from a counter-based stream (53-bit resolution)."""
    words = np.random.Philox(key=_key(seed, purpose)).random_raw(count)
    return (words >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


@dataclass(frozen=True)
class SampleTrace:
    t_subset: int
    decisions: tuple[int, ...]  # per measured qubit in temporal order: 1 = multiplied by Z_i R_i
    result: PauliWord
    log2_prob: int


def _t_product(state: ResourceState, t_subset: int) -> PauliWord:
    return StabilizerGroup(state.n, state.t_stabilizers).element(t_subset)


def _walk(state: ResourceState, g: PauliWord, coins: int):
    decisions = []
    forks = 0
    for k, i in enumerate(state.order):
        take = 0
        if (g.x >> i) & 1:
            forks += 1
            take = (coins >> k) & 1
            if take:
                g = mul(g, state.r_stabilizer(i))
        decisions.append(take)
    return g, tuple(decisions), forks


def sample_stabilizer(state: ResourceState, rng: RngStream) -> SampleTrace:
    n_out = len(state.outputs)
    bits = rng.bits(n_out + len(state.order))
    t_subset = bits & ((1 << n_out) - 1)
    g, decisions, forks = _walk(state, _t_product(state, t_subset), bits >> n_out)
    return SampleTrace(t_subset, decisions, g, -(n_out + forks))


def replay(state: ResourceState, t_subset: int, decisions) -> PauliWord:
    g = _t_product(state, t_subset)
    for take, i in zip(decisions, state.order):
        if take:
            g = mul(g, state.r_stabilizer(i))
    return g


def reverse_replay(state: ResourceState, trace: SampleTrace) -> PauliWord:
    """Undo the walk in reverse temporal order; returns the initial T-product."""
    g = trace.result
    for take, i in reversed(list(zip(trace.decisions, state.order))):
        if take:
            g = mul(g, state.r_stabilizer(i))
    return g


@dataclass
class SampleBatch:
    n: int
    x: np.ndarray
    z: np.ndarray
    sign: np.ndarray
    log2_prob: np.ndarray

    def __len__(self) -> int:
        return len(self.x)

    def word(self, j: int) -> PauliWord:
        return PauliWord(self.n, int(self.x[j]), int(self.z[j]), 0 if self.sign[j] > 0 else 2)

    def words(self) -> list[PauliWord]:
        return [self.word(j) for j in range(len(self))]


def _bits_column(raw: np.ndarray, b: int) -> np.ndarray:
    return ((raw[:, b // 64] >> np.uint64(b % 64)) & np.uint64(1)).astype(bool)


def _vmul(x, z, e, word: PauliWord, sel):
    """Right-multiply the selected rows (XZ-form exponent ``e``) by ``word``."""
    wx, wz = np.uint64(word.x), np.uint64(word.z)
    we = (word.phase + (word.x & word.z).bit_count()) % 4
    cross = np.bitwise_count(z & wx).astype(np.uint8)
    e = np.where(sel, (e + we + 2 * cross) % 4, e)
    x = np.where(sel, x ^ wx, x)
    z = np.where(sel, z ^ wz, z)
    return x, z, e


def _finish(n, x, z, e) -> tuple[np.ndarray, np.ndarray]:
    phase = (e.astype(np.int16) - np.bitwise_count(x & z)) % 4
    if np.any(phase % 2):
        raise RuntimeError("sampled a non-Hermitian word")
    return x, np.where(phase == 0, 1, -1).astype(np.int8)


def sample_many(state: ResourceState, count: int, seed: int, start: int = 0, purpose: int = 0) -> SampleBatch:
    """Samples ``start .. start+count-1`` of the stream; identical to repeated :func:`sample_stabilizer`."""
    n = state.n
    n_out = len(state.outputs)
    nbits = n_out + len(state.order)
    raw = raw_words(seed, start, count, nbits, purpose)
    if n > 64:
        traces = [sample_stabilizer(state, RngStream(seed, start + j, purpose)) for j in range(count)]
        ws = [t.result for t in traces]
        return SampleBatch(n, np.array([w.x for w in ws], dtype=object), np.array([w.z for w in ws], dtype=object),
                           np.array([w.sign for w in ws], dtype=np.int8), np.array([t.log2_prob for t in traces]))
    tx, tz, tsign = group_arrays(state.t_stabilizers, n)
    tsel = np.zeros(count, dtype=np.int64)
    for j in range(n_out):
        tsel |= _bits_column(raw, j).astype(np.int64) << j
    x, z = tx[tsel], tz[tsel]
    e = ((np.where(tsign[tsel] > 0, 0, 2) + np.bitwise_count(x & z)) % 4).astype(np.uint8)
    forks = np.zeros(count, dtype=np.int64)
    for k, i in enumerate(state.order):
        fork = ((x >> np.uint64(i)) & np.uint64(1)).astype(bool)
        forks += fork
        take = fork & _bits_column(raw, n_out + k)
        x, z, e = _vmul(x, z, e, state.r_stabilizer(i), take)
    x, sign = _finish(n, x, z, e)
    return SampleBatch(n, x, z, sign, -(n_out + forks))


def uniform_group_samples(group: StabilizerGroup, count: int, seed: int, purpose: int = 2) -> SampleBatch:
    """Uniformly random group elements (random generator subsets), vectorised for n <= 64."""
    n = group.n
    k = len(group.generators)
    if n > 64:
        raise ValidationError("uniform group sampling is vectorised for at most 64 qubits")
    raw = raw_words(seed, 0, count, k, purpose)
    x = np.zeros(count, dtype=np.uint64)
    z = np.zeros(count, dtype=np.uint64)
    e = np.zeros(count, dtype=np.uint8)
    for j, g in enumerate(group.generators):
        x, z, e = _vmul(x, z, e, g, _bits_column(raw, j))
    x, sign = _finish(n, x, z, e)
    return SampleBatch(n, x, z, sign, np.full(count, -k))


def exact_distribution(state: ResourceState, cap: int = EXACT_CAP) -> dict[PauliWord, Fraction]:
    """Full expansion of the sampling tree: signed word -> probability."""
    check_cap("exact sampling distribution", state.n, cap)
    base = Fraction(1, 1 << len(state.outputs))
    leaves: dict[PauliWord, Fraction] = {}
    for t in enumerate_group(StabilizerGroup(state.n, state.t_stabilizers)):
        frontier = [(t, base)]
        for i in state.order:
            zr = state.r_stabilizer(i)
            nxt = []
            for g, p in frontier:
                if (g.x >> i) & 1:
                    nxt.append((g, p / 2))
                    nxt.append((mul(g, zr), p / 2))
                else:
                    nxt.append((g, p))
            frontier = nxt
        for g, p in frontier:
            leaves[g] = leaves.get(g, Fraction(0)) + p
    return leaves


def empirical_check(state: ResourceState, samples: int, seed: int, cap: int = EXACT_CAP) -> float:
    """Max absolute deviation between empirical and exact probabilities over the union of supports."""
    exact = exact_distribution(state, cap)
    counts: dict[PauliWord, int] = {}
    if samples:
        batch = sample_many(state, samples, seed)
        keys, inv = np.unique(np.stack([batch.x.astype(np.uint64), batch.z.astype(np.uint64),
                                        batch.sign.astype(np.int64).astype(np.uint64)], axis=1),
                              axis=0, return_inverse=True)
        tally = np.bincount(inv.ravel(), minlength=len(keys))
        for (xx, zz, ss), c in zip(keys.tolist(), tally.tolist()):
            counts[PauliWord(state.n, xx, zz, 0 if ss == 1 else 2)] = c
    worst = 0.0
    for w in set(exact) | set(counts):
        emp = counts.get(w, 0) / samples if samples else 0.0
        worst = max(worst, abs(emp - float(exact.get(w, 0))))
    return worst


def check_sample(state: ResourceState, word: PauliWord, log2_prob: Optional[int] = None) -> None:
    """Raise if ``word`` is not in G^XY or its recorded probability is inconsistent."""
    meas = state.measured.mask
    if word.z & ~word.x & meas:
        raise RuntimeError(f"{word} acts as Z on a measured qubit")
    if not state.group.contains(word):
        raise RuntimeError(f"{word} is not a group element")
    if log2_prob is not None and log2_prob != -(len(state.outputs) + weight_on(word, meas)):
        raise RuntimeError(f"log2 probability {log2_prob} inconsistent with {word}")
