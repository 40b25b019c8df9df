"""The average-MBQC-fidelity operator and its spectrum.

For a resource state with output set O and measured set M,

    Omega = 2**-|O| * sum_{g in G^XY} 2**-w_M(g) * g

where ``G^XY`` holds the stabilizers acting as I, X or Y on every measured qubit and
``w_M`` counts the non-identity letters on M. ``tr(rho @ Omega)`` is the MBQC fidelity of
``rho`` averaged over XY-plane measurement angles.

All Omega terms lie in the (abelian) stabilizer group, so the full spectrum is the
Walsh-Hadamard transform of the coefficient vector indexed by generator subsets.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import DENSE_CAP, ENUMERATION_CAP, SPECTRAL_CAP, ValidationError, check_cap
from .gf2 import Gf2Basis
from .pauli import PauliWord, commutes, format_pauli, mul, parse, to_dense
from .resource import ResourceState, SignedGroup, StabilizerGroup, enumerate_group, group_arrays


class PauliSum:
    """Real linear combination of Pauli words with exact rational coefficients.

    Words are stored without phase; a ``-`` sign is folded into the coefficient.
    """

    def __init__(self, n: int, terms: Optional[Iterable[tuple[PauliWord, object]]] = None):
        self.n = n
        self._terms: dict[PauliWord, Fraction] = {}
        for word, coeff in terms or ():
            self.add_term(word, coeff)

    def add_term(self, word: PauliWord, coeff) -> None:
        if word.n != self.n:
            raise ValidationError(f"term on {word.n} qubits added to a {self.n}-qubit sum")
        c = Fraction(coeff) * word.sign
        key = word.unsigned()
        total = self._terms.get(key, 0) + c
        if total:
            self._terms[key] = total
        else:
            self._terms.pop(key, None)

    @classmethod
    def from_strings(cls, pairs: Iterable[tuple[str, object]]) -> "PauliSum":
        pairs = [(parse(w), c) for w, c in pairs]
        return cls(pairs[0][0].n, pairs)

    def coefficient(self, word: PauliWord) -> Fraction:
        return self._terms.get(word.unsigned(), Fraction(0)) * word.sign

    def items(self) -> list[tuple[PauliWord, Fraction]]:
        return sorted(self._terms.items(), key=lambda kv: (kv[0].support.bit_count(), kv[0].letters))

    def words(self) -> list[PauliWord]:
        return [w for w, _ in self.items()]

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, PauliSum) and self.n == other.n and self._terms == other._terms

    def __add__(self, other: "PauliSum") -> "PauliSum":
        out = self.copy()
        for w, c in other._terms.items():
            out.add_term(w, c)
        return out

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + other.scale(-1)

    def scale(self, factor) -> "PauliSum":
        return PauliSum(self.n, ((w, c * Fraction(factor)) for w, c in self._terms.items()))

    def copy(self) -> "PauliSum":
        return PauliSum(self.n, self._terms.items())

    def total(self) -> Fraction:
        return sum(self._terms.values(), Fraction(0))

    def prepend(self, prefix: PauliWord) -> "PauliSum":
        """``prefix (x) self``, with the prefix on the leftmost qubits."""
        k = prefix.n
        out = PauliSum(self.n + k)
        for w, c in self._terms.items():
            out.add_term(PauliWord(self.n + k, prefix.x | (w.x << k), prefix.z | (w.z << k), prefix.phase), c)
        return out

    def map_words(self, fn) -> "PauliSum":
        """Apply a phase-tracking word map (e.g. a Clifford conjugation) to every term."""
        out = PauliSum(self.n)
        for w, c in self._terms.items():
            out.add_term(fn(w), c)
        return out

    def to_dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        check_cap("dense Pauli sum", self.n, cap)
        out = np.zeros((1 << self.n, 1 << self.n), dtype=complex)
        for w, c in self._terms.items():
            out += float(c) * to_dense(w, cap)
        return out

    def to_dict(self) -> dict:
        terms = []
        for w, c in self.items():
            den = c.denominator
            exact = [c.numerator, den.bit_length() - 1] if den & (den - 1) == 0 else None
            terms.append({"word": format_pauli(w), "coeff": float(c), "coeff_exact": exact})
        return {"n": self.n, "terms": terms}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "PauliSum":
        out = cls(int(doc["n"]))
        for t in doc["terms"]:
            exact = t.get("coeff_exact")
            c = Fraction(exact[0], 1 << exact[1]) if exact else Fraction(t["coeff"])
            out.add_term(parse(t["word"]), c)
        return out

    def __repr__(self) -> str:
        body = " + ".join(f"({c}) {w.letters}" for w, c in self.items())
        return f"PauliSum({body or '0'})"


# ---------------------------------------------------------------------------
# construction


def _omega_arrays(state: ResourceState, cap: int):
    """Vectorised G^XY filter over all group elements.

    Returns ``(x, z, sign, keep, log2den)``; element ``idx`` is the product of the
    state's generators selected by the bits of ``idx``.
    """
    check_cap("group enumeration", state.n, cap)
    x, z, sign = group_arrays(state.group.generators, state.n, cap)
    meas = np.uint64(state.measured.mask)
    keep = (z & ~x & meas) == 0
    log2den = len(state.outputs) + np.bitwise_count((x | z) & meas).astype(np.int64)
    return x, z, sign, keep, log2den


def _sum_from_arrays(n, x, z, sign, log2den) -> PauliSum:
    out = PauliSum(n)
    for xi, zi, si, di in zip(x.tolist(), z.tolist(), sign.tolist(), log2den.tolist()):
        out._terms[PauliWord(n, xi, zi, 0)] = Fraction(si, 1 << di)
    return out


def build_omega(state: ResourceState, cap: int = ENUMERATION_CAP) -> PauliSum:
    """Omega by enumerating the stabilizer group and keeping the G^XY elements."""
    x, z, sign, keep, log2den = _omega_arrays(state, cap)
    return _sum_from_arrays(state.n, x[keep], z[keep], sign[keep], log2den[keep])


def build_omega_recursive(state: ResourceState, cap: int = ENUMERATION_CAP, seeds: Optional[Sequence[PauliWord]] = None) -> PauliSum:
    """Omega as ``2**-|O| sum_t Lambda_M(t)`` over the T-subgroup.

    ``Lambda_i`` leaves a word commuting with ``Z_i`` alone and otherwise replaces
    ``P`` by ``(P + P Z_i R_i) / 2``; the maps are applied in temporal order.
    ``seeds`` restricts the outer sum to the given T-subgroup elements (for
    inspecting single branches).
    """
    check_cap("recursive Omega", state.n, cap)
    n = state.n
    if seeds is None:
        seeds = list(enumerate_group(StabilizerGroup(n, state.t_stabilizers)))
    weight = Fraction(1, 1 << len(state.outputs))
    terms: dict[PauliWord, Fraction] = {}
    for t in seeds:
        key = t.unsigned()
        terms[key] = terms.get(key, 0) + weight * t.sign
    for i in state.order:
        zr = state.r_stabilizer(i)
        nxt: dict[PauliWord, Fraction] = {}
        for w, c in terms.items():
            if (w.x >> i) & 1:
                half = c / 2
                nxt[w] = nxt.get(w, 0) + half
                p = mul(w, zr)
                key = p.unsigned()
                nxt[key] = nxt.get(key, 0) + half * p.sign
            else:
                nxt[w] = nxt.get(w, 0) + c
        terms = nxt
    out = PauliSum(n)
    for w, c in terms.items():
        if c:
            out._terms[w] = c
    return out


_MU_VALUES = ("X", "Y", "XY")


@dataclass(frozen=True)
class BasisMap:
    """Fixed measurement basis per measured qubit: "X", "Y", or "XY" (angle-averaged)."""

    mu: Mapping[int, str]

    def __post_init__(self):
        for q, v in self.mu.items():
            if v not in _MU_VALUES:
                raise ValidationError(f"basis for qubit {q} must be one of {_MU_VALUES}, got {v!r}")

    @classmethod
    def uniform(cls, state: ResourceState, value: str = "XY") -> "BasisMap":
        return cls({q: value for q in state.measured})


def exy_action(letter: str) -> tuple[str, Fraction]:
    """Action of the angle-averaged XY dephasing channel on a single Pauli letter."""
    table = {"I": Fraction(1), "Z": Fraction(0), "X": Fraction(1, 2), "Y": Fraction(1, 2)}
    if letter not in table:
        raise ValidationError(f"not a Pauli letter: {letter!r}")
    return letter, table[letter]


def build_omega_fixed(state: ResourceState, basis: BasisMap, cap: int = ENUMERATION_CAP) -> PauliSum:
    """Omega when some measured qubits are always measured in the X or Y basis."""
    missing = set(state.measured) - set(basis.mu)
    if missing:
        raise ValidationError(f"basis map does not cover measured qubits {sorted(missing)}")
    check_cap("group enumeration", state.n, cap)
    x, z, sign = group_arrays(state.group.generators, state.n, cap)
    mx = my = mxy = 0
    for q in state.measured:
        v = basis.mu[q]
        if v == "X":
            mx |= 1 << q
        elif v == "Y":
            my |= 1 << q
        else:
            mxy |= 1 << q
    mx, my, mxy = np.uint64(mx), np.uint64(my), np.uint64(mxy)
    keep = ((z & mx) == 0) & (((x ^ z) & my) == 0) & ((z & ~x & mxy) == 0)
    log2den = len(state.outputs) + np.bitwise_count(x & mxy).astype(np.int64)
    return _sum_from_arrays(state.n, x[keep], z[keep], sign[keep], log2den[keep])


def build_omega_theta(state: ResourceState, angles, cap: int = DENSE_CAP) -> np.ndarray:
    """Dense ``Omega(theta) = 2**M sum_s G^+ |s><s| G |S><S| G^+ |s><s| G`` for fixed angles."""
    from .sim import gamma_matrix, ideal_vector, measured_outcome_slices

    check_cap("dense Omega(theta)", state.n, cap)
    gamma = gamma_matrix(state, angles, cap)
    v = gamma @ ideal_vector(state, cap).amplitudes
    M = len(state.measured)
    dim = 1 << state.n
    out = np.zeros((dim, dim), dtype=complex)
    for idx in measured_outcome_slices(state):
        w = np.zeros(dim, dtype=complex)
        w[idx] = v[idx]
        u = gamma.conj().T @ w
        out += np.outer(u, u.conj())
    return out * (1 << M)


# ---------------------------------------------------------------------------
# 1D cluster: CZ-conjugated operator and recurrence


def cz_conjugate(word: PauliWord, edges: Iterable[tuple[int, int]]) -> PauliWord:
    """``C word C`` for ``C`` the product of CZ gates on ``edges``."""
    n = word.n
    nbrs = [0] * n
    for a, b in edges:
        nbrs[a] |= 1 << b
        nbrs[b] |= 1 << a
    e = (word.phase + (word.x & word.z).bit_count()) % 4
    out = PauliWord(n, 0, 0, e)
    for q in range(n):
        if (word.x >> q) & 1:
            out = mul(out, PauliWord(n, 1 << q, nbrs[q], 0))
    return mul(out, PauliWord(n, 0, word.z, 0))


def _chain(n: int) -> list[tuple[int, int]]:
    return [(q, q + 1) for q in range(n - 1)]


def omega_tilde_from_omega(omega: PauliSum) -> PauliSum:
    """``CZchain (2 Omega - I) CZchain``."""
    n = omega.n
    shifted = omega.scale(2) - PauliSum(n, [(PauliWord.identity(n), 1)])
    edges = _chain(n)
    return shifted.map_words(lambda w: cz_conjugate(w, edges))


OMEGA_TILDE_2 = PauliSum.from_strings([("XI", Fraction(1, 2)), ("XX", Fraction(1, 2))])
OMEGA_TILDE_3 = PauliSum.from_strings(
    [("XIX", Fraction(1, 2)), ("XXX", Fraction(1, 4)), ("XXI", Fraction(1, 4))]
)


def omega_tilde_recurrence_step(prev: PauliSum, prev2: PauliSum) -> PauliSum:
    """``X (x) prev / 2 + XI (x) prev2 / 2``."""
    if prev.n != prev2.n + 1:
        raise ValidationError("recurrence needs operators on N-1 and N-2 qubits")
    half = Fraction(1, 2)
    return prev.prepend(parse("X")).scale(half) + prev2.prepend(parse("XI")).scale(half)


def omega_tilde_1d(N: int) -> PauliSum:
    if N < 2:
        raise ValidationError("N must be at least 2")
    a, b = OMEGA_TILDE_2, OMEGA_TILDE_3
    if N == 2:
        return a.copy()
    for _ in range(N - 3):
        a, b = b, omega_tilde_recurrence_step(b, a)
    return b.copy()


# ---------------------------------------------------------------------------
# spectrum


def fwht(values: np.ndarray) -> np.ndarray:
    """Unnormalised fast Walsh-Hadamard transform: ``out[s] = sum_k v[k] (-1)**popcount(k & s)``."""
    a = np.array(values, dtype=float)
    size = a.shape[0]
    if size & (size - 1):
        raise ValidationError("FWHT length must be a power of two")
    h = 1
    while h < size:
        view = a.reshape(-1, 2, h)
        lo = view[:, 0, :].copy()
        view[:, 0, :] += view[:, 1, :]
        view[:, 1, :] = lo - view[:, 1, :]
        h *= 2
    return a


def diagonalize_commuting(terms: PauliSum, group: Optional[StabilizerGroup] = None, cap: int = SPECTRAL_CAP) -> np.ndarray:
    """All ``2**n`` eigenvalues of a sum of pairwise-commuting Pauli words.

    The words are written as signed products of an independent commuting basis
    (the generators of ``group``, or a basis picked from the terms). A Clifford
    mapping basis element ``k`` to ``Z_k`` turns each term into a signed Z-string
    whose support is its generator subset, so the eigenvalue on the joint eigenstate
    with generator signs ``(-1)**s_k`` is the Walsh-Hadamard transform at ``s``.
    Entry ``s`` of the returned array (before repetition for a rank-deficient basis)
    is that eigenvalue.
    """
    n = terms.n
    check_cap("commuting diagonalisation", n, cap)
    if group is not None:
        basis_words = list(group.generators)
    else:
        gb = Gf2Basis()
        basis_words = [w for w in terms.words() if not w.is_identity() and gb.add(w.symplectic)]
    for a in range(len(basis_words)):
        for b in range(a + 1, len(basis_words)):
            if not commutes(basis_words[a], basis_words[b]):
                raise ValidationError("basis words do not commute")
    basis = Gf2Basis(w.symplectic for w in basis_words)
    if basis.rank != len(basis_words):
        raise ValidationError("basis words are dependent")
    r = len(basis_words)
    vec = np.zeros(1 << r)
    span = StabilizerGroup(n, tuple(basis_words))
    for w, c in terms.items():
        combo = basis.express(w.symplectic)
        if combo is None:
            raise ValidationError(f"term {w.letters} does not commute with / lie in the basis span")
        prod = span.element(combo)
        if not prod.is_hermitian:
            raise ValidationError(f"term {w.letters} anticommutes with another term")
        vec[combo] += float(c) * prod.sign
    eig = fwht(vec)
    if r < n:
        eig = np.repeat(eig, 1 << (n - r))
    return eig


@dataclass(frozen=True)
class SpectralSummary:
    max_eig: float
    second_eig: float
    min_eig: float
    max_multiplicity: int
    second_pattern: int = 0

    @property
    def beta(self) -> float:
        return self.second_eig

    @property
    def tau(self) -> float:
        return self.min_eig

    @property
    def gap(self) -> float:
        return 1.0 - self.second_eig

    nu = gap

    def to_dict(self) -> dict:
        return {
            "max": self.max_eig,
            "beta": self.second_eig,
            "tau": self.min_eig,
            "nu": self.gap,
            "max_multiplicity": self.max_multiplicity,
        }


def omega_spectrum(state: ResourceState, cap: int = SPECTRAL_CAP) -> np.ndarray:
    """Eigenvalues of Omega indexed by generator sign pattern (bit k set = generator k flipped)."""
    # element idx already carries its group sign, so its weight is just 2**-log2den
    _, _, _, keep, log2den = _omega_arrays(state, cap)
    vec = np.where(keep, np.ldexp(1.0, -log2den), 0.0)
    return fwht(vec)


def spectral_summary(state: ResourceState, cap: int = SPECTRAL_CAP, tol: float = 1e-12) -> SpectralSummary:
    eig = omega_spectrum(state, cap)
    top = float(eig[0])
    mult = int(np.sum(np.abs(eig - top) <= tol))
    if abs(top - 1.0) > tol or mult != 1 or eig.max() > top + tol:
        raise RuntimeError(f"Omega must have a unique eigenvalue 1; got max {top} with multiplicity {mult}")
    rest = eig.copy()
    rest[0] = -np.inf
    second_pattern = int(np.argmax(rest))
    low = float(eig.min())
    if abs(low) > tol:
        raise RuntimeError(f"Omega minimum eigenvalue should be 0, got {low}")
    return SpectralSummary(top, float(rest[second_pattern]), low, mult, second_pattern)


def eigenstate_group(state: ResourceState, pattern: int) -> SignedGroup:
    """Stabilizer group of the Omega eigenvector with the given generator sign pattern."""
    flips = frozenset(k for k in range(state.n) if (pattern >> k) & 1)
    return SignedGroup(state.group, flips)


def second_eigenstate(state: ResourceState, cap: int = SPECTRAL_CAP) -> SignedGroup:
    """A stabilizer eigenvector of Omega with the second-largest eigenvalue."""
    return eigenstate_group(state, spectral_summary(state, cap).second_pattern)
