"""Signed Pauli strings in binary-symplectic form.

A word on ``n`` qubits is stored as two bit masks and a phase exponent::

    P = i**phase * P_0 (x) P_1 (x) ... (x) P_{n-1}

where the letter on qubit ``q`` is read from bit ``q`` of the masks:
``(x, z) = (0, 0) -> I, (1, 0) -> X, (1, 1) -> Y, (0, 1) -> Z``.
Qubit 0 is the leftmost character of the text form.

Masks are Python integers, so ``n`` is limited only by memory.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

import numpy as np

from .errors import DENSE_CAP, ValidationError, check_cap

_LETTERS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_BITS = {v: k for k, v in _LETTERS.items()}
_SIGN_TEXT = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_WORD_RE = re.compile(r"^([+-]?)(i?)([IXYZ]+)$")

_PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class QubitSet:
    """Subset of ``{0, ..., n-1}`` held as a bit mask."""

    n: int
    mask: int = 0

    def __post_init__(self):
        if self.mask < 0 or self.mask >> self.n:
            raise ValidationError(f"qubit mask {self.mask:#x} out of range for n={self.n}")

    @classmethod
    def from_indices(cls, n: int, indices: Iterable[int]) -> "QubitSet":
        mask = 0
        for q in indices:
            if not 0 <= q < n:
                raise ValidationError(f"qubit {q} out of range for n={n}")
            mask |= 1 << q
        return cls(n, mask)

    @classmethod
    def full(cls, n: int) -> "QubitSet":
        return cls(n, (1 << n) - 1)

    def complement(self) -> "QubitSet":
        return QubitSet(self.n, ((1 << self.n) - 1) & ~self.mask)

    def __iter__(self) -> Iterator[int]:
        m = self.mask
        while m:
            low = m & -m
            yield low.bit_length() - 1
            m ^= low

    def __contains__(self, q) -> bool:
        return bool((self.mask >> q) & 1)

    def __len__(self) -> int:
        return self.mask.bit_count()

    def indices(self) -> list[int]:
        return list(self)


@dataclass(frozen=True)
class PauliWord:
    n: int
    x: int
    z: int
    phase: int = 0

    def __post_init__(self):
        if (self.x | self.z) >> self.n:
            raise ValidationError(f"masks exceed {self.n} qubits")
        if not 0 <= self.phase < 4:
            object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def identity(cls, n: int) -> "PauliWord":
        return cls(n, 0, 0, 0)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliWord":
        bx, bz = _BITS[letter]
        return cls(n, bx << qubit, bz << qubit, 0)

    @classmethod
    def parse(cls, text: str) -> "PauliWord":
        return parse(text)

    def letter(self, q: int) -> str:
        return _LETTERS[(self.x >> q) & 1, (self.z >> q) & 1]

    @property
    def letters(self) -> str:
        return "".join(self.letter(q) for q in range(self.n))

    @property
    def support(self) -> int:
        return self.x | self.z

    @property
    def is_hermitian(self) -> bool:
        return self.phase in (0, 2)

    @property
    def sign(self) -> int:
        """+1 or -1 for a Hermitian word."""
        if not self.is_hermitian:
            raise ValidationError(f"word {format_pauli(self)} is not Hermitian")
        return 1 if self.phase == 0 else -1

    @property
    def symplectic(self) -> int:
        """Single integer ``x | z << n`` used for GF(2) linear algebra."""
        return self.x | (self.z << self.n)

    def unsigned(self) -> "PauliWord":
        return PauliWord(self.n, self.x, self.z, 0)

    def negate(self) -> "PauliWord":
        return PauliWord(self.n, self.x, self.z, self.phase + 2)

    def is_identity(self) -> bool:
        return not (self.x or self.z)

    def __mul__(self, other: "PauliWord") -> "PauliWord":
        return mul(self, other)

    def __neg__(self) -> "PauliWord":
        return self.negate()

    def __str__(self) -> str:
        return format_pauli(self)

    def __repr__(self) -> str:
        return f"PauliWord({format_pauli(self)!r})"


def _check_same_n(a: PauliWord, b: PauliWord):
    if a.n != b.n:
        raise ValidationError(f"dimension mismatch: {a.n} vs {b.n} qubits")


def xz_exponent(w: PauliWord) -> int:
    """Exponent ``e`` with ``w = i**e * X**x * Z**z`` (all X factors left of Z)."""
    return (w.phase + (w.x & w.z).bit_count()) % 4


def mul(a: PauliWord, b: PauliWord) -> PauliWord:
    """Matrix product ``a @ b`` with exact phase."""
    _check_same_n(a, b)
    e = xz_exponent(a) + xz_exponent(b) + 2 * (a.z & b.x).bit_count()
    x = a.x ^ b.x
    z = a.z ^ b.z
    return PauliWord(a.n, x, z, (e - (x & z).bit_count()) % 4)


def product(words: Iterable[PauliWord], n: int) -> PauliWord:
    out = PauliWord.identity(n)
    for w in words:
        out = mul(out, w)
    return out


def commutes(a: PauliWord, b: PauliWord) -> bool:
    _check_same_n(a, b)
    return ((a.x & b.z).bit_count() + (a.z & b.x).bit_count()) % 2 == 0


def weight_on(a: PauliWord, qubits: Union[QubitSet, int, None] = None) -> int:
    """Number of qubits in ``qubits`` (default: all) where ``a`` is not I."""
    if qubits is None:
        mask = (1 << a.n) - 1
    elif isinstance(qubits, QubitSet):
        mask = qubits.mask
    else:
        mask = qubits
    return (a.support & mask).bit_count()


def parse(text: str) -> PauliWord:
    m = _WORD_RE.match(text.strip())
    if m is None:
        if not text.strip().lstrip("+-").lstrip("i"):
            raise ValidationError(f"empty Pauli string: {text!r}")
        raise ValidationError(f"malformed Pauli string: {text!r}")
    sign, imag, body = m.groups()
    phase = (2 if sign == "-" else 0) + (1 if imag else 0)
    x = z = 0
    for q, ch in enumerate(body):
        bx, bz = _BITS[ch]
        x |= bx << q
        z |= bz << q
    return PauliWord(len(body), x, z, phase)


def format_pauli(w: PauliWord) -> str:
    return _SIGN_TEXT[w.phase] + w.letters


def to_dense(a: PauliWord, cap: int = DENSE_CAP) -> np.ndarray:
    """Kronecker product of the letters (qubit 0 is the most significant factor)."""
    check_cap("dense Pauli matrix", a.n, cap)
    out = np.ones((1, 1), dtype=complex)
    for q in range(a.n):
        out = np.kron(out, _PAULI_MATRICES[a.letter(q)])
    return (1j ** a.phase) * out
