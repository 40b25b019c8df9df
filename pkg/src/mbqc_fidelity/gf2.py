"""GF(2) elimination on integer bitsets, with combination tracking."""

from __future__ import annotations

from typing import Iterable, Optional


class Gf2Basis:
    """Incrementally built row-echelon basis.

    Each stored row remembers which inserted vectors (by insertion index) XOR to it,
    so :meth:`express` returns the combination of original inputs that produces a target.
    """

    def __init__(self, vectors: Iterable[int] = ()):
        self._rows: dict[int, tuple[int, int]] = {}  # pivot bit -> (row, combo)
        self.count = 0
        self.dependent: list[int] = []
        for v in vectors:
            self.add(v)

    @property
    def rank(self) -> int:
        return len(self._rows)

    def _reduce(self, vec: int, combo: int) -> tuple[int, int]:
        while vec:
            top = vec.bit_length() - 1
            hit = self._rows.get(top)
            if hit is None:
                break
            vec ^= hit[0]
            combo ^= hit[1]
        return vec, combo

    def _reduce_full(self, vec: int, combo: int) -> tuple[int, int]:
        # keeps eliminating below the first unmatched pivot
        out = 0
        while vec:
            top = vec.bit_length() - 1
            hit = self._rows.get(top)
            if hit is None:
                out |= 1 << top
                vec ^= 1 << top
            else:
                vec ^= hit[0]
                combo ^= hit[1]
        return out, combo

    def add(self, vec: int) -> bool:
        """Insert a vector; returns False (and records the index) if it is dependent."""
        idx = self.count
        self.count += 1
        rest, combo = self._reduce(vec, 1 << idx)
        if rest == 0:
            self.dependent.append(idx)
            return False
        self._rows[rest.bit_length() - 1] = (rest, combo)
        return True

    def express(self, target: int) -> Optional[int]:
        """Bitmask of inserted vectors XOR-ing to ``target``, or None if outside the span."""
        rest, combo = self._reduce_full(target, 0)
        return combo if rest == 0 else None

    def contains(self, target: int) -> bool:
        return self.express(target) is not None


def gf2_rank(vectors: Iterable[int]) -> int:
    return Gf2Basis(vectors).rank


def solve_masked(vectors: list[int], mask: int, target: int) -> Optional[int]:
    """Find a subset of ``vectors`` whose XOR agrees with ``target`` on the bits of ``mask``."""
    basis = Gf2Basis(v & mask for v in vectors)
    return basis.express(target & mask)
