import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbqc_fidelity.errors import CapExceededError, ValidationError
from mbqc_fidelity.pauli import (
    PauliWord,
    QubitSet,
    commutes,
    format_pauli,
    mul,
    parse,
    product,
    to_dense,
    weight_on,
)

_P = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]),
}


def kron_oracle(text: str) -> np.ndarray:
    sign = -1 if text.startswith("-") else 1
    out = np.array([[1.0 + 0j]])
    for ch in text.lstrip("+-"):
        out = np.kron(out, _P[ch])
    return sign * out


def words(n_max=5, hermitian=False):
    def build(n):
        letters = st.text("IXYZ", min_size=n, max_size=n)
        phase = st.sampled_from([0, 2] if hermitian else [0, 1, 2, 3])
        return st.builds(lambda t, p: PauliWord(n, parse(t).x, parse(t).z, p), letters, phase)

    return st.integers(1, n_max).flatmap(build)


def same_n_pair(n_max=5, hermitian=False):
    def build(n):
        letters = st.text("IXYZ", min_size=n, max_size=n)
        ph = st.sampled_from([0, 2] if hermitian else [0, 1, 2, 3])
        w = st.builds(lambda t, p: PauliWord(n, parse(t).x, parse(t).z, p), letters, ph)
        return st.tuples(w, w, w)

    return st.integers(1, n_max).flatmap(build)


class TestParseFormat:
    def test_encoding(self):
        w = parse("XZ")
        assert (w.n, w.x, w.z, w.phase) == (2, 0b01, 0b10, 0)

    def test_negative_word(self):
        w = parse("-YXY")
        assert w.phase == 2 and w.letters == "YXY"

    def test_round_trip_text(self):
        assert format_pauli(parse("+IZX")) == "+IZX"
        assert str(parse("IZX")) == "+IZX"

    def test_imaginary_prefix(self):
        assert parse("iXZ").phase == 1
        assert parse("-iXZ").phase == 3

    @pytest.mark.parametrize("bad", ["", "+", "XQ", "x", "--X", "X Z"])
    def test_malformed(self, bad):
        with pytest.raises(ValidationError):
            parse(bad)

    @given(words(8))
    def test_round_trip(self, w):
        assert parse(format_pauli(w)) == w


class TestMul:
    def test_identity(self):
        assert mul(parse("II"), parse("XZ")) == parse("+XZ")

    def test_xz_zx(self):
        assert mul(parse("XZ"), parse("ZX")) == parse("+YY")

    def test_cluster_product(self):
        assert mul(parse("XZI"), parse("ZXZ")) == parse("+YYZ")

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            mul(parse("X"), parse("XX"))

    @settings(max_examples=60)
    @given(same_n_pair(4))
    def test_against_dense(self, abc):
        a, b, _ = abc
        np.testing.assert_allclose(to_dense(a * b), to_dense(a) @ to_dense(b), atol=1e-12)

    @given(same_n_pair(6))
    def test_associative(self, abc):
        a, b, c = abc
        assert (a * b) * c == a * (b * c)
        assert product([a, b, c], a.n) == a * b * c

    @given(words(6))
    def test_inverse(self, a):
        inv = PauliWord(a.n, a.x, a.z, -a.phase % 4)
        assert (a * inv).is_identity() and (a * inv).phase == 0

    @given(same_n_pair(6, hermitian=True))
    def test_product_phase_tracks_commutation(self, abc):
        a, b, _ = abc
        assert (a * b).is_hermitian == commutes(a, b)


class TestCommutes:
    def test_examples(self):
        assert commutes(parse("X"), parse("X"))
        assert not commutes(parse("X"), parse("Z"))
        assert commutes(parse("XZI"), parse("ZXZ"))

    @settings(max_examples=60)
    @given(same_n_pair(4))
    def test_against_dense_commutator(self, abc):
        a, b, _ = abc
        da, db = to_dense(a), to_dense(b)
        assert commutes(a, b) == np.allclose(da @ db, db @ da)


class TestWeight:
    def test_examples(self):
        s = QubitSet.from_indices(3, [0, 1])
        assert weight_on(parse("III"), s) == 0
        assert weight_on(parse("XIX"), s) == 1
        assert weight_on(parse("YYZ"), s) == 2

    @given(words(8))
    def test_full_weight_plus_identities(self, w):
        assert weight_on(w, QubitSet.full(w.n)) + w.letters.count("I") == w.n


class TestDense:
    def test_single_identity(self):
        np.testing.assert_array_equal(to_dense(parse("I")), np.eye(2))

    @pytest.mark.parametrize("text", ["+XZ", "-YXY", "+IZX"])
    def test_kron(self, text):
        np.testing.assert_allclose(to_dense(parse(text)), kron_oracle(text))

    def test_cap(self):
        with pytest.raises(CapExceededError):
            to_dense(parse("X" * 13))


class TestQubitSet:
    def test_complement_and_iteration(self):
        s = QubitSet.from_indices(4, [3])
        assert list(s.complement()) == [0, 1, 2]
        assert 3 in s and 0 not in s and len(s) == 1

    def test_out_of_range(self):
        with pytest.raises(ValidationError):
            QubitSet.from_indices(2, [2])
