from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbqc_fidelity.errors import CapExceededError
from mbqc_fidelity.omega import build_omega
from mbqc_fidelity.pauli import QubitSet, parse
from mbqc_fidelity.resource import (
    ResourceState,
    StabilizerGroup,
    check_group,
    cluster_1d,
    cluster_2d,
    enumerate_group,
)
from mbqc_fidelity.sampler import (
    RngStream,
    check_sample,
    empirical_check,
    exact_distribution,
    raw_words,
    replay,
    reverse_replay,
    sample_many,
    sample_stabilizer,
    uniform_group_samples,
    uniforms,
)

F = Fraction
STATES = [cluster_1d(n) for n in range(2, 8)] + [cluster_2d(2, 2), cluster_2d(2, 3), cluster_2d(3, 3)]


def as_omega_terms(dist):
    """Signed words -> coefficient on the unsigned word."""
    out = {}
    for w, p in dist.items():
        out[w.unsigned()] = p * w.sign
    return out


class TestExactDistribution:
    def test_two_qubits(self):
        d = exact_distribution(cluster_1d(2))
        assert d == {parse("II"): F(1, 2), parse("XZ"): F(1, 4), parse("YY"): F(1, 4)}

    def test_three_qubits(self):
        d = exact_distribution(cluster_1d(3))
        assert d == {parse("III"): F(1, 2), parse("XIX"): F(1, 4), parse("-YXY"): F(1, 8), parse("YYZ"): F(1, 8)}

    @pytest.mark.parametrize("state", STATES, ids=lambda s: f"n{s.n}")
    def test_matches_omega(self, state):
        d = exact_distribution(state)
        assert sum(d.values()) == 1
        assert as_omega_terms(d) == dict(build_omega(state).items())

    def test_no_measured_qubits_is_uniform_over_t(self):
        group = check_group([parse("X")], 1)
        st = ResourceState.from_order(group, QubitSet.from_indices(1, [0]), [])
        assert exact_distribution(st) == {parse("I"): F(1, 2), parse("X"): F(1, 2)}

    def test_cap(self):
        with pytest.raises(CapExceededError):
            exact_distribution(cluster_1d(16))


class TestSampling:
    @pytest.mark.parametrize("state", STATES, ids=lambda s: f"n{s.n}")
    def test_batch_equals_single_draws(self, state):
        batch = sample_many(state, 40, seed=17, start=5)
        for j in range(40):
            tr = sample_stabilizer(state, RngStream(17, 5 + j))
            assert batch.word(j) == tr.result
            assert batch.log2_prob[j] == tr.log2_prob

    def test_split_batches_agree(self):
        st = cluster_2d(2, 3)
        whole = sample_many(st, 100, seed=3)
        parts = [sample_many(st, 25, seed=3, start=k) for k in (0, 25, 50, 75)]
        assert whole.words() == [w for p in parts for w in p.words()]

    def test_reproducible(self):
        st = cluster_1d(5)
        assert sample_many(st, 50, 9).words() == sample_many(st, 50, 9).words()
        assert sample_many(st, 50, 9).words() != sample_many(st, 50, 10).words()

    @pytest.mark.parametrize("state", STATES, ids=lambda s: f"n{s.n}")
    def test_samples_are_valid(self, state):
        batch = sample_many(state, 200, seed=1)
        for j in range(len(batch)):
            check_sample(state, batch.word(j), int(batch.log2_prob[j]))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**64 - 1), st.integers(0, 10**6), st.sampled_from(STATES[:6]))
    def test_trace_invariants(self, seed, index, state):
        tr = sample_stabilizer(state, RngStream(seed, index))
        meas = state.measured.mask
        assert tr.log2_prob == -(len(state.outputs) + (tr.result.support & meas).bit_count())
        assert replay(state, tr.t_subset, tr.decisions) == tr.result
        start = reverse_replay(state, tr)
        assert start == StabilizerGroup(state.n, state.t_stabilizers).element(tr.t_subset)

    def test_check_sample_rejects(self):
        st = cluster_1d(3)
        with pytest.raises(RuntimeError):
            check_sample(st, parse("ZXZ"))
        with pytest.raises(RuntimeError):
            check_sample(st, parse("-XIX"))
        with pytest.raises(RuntimeError):
            check_sample(st, parse("XIX"), -3)

    def test_large_state_fallback(self):
        st = cluster_1d(70)
        batch = sample_many(st, 3, seed=2)
        for j in range(3):
            assert batch.word(j) == sample_stabilizer(st, RngStream(2, j)).result
            check_sample(st, batch.word(j), int(batch.log2_prob[j]))


class TestEmpirical:
    @pytest.mark.parametrize("state", [cluster_1d(3), cluster_2d(2, 2)], ids=["chain3", "grid2x2"])
    def test_deviation(self, state):
        assert empirical_check(state, 100_000, seed=12345) < 0.01

    def test_zero_samples(self):
        assert empirical_check(cluster_1d(3), 0, seed=1) == 0.5


class TestRandomness:
    def test_row_matches_single_stream(self):
        rows = raw_words(5, 10, 6, 300, purpose=1)
        for j in range(6):
            np.testing.assert_array_equal(raw_words(5, 10 + j, 1, 300, purpose=1)[0], rows[j])

    def test_purposes_are_independent(self):
        assert not np.array_equal(raw_words(5, 0, 4, 10, 0), raw_words(5, 0, 4, 10, 1))

    def test_uniforms_range(self):
        u = uniforms(1, 10_000, 1)
        assert u.min() >= 0 and u.max() < 1 and abs(u.mean() - 0.5) < 0.02

    def test_uniform_group_samples(self):
        group = cluster_1d(3).group
        batch = uniform_group_samples(group, 40_000, seed=4)
        elems = set(enumerate_group(group))
        words = batch.words()
        assert set(words) == elems
        counts = {w: words.count(w) for w in elems}
        assert max(abs(c / 40_000 - 1 / 8) for c in counts.values()) < 0.01
