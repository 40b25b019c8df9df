import math

import numpy as np
import pytest

from mbqc_fidelity.errors import CapExceededError, ValidationError
from mbqc_fidelity.omega import build_omega, build_omega_theta
from mbqc_fidelity.pauli import QubitSet, parse, to_dense
from mbqc_fidelity.resource import ResourceState, check_group, cluster_1d, cluster_2d, excited_state
from mbqc_fidelity.sim import (
    AngleSpec,
    DensityState,
    NoiseModel,
    PureState,
    apply_gamma,
    apply_noise,
    apply_pauli,
    average_mbqc_fidelity,
    conjugate_pauli,
    expectation,
    gamma_matrix,
    ideal_output,
    ideal_vector,
    mbqc_fidelity_at,
    measured_outcome_slices,
    parse_angles,
    parse_noise,
    pauli_expectation,
    signed_group_vector,
    state_fidelity,
)

from oracles import dense_stabilizer_state

STATES = [cluster_1d(2), cluster_1d(3), cluster_1d(4), cluster_2d(2, 2)]
NOISE = ["depolarizing:0.05", "dephasing:0.1", "coherent_z:0.3", "global_mix:0.2"]


def ideal_rho(state):
    return ideal_vector(state).density()


def random_angles(state, rng):
    return list(rng.uniform(0, 2 * math.pi, len(state.order)))


class TestKernels:
    @pytest.mark.parametrize("text", ["XZ", "-YXY", "IZX", "YYZ", "iXY"])
    def test_apply_pauli(self, text):
        w = parse(text)
        rng = np.random.default_rng(0)
        v = rng.normal(size=1 << w.n) + 1j * rng.normal(size=1 << w.n)
        np.testing.assert_allclose(apply_pauli(w, v), to_dense(w) @ v, atol=1e-12)

    @pytest.mark.parametrize("text", ["XZ", "-YXY", "IZX"])
    def test_conjugate_and_expectation(self, text):
        w = parse(text)
        rng = np.random.default_rng(1)
        a = rng.normal(size=(1 << w.n, 1 << w.n)) + 1j * rng.normal(size=(1 << w.n, 1 << w.n))
        d = to_dense(w)
        np.testing.assert_allclose(conjugate_pauli(w, a), d @ a @ d.conj().T, atol=1e-12)
        assert abs(pauli_expectation(a, w) - np.trace(a @ d)) < 1e-12


class TestStates:
    def test_two_qubit_cluster(self):
        np.testing.assert_allclose(ideal_vector(cluster_1d(2)).amplitudes, [0.5, 0.5, 0.5, -0.5], atol=1e-12)

    def test_plus(self):
        group = check_group([parse("X")], 1)
        st = ResourceState.from_order(group, QubitSet.from_indices(1, [0]), [])
        np.testing.assert_allclose(ideal_vector(st).amplitudes, [2**-0.5, 2**-0.5])

    @pytest.mark.parametrize("state", STATES + [cluster_2d(2, 3)], ids=lambda s: f"n{s.n}")
    def test_stabilized(self, state):
        v = ideal_vector(state).amplitudes
        for g in state.group.generators:
            assert abs(np.vdot(v, apply_pauli(g, v)) - 1) < 1e-12
        ref = dense_stabilizer_state(state.group.generators, state.n)
        assert abs(abs(np.vdot(ref, v)) - 1) < 1e-10
        lead = v[np.flatnonzero(np.abs(v) > 1e-12)[0]]
        assert abs(lead.imag) < 1e-14 and lead.real > 0

    def test_validation(self):
        with pytest.raises(ValidationError):
            PureState(1, [1, 1])
        with pytest.raises(ValidationError):
            DensityState(1, np.eye(2))
        with pytest.raises(CapExceededError):
            ideal_vector(cluster_1d(13))


class TestGamma:
    @pytest.mark.parametrize("state", STATES, ids=lambda s: f"n{s.n}")
    def test_measured_qubits_uniform(self, state):
        rng = np.random.default_rng(2)
        v = apply_gamma(state, random_angles(state, rng), ideal_vector(state)).amplitudes
        n = state.n
        idx = np.arange(1 << n)
        for q in state.measured:
            ones = ((idx >> (n - 1 - q)) & 1) == 1
            assert abs(np.sum(np.abs(v[ones]) ** 2) - 0.5) < 1e-12

    def test_zero_angle_two_qubits(self):
        psi = ideal_output(cluster_1d(2), [0.0]).amplitudes
        assert abs(abs(psi[0]) - 1) < 1e-12

    @pytest.mark.parametrize("state", STATES, ids=lambda s: f"n{s.n}")
    def test_unitary(self, state):
        g = gamma_matrix(state, random_angles(state, np.random.default_rng(3)))
        np.testing.assert_allclose(g.conj().T @ g, np.eye(1 << state.n), atol=1e-12)

    def test_density_matches_vector(self):
        st = cluster_1d(3)
        th = [0.4, 1.3]
        v = apply_gamma(st, th, ideal_vector(st))
        rho = apply_gamma(st, th, ideal_rho(st))
        np.testing.assert_allclose(rho.matrix, np.outer(v.amplitudes, v.amplitudes.conj()), atol=1e-12)

    def test_wrong_angle_count(self):
        with pytest.raises(ValidationError):
            gamma_matrix(cluster_1d(3), [0.1])

    @pytest.mark.parametrize("state", STATES + [cluster_2d(2, 3)], ids=lambda s: f"n{s.n}")
    def test_output_independent_of_outcome(self, state):
        rng = np.random.default_rng(4)
        th = random_angles(state, rng)
        v = apply_gamma(state, th, ideal_vector(state)).amplitudes
        slices = measured_outcome_slices(state)
        first = v[slices[0]] / np.linalg.norm(v[slices[0]])
        last = v[slices[-1]] / np.linalg.norm(v[slices[-1]])
        assert abs(abs(np.vdot(first, last)) - 1) < 1e-10
        ideal_output(state, th)

    def test_broken_flow_detected(self):
        from mbqc_fidelity.resource import Flow

        st = cluster_1d(3)
        bad = ResourceState(st.group, st.outputs, Flow(st.order, {0: parse("IXI"), 1: parse("IIX")}))
        with pytest.raises(RuntimeError):
            ideal_output(bad, [0.3, 0.7])


class TestNoise:
    def test_parse(self):
        assert parse_noise("none") is None
        assert parse_noise("depolarizing:0.01") == NoiseModel("depolarizing", 0.01)
        assert parse_noise("excited_mix:2=0.5").weights == {2: 0.5}
        for bad in ("depolarizing:2", "foo:0.1", "global_mix:x", "excited_mix:2=0.7,3=0.7"):
            with pytest.raises(ValidationError):
                parse_noise(bad)

    def test_identity_channel(self):
        rho = ideal_rho(cluster_1d(3))
        np.testing.assert_allclose(apply_noise(rho, parse_noise("depolarizing:0")).matrix, rho.matrix)

    def test_global_mix(self):
        rho = ideal_rho(cluster_1d(3))
        out = apply_noise(rho, parse_noise("global_mix:0.3")).matrix
        np.testing.assert_allclose(out, 0.7 * rho.matrix + 0.3 * np.eye(8) / 8, atol=1e-14)

    def test_excited_mix(self):
        st = cluster_1d(3)
        out = apply_noise(ideal_rho(st), parse_noise("excited_mix:2=1"), state=st).matrix
        v = signed_group_vector(excited_state(st, 2)).amplitudes
        np.testing.assert_allclose(out, np.outer(v, v.conj()), atol=1e-12)

    def test_excited_mix_needs_state(self):
        with pytest.raises(ValidationError):
            apply_noise(ideal_rho(cluster_1d(3)), parse_noise("excited_mix:2=1"))

    @pytest.mark.parametrize("noise", NOISE + ["depolarizing:1", "dephasing:0.5"])
    def test_trace_and_positivity(self, noise):
        st = cluster_2d(2, 2)
        out = apply_noise(ideal_rho(st), parse_noise(noise))
        assert abs(np.trace(out.matrix) - 1) < 1e-12
        assert out.min_eigenvalue() > -1e-10

    def test_dephasing_against_kraus(self):
        st = cluster_1d(2)
        rho = ideal_rho(st).matrix
        p = 0.2
        z = np.diag([1, -1])
        k = [np.sqrt(1 - p) * np.eye(2), np.sqrt(p) * z]
        ref = rho
        for q in range(2):
            ops = [np.kron(a, np.eye(2)) if q == 0 else np.kron(np.eye(2), a) for a in k]
            ref = sum(o @ ref @ o.conj().T for o in ops)
        out = apply_noise(DensityState(2, rho), parse_noise("dephasing:0.2")).matrix
        np.testing.assert_allclose(out, ref, atol=1e-12)


class TestMbqcFidelity:
    @pytest.mark.parametrize("state", STATES, ids=lambda s: f"n{s.n}")
    def test_ideal_is_one(self, state):
        rng = np.random.default_rng(5)
        for _ in range(3):
            assert abs(mbqc_fidelity_at(state, ideal_rho(state), random_angles(state, rng)) - 1) < 1e-10

    @pytest.mark.parametrize("state", STATES, ids=lambda s: f"n{s.n}")
    def test_maximally_mixed(self, state):
        rho = DensityState.maximally_mixed(state.n)
        th = random_angles(state, np.random.default_rng(6))
        assert abs(mbqc_fidelity_at(state, rho, th) - 2.0 ** -len(state.outputs)) < 1e-10

    @pytest.mark.parametrize("state", STATES, ids=lambda s: f"n{s.n}")
    def test_excited_is_zero(self, state):
        k = state.outputs.indices()[0]
        rho = signed_group_vector(excited_state(state, k)).density()
        th = random_angles(state, np.random.default_rng(7))
        assert abs(mbqc_fidelity_at(state, rho, th)) < 1e-10

    @pytest.mark.parametrize("noise", NOISE)
    def test_adaptive_matches_theta_operator(self, noise):
        st = cluster_2d(2, 3)
        rho = apply_noise(ideal_rho(st), parse_noise(noise))
        rng = np.random.default_rng(8)
        for _ in range(3):
            th = random_angles(st, rng)
            direct = float(np.trace(rho.matrix @ build_omega_theta(st, th)).real)
            assert abs(mbqc_fidelity_at(st, rho, th, cross_check=False) - direct) < 1e-9

    def test_angle_dict(self):
        st = cluster_1d(3)
        rho = apply_noise(ideal_rho(st), parse_noise("dephasing:0.1"))
        assert mbqc_fidelity_at(st, rho, {1: 0.2, 0: 0.9}) == pytest.approx(mbqc_fidelity_at(st, rho, [0.9, 0.2]))


class TestAngleAverage:
    def test_parse(self):
        assert parse_angles("mc:100").mode == "mc_uniform"
        assert parse_angles("clifford_mc:5").count == 5
        assert parse_angles("clifford_exact").mode == "exhaustive_clifford"
        assert parse_angles("explicit:0.1,0.2").angles == (0.1, 0.2)
        for bad in ("mc:x", "foo", "explicit:7", "mc:0"):
            with pytest.raises(ValidationError):
                parse_angles(bad)

    def test_exhaustive_equals_omega(self):
        st = cluster_1d(3)
        rho = apply_noise(ideal_rho(st), parse_noise("global_mix:0.1"))
        avg = average_mbqc_fidelity(st, rho, AngleSpec("exhaustive_clifford"))
        assert abs(avg.mean - expectation(rho, build_omega(st))) < 1e-10
        assert avg.count == 16

    def test_uniform_mc(self):
        st = cluster_1d(3)
        rho = apply_noise(ideal_rho(st), parse_noise("depolarizing:0.1"))
        avg = average_mbqc_fidelity(st, rho, AngleSpec("mc_uniform", count=10_000, seed=3), method="gamma")
        assert abs(avg.mean - expectation(rho, build_omega(st))) < 3 * avg.stderr

    @pytest.mark.parametrize("mode", ["mc_uniform", "mc_clifford", "exhaustive_clifford"])
    def test_ideal(self, mode):
        st = cluster_1d(3)
        avg = average_mbqc_fidelity(st, ideal_rho(st), AngleSpec(mode, count=20, seed=1))
        assert abs(avg.mean - 1) < 1e-10

    def test_exhaustive_size_limit(self):
        st = cluster_1d(10)
        with pytest.raises(ValidationError):
            average_mbqc_fidelity(st, ideal_rho(st), AngleSpec("exhaustive_clifford"))


class TestExpectation:
    @pytest.mark.parametrize("state", STATES, ids=lambda s: f"n{s.n}")
    def test_omega_values(self, state):
        om = build_omega(state)
        assert abs(expectation(ideal_rho(state), om) - 1) < 1e-12
        assert abs(expectation(DensityState.maximally_mixed(state.n), om) - 2.0 ** -len(state.outputs)) < 1e-12

    @pytest.mark.parametrize("p", [0.0, 0.2, 0.7])
    def test_state_fidelity_global_mix(self, p):
        st = cluster_1d(4)
        rho = apply_noise(ideal_rho(st), NoiseModel("global_mix", p))
        assert abs(state_fidelity(rho, st) - ((1 - p) + p / 16)) < 1e-12
