import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracle import DenseOracle, bell_expansion
from sqka.qsim import BellKind, EntangledDiscardError, QuantumRegistry, QubitError, sample_index

R = 1 / np.sqrt(2)
PHI_P, PHI_M, PSI_P, PSI_M = BellKind


def assert_invariants(reg):
    members = [q for g in reg.groups() for q in g.members]
    assert sorted(members) == reg.live_qubits()
    assert len(members) == len(set(members))
    for g in reg.groups():
        assert len(g.amplitudes) == 2 ** len(g.members)
        assert abs(np.linalg.norm(g.amplitudes) - 1) < 1e-9


class TestPreparation:
    @pytest.mark.parametrize("value, amps", [(0, [1, 0]), (1, [0, 1])])
    def test_new_qubit(self, value, amps):
        reg = QuantumRegistry(0)
        q = reg.new_qubit(value)
        g = reg.group_of(q)
        assert g.members == (q,)
        np.testing.assert_allclose(g.amplitudes, amps)

    def test_new_qubit_rejects_non_bits(self):
        with pytest.raises(ValueError):
            QuantumRegistry(0).new_qubit(2)

    @pytest.mark.parametrize(
        "kind, amps",
        [
            (PHI_P, [R, 0, 0, R]),
            (PHI_M, [R, 0, 0, -R]),
            (PSI_P, [0, R, R, 0]),
            (PSI_M, [0, R, -R, 0]),
        ],
    )
    def test_bell_pair_amplitudes(self, kind, amps):
        reg = QuantumRegistry(0)
        a, b = reg.new_bell_pair(kind)
        g = reg.group_of(a)
        assert g.members == (a, b)
        np.testing.assert_allclose(g.amplitudes, amps, atol=1e-12)

    def test_measure_fresh_one_is_certain(self):
        for seed in range(50):
            reg = QuantumRegistry(seed)
            assert reg.measure_z(reg.new_qubit(1)) == 1
            assert reg.measure_z(reg.new_qubit(0)) == 0

    @pytest.mark.parametrize("kind", list(BellKind))
    def test_fresh_pair_is_bell_eigenstate(self, kind):
        for seed in range(20):
            reg = QuantumRegistry(seed)
            a, b = reg.new_bell_pair(kind)
            assert reg.measure_bell(a, b) == kind


class TestZMeasurement:
    @pytest.mark.parametrize("kind, same", [(PHI_P, True), (PHI_M, True), (PSI_P, False), (PSI_M, False)])
    def test_partner_correlation(self, kind, same):
        seen = set()
        for seed in range(200):
            reg = QuantumRegistry(seed)
            a, b = reg.new_bell_pair(kind)
            ra = reg.measure_z(a)
            rb = reg.measure_z(b)
            assert (ra == rb) == same
            assert not reg.is_entangled(a) and not reg.is_entangled(b)
            seen.add(ra)
        assert seen == {0, 1}

    def test_half_of_pair_is_fair(self):
        reg = QuantumRegistry(123)
        count = 0
        trials = 10_000
        for _ in range(trials):
            a, b = reg.new_bell_pair(PHI_P)
            count += reg.measure_z(a)
            reg.measure_z(b)
            reg.discard(a)
            reg.discard(b)
        assert abs(count / trials - 0.5) < 0.02


class TestBellProbabilities:
    @pytest.mark.parametrize("a, b", [(0, 0), (0, 1), (1, 0), (1, 1)])
    def test_products_match_expansion(self, a, b):
        reg = QuantumRegistry(0)
        qa, qb = reg.new_qubit(a), reg.new_qubit(b)
        np.testing.assert_allclose(reg.bell_probabilities(qa, qb), bell_expansion(a, b), atol=1e-12)

    def test_untouched_psi_plus(self):
        reg = QuantumRegistry(0)
        a, b = reg.new_bell_pair(PSI_P)
        np.testing.assert_allclose(reg.bell_probabilities(a, b), [0, 0, 1, 0], atol=1e-12)

    @pytest.mark.parametrize("r", [0, 1])
    def test_opposite_values(self, r):
        reg = QuantumRegistry(0)
        p = reg.bell_probabilities(reg.new_qubit(r), reg.new_qubit(r ^ 1))
        np.testing.assert_allclose(p, [0, 0, 0.5, 0.5], atol=1e-12)
        np.testing.assert_allclose(p, bell_expansion(r, r ^ 1), atol=1e-12)

    @pytest.mark.parametrize("b", [0, 1])
    def test_half_pair_against_product(self, b):
        reg = QuantumRegistry(0)
        a, _ = reg.new_bell_pair(PHI_P)
        q = reg.new_qubit(b)
        np.testing.assert_allclose(reg.bell_probabilities(a, q), [0.25] * 4, atol=1e-12)

        oracle = DenseOracle()
        oracle.add(["a", "a2"], [R, 0, 0, R])
        oracle.add(["q"], [1 - b, b])
        np.testing.assert_allclose(oracle.bell_probabilities("a", "q"), [0.25] * 4, atol=1e-12)

    def test_does_not_mutate(self):
        reg = QuantumRegistry(0)
        a, b = reg.new_bell_pair(PHI_P)
        c, d = reg.new_bell_pair(PSI_P)
        before = [(g.members, g.amplitudes.copy()) for g in reg.groups()]
        reg.bell_probabilities(a, d)
        after = reg.groups()
        assert [g.members for g in after] == [m for m, _ in before]
        for g, (_, amps) in zip(after, before):
            np.testing.assert_array_equal(g.amplitudes, amps)

    def test_measure_eleven(self):
        outcomes = set()
        for seed in range(200):
            reg = QuantumRegistry(seed)
            outcomes.add(reg.measure_bell(reg.new_qubit(1), reg.new_qubit(1)))
        assert outcomes == {PHI_P, PHI_M}


class TestEntanglementSwapping:
    def test_cross_probabilities_match_oracle(self):
        reg = QuantumRegistry(0)
        a1, b1 = reg.new_bell_pair(PHI_P)
        a2, b2 = reg.new_bell_pair(PHI_P)
        oracle = DenseOracle()
        oracle.add(["a1", "b1"], [R, 0, 0, R])
        oracle.add(["a2", "b2"], [R, 0, 0, R])
        expected = oracle.bell_probabilities("a1", "b2")
        np.testing.assert_allclose(expected, [0.25] * 4, atol=1e-12)
        np.testing.assert_allclose(reg.bell_probabilities(a1, b2), expected, atol=1e-9)

    @pytest.mark.parametrize("k1", [PHI_P, PSI_P])
    @pytest.mark.parametrize("k2", [PHI_P, PSI_P])
    def test_partners_left_in_bell_state(self, k1, k2):
        for seed in range(30):
            reg = QuantumRegistry(seed)
            a1, b1 = reg.new_bell_pair(k1)
            a2, b2 = reg.new_bell_pair(k2)
            reg.measure_bell(a1, b2)
            assert_invariants(reg)
            assert reg.group_of(b1).members == reg.group_of(a2).members
            p = reg.bell_probabilities(b1, a2)
            assert np.isclose(p.max(), 1.0, atol=1e-9)
            assert np.isclose(p.sum(), 1.0, atol=1e-9)

    def test_outcome_frequencies(self):
        reg = QuantumRegistry(2024)
        counts = np.zeros(4)
        trials = 10_000
        for _ in range(trials):
            a1, b1 = reg.new_bell_pair(PHI_P)
            a2, b2 = reg.new_bell_pair(PHI_P)
            counts[reg.measure_bell(a1, b2)] += 1
        np.testing.assert_allclose(counts / trials, 0.25, atol=0.02)


class TestDiscard:
    def test_discard_after_measure(self):
        reg = QuantumRegistry(0)
        a, b = reg.new_bell_pair(PHI_P)
        reg.measure_z(b)
        reg.discard(b)
        assert b not in reg.live_qubits()
        assert_invariants(reg)

    def test_discard_entangled_rejected(self):
        reg = QuantumRegistry(0)
        a, _ = reg.new_bell_pair(PHI_P)
        with pytest.raises(EntangledDiscardError):
            reg.discard(a)

    def test_ids_never_reused(self):
        reg = QuantumRegistry(0)
        q = reg.new_qubit(0)
        reg.discard(q)
        assert reg.new_qubit(0) != q

    def test_unknown_qubit(self):
        reg = QuantumRegistry(0)
        q = reg.new_qubit(0)
        reg.discard(q)
        with pytest.raises(QubitError):
            reg.measure_z(q)
        with pytest.raises(QubitError):
            reg.bell_probabilities(q, reg.new_qubit(1))

    def test_same_qubit_bell_rejected(self):
        reg = QuantumRegistry(0)
        q = reg.new_qubit(0)
        with pytest.raises(ValueError):
            reg.measure_bell(q, q)


class TestSampling:
    def test_never_returns_zero_probability(self):
        assert sample_index([0.5, 0.5, 0.0, 0.0], 0.9999999999999999) == 1
        assert sample_index([0.0, 0.0, 1.0, 0.0], 0.0) == 2

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            sample_index([0, 0], 0.3)


# Random operation sequences mirrored in the dense oracle.

op = st.one_of(
    st.tuples(st.just("qubit"), st.integers(0, 1)),
    st.tuples(st.just("pair"), st.sampled_from(list(BellKind))),
    st.tuples(st.just("z"), st.integers(0, 10)),
    st.tuples(st.just("bell"), st.integers(0, 10), st.integers(0, 10)),
    st.tuples(st.just("discard"), st.integers(0, 10)),
)


@settings(max_examples=150, deadline=None)
@given(st.lists(op, max_size=14), st.integers(0, 2**32 - 1))
def test_matches_dense_oracle(ops, seed):
    reg = QuantumRegistry(seed)
    oracle = DenseOracle()
    for step in ops:
        live = reg.live_qubits()
        if step[0] == "qubit" and len(live) < 6:
            q = reg.new_qubit(step[1])
            oracle.add([q], [1 - step[1], step[1]])
        elif step[0] == "pair" and len(live) < 5:
            a, b = reg.new_bell_pair(step[1])
            oracle.add([a, b], BellKind(step[1]).amplitudes())
        elif step[0] == "z" and live:
            q = live[step[1] % len(live)]
            outcome = reg.measure_z(q)
            oracle.project_z(q, outcome)
        elif step[0] == "bell" and len(live) >= 2:
            q1 = live[step[1] % len(live)]
            q2 = live[step[2] % len(live)]
            if q1 == q2:
                continue
            np.testing.assert_allclose(reg.bell_probabilities(q1, q2), oracle.bell_probabilities(q1, q2), atol=1e-9)
            outcome = reg.measure_bell(q1, q2)
            oracle.project_bell(q1, q2, int(outcome))
        elif step[0] == "discard" and live:
            q = live[step[1] % len(live)]
            if reg.is_entangled(q):
                continue
            reg.discard(q)
            oracle.remove(q)
        assert_invariants(reg)
    live = reg.live_qubits()
    for q1 in live:
        for q2 in live:
            if q1 != q2:
                np.testing.assert_allclose(
                    reg.bell_probabilities(q1, q2), oracle.bell_probabilities(q1, q2), atol=1e-9
                )


def test_determinism():
    def sequence(seed):
        reg = QuantumRegistry(seed)
        out = []
        for _ in range(50):
            a1, b1 = reg.new_bell_pair(PHI_P)
            a2, b2 = reg.new_bell_pair(PSI_P)
            out.append(reg.measure_z(b1))
            out.append(int(reg.measure_bell(a1, b2)))
            out.append(int(reg.measure_bell(b1, a2)))
        return out

    assert sequence(11) == sequence(11)
    assert sequence(11) != sequence(12)
