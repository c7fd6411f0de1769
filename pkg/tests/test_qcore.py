import math

import numpy as np
import pytest

from psiontic.qcore import (
    KET0,
    KET1,
    KET_PLUS,
    Experiment,
    Fragment,
    PureState,
    basis_state,
    born_distribution,
    born_probability,
    computational_measurement,
    inner_product,
    optimal_guess_probability,
    quantum_distinguishability,
    quantum_overlap,
    states_equal,
    tensor,
    tensor_all,
)

from conftest import random_state

R2 = 1 / math.sqrt(2)


class TestPureState:
    def test_rejects_unnormalised(self):
        with pytest.raises(ValueError):
            PureState(np.array([1.0, 1.0]))

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            PureState(np.array([np.nan, 1.0]))

    def test_rejects_oversized(self):
        with pytest.raises(ValueError):
            PureState(np.eye(65)[0])

    def test_normalize_option(self):
        s = PureState.from_amplitudes([3, 4j], normalize=True)
        assert abs(np.vdot(s.amplitudes, s.amplitudes) - 1) < 1e-15

    def test_amplitudes_read_only(self):
        with pytest.raises(ValueError):
            KET0.amplitudes[0] = 2

    def test_phase_equality(self):
        assert states_equal(KET_PLUS, PureState(1j * KET_PLUS.amplitudes))
        assert not states_equal(KET0, KET_PLUS)


class TestInnerProduct:
    def test_zero_plus(self):
        assert inner_product(KET0, KET_PLUS) == pytest.approx(R2, abs=1e-15)

    def test_orthogonal(self):
        assert inner_product(KET0, KET1) == 0

    def test_self(self, rng):
        s = random_state(rng, 5)
        assert abs(inner_product(s, s) - 1) < 1e-12

    def test_conjugate_linear_in_first(self):
        a = PureState(np.array([1j, 0]))
        assert inner_product(a, KET0) == pytest.approx(-1j)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            inner_product(KET0, basis_state(0, 3))


class TestTensor:
    def test_zero_zero(self):
        assert np.array_equal(tensor(KET0, KET0).amplitudes, [1, 0, 0, 0])

    def test_zero_plus_row_major(self):
        np.testing.assert_allclose(tensor(KET0, KET_PLUS).amplitudes, [R2, R2, 0, 0], atol=1e-15)

    def test_factorisation(self):
        assert inner_product(tensor(KET0, KET_PLUS), tensor(KET_PLUS, KET0)) == pytest.approx(0.5, abs=1e-15)

    def test_factorisation_random(self, rng):
        for _ in range(100):
            a, b, c, d = (random_state(rng, 2) for _ in range(4))
            lhs = inner_product(tensor(a, b), tensor(c, d))
            assert abs(lhs - inner_product(a, c) * inner_product(b, d)) < 1e-10

    def test_associative(self, rng):
        a, b, c = (random_state(rng, 2) for _ in range(3))
        np.testing.assert_allclose(
            tensor(tensor(a, b), c).amplitudes, tensor(a, tensor(b, c)).amplitudes, atol=1e-15
        )
        assert tensor_all([a, b, c]).dim == 8


class TestExperiment:
    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            Experiment((("a", np.array([[1, 1], [0, 0]])), ("b", np.array([[0, -1], [0, 1]]))))

    def test_rejects_negative(self):
        with pytest.raises(ValueError, match="positive"):
            Experiment((("a", np.diag([1.5, 0.5])), ("b", np.diag([-0.5, 0.5]))))

    def test_rejects_incomplete(self):
        with pytest.raises(ValueError, match="identity"):
            Experiment((("a", np.diag([1.0, 0.0])),))

    def test_rejects_duplicate_labels(self):
        with pytest.raises(ValueError, match="unique"):
            Experiment((("a", np.diag([1.0, 0.0])), ("a", np.diag([0.0, 1.0]))))

    def test_unknown_label(self):
        with pytest.raises(KeyError):
            computational_measurement().effect("7")


class TestBorn:
    def test_plus_in_z(self):
        assert born_probability(KET_PLUS, computational_measurement(), "0") == pytest.approx(0.5)

    def test_zero_outcome_one(self):
        assert born_probability(KET0, computational_measurement(), "1") == 0

    def test_sums_to_one(self, rng):
        e = Experiment.from_basis(_random_basis(rng, 3))
        for _ in range(100):
            assert abs(born_distribution(random_state(rng, 3), e).sum() - 1) < 1e-10

    def test_pbr_outcome(self):
        from psiontic.antidist import pbr_measurement

        cert = pbr_measurement()
        assert born_probability(tensor(KET0, KET_PLUS), cert.experiment, "xi2") < 1e-15


def _random_basis(rng, d):
    q, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return [PureState(q[:, k]) for k in range(d)]


class TestQuantumMetrics:
    def test_distinguishability_values(self):
        assert quantum_distinguishability(KET0, KET_PLUS) == pytest.approx(R2, abs=1e-12)
        assert quantum_distinguishability(KET0, KET1) == 1
        assert quantum_distinguishability(KET_PLUS, KET_PLUS) == pytest.approx(0, abs=1e-7)

    def test_overlap_values(self):
        assert quantum_overlap(KET0, KET_PLUS) == pytest.approx(1 - R2, abs=1e-12)
        assert quantum_overlap(KET0, KET1) == 0
        half = PureState(np.array([0.5, math.sqrt(0.75)]))
        assert quantum_overlap(KET0, half) == pytest.approx(1 - math.sqrt(3) / 2, abs=1e-12)

    def test_guess(self):
        assert optimal_guess_probability(KET0, KET1) == 1
        assert optimal_guess_probability(KET0, KET0) == 0.5
        assert optimal_guess_probability(KET0, KET_PLUS) == pytest.approx((1 + R2) / 2, abs=1e-12)

    def test_symmetry_and_sum(self, rng):
        for _ in range(50):
            a, b = random_state(rng, 3), random_state(rng, 3)
            assert quantum_distinguishability(a, b) == pytest.approx(quantum_distinguishability(b, a), abs=1e-12)
            assert quantum_overlap(a, b) + quantum_distinguishability(a, b) == pytest.approx(1, abs=1e-12)

    def test_product_distinguishability(self, rng):
        for _ in range(50):
            a, b, c, d = (random_state(rng, 2) for _ in range(4))
            expect = math.sqrt(1 - abs(inner_product(a, c)) ** 2 * abs(inner_product(b, d)) ** 2)
            assert quantum_distinguishability(tensor(a, b), tensor(c, d)) == pytest.approx(expect, abs=1e-10)


class TestFragment:
    def test_dimension_check(self):
        with pytest.raises(ValueError):
            Fragment(2, {"a": KET0}, {"z": computational_measurement(3)})

    def test_born_table(self):
        f = Fragment(2, {"0": KET0, "+": KET_PLUS}, {"z": computational_measurement()})
        t = f.born_table()
        assert t[("+", "z", "1")] == pytest.approx(0.5)
        assert len(t) == 4
