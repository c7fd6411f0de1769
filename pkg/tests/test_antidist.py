import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psiontic.antidist import (
    AntidistCertificate,
    pbr_measurement,
    pbr_quadruple,
    null_joint_overlap_check,
    search_antidist,
    squared_overlaps,
    triple_criterion,
    verify_certificate,
)
from psiontic.lpopt import ResponseTable, max_total_overlap_fit
from psiontic.omodel import OntModel
from psiontic.qcore import KET0, KET1, KET_PLUS, Experiment, Fragment, PureState, born_distribution, tensor

from conftest import random_state


class TestPbrCertificate:
    def test_preclusion_zero(self):
        c = pbr_measurement()
        check = verify_certificate(c)
        assert check.ok
        assert check.max_preclusion <= 1e-10

    def test_state_order(self):
        c = pbr_measurement()
        expect = [tensor(KET0, KET0), tensor(KET0, KET_PLUS), tensor(KET_PLUS, KET0), tensor(KET_PLUS, KET_PLUS)]
        for a, b in zip(c.states, expect):
            np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-15)

    def test_born_rows(self):
        c = pbr_measurement()
        np.testing.assert_allclose(born_distribution(c.states[0], c.experiment), [0, 0.25, 0.25, 0.5], atol=1e-12)
        np.testing.assert_allclose(born_distribution(c.states[2], c.experiment), [0.25, 0.5, 0, 0.25], atol=1e-12)

    def test_stored_values_not_trusted(self):
        c = pbr_measurement()
        forged = AntidistCertificate(c.states, c.experiment, c.assignment, (0.0, 0.0, 0.0, 0.1))
        assert not verify_certificate(forged).ok

    def test_wrong_assignment_fails(self):
        c = pbr_measurement()
        swapped = {"xi1": 1, "xi2": 0, "xi3": 2, "xi4": 3}
        assert not verify_certificate(AntidistCertificate.build(c.states, c.experiment, swapped)).ok

    def test_bad_assignment_raises(self):
        c = pbr_measurement()
        with pytest.raises(ValueError):
            AntidistCertificate.build(c.states, c.experiment, {"xi1": 0})
        with pytest.raises(ValueError):
            AntidistCertificate.build(c.states, c.experiment, {"xi1": 0, "xi2": 1, "xi3": 2, "xi4": 9})

    def test_quadruple_order(self):
        q = pbr_quadruple(KET0, KET1)
        assert np.argmax(np.abs(q[1].amplitudes)) == 1


class TestSearch:
    def test_trine_found(self):
        trine = [PureState(np.array([math.cos(t), math.sin(t)])) for t in (0, 2 * math.pi / 3, 4 * math.pi / 3)]
        cert = search_antidist(trine)
        assert cert is not None and verify_certificate(cert).ok

    def test_pbr_states_found(self):
        cert = search_antidist(pbr_measurement().states)
        assert cert is not None
        assert verify_certificate(cert).max_preclusion <= 1e-10

    def test_two_nonorthogonal_not_found(self):
        assert search_antidist([KET0, KET_PLUS], max_iters=200, restarts=2) is None

    def test_two_orthogonal_found(self):
        assert search_antidist([KET0, KET1]) is not None

    def test_single_state(self):
        assert search_antidist([KET0]) is None

    def test_limits(self):
        with pytest.raises(ValueError):
            search_antidist([KET0] * 9)
        with pytest.raises(ValueError):
            search_antidist([KET0, PureState(np.eye(3)[0])])

    def test_deterministic(self, rng):
        states = [random_state(rng, 3) for _ in range(3)]
        states = [PureState.from_amplitudes(s.amplitudes + 3 * np.eye(3)[k], normalize=True) for k, s in enumerate(states)]
        assert search_antidist(states, seed=5) == search_antidist(states, seed=5)


def _clustered_triple(rng):
    c = rng.normal(size=3) + 1j * rng.normal(size=3)
    s = rng.uniform(0.2, 2.5)
    return [PureState.from_amplitudes(c + s * (rng.normal(size=3) + 1j * rng.normal(size=3)), normalize=True)
            for _ in range(3)]


class TestTripleCriterion:
    def test_known(self):
        assert triple_criterion(0.25, 0.25, 0.25)   # trine, exactly on the boundary
        assert triple_criterion(0, 0, 0)
        assert not triple_criterion(0.5, 0.5, 0.0)
        assert not triple_criterion(0.4, 0.4, 0.4)

    def test_range_checked(self):
        with pytest.raises(ValueError):
            triple_criterion(1.5, 0, 0)

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
    def test_symmetric(self, a, b, c):
        assert triple_criterion(a, b, c) == triple_criterion(c, a, b) == triple_criterion(b, a, c)

    def test_agrees_with_search_200_triples(self):
        rng = np.random.default_rng(0)
        positives = 0
        for i in range(200):
            trip = _clustered_triple(rng)
            crit = triple_criterion(*squared_overlaps(*trip))
            found = search_antidist(trip, max_iters=400, restarts=2, seed=i) is not None
            assert crit == found, f"triple {i}: criterion {crit}, search {found}"
            positives += crit
        assert 20 <= positives <= 180


def _noisy_responses(cert, rng, n_noise=12):
    k = len(cert.states)
    born = np.array([born_distribution(s, cert.experiment) for s in cert.states])  # states x outcomes
    cols = list(born)
    for _ in range(n_noise):
        r = rng.dirichlet(np.ones(k))
        r[rng.random(k) < 0.4] = 0
        if r.sum() == 0:
            r[rng.integers(k)] = 1
        cols.append(r / r.sum())
    R = np.array(cols).T
    labels = cert.experiment.labels
    return ResponseTable(R.shape[1], {"e": tuple((lab, R[j]) for j, lab in enumerate(labels))})


class TestNullJointOverlap:
    @settings(max_examples=30)
    @given(st.integers(0, 10_000))
    def test_fitted_models_have_no_common_support(self, seed):
        rng = np.random.default_rng(seed)
        trip = [PureState.from_amplitudes(np.eye(3)[k] + 0.4 * (rng.normal(size=3) + 1j * rng.normal(size=3)),
                                          normalize=True) for k in range(3)]
        cert = search_antidist(trip, max_iters=400, restarts=2)
        if cert is None:
            return
        assert verify_certificate(cert).ok
        names = ["a", "b", "c"]
        frag = Fragment(3, dict(zip(names, trip)), {"e": cert.experiment})
        m, _ = max_total_overlap_fit(frag, _noisy_responses(cert, rng), [("a", "b"), ("b", "c"), ("a", "c")])
        assert null_joint_overlap_check(m, cert, names, "e")

    def test_rejects_nonreproducing(self):
        c = pbr_measurement()
        resp = tuple((lab, np.ones(1) * (k == 0)) for k, lab in enumerate(c.experiment.labels))
        m = OntModel(1, {n: [1.0] for n in "abcd"}, {"pbr": resp})
        with pytest.raises(ValueError):
            null_joint_overlap_check(m, c, list("abcd"), "pbr")

    def test_detects_shared_state(self):
        # responses that reproduce nothing would be caught first, so use a hand model
        c = pbr_measurement()
        born = np.array([born_distribution(s, c.experiment) for s in c.states])
        resp = tuple((lab, born[:, j]) for j, lab in enumerate(c.experiment.labels))
        m = OntModel(4, {n: np.eye(4)[k] for k, n in enumerate("abcd")}, {"pbr": resp})
        assert null_joint_overlap_check(m, c, list("abcd"), "pbr")
        with pytest.raises(ValueError):
            null_joint_overlap_check(m, c, list("abc"), "pbr")


def test_experiment_from_certificate_is_povm():
    c = pbr_measurement()
    total = sum(e for _, e in c.experiment.outcomes)
    np.testing.assert_allclose(total, np.eye(4), atol=1e-12)
    assert isinstance(c.experiment, Experiment)


class TestSpecExamples:
    def test_orthogonal_pair_certificate(self):
        from psiontic.qcore import computational_measurement

        e = computational_measurement()
        c = AntidistCertificate.build([KET0, KET1], e, {"1": 0, "0": 1})
        assert verify_certificate(c) == (True, 0.0)

    @pytest.mark.parametrize("assignment", [{"0": 0, "1": 1}, {"0": 1, "1": 0}, {"0": 0, "1": 0}])
    def test_zero_plus_in_z_never_certifies(self, assignment):
        from psiontic.qcore import computational_measurement

        c = AntidistCertificate.build([KET0, KET_PLUS], computational_measurement(), assignment)
        assert not verify_certificate(c).ok

    def test_near_identical_triple(self):
        assert not triple_criterion(0.9, 0.9, 0.9)

    def test_pbr_basis_orthonormal_projectors(self):
        c = pbr_measurement()
        for _, e in c.experiment.outcomes:
            np.testing.assert_allclose(e @ e, e, atol=1e-12)
            assert np.trace(e).real == pytest.approx(1, abs=1e-12)


class TestOverlapSweep:
    def test_found_up_to_inverse_sqrt2(self):
        from psiontic.antidist import pbr_overlap_sweep

        grid = list(np.linspace(0.05, 0.7, 14)) + [1 / math.sqrt(2)]
        rows = pbr_overlap_sweep(grid)
        assert all(r.found and r.max_preclusion <= 1e-10 for r in rows)

    def test_rows_record_misses(self):
        from psiontic.antidist import pbr_overlap_sweep

        (row,) = pbr_overlap_sweep([0.95], max_iters=300, restarts=1)
        assert row.overlap == 0.95
        assert row.found is (row.max_preclusion is not None)

    def test_range(self):
        from psiontic.antidist import pbr_overlap_sweep

        with pytest.raises(ValueError):
            pbr_overlap_sweep([1.2])
