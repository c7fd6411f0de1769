import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psiontic import io
from psiontic.antidist import pbr_measurement
from psiontic.omodel import classical_overlap
from psiontic.pucthm import (
    JointScenario,
    PreconditionError,
    ProductJointScenario,
    all_distinct,
    canonical_pbr_scenario,
    check_independence,
    check_opi,
    check_pip,
    check_puc,
    diagonal_embedding,
    epsilon_of_experiment,
    lp_fitted_pip_scenario,
    parse_pair_name,
    pair_name,
    phi_plus_example,
    pip_epsilon_scenario,
    posteriors,
    product_scenario,
    puc_epsilon_scenario,
    puc_exact_scenario,
    random_disjoint_scenario,
    random_product_scenario,
    reproduction_error,
    search_puc_nca_gap,
    verify_pbr_conclusion,
    verify_puc_theorem,
    verify_robustness,
)

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="module")
def cert():
    return pbr_measurement()


class TestScenarioTypes:
    def test_pair_names(self):
        assert parse_pair_name(pair_name(("psi", "phi"))) == ("psi", "phi")

    def test_needs_four_pairs(self):
        with pytest.raises(ValueError):
            JointScenario(2, {("a", "b"): [1, 0], ("a", "c"): [0, 1]})

    def test_product_shape_checked(self):
        with pytest.raises(ValueError):
            ProductJointScenario(2, 2, {k: np.ones((2, 3)) / 6 for k in [("a", "x"), ("a", "y"), ("b", "x"), ("b", "y")]})

    def test_flatten_index(self):
        s = product_scenario({"psi": np.array([1.0, 0]), "phi": np.array([0, 1.0])},
                             {"psi": np.array([0.25, 0.75]), "phi": np.array([1.0, 0])})
        np.testing.assert_allclose(s.flatten().prep_pairs[("phi", "psi")], [0, 0, 0.25, 0.75])

    def test_exchange_symmetry(self):
        loc = {"psi": np.array([1.0, 0]), "phi": np.array([0.5, 0.5])}
        assert product_scenario(loc, loc).is_exchange_symmetric()
        other = {"psi": np.array([0.0, 1]), "phi": np.array([0.5, 0.5])}
        assert not product_scenario(loc, other).is_exchange_symmetric()


class TestPhiPlus:
    def test_violation(self):
        s = phi_plus_example()
        r = check_puc(s)
        assert not r.ok
        assert r.worst == pytest.approx(0.25, abs=1e-15)

    def test_matched_posterior(self):
        s = phi_plus_example()
        post, idx = posteriors(s)
        even = list(idx).index(0)
        keys = s.keys()
        got = dict(zip(keys, post[:, even]))
        assert got[("I", "I")] == 0.5 and got[("X", "X")] == 0.5
        assert got[("I", "X")] == 0 and got[("X", "I")] == 0

    def test_tags(self):
        assert "not-local-state-preparation" in phi_plus_example().tags
        assert "local-state-preparation" in phi_plus_example(disentangled=True).tags

    def test_disentangled_passes(self):
        s = phi_plus_example(disentangled=True)
        assert check_puc(s).ok and all_distinct(s)


class TestImplications:
    def test_pip_implies_puc_100(self):
        rng = np.random.default_rng(71)
        for _ in range(100):
            s = random_product_scenario(rng)
            assert check_pip(s).ok
            assert check_puc(s.flatten()).ok

    def test_distinct_implies_puc_100(self):
        rng = np.random.default_rng(72)
        for _ in range(100):
            s = random_disjoint_scenario(rng)
            assert all_distinct(s)
            assert check_puc(s).ok

    def test_puc_without_independence(self):
        s = io.load(FIXTURES / "gap_scenario.json", "scenario")
        assert check_puc(s.flatten()).ok
        assert not check_independence(s).ok

    @settings(max_examples=50)
    @given(st.integers(0, 2**32 - 1), st.floats(1e-12, 1e-3), st.floats(1.0, 100.0))
    def test_monotone_in_tolerance(self, seed, tol, factor):
        rng = np.random.default_rng(seed)
        L = 5
        preps = {k: rng.dirichlet(np.ones(L)) for k in [("psi", "psi"), ("psi", "phi"), ("phi", "psi"), ("phi", "phi")]}
        s = JointScenario(L, preps)
        if check_puc(s, tol).ok:
            assert check_puc(s, tol * factor).ok
        ps = product_scenario({"psi": preps[("psi", "psi")], "phi": preps[("phi", "phi")]},
                              {"psi": preps[("psi", "phi")], "phi": preps[("phi", "psi")]})
        if check_pip(ps, tol).ok:
            assert check_pip(ps, tol * factor).ok


class TestPipChecks:
    def test_opi_violation(self):
        a = np.array([[0.5, 0.0], [0.0, 0.5]])
        b = np.array([[0.0, 0.5], [0.5, 0.0]])
        c = np.array([[1.0, 0.0], [0.0, 0.0]])
        s = ProductJointScenario(2, 2, {("psi", "psi"): a, ("psi", "phi"): c, ("phi", "psi"): b, ("phi", "phi"): a})
        assert not check_opi(s).ok
        assert not check_independence(s).ok
        assert not check_pip(s).ok

    def test_embedding_breaks_independence(self):
        emb = diagonal_embedding(puc_exact_scenario(0))
        assert not check_independence(emb).ok
        assert check_puc(emb.flatten()).ok


class TestPbrConclusion:
    def test_canonical(self, cert):
        v = verify_pbr_conclusion(canonical_pbr_scenario(), cert)
        assert v.passed and v.details["exchange_symmetric"]

    @pytest.mark.parametrize("seed", range(5))
    def test_lp_fitted(self, cert, seed):
        s = lp_fitted_pip_scenario(seed)
        assert reproduction_error(s, "pbr", cert) < 1e-9
        v = verify_pbr_conclusion(s, cert)
        assert v.passed
        assert classical_overlap(*s.local_distributions()[0].values()) <= 1e-9

    def test_precondition_pip(self, cert):
        with pytest.raises(PreconditionError) as e:
            verify_pbr_conclusion(diagonal_embedding(puc_exact_scenario(1)), cert)
        assert e.value.precondition == "check_pip"

    def test_precondition_reproduction(self, cert):
        s = pip_epsilon_scenario(0)
        with pytest.raises(PreconditionError) as e:
            verify_pbr_conclusion(s, cert)
        assert e.value.precondition == "reproduction"


class TestPucTheorem:
    @pytest.mark.parametrize("seed", range(10))
    def test_exact_null_overlaps(self, cert, seed):
        s = puc_exact_scenario(seed)
        assert check_puc(s).ok
        assert reproduction_error(s, "pbr", cert) <= 1e-10
        v = verify_puc_theorem(s, cert)
        assert v.passed
        assert v.details["omega_diagonal"] <= 1e-9 and v.details["omega_offdiagonal"] <= 1e-9
        assert v.details["undetermined_states"] == []

    def test_generator_uses_mixed_atoms(self):
        s = puc_exact_scenario(3)
        post, _ = posteriors(s)
        assert np.any(post.max(axis=0) < 1 - 1e-9)

    def test_phi_plus_rejected(self, cert):
        with pytest.raises(PreconditionError) as e:
            verify_puc_theorem(phi_plus_example(), cert)
        assert e.value.precondition == "check_puc"

    def test_not_reproducing_rejected(self, cert):
        with pytest.raises(PreconditionError) as e:
            verify_puc_theorem(puc_epsilon_scenario(0), cert)
        assert e.value.precondition == "reproduction"


class TestRobustness:
    def test_puc_mode(self):
        for seed in range(6):
            s = puc_epsilon_scenario(seed)
            assert epsilon_of_experiment(s, "pbr") <= 0.01 + 1e-12
            v = verify_robustness(s, mode="PUC")
            assert v.passed
            assert v.bounds["bound"] <= 0.4 + 1e-12
            assert v.worst <= 0.4

    def test_pip_mode(self):
        for seed in range(6):
            s = pip_epsilon_scenario(seed)
            v = verify_robustness(s, mode="PIP")
            assert v.details["exchange_symmetric"]
            assert v.passed and v.worst < 0.1
            assert v.worst > 0  # the bisection found some overlap to test

    def test_pip_mode_needs_product(self):
        with pytest.raises(PreconditionError):
            verify_robustness(puc_epsilon_scenario(0), mode="PIP")

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            verify_robustness(canonical_pbr_scenario(), mode="NCA")

    def test_exact_epsilon_zero(self):
        assert epsilon_of_experiment(canonical_pbr_scenario(), "pbr") <= 1e-15


class TestGapSearch:
    def test_search_finds_gap(self, cert):
        g = search_puc_nca_gap()
        assert g is not None
        assert g.omega >= 1e-3
        assert g.puc_violation <= 1e-9
        assert g.independence_violation > 1e-9
        assert g.reproduction_error <= 1e-9

    def test_frozen_fixture(self, cert):
        frozen = io.load(FIXTURES / "gap_scenario.json", "scenario")
        js = frozen.flatten()
        assert check_puc(js).ok
        assert not check_independence(frozen).ok
        assert reproduction_error(frozen, "pbr", cert) <= 1e-9
        om = classical_overlap(js.prep_pairs[("psi", "psi")], js.prep_pairs[("psi", "phi")])
        assert om == pytest.approx(0.18149382059341268, abs=1e-9)

    def test_search_reproduces_fixture(self):
        found = search_puc_nca_gap().scenario.flatten()
        frozen = io.load(FIXTURES / "gap_scenario.json", "scenario").flatten()
        np.testing.assert_allclose(found.weights(), frozen.weights(), atol=1e-9)
        for name in frozen.experiments:
            np.testing.assert_allclose(found.model.response_matrix(name), frozen.model.response_matrix(name), atol=1e-9)

    def test_size_checked(self):
        with pytest.raises(ValueError):
            search_puc_nca_gap(lambda_size=4)


def test_sqrt_bounds_consistent():
    assert 4 * math.sqrt(0.01) == pytest.approx(0.4)
    assert 2 * math.sqrt(0.0025) == pytest.approx(0.1)
