import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from psiontic.omodel import (
    OntModel,
    bayes_posterior,
    canonical_psi_ontic,
    classical_overlap,
    classify,
    default_measurement_net,
    discretized_qubit_model,
    joint_overlap,
    model_distinguishability,
    ontologically_distinct,
    predicted_probability,
    reproduces_fragment,
    tv_distance,
    validate_model,
)
from psiontic.qcore import KET0, KET1, KET_PLUS, Fragment, computational_measurement

simplex_vec = st.integers(2, 12).flatmap(
    lambda n: st.lists(st.floats(0, 1, allow_nan=False), min_size=n, max_size=n).filter(lambda v: sum(v) > 1e-3)
)


def _norm(v):
    v = np.asarray(v, dtype=float)
    return v / v.sum()


def random_model(rng, n_exp=3):
    L = int(rng.integers(2, 20))
    preps = {f"p{i}": rng.dirichlet(np.ones(L) * rng.uniform(0.2, 2)) for i in range(2)}
    exps = {}
    for e in range(n_exp):
        k = int(rng.integers(2, 5))
        R = rng.dirichlet(np.ones(k), size=L).T
        if rng.random() < 0.3:
            R = (R == R.max(axis=0)).astype(float)
        exps[f"e{e}"] = tuple((f"o{j}", R[j]) for j in range(k))
    return OntModel(L, preps, exps)


class TestOverlapMetrics:
    def test_known_values(self):
        assert tv_distance([0.5, 0.5, 0], [0, 0.5, 0.5]) == 0.5
        assert classical_overlap([0.5, 0.5, 0], [0, 0.5, 0.5]) == 0.5
        assert classical_overlap([1, 0], [0, 1]) == 0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            tv_distance([1, 0], [1, 0, 0])

    @given(simplex_vec, st.randoms())
    def test_overlap_equals_sum_of_minima(self, v, r):
        p = _norm(v)
        q = _norm(np.roll(p, r.randint(0, len(p))) + 0.1)
        assert classical_overlap(p, q) == pytest.approx(np.minimum(p, q).sum(), abs=1e-12)
        assert 0 <= tv_distance(p, q) <= 1

    @given(simplex_vec)
    def test_self_overlap(self, v):
        p = _norm(v)
        assert classical_overlap(p, p) == pytest.approx(1, abs=1e-12)

    def test_joint_overlap_monotone(self, rng):
        for _ in range(50):
            ps = [rng.dirichlet(np.ones(6)) for _ in range(3)]
            assert joint_overlap(ps) <= joint_overlap(ps[:2]) + 1e-15

    def test_distinct(self):
        assert ontologically_distinct([0.5, 0.5, 0], [0, 0, 1])
        assert not ontologically_distinct([0.5, 0.5, 0], [0, 1e-3, 1 - 1e-3])


class TestDistinguishabilityBound:
    def test_never_exceeds_tv_500_models(self):
        rng = np.random.default_rng(6)
        for _ in range(500):
            m = random_model(rng)
            assert model_distinguishability(m, "p0", "p1") <= tv_distance(m.distribution("p0"), m.distribution("p1")) + 1e-9

    def test_indicator_experiment_attains_tv(self, rng):
        p, q = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(5))
        ind = (p > q).astype(float)
        m = OntModel(5, {"a": p, "b": q}, {"e": (("y", ind), ("n", 1 - ind))})
        assert model_distinguishability(m, "a", "b") == pytest.approx(tv_distance(p, q), abs=1e-12)


class TestModel:
    def test_shape_checked(self):
        with pytest.raises(ValueError):
            OntModel(3, {"a": [1, 0]})

    def test_validate_reports(self):
        m = OntModel(2, {"a": [0.7, 0.7], "b": [-0.1, 1.1]}, {"e": (("x", [1.2, 0.5]), ("y", [0.0, 0.4]))})
        kinds = {v.kind for v in validate_model(m)}
        assert kinds == {"normalization", "negative-weight", "response-range", "response-sum"}

    def test_valid_model_clean(self, rng):
        assert validate_model(random_model(rng)) == []

    def test_predicted_probability(self):
        m = OntModel(2, {"a": [0.25, 0.75]}, {"e": (("x", [1, 0]), ("y", [0, 1]))})
        assert predicted_probability(m, "a", "e", "y") == 0.75
        with pytest.raises(KeyError):
            predicted_probability(m, "a", "e", "z")
        with pytest.raises(KeyError):
            predicted_probability(m, "a", "f", "x")

    def test_equality_exact(self):
        a = OntModel(2, {"a": [0.5, 0.5]})
        assert a == OntModel(2, {"a": [0.5, 0.5]})
        assert a != OntModel(2, {"a": [0.5, 0.5 + 1e-16 * 8]})


class TestClassification:
    frag = Fragment(2, {"0": KET0, "1": KET1, "+": KET_PLUS}, {"z": computational_measurement()})

    def test_canonical_is_psi_ontic(self):
        m = canonical_psi_ontic(self.frag)
        assert reproduces_fragment(m, self.frag, 1e-12).ok
        c = classify(m, self.frag)
        assert c.psi_ontic and not c.psi_epistemic
        assert not c.pairwise_psi_epistemic
        assert c.witness is not None

    def test_shared_state_model(self):
        m = OntModel(3, {"0": [0.5, 0, 0.5], "1": [0, 1, 0], "+": [0.0, 0.5, 0.5]}, {"z": (("0", [1, 0, 1]), ("1", [0, 1, 0]))})
        c = classify(m, self.frag)
        assert c.psi_epistemic
        assert c.pairwise_psi_epistemic

    def test_rejects_non_reproducing(self):
        m = OntModel(3, {"0": [0, 1, 0], "1": [1, 0, 0], "+": [0, 0, 1]}, {"z": (("0", [1, 0, 0.5]), ("1", [0, 1, 0.5]))})
        with pytest.raises(ValueError):
            classify(m, self.frag)


class TestBayes:
    def test_coin_ratios_exact(self):
        prior = {"P0": Fraction(1, 2), "P1": Fraction(1, 2)}
        cond = {("P0", "H"): Fraction(1, 2), ("P0", "T"): Fraction(1, 2), ("P1", "H"): Fraction(2, 3), ("P1", "T"): Fraction(1, 3)}
        h = bayes_posterior(prior, cond, "H")
        t = bayes_posterior(prior, cond, "T")
        assert h["P1"] / h["P0"] == Fraction(4, 3)
        assert t["P1"] / t["P0"] == Fraction(2, 3)

    def test_zero_evidence(self):
        with pytest.raises(ValueError):
            bayes_posterior({"a": 1.0}, {("a", "x"): 0.0}, "x")

    @given(
        st.lists(st.floats(0.01, 1), min_size=2, max_size=5),
        st.lists(st.floats(0.01, 1), min_size=5, max_size=5),
        st.floats(0.1, 10),
    )
    def test_prior_rescaling_invariance(self, prior, lik, scale):
        p = {f"h{i}": w for i, w in enumerate(prior)}
        cond = {(f"h{i}", "x"): lik[i] for i in range(len(prior))}
        a = bayes_posterior(p, cond, "x")
        b = bayes_posterior({k: v * scale for k, v in p.items()}, cond, "x")
        for k in a:
            assert a[k] == pytest.approx(b[k], rel=1e-9)
        assert sum(a.values()) == pytest.approx(1)


class TestDiscretizedQubit:
    def test_small_resolution_rejected(self):
        with pytest.raises(ValueError):
            discretized_qubit_model(100, default_measurement_net(4))

    def test_reproduces_and_overlap(self):
        m, f = discretized_qubit_model(4000, default_measurement_net(6))
        assert validate_model(m) == []
        assert reproduces_fragment(m, f, 2e-2).ok
        omega = classical_overlap(m.distribution("0"), m.distribution("+"))
        assert omega == pytest.approx(1 - math.sqrt(0.5), abs=2e-2)


def test_discretized_resolution_1e4_within_2e2():
    m, f = discretized_qubit_model(10_000, default_measurement_net(50))
    assert len(f.experiments) == 50
    assert reproduces_fragment(m, f, 2e-2).ok
