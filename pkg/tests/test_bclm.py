import itertools
import math

import numpy as np
import pytest

from psiontic.antidist import verify_certificate
from psiontic.bclm import (
    CSV_HEADER,
    MubSet,
    audit_model,
    bound_arithmetic,
    construct_family,
    family_fragment,
    fitted_audit_model,
    mubs_d4,
    random_response_family,
)
from psiontic.omodel import canonical_psi_ontic, reproduces_fragment, validate_model
from psiontic.qcore import PureState, basis_state, inner_product


@pytest.fixture(scope="module")
def family():
    return construct_family()


class TestMubs:
    def test_five_unbiased_bases(self):
        m = mubs_d4()
        assert len(m.bases) == 5
        vecs = m.vectors()
        assert len(vecs) == 20
        for (a, u), (b, v) in itertools.combinations(enumerate(vecs), 2):
            x = abs(inner_product(u, v))
            if a // 4 == b // 4:
                assert x < 1e-12
            else:
                assert x == pytest.approx(0.5, abs=1e-12)

    def test_validation(self):
        b = tuple(basis_state(k, 4) for k in range(4))
        with pytest.raises(ValueError, match="unbiased"):
            MubSet(4, (b, b))
        with pytest.raises(ValueError, match="orthonormal"):
            MubSet(4, ((b[0], b[0], b[2], b[3]),))


class TestFamily:
    def test_sixteen_members_half_overlap(self, family):
        assert len(family.psis) == 16
        for s in family.psis:
            assert abs(inner_product(family.phi, s)) == pytest.approx(0.5, abs=1e-10)

    def test_pair_evidence(self, family):
        assert len(family.pair_evidence) == 120
        kinds = [e.kind for e in family.pair_evidence.values()]
        assert kinds.count("orthogonal") == 4 * 6
        for e in family.pair_evidence.values():
            if e.kind == "triple":
                assert e.criterion
                # |<phi|psi>|^2 = 1/4 three times: the boundary (1 - 3/4)^2 = 4/64
                np.testing.assert_allclose(e.squared_overlaps, [0.25] * 3, atol=1e-10)

    def test_certificates(self, family):
        assert family.certified_fraction() >= 0.9
        for e in family.pair_evidence.values():
            if e.certificate is not None:
                assert verify_certificate(e.certificate).ok
                assert not e.warning

    def test_no_search_gives_warnings(self):
        fam = construct_family(search=False)
        assert fam.certified_fraction() == 0
        assert all(e.warning for e in fam.pair_evidence.values() if e.kind == "triple")

    def test_other_phi(self):
        fam = construct_family(phi_basis_index=3, phi_vector_index=2, search=False)
        assert len(fam.psis) == 16

    def test_bad_index(self):
        with pytest.raises(IndexError):
            construct_family(phi_basis_index=5, search=False)

    def test_fragment(self, family):
        f = family_fragment(family)
        assert len(f.preparations) == 17
        assert sum(k.startswith("basis_") for k in f.experiments) == 4
        assert sum(k.startswith("tri_") for k in f.experiments) == 96


class TestArithmetic:
    def test_d4(self):
        a = bound_arithmetic(4)
        assert a.mean_bound == 0.0625
        assert a.omega_q == pytest.approx(1 - math.sqrt(0.75), abs=1e-15)
        assert a.ratio_coefficient == pytest.approx(0.46650635, abs=1e-8)
        assert a.identity_residual < 1e-15

    @pytest.mark.parametrize("d", [4, 5, 8, 16, 100])
    def test_identity(self, d):
        a = bound_arithmetic(d)
        assert a.ratio_coefficient * a.omega_q == pytest.approx(1 / d**2, rel=1e-12)
        assert a.ratio_coefficient < 1

    def test_small_d(self):
        with pytest.raises(ValueError):
            bound_arithmetic(3)


class TestAudit:
    def test_canonical_model_zero(self, family):
        f = family_fragment(family)
        res = audit_model(canonical_psi_ontic(f), family)
        assert res.omega_bar == 0
        assert res.passed
        assert len(res.rows) == 16 and len(res.rows[0]) == len(CSV_HEADER)

    def test_planted_models_valid(self, family):
        for seed in range(3):
            table, planted = random_response_family(family, seed)
            assert validate_model(planted) == []
            assert reproduces_fragment(planted, family_fragment(family), 1e-9).ok
            res = audit_model(planted, family)
            assert res.omega_bar > 0
            assert res.passed

    def test_fitted_within_bound(self, family):
        for seed in (7, 8):
            res = audit_model(fitted_audit_model(family, seed), family)
            assert 0 < res.omega_bar <= 0.0625 + 1e-8
            assert res.min_omega < res.ratio_coefficient * (1 - math.sqrt(0.75))

    def test_rejects_nonreproducing(self, family):
        f = family_fragment(family)
        m = canonical_psi_ontic(f)
        bad = type(m)(m.lambda_size, {**m.preparations, "phi": m.distribution("psi00")}, m.experiments)
        with pytest.raises(ValueError, match="reproduce"):
            audit_model(bad, family)


def test_phase_convention():
    for b in mubs_d4().bases:
        for v in b:
            first = v.amplitudes[np.flatnonzero(np.abs(v.amplitudes) > 1e-9)[0]]
            assert abs(first.imag) < 1e-12 and first.real > 0
    assert isinstance(mubs_d4().vectors()[0], PureState)
