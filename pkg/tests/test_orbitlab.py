import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kmboundary.degeneration import invariants
from kmboundary.errors import CutoffTooSmall, InvalidOrbitModel, NotInW2, TypeMismatch
from kmboundary.orbitlab import (
    alpha_determinant_squared,
    chern_form_scale,
    chern_form_scale_numeric,
    e20_norm,
    hodge_norm,
    km_profile,
    orbit_model,
    profile_zeroth_coefficient,
    residue_slope,
    theta_prime_truncated,
    w0_generator_b_squared,
)

E21 = ((1, 0, 0, 0), (0, Fraction(1, 2), 0, 0))
E22 = (1, 0, 0, 0)


@pytest.fixture(scope="module")
def m2(seed_ii):
    return orbit_model(seed_ii, e21=E21)


@pytest.fixture(scope="module")
def m3(seed_iii):
    return orbit_model(seed_iii, e22=E22)


class TestModels:
    def test_bad_normalization(self, seed_ii):
        with pytest.raises(InvalidOrbitModel):
            orbit_model(seed_ii, e21=((1, 0, 0, 0), (0, 1, 0, 0)))

    def test_bad_e22(self, seed_iii):
        with pytest.raises(InvalidOrbitModel):
            orbit_model(seed_iii, e22=(0, 1, 0, 0))
        with pytest.raises(InvalidOrbitModel):
            orbit_model(seed_iii, e22=(0, 0, 1, 0))  # N^2 e = 0

    def test_missing_data(self, seed_ii, seed_iii):
        with pytest.raises(InvalidOrbitModel):
            orbit_model(seed_ii)
        with pytest.raises(InvalidOrbitModel):
            orbit_model(seed_iii)

    def test_wrong_length(self, seed_iii):
        with pytest.raises(InvalidOrbitModel):
            orbit_model(seed_iii, e22=(1, 0, 0))


class TestHodgeNorm:
    def test_type_iii_seed(self, m3):
        hn = hodge_norm(m3, (0, 0, 1, 0), 1j)
        b2 = w0_generator_b_squared(m3)
        assert hn.h == pytest.approx(float(b2), abs=1e-15)
        assert hn.normsq == pytest.approx(2 * float(b2), abs=1e-15)

    def test_type_ii_v2_component(self, seed_ii_u):
        m = orbit_model(seed_ii_u, e21=((1, 0, 0, 0, 0), (0, Fraction(1, 2), 0, 0, 0)))
        hn = hodge_norm(m, (0, 0, 0, 0, 1), 0.3 + 2j)
        assert hn.h == 0 and hn.normsq == 2

    def test_not_in_w2(self, m2):
        with pytest.raises(NotInW2):
            hodge_norm(m2, (1, 0, 0, 0), 1j)

    def test_e20(self, m2, m3):
        for y in (0.5, 2.0, 3.0):
            assert e20_norm(m2, complex(0.4, y)) == pytest.approx(2 * y, rel=1e-13)
            assert e20_norm(m3, complex(0.4, y)) == pytest.approx(2 * y * y, rel=1e-13)


coords = st.integers(-6, 6)
points = st.tuples(st.floats(-2, 2), st.floats(0.2, 5))


@settings(max_examples=60, deadline=None)
@given(coords, coords, points)
def test_norm_relation_ii(a, b, z):
    from kmboundary.degeneration import degenerate
    from kmboundary.seeds import type_ii_seed

    model = orbit_model(degenerate(*type_ii_seed()), e21=E21)
    v = (0, 0, a, b)
    hn = hodge_norm(model, v, complex(*z))
    assert hn.normsq == pytest.approx(float(model.lattice.q(v, v)) + 2 * hn.h, rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(coords, coords, coords, points)
def test_norm_relation_iii(a, b, c, z):
    from kmboundary.degeneration import degenerate
    from kmboundary.seeds import type_iii_seed

    model = orbit_model(degenerate(*type_iii_seed()), e22=E22)
    v = (0, a, b, c)
    hn = hodge_norm(model, v, complex(*z))
    assert hn.normsq == pytest.approx(float(model.lattice.q(v, v)) + 2 * hn.h, rel=1e-12, abs=1e-12)
    assert hn.h >= 0


class TestDeterminants:
    def test_alpha(self, seed_ii, m2):
        inv = invariants(seed_ii)
        assert alpha_determinant_squared(m2) == Fraction(inv.disc, inv.r)

    def test_w0(self, seed_iii, m3):
        inv = invariants(seed_iii)
        assert w0_generator_b_squared(m3) == Fraction(inv.disc, inv.r)

    def test_type_checks(self, m2, m3):
        with pytest.raises(TypeMismatch):
            alpha_determinant_squared(m3)
        with pytest.raises(TypeMismatch):
            w0_generator_b_squared(m2)


class TestChernAndProfiles:
    def test_scales(self, m2, m3):
        assert chern_form_scale(m2) == 1j / (8 * math.pi)
        assert chern_form_scale(m3) == 1j / (4 * math.pi)
        assert chern_form_scale(m3) / chern_form_scale(m2) == 2

    def test_numeric_laplacian(self, m2, m3):
        for m in (m2, m3):
            assert abs(chern_form_scale_numeric(m) - chern_form_scale(m)) < 1e-6

    def test_profile_values(self):
        assert km_profile("II", 0) == -1
        assert km_profile("III", 0) == -1

    def test_zeroth_coefficients(self):
        assert abs(profile_zeroth_coefficient("II")) < 1e-10
        assert abs(profile_zeroth_coefficient("III")) < 1e-10


class TestThetaPrime:
    def test_large_t(self, m2):
        assert theta_prime_truncated(m2, 1.0, 0.9) == pytest.approx(1.0, abs=1e-12)

    def test_large_t_type_iii(self, m3):
        # v = ±b2 ± b4 have Q = 0 and h = 2 independently of t
        expected = 1 + 4 * math.exp(-4 * math.pi)
        assert theta_prime_truncated(m3, 1.0, 0.9) == pytest.approx(expected, rel=1e-9)

    @pytest.mark.parametrize("t", [0.5, math.exp(-10), math.exp(-30), 0.2j])
    def test_poisson_matches_direct(self, m3, t):
        d = theta_prime_truncated(m3, 1.0, t, line_sum="direct")
        p = theta_prime_truncated(m3, 1.0, t, line_sum="poisson")
        assert abs(d - p) < 1e-8

    @pytest.mark.parametrize("which", ["m2", "m3"])
    def test_monotone_growth(self, which, request):
        model = request.getfixturevalue(which)
        vals = [theta_prime_truncated(model, 1.0, math.exp(-10 * k)) for k in range(1, 6)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_cutoff_too_small(self, m2):
        with pytest.raises(CutoffTooSmall):
            theta_prime_truncated(m2, 1.0, 0.01, hmax=0.1)

    def test_bad_t(self, m2):
        with pytest.raises(ValueError):
            theta_prime_truncated(m2, 1.0, 1.5)


class TestResidue:
    def test_type_ii(self, m2):
        fit = residue_slope(m2)
        assert fit.predicted == pytest.approx(1 / (4 * math.pi), rel=1e-12)
        assert fit.rel_error < 0.01
        errs = fit.secant_errors
        assert all(b < a for a, b in zip(errs, errs[1:]))

    def test_type_iii(self, m3):
        fit = residue_slope(m3)
        assert fit.rel_error < 0.02
        errs = fit.secant_errors
        assert all(b < a for a, b in zip(errs, errs[1:]))

    def test_empty_support(self, m2):
        fit = residue_slope(m2, m=1)
        assert fit.predicted == 0 and abs(fit.slope) < 1e-10
