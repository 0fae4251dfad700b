import cmath
import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from kmboundary.errors import NegativeArgument, NotHolomorphicInput, NotPositiveDefinite, WrongRank
from kmboundary.quadlattice import discriminant_group, make_lattice
from kmboundary.thetaforms import (
    CoeffFn,
    VVQExpansion,
    beta32,
    beta32_quadrature,
    eichler_integral,
    g2_qexp,
    g2_star,
    quasi_raise,
    rep_numbers,
    sigma1,
    slash_residual,
    theta_qexp,
    unary_R,
)
from kmboundary.weilrep import weil_rep

TAUS = [1j, 1 / 3 + 1j, 2j]


def brute_rep(gram, mu, m_max):
    """Box search with a crude bound from the smallest eigenvalue."""
    G = np.array(gram, dtype=float)
    lam = np.linalg.eigvalsh(G).min()
    R = math.isqrt(int(2 * float(m_max) * 2 / lam) + 1) + 2
    n = len(gram)
    out = {}
    for x in itertools.product(range(-R, R + 1), repeat=n):
        v = [Fraction(x[i]) + Fraction(mu[i]) for i in range(n)]
        q = sum(v[i] * gram[i][j] * v[j] for i in range(n) for j in range(n))
        if q <= 2 * m_max:
            out[q / 2] = out.get(q / 2, 0) + 1
    return dict(sorted(out.items()))


class TestBeta:
    def test_zero(self):
        assert beta32(0) == 2.0

    def test_closed_form_vs_quadrature_grid(self):
        for t in np.logspace(-6, math.log10(50), 60):
            assert abs(beta32(t) - beta32_quadrature(t)) < 1e-10

    def test_bound(self):
        assert beta32(50) <= 2 * math.exp(-50)

    def test_negative(self):
        with pytest.raises(NegativeArgument):
            beta32(-1e-3)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, 40), st.floats(0, 40))
    def test_decreasing(self, a, b):
        lo, hi = sorted((a, b))
        assert beta32(hi) <= beta32(lo) + 1e-15


class TestRepNumbers:
    def test_rank_one(self):
        L = make_lattice([[2]])
        assert rep_numbers(L, (0,), 4) == {0: 1, 1: 2, 4: 2}
        r = rep_numbers(L, (Fraction(1, 2),), 3)
        assert min(r) == Fraction(1, 4) and r[Fraction(1, 4)] == 2

    def test_not_posdef(self):
        with pytest.raises(NotPositiveDefinite):
            rep_numbers(make_lattice([[0, 1], [1, 0]]), (0, 0), 2)

    @pytest.mark.parametrize("gram", [[[2, 1], [1, 2]], [[4, 1], [1, 2]], [[2, 0, 1], [0, 2, 0], [1, 0, 4]]])
    def test_vs_brute_force(self, gram):
        L = make_lattice(gram)
        for mu in discriminant_group(L).reps:
            assert rep_numbers(L, mu, 3) == brute_rep(gram, mu, 3)

    def test_direct_sum_convolution(self):
        a, b = make_lattice([[2]]), make_lattice([[4]])
        ab = make_lattice([[2, 0], [0, 4]])
        ra, rb = rep_numbers(a, (0,), 6), rep_numbers(b, (0,), 6)
        expected = {}
        for m1, c1 in ra.items():
            for m2, c2 in rb.items():
                if m1 + m2 <= 6:
                    expected[m1 + m2] = expected.get(m1 + m2, 0) + c1 * c2
        assert rep_numbers(ab, (0, 0), 6) == dict(sorted(expected.items()))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(-2, 2), st.integers(1, 6))
def test_rep_numbers_random_binary(a, b, c):
    gram = [[2 * a, b], [b, 2 * c]]
    if 4 * a * c - b * b <= 0:
        return
    L = make_lattice(gram)
    for mu in discriminant_group(L).reps[:4]:
        assert rep_numbers(L, mu, 4) == brute_rep(gram, mu, 4)


class TestTheta:
    def test_rank_one_series(self):
        t = theta_qexp(make_lattice([[2]]), 9)
        consts = {k: v.const for k, v in t.coeffs.items() if k[1] == 0}
        assert consts == {(0, 0): 1, (1, 0): 2, (4, 0): 2, (9, 0): 2}

    def test_eval_vs_direct_sum(self):
        t = theta_qexp(make_lattice([[2]]), 60)
        tau = 2j
        direct0 = sum(cmath.exp(2j * math.pi * tau * n * n) for n in range(-20, 21))
        direct1 = sum(cmath.exp(2j * math.pi * tau * (n + 0.5) ** 2) for n in range(-20, 20))
        v = t.evaluate(tau)
        assert abs(v[0] - direct0) < 1e-12 and abs(v[1] - direct1) < 1e-12

    @pytest.mark.parametrize("gram", [[[2]], [[2, 0], [0, 2]], [[4]]])
    def test_modular(self, gram):
        L = make_lattice(gram)
        t = theta_qexp(L, 80)
        W = weil_rep(L)
        assert slash_residual(t.evaluate, t.weight, W, "T", TAUS) < 1e-12
        assert slash_residual(t.evaluate, t.weight, W, "S", TAUS) < 1e-6

    def test_corrupted_fails(self):
        L = make_lattice([[2]])
        t = theta_qexp(L, 80)
        t.coeffs[(Fraction(1), 0)] = CoeffFn(const=3)
        # at τ = i the q¹ term is only ~2e-3 in size, so sample lower in the half-plane
        assert slash_residual(t.evaluate, t.weight, weil_rep(L), "S", [0.5j]) > 1e-2

    def test_linearity(self):
        L = make_lattice([[2, 1], [1, 2]])
        f = theta_qexp(L, 10)
        g = theta_qexp(L, 10).scale(3)
        tau = 0.2 + 0.7j
        assert np.abs((f + g).evaluate(tau) - 4 * f.evaluate(tau)).max() < 1e-12


class TestUnary:
    def test_constant_term(self):
        R = unary_R(make_lattice([[2]]), 4)
        c = R.coefficient(Fraction(0), 0)
        assert abs(c.evaluate(1.0) - 1 / (2 * math.pi)) < 1e-14
        assert all(m != 0 for m, cls in R.coeffs if cls == 1)

    def test_exponent_minus_one(self):
        R = unary_R(make_lattice([[2]]), 4)
        c = R.coefficient(Fraction(-1), 0)
        quad = integrate.quad(lambda u: u**-1.5 * math.exp(-4 * math.pi * u), 1, np.inf, epsabs=1e-15)[0]
        # the two vectors ±1 share one exponent
        assert abs(c.evaluate(1.0).real - 2 * quad / (4 * math.pi)) < 1e-12

    def test_rank_check(self):
        with pytest.raises(WrongRank):
            unary_R(make_lattice([[2, 0], [0, 2]]), 2)


class TestG2:
    def test_coefficients(self):
        assert g2_qexp(4) == [Fraction(-1, 24), 1, 3, 4, 7]
        assert sigma1(6) == 12

    def test_star_transformation(self):
        tau = 0.5 + 2j
        assert abs(g2_star(-1 / tau) - tau**2 * g2_star(tau)) < 1e-8


class TestQuasiRaise:
    def test_constant_weight_zero(self):
        f = VVQExpansion(1, Fraction(0), {}, Fraction(5))
        f.add_term(Fraction(0), 0, CoeffFn(const=1))
        assert all(c.is_zero for c in quasi_raise(f, 0).coeffs.values())

    def test_hand_convolution(self):
        t = theta_qexp(make_lattice([[2]]), 3)
        r = quasi_raise(t, Fraction(1, 2))
        # a0 = 1, a1 = 2; coefficient 1*a1 + (g0*a1 + g1*a0) with g0 = -1/24, g1 = 1
        assert r.coefficient(Fraction(1), 0).const == Fraction(35, 12)
        assert r.coefficient(Fraction(0), 0).const == Fraction(-1, 24)
        assert r.weight == Fraction(5, 2)

    @pytest.mark.parametrize("gram", [[[2]], [[4]], [[2, 0], [0, 2]]])
    def test_modular(self, gram):
        L = make_lattice(gram)
        r = quasi_raise(theta_qexp(L, 80), Fraction(L.rank, 2))
        W = weil_rep(L)
        for w in ("S", "T"):
            assert slash_residual(r.evaluate, r.weight, W, w, TAUS) < 1e-5

    def test_needs_holomorphic(self):
        with pytest.raises(NotHolomorphicInput):
            quasi_raise(unary_R(make_lattice([[2]]), 2), Fraction(1, 2))


class TestEichler:
    def test_constant_only(self):
        f = VVQExpansion(1, Fraction(1, 2), {}, Fraction(0))
        f.add_term(Fraction(0), 0, CoeffFn(const=1))
        for y in (0.5, 1.0, 3.0):
            assert abs(eichler_integral(f, complex(0.3, y))[0] - math.sqrt(2) / (4 * math.pi * math.sqrt(y))) < 1e-10

    @pytest.mark.parametrize("tau", TAUS)
    def test_term_by_term_matches_unary(self, tau):
        L4 = make_lattice([[2]])
        theta = theta_qexp(L4, 12)
        R = unary_R(L4, 12)
        for (m, cls), a in theta.coeffs.items():
            single = VVQExpansion(theta.dim, theta.weight, {(m, cls): a}, theta.m_max)
            # √2·E equals the matching R term with exponent -m
            ref = R.coefficient(-m, cls).term(-m, tau)
            val = eichler_integral(single, tau, tol=abs(ref) * 1e-10)[cls]
            assert abs(math.sqrt(2) * val - ref) <= 1e-7 * abs(ref)

    def test_decays(self):
        f = VVQExpansion(1, Fraction(1, 2), {}, Fraction(1))
        f.add_term(Fraction(1), 0, CoeffFn(const=1))
        assert abs(eichler_integral(f, 6j)[0]) < 1e-14
