from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import conjugate, random_unimodular
from kmboundary import exact
from kmboundary.degeneration import (
    TRIVIAL,
    TYPE_II,
    TYPE_III,
    degenerate,
    gr2_lattice,
    graded_data,
    invariants,
    monodromy_log,
)
from kmboundary.errors import (
    NotIsometry,
    NotQuasiUnipotent,
    NotWeightFiltration,
    TypeMismatch,
)
from kmboundary.quadlattice import make_lattice, orthogonal_complement, same_span
from kmboundary.seeds import TYPE_II_T, TYPE_III_T, type_ii_seed, type_iii_seed


def _skew(L, N):
    n = L.rank
    basis = exact.identity(n)
    return all(
        L.q(exact.matvec(N, v), w) + L.q(v, exact.matvec(N, w)) == 0 for v in basis for w in basis
    )


class TestMonodromyLog:
    def test_identity_is_trivial(self):
        L, _ = type_ii_seed()
        D = degenerate(L, exact.identity(4))
        assert D.kind == TRIVIAL and exact.is_zero(D.N)

    def test_type_ii_log_is_t_minus_one(self):
        L, T = type_ii_seed()
        N, e = monodromy_log(L, T)
        assert e == 1
        assert N == exact.matsub(T, exact.identity(4))

    def test_type_iii_seed_log(self, seed_iii):
        # b1 -> b2, b2 -> 2 b3
        assert seed_iii.N == ((0, 0, 0, 0), (1, 0, 0, 0), (0, 2, 0, 0), (0, 0, 0, 0))
        assert _skew(seed_iii.lattice, seed_iii.N)

    def test_log_series_has_half_term(self):
        L, T = type_iii_seed()
        A = exact.matsub(T, exact.identity(4))
        expected = exact.matsub(A, exact.matscale(Fraction(1, 2), exact.matmul(A, A)))
        assert monodromy_log(L, T)[0] == exact.freeze(expected)

    def test_quasi_unipotent_cover(self):
        L, T = type_ii_seed()
        negT = [[-x for x in row] for row in T]
        N, e = monodromy_log(L, negT)
        assert e == 2
        assert N == exact.matscale(2, exact.matsub(T, exact.identity(4)))

    def test_not_isometry(self):
        L, _ = type_ii_seed()
        with pytest.raises(NotIsometry):
            degenerate(L, [[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])

    def test_hyperbolic_isometry_rejected(self):
        L = make_lattice([[2, 0], [0, -6]])
        with pytest.raises(NotQuasiUnipotent):
            degenerate(L, [[2, 3], [1, 2]])

    def test_eichler_transvection_is_type_iii(self):
        L = make_lattice([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 2, 0], [0, 0, 0, -2]])
        # isotropic f = (0, 1, 0, 0); Eichler transvection v -> v + Q(v, f) w - Q(v, w) f - Q(w,w)/2 Q(v,f) f
        w = (0, 0, 1, 0)
        f = (0, 1, 0, 0)
        n = 4
        T = [[0] * n for _ in range(n)]
        for j in range(n):
            v = exact.identity(n)[j]
            img = [
                v[i] + L.q(v, f) * w[i] - L.q(v, w) * f[i] - Fraction(L.q(w, w), 2) * L.q(v, f) * f[i]
                for i in range(n)
            ]
            for i in range(n):
                T[i][j] = int(img[i])
        D = degenerate(L, T)
        assert D.kind == TYPE_III


def _block_sum(*blocks):
    n = sum(len(b) for b in blocks)
    out = [[0] * n for _ in range(n)]
    o = 0
    for b in blocks:
        for i, row in enumerate(b):
            for j, x in enumerate(row):
                out[o + i][o + j] = x
        o += len(b)
    return out


def test_mixed_jordan_blocks_rejected():
    # 3-block on the type III block plus a 2-block on U + U: N^2 has rank one but Gr4 has rank three
    G3 = [[0, 0, 1], [0, -2, 0], [1, 0, 0]]
    U = [[0, 1], [1, 0]]
    L = make_lattice(_block_sum(G3, U, U))  # basis b1 b2 b3 e1 f1 e2 f2
    N = [[0] * 7 for _ in range(7)]
    N[1][0], N[2][1] = 1, 2  # b1 -> b2 -> 2 b3
    N[6][3], N[4][5] = 1, -1  # e1 -> f2, e2 -> -f1
    N2 = exact.matmul(N, N)
    T = exact.matadd(exact.matadd(exact.identity(7), N), exact.matscale(Fraction(1, 2), N2))
    with pytest.raises(NotWeightFiltration):
        degenerate(L, [[int(x) for x in row] for row in T])


class TestFiltration:
    def test_type_iii_seed(self, seed_iii):
        W = seed_iii.W
        assert W[0] == ((0, 0, 1, 0),) and W[1] == W[0]
        assert same_span(W[2], [(0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)], 4)
        assert len(W[4]) == 4

    def test_type_ii_seed(self, seed_ii):
        assert seed_ii.kind == TYPE_II
        assert same_span(seed_ii.W[1], [(0, 0, 1, 0), (0, 0, 0, 1)], 4)
        assert same_span(seed_ii.W[2], seed_ii.W[1], 4)
        assert graded_data(seed_ii).gr[2].rank == 0

    def test_duality(self, seed_ii, seed_iii, seed_ii_u):
        for D in (seed_ii, seed_iii, seed_ii_u):
            for k in range(4):
                perp = orthogonal_complement(D.lattice, D.W[k]) if D.W[k] else exact.identity(D.rank)
                assert same_span(perp, D.W[3 - k], D.rank)


class TestGraded:
    def test_type_iii_seed(self, seed_iii):
        G = graded_data(seed_iii)
        assert G.q4 == ((2,),)
        assert G.prim_gram == ((2,),)
        assert len(G.n_gr4) == 1
        assert exact.bilinear(G.q2, G.n_gr4[0], G.n_gr4[0]) == -2

    def test_type_ii_seed(self, seed_ii):
        G = graded_data(seed_ii)
        assert G.q3 == ((0, 1), (-1, 0))

    def test_type_ii_plus_summand(self, seed_ii_u):
        assert gr2_lattice(graded_data(seed_ii_u)).gram == ((2,),)


class TestInvariants:
    def test_type_ii_seed(self, seed_ii):
        inv = invariants(seed_ii)
        assert (inv.r, inv.disc, inv.size) == (1, 1, 1)
        assert inv.size**2 == inv.r * inv.disc

    def test_type_iii_seed(self, seed_iii):
        inv = invariants(seed_iii)
        assert (inv.r, inv.disc, inv.size) == (2, 1, 2)
        assert inv.size == inv.r * inv.disc
        assert all(inv.checks.values())

    def test_trivial_has_none(self):
        L, _ = type_ii_seed()
        with pytest.raises(TypeMismatch):
            invariants(degenerate(L, exact.identity(4)))


def _check_weight_filtration(D):
    n = D.rank
    for k in range(2, 5):
        for v in D.W[k]:
            Nv = D.apply_N(v)
            assert exact.rank(list(D.W[k - 2]) + [list(Nv)]) == len(D.W[k - 2]) or not any(Nv)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["II", "III"]))
def test_invariants_are_basis_independent(seed, kind):
    L, T = type_ii_seed(2) if kind == "II" else type_iii_seed()
    ref = invariants(degenerate(L, T))
    P = random_unimodular(L.rank, seed)
    L2, T2 = conjugate(L, T, P)
    D = degenerate(L2, T2)
    assert D.kind == kind
    assert _skew(L2, D.N)
    _check_weight_filtration(D)
    inv = invariants(D)
    assert (inv.r, inv.disc, inv.size) == (ref.r, ref.disc, ref.size)
    if kind == "II":
        assert inv.size**2 == inv.r * inv.disc
    else:
        assert inv.size == inv.r * inv.disc


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4))
def test_powers_scale_the_log(k):
    L, T = type_iii_seed()
    N1, _ = monodromy_log(L, T)
    Nk, _ = monodromy_log(L, exact.matpow(T, k))
    assert Nk == exact.matscale(k, N1)
