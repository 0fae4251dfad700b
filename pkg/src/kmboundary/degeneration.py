"""Monodromy logarithm, weight filtration, graded lattices and boundary invariants.

Linear maps are matrices acting on coordinate columns: ``T[i][j]`` is the
coefficient of basis vector i in the image of basis vector j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

from . import exact
from .errors import (
    InvariantInconsistency,
    NotIsometry,
    NotNilpotentOrder3,
    NotQuasiUnipotent,
    NotWeightFiltration,
    TypeMismatch,
)
from .quadlattice import Lattice, gram_of, make_lattice, orthogonal_complement, same_span

TRIVIAL, TYPE_II, TYPE_III = "trivial", "II", "III"


# ------------------------------------------------------------ monodromy log


def is_isometry(L: Lattice, T) -> bool:
    return exact.matmul(exact.matmul(exact.transpose(T), L.gram), T) == L.gram


def _is_unipotent(T) -> bool:
    n = len(T)
    return exact.is_zero(exact.matpow(exact.matsub(T, exact.identity(n)), n))


def unipotency_exponent(T) -> int:
    """Smallest e >= 1 with T^e unipotent.

    The eigenvalues of T must be roots of unity; e is the lcm of their orders,
    read off from the cyclotomic factors of the characteristic polynomial.
    """
    if _is_unipotent(T):
        return 1
    import sympy

    n = len(T)
    x = sympy.Symbol("x")
    poly = sympy.Poly(sympy.Matrix(T).charpoly(x).as_expr(), x)
    orders = []
    # totient(k) >= sqrt(k/2), so only k <= 2 n^2 can contribute
    for k in range(1, 2 * n * n + 2):
        if poly.degree() == 0:
            break
        if sympy.totient(k) > n:
            continue
        phi = sympy.Poly(sympy.cyclotomic_poly(k, x), x)
        q, r = sympy.div(poly, phi)
        while r.is_zero:
            orders.append(k)
            poly = q
            q, r = sympy.div(poly, phi)
    if poly.degree() > 0:
        raise NotQuasiUnipotent("eigenvalues of T are not all roots of unity")
    e = reduce(math.lcm, orders, 1)
    if not _is_unipotent(exact.matpow(T, e)):
        raise NotQuasiUnipotent("T^e is not unipotent")
    return e


def monodromy_log(L: Lattice, T) -> tuple[exact.Matrix, int]:
    """Return (N, e) with N = log(T^e) and e the unipotency exponent.

    >>> from kmboundary.quadlattice import make_lattice
    >>> monodromy_log(make_lattice([[0, 1], [1, 0]]), [[1, 0], [0, 1]])
    (((0, 0), (0, 0)), 1)
    """
    T = exact.freeze([[int(x) for x in row] for row in T])
    n = L.rank
    if len(T) != n or any(len(r) != n for r in T):
        raise NotIsometry("T has the wrong shape")
    if not is_isometry(L, T):
        raise NotIsometry("T does not preserve the bilinear form")
    e = unipotency_exponent(T)
    Te = exact.matpow(T, e)
    A = exact.matsub(Te, exact.identity(n))
    # log(1 + A) = sum (-1)^{k+1} A^k / k, finite because A is nilpotent
    N = exact.zeros(n, n)
    P = exact.identity(n)
    for k in range(1, n + 1):
        P = exact.matmul(P, A)
        if exact.is_zero(P):
            break
        N = exact.matadd(N, exact.matscale(Fraction((-1) ** (k + 1), k), P))
    N = tuple(tuple(exact.normalize(Fraction(x)) for x in row) for row in N)
    _check_skew(L, N)
    return N, e


def _check_skew(L: Lattice, N) -> None:
    G = L.gram
    GN = exact.matmul(G, N)
    NtG = exact.matmul(exact.transpose(N), G)
    if not exact.is_zero(exact.matadd(GN, NtG)):
        raise InvariantInconsistency("N is not skew with respect to Q")


# ------------------------------------------------------------ filtration


def _image(M, n: int):
    """Saturated basis of the column space of a rational matrix."""
    return exact.saturate(exact.transpose(M), n)


@dataclass(frozen=True)
class DegenerationData:
    lattice: Lattice
    T: exact.Matrix
    N: exact.Matrix
    cover_degree: int
    kind: str
    W: tuple[exact.Matrix, ...]  # W0..W4, saturated row bases

    @property
    def rank(self) -> int:
        return self.lattice.rank

    def apply_N(self, v, power: int = 1):
        for _ in range(power):
            v = exact.matvec(self.N, v)
        return tuple(exact.normalize(Fraction(x)) for x in v)


def classify_and_filter(L: Lattice, T, N, e: int = 1) -> DegenerationData:
    n = L.rank
    N2 = exact.matmul(N, N)
    if not exact.is_zero(exact.matmul(N2, N)):
        raise NotNilpotentOrder3("N^3 != 0")
    V = exact.identity(n)
    if exact.is_zero(N):
        return DegenerationData(L, exact.freeze(T), N, e, TRIVIAL, ((), (), (), (), V))
    if exact.is_zero(N2):
        W1 = _image(N, n)
        W2 = exact.kernel_saturated(N, n)
        W = ((), W1, W2, V, V)
        kind = TYPE_II
    else:
        W0 = _image(N2, n)
        ker = exact.rational_kernel(N, n)
        W2 = exact.saturate(tuple(exact.transpose(N)) + tuple(ker), n)
        W = (W0, W0, W2, W2, V)
        kind = TYPE_III
    D = DegenerationData(L, exact.freeze(T), N, e, kind, W)
    _check_filtration(D)
    return D


def degenerate(L: Lattice, T) -> DegenerationData:
    N, e = monodromy_log(L, T)
    return classify_and_filter(L, T, N, e)


def _in_span(v, basis) -> bool:
    if not any(v):
        return True
    if not basis:
        return False
    return exact.solve_rational(exact.transpose(basis), v) is not None


def _check_filtration(D: DegenerationData) -> None:
    n = D.rank
    for k in range(2, 5):
        for w in D.W[k]:
            if not _in_span(D.apply_N(w), D.W[k - 2]):
                raise NotWeightFiltration(f"N W_{k} is not inside W_{k - 2}")
    # N^k : Gr_{2+k} -> Gr_{2-k} bijective over Q
    for k in (1, 2):
        top = len(D.W[2 + k]) - len(D.W[1 + k])
        bottom = len(D.W[2 - k]) - (len(D.W[1 - k]) if k < 2 else 0)
        if top != bottom:
            raise NotWeightFiltration(f"Gr_{2 + k} and Gr_{2 - k} differ in rank")
        if top:
            imgs = [D.apply_N(v, k) for v in exact.complete_basis(D.W[1 + k], D.W[2 + k])]
            low = D.W[1 - k] if k < 2 else ()
            if exact.rank(tuple(low) + tuple(imgs)) != len(low) + top:
                raise NotWeightFiltration(f"N^{k} is not injective on Gr_{2 + k}")
    # W_k^perp = W_{3-k}
    for k in range(0, 4):
        perp = orthogonal_complement(D.lattice, D.W[k]) if D.W[k] else exact.identity(n)
        if not same_span(perp, D.W[3 - k], n):
            raise NotWeightFiltration(f"W_{k} orthogonal complement is not W_{3 - k}")


# ------------------------------------------------------------ graded pieces


@dataclass(frozen=True)
class GradedPiece:
    """Gr_k = W_k / W_{k-1}, with integer representatives of a basis."""

    k: int
    lower: exact.Matrix
    reps: exact.Matrix

    @property
    def rank(self) -> int:
        return len(self.reps)

    def coords(self, v) -> tuple:
        """Coordinates of v ∈ W_k ⊗ Q in the rep basis, modulo W_{k-1}."""
        basis = tuple(self.lower) + tuple(self.reps)
        c = exact.solve_rational(exact.transpose(basis), v)
        if c is None:
            raise ValueError(f"vector not in W_{self.k}")
        return tuple(exact.normalize(Fraction(x)) for x in c[len(self.lower):])

    def lift(self, coords) -> tuple:
        n = len(self.reps[0])
        return tuple(
            exact.normalize(sum(Fraction(c) * r[j] for c, r in zip(coords, self.reps))) for j in range(n)
        )


def graded_piece(lower, upper, k: int = 2) -> GradedPiece:
    return GradedPiece(k, exact.freeze(lower), exact.complete_basis(lower, upper))


@dataclass(frozen=True)
class GradedData:
    kind: str
    gr: dict  # k -> GradedPiece
    q2: tuple  # gram of Gr2
    q3: tuple | None = None  # type II
    q4: tuple | None = None  # type III, 1x1 in the rank-one case
    prim: exact.Matrix = ()  # Gr2prim basis, in Gr2 coordinates
    prim_gram: tuple = ()
    n_gr4: tuple = ()  # Gr2 coordinates of N(Gr4 generators)


def graded_data(D: DegenerationData) -> GradedData:
    if D.kind == TRIVIAL:
        raise TypeMismatch("trivial monodromy has no graded data")
    L = D.lattice
    W = D.W
    gr = {k: graded_piece(W[k - 1] if k else (), W[k], k) for k in range(5)}
    q2 = gram_of(L, gr[2].reps)
    if D.kind == TYPE_II:
        q3 = tuple(tuple(L.q(u, D.apply_N(w)) for w in gr[3].reps) for u in gr[3].reps)
        q3 = tuple(tuple(exact.normalize(Fraction(x)) for x in row) for row in q3)
        return GradedData(D.kind, gr, q2, q3=q3)
    q4 = tuple(tuple(exact.normalize(Fraction(L.q(u, D.apply_N(w, 2)))) for w in gr[4].reps) for u in gr[4].reps)
    # N: Gr2 -> Gr0, as a rational matrix on Gr2 coordinates
    cols = [gr[0].coords(D.apply_N(r)) for r in gr[2].reps]
    M = exact.transpose(cols, len(gr[0].reps)) if cols else ()
    prim = exact.kernel_saturated(M, gr[2].rank) if gr[2].rank else ()
    prim_gram = tuple(
        tuple(exact.normalize(Fraction(exact.bilinear(q2, a, b))) for b in prim) for a in prim
    )
    n_gr4 = tuple(gr[2].coords(D.apply_N(r)) for r in gr[4].reps)
    return GradedData(D.kind, gr, q2, q4=q4, prim=prim, prim_gram=prim_gram, n_gr4=n_gr4)


def gr2_lattice(G: GradedData) -> Lattice:
    return make_lattice(G.q2, "Gr2") if G.q2 else Lattice((), "Gr2")


def prim_lattice(G: GradedData) -> Lattice:
    return make_lattice(G.prim_gram, "Gr2prim") if G.prim_gram else Lattice((), "Gr2prim")


def gr4_lattice(G: GradedData, negate: bool = False) -> Lattice:
    s = -1 if negate else 1
    return make_lattice([[s * x for x in row] for row in G.q4], "Gr4-" if negate else "Gr4")


# ------------------------------------------------------------ invariants


@dataclass(frozen=True)
class Invariants:
    kind: str
    r: int  # r1 (type II) or r2 (type III)
    disc: int  # disc31 or disc40
    size: int  # degQ3 or Vol4
    checks: dict

    @property
    def prefactor_squared(self) -> Fraction:
        """Square of the scalar multiplying the boundary term."""
        if self.kind == TYPE_II:
            return Fraction(self.r, self.disc)
        return Fraction(self.r, 2 * self.disc)


def invariants(D: DegenerationData, G: GradedData | None = None) -> Invariants:
    if D.kind == TRIVIAL:
        raise TypeMismatch("trivial monodromy has no boundary invariants")
    G = G or graded_data(D)
    L = D.lattice
    if D.kind == TYPE_II:
        gr3, gr1 = G.gr[3], G.gr[1]
        Nmat = exact.transpose([gr1.coords(D.apply_N(r)) for r in gr3.reps], gr1.rank)
        if any(Fraction(x).denominator != 1 for row in Nmat for x in row):
            raise InvariantInconsistency("N(Gr3) not integral in Gr1")
        r1 = exact.cokernel_order(Nmat)
        pairing = [[L.q(u, w) for w in gr1.reps] for u in gr3.reps]
        disc = abs(int(exact.det(pairing)))
        det_q3 = abs(int(exact.det(G.q3)))
        prod = r1 * disc
        deg = math.isqrt(prod)
        checks = {
            "r1_finite": r1 != exact.INFINITE,
            "degQ3_integral": deg * deg == prod,
            "degQ3_squared_eq_detQ3": det_q3 == prod,
            "q3_antisymmetric": all(G.q3[i][j] == -G.q3[j][i] for i in range(gr3.rank) for j in range(gr3.rank)),
        }
        bad = [k for k, ok in checks.items() if not ok]
        if bad:
            raise InvariantInconsistency("failed: " + ", ".join(bad))
        return Invariants(D.kind, int(r1), disc, deg, checks)

    gr4, gr0 = G.gr[4], G.gr[0]
    if gr4.rank != 1:
        raise InvariantInconsistency("Gr4 must have rank one")
    v0 = gr4.reps[0]
    img = gr0.coords(D.apply_N(v0, 2))
    r2 = exact.cokernel_order([[x] for x in img])
    disc = abs(int(L.q(v0, gr0.reps[0])))
    vol = G.q4[0][0]
    # integrality checks: Gr4 even; N(Gr4) integral in Gr2; dual containment on the line N(Gr4)
    n_coords = G.n_gr4[0]
    integral = all(Fraction(x).denominator == 1 for x in n_coords)
    g = 0
    if integral:
        g = math.gcd(*[int(x) for x in exact.matvec(G.q2, n_coords)])
    checks = {
        "vol_eq_r2_disc": Fraction(vol) == r2 * disc,
        "gr4_even": Fraction(vol).denominator == 1 and int(vol) % 2 == 0,
        "gr4_positive": vol > 0,
        "N_gr4_in_gr2": integral,
        "dual_containment": integral and g != 0 and int(vol) % g == 0,
        "prim_positive_definite": _posdef(G.prim_gram),
    }
    bad = [k for k, ok in checks.items() if not ok]
    if bad:
        raise InvariantInconsistency("failed: " + ", ".join(bad))
    return Invariants(D.kind, int(r2), disc, int(vol), checks)


def _posdef(gram) -> bool:
    from .quadlattice import is_positive_definite

    return is_positive_definite(gram) if gram else True
