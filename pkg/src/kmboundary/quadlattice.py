"""Integral lattices, their discriminant forms and sublattice calculus.

A lattice is stored by its Gram matrix in a fixed basis; vectors are
coordinate tuples in that basis. The discriminant group L∨/L is indexed by
SNF coordinates of the Gram matrix, enumerated lexicographically. That
order fixes the basis of every Weil representation matrix in the package.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from . import exact
from .errors import Degenerate, NotSymmetric

Vector = tuple


@dataclass(frozen=True)
class Lattice:
    gram: tuple[tuple[int, ...], ...]
    label: str = ""

    @property
    def rank(self) -> int:
        return len(self.gram)

    @property
    def even(self) -> bool:
        return all(self.gram[i][i] % 2 == 0 for i in range(self.rank))

    @property
    def det(self) -> int:
        return int(exact.det(self.gram))

    def q(self, u, v) -> Fraction | int:
        return exact.bilinear(self.gram, u, v)

    def norm(self, v) -> Fraction | int:
        return exact.bilinear(self.gram, v, v)


def make_lattice(gram, label: str = "") -> Lattice:
    """Validate a Gram matrix and wrap it.

    Rank 0 is allowed (the zero lattice, used for empty graded pieces).
    """
    rows = [list(r) for r in gram]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise NotSymmetric("gram matrix is not square")
    for r in rows:
        for x in r:
            if Fraction(x).denominator != 1:
                raise NotSymmetric("gram entries must be integers")
    g = tuple(tuple(int(x) for x in r) for r in rows)
    if any(g[i][j] != g[j][i] for i in range(n) for j in range(n)):
        raise NotSymmetric("gram matrix is not symmetric")
    if n and exact.det(g) == 0:
        raise Degenerate("gram matrix is degenerate")
    return Lattice(g, label)


def diagonalize(gram) -> list[Fraction]:
    """Diagonal entries of a rational congruence diagonalization of a symmetric matrix."""
    A = exact.to_fraction_matrix(gram)
    n = len(A)
    diag: list[Fraction] = []
    for i in range(n):
        if A[i][i] == 0:
            j = next((j for j in range(i + 1, n) if A[j][j] != 0), None)
            if j is not None:
                A[i], A[j] = A[j], A[i]
                for row in A:
                    row[i], row[j] = row[j], row[i]
            else:
                j = next((j for j in range(i + 1, n) if A[i][j] != 0), None)
                if j is not None:
                    # e_i <- e_i + e_j makes the pivot 2·A[i][j]
                    A[i] = [a + b for a, b in zip(A[i], A[j])]
                    for row in A:
                        row[i] += row[j]
        p = A[i][i]
        diag.append(p)
        if p == 0:
            continue
        for k in range(i + 1, n):
            if A[k][i] != 0:
                f = A[k][i] / p
                A[k] = [a - f * b for a, b in zip(A[k], A[i])]
                for row in A:
                    row[k] -= f * row[i]
    return diag


def signature(L: Lattice | tuple) -> tuple[int, int]:
    gram = L.gram if isinstance(L, Lattice) else L
    d = diagonalize(gram)
    return sum(1 for x in d if x > 0), sum(1 for x in d if x < 0)


def is_positive_definite(gram) -> bool:
    d = diagonalize(gram)
    return all(x > 0 for x in d)


def _mod(x: Fraction, m: int) -> Fraction:
    return x - m * (x // m)


@dataclass(frozen=True)
class FiniteQuadraticModule:
    """The discriminant form L∨/L with values Q(μ,μ) mod 2 and Q(μ,λ) mod 1."""

    lattice: Lattice
    orders: tuple[int, ...]
    positions: tuple[int, ...]  # SNF diagonal slots with d > 1
    U: tuple
    V: tuple
    _diag: tuple[int, ...] = field(repr=False)

    @property
    def size(self) -> int:
        n = 1
        for d in self.orders:
            n *= d
        return n

    @cached_property
    def elements(self) -> tuple[tuple[int, ...], ...]:
        return tuple(itertools.product(*(range(d) for d in self.orders)))

    @cached_property
    def reps(self) -> tuple[Vector, ...]:
        return tuple(self._rep(c) for c in self.elements)

    @cached_property
    def _index(self) -> dict[tuple[int, ...], int]:
        return {c: i for i, c in enumerate(self.elements)}

    def _rep(self, c) -> Vector:
        n = self.lattice.rank
        y = [Fraction(0)] * n
        for pos, ci, d in zip(self.positions, c, self.orders):
            y[pos] = Fraction(ci, d)
        x = exact.matvec(self.V, y)
        return tuple(exact.normalize(_mod(Fraction(t), 1)) for t in x)

    def index_of(self, x) -> int:
        """Index of the class of a dual vector x (rational coordinates)."""
        y = exact.matvec(self.lattice.gram, x)
        if any(Fraction(t).denominator != 1 for t in y):
            raise ValueError("vector is not in the dual lattice")
        c = exact.matvec(self.U, [int(t) for t in y])
        key = tuple(int(c[pos]) % d for pos, d in zip(self.positions, self.orders))
        return self._index[key]

    def qvalue(self, i: int) -> Fraction:
        x = self.reps[i]
        return _mod(Fraction(self.lattice.norm(x)), 2)

    def bform(self, i: int, j: int) -> Fraction:
        return _mod(Fraction(self.lattice.q(self.reps[i], self.reps[j])), 1)

    @cached_property
    def qvalues(self) -> tuple[Fraction, ...]:
        return tuple(self.qvalue(i) for i in range(self.size))

    def negate(self, i: int) -> int:
        return self.index_of(tuple(-t for t in self.reps[i]))

    def add(self, i: int, j: int) -> int:
        return self.index_of(tuple(a + b for a, b in zip(self.reps[i], self.reps[j])))


def discriminant_group(L: Lattice) -> FiniteQuadraticModule:
    n = L.rank
    if n == 0:
        return FiniteQuadraticModule(L, (), (), (), (), ())
    U, D, V = exact.smith_normal_form(L.gram)
    diag = tuple(D[i][i] for i in range(n))
    positions = tuple(i for i, d in enumerate(diag) if d > 1)
    orders = tuple(diag[i] for i in positions)
    return FiniteQuadraticModule(L, orders, positions, U, V, diag)


def dual_cosets(L: Lattice) -> tuple[Vector, ...]:
    return discriminant_group(L).reps


def orthogonal_complement(L: Lattice, S) -> exact.Matrix:
    """Saturated basis of {v ∈ L : Q(v, s) = 0 for all s in S}."""
    if not S:
        return exact.identity(L.rank)
    return exact.kernel_saturated(exact.matmul(S, L.gram), L.rank)


def gram_of(L: Lattice, basis) -> tuple[tuple, ...]:
    return tuple(tuple(exact.normalize(Fraction(L.q(u, v))) for v in basis) for u in basis)


def same_span(A, B, n: int) -> bool:
    """Whether two integer row bases span the same sublattice."""
    return exact.hermite_rows(A, n) == exact.hermite_rows(B, n) if (A or B) else True
