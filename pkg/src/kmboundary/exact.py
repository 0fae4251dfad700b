"""Exact integer and rational linear algebra.

Matrices are plain nested sequences (row-major). Every function returns
tuples of tuples so results can be stored in frozen dataclasses and hashed.
Integer entries are Python ints; rational entries are ``fractions.Fraction``.
Vectors are 1-D tuples, and sublattice bases are tuples of row vectors.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from fractions import Fraction
from typing import Union

Scalar = Union[int, Fraction]
Matrix = tuple[tuple[Scalar, ...], ...]

INFINITE = math.inf


def shape(M: Sequence[Sequence[Scalar]], ncols: int | None = None) -> tuple[int, int]:
    rows = len(M)
    if rows:
        return rows, len(M[0])
    return 0, (ncols or 0)


def freeze(M: Sequence[Sequence[Scalar]]) -> Matrix:
    return tuple(tuple(row) for row in M)


def identity(n: int) -> Matrix:
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def zeros(m: int, n: int) -> Matrix:
    return tuple(tuple(0 for _ in range(n)) for _ in range(m))


def transpose(M: Sequence[Sequence[Scalar]], ncols: int | None = None) -> Matrix:
    m, n = shape(M, ncols)
    return tuple(tuple(M[i][j] for i in range(m)) for j in range(n))


def matmul(A: Sequence[Sequence[Scalar]], B: Sequence[Sequence[Scalar]]) -> Matrix:
    Bt = transpose(B)
    return tuple(tuple(sum(a * b for a, b in zip(row, col)) for col in Bt) for row in A)


def matvec(A: Sequence[Sequence[Scalar]], v: Sequence[Scalar]) -> tuple[Scalar, ...]:
    return tuple(sum(a * x for a, x in zip(row, v)) for row in A)


def dot(u: Sequence[Scalar], v: Sequence[Scalar]) -> Scalar:
    return sum(a * b for a, b in zip(u, v))


def bilinear(G: Sequence[Sequence[Scalar]], u: Sequence[Scalar], v: Sequence[Scalar]) -> Scalar:
    return dot(u, matvec(G, v))


def matsub(A, B) -> Matrix:
    return tuple(tuple(a - b for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def matadd(A, B) -> Matrix:
    return tuple(tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def matscale(c: Scalar, A) -> Matrix:
    return tuple(tuple(c * a for a in row) for row in A)


def matpow(A, e: int) -> Matrix:
    result = identity(len(A))
    base = freeze(A)
    while e:
        if e & 1:
            result = matmul(result, base)
        base = matmul(base, base)
        e >>= 1
    return result


def is_zero(M) -> bool:
    return all(x == 0 for row in M for x in row)


def normalize(x: Scalar) -> Scalar:
    """Collapse integral Fractions to int."""
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x)
    return x


def to_fraction_matrix(M) -> list[list[Fraction]]:
    return [[Fraction(x) for x in row] for row in M]


def common_denominator(entries) -> int:
    d = 1
    for x in entries:
        d = math.lcm(d, Fraction(x).denominator)
    return d


def clear_denominators(M) -> Matrix:
    """Scale each row of a rational matrix to a primitive-content integer row."""
    out = []
    for row in M:
        d = common_denominator(row)
        ints = [int(Fraction(x) * d) for x in row]
        g = math.gcd(*ints) if ints else 0
        if g > 1:
            ints = [x // g for x in ints]
        out.append(tuple(ints))
    return tuple(out)


# ---------------------------------------------------------------- elimination


def _rref(M: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    A = [row[:] for row in M]
    m = len(A)
    n = len(A[0]) if m else 0
    pivots: list[int] = []
    r = 0
    for c in range(n):
        p = next((i for i in range(r, m) if A[i][c] != 0), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        inv = 1 / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(m):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    return A, pivots


def rank(M) -> int:
    if not M or not M[0]:
        return 0
    return len(_rref(to_fraction_matrix(M))[1])


def det(M) -> Scalar:
    n = len(M)
    if n == 0:
        return 1
    A = to_fraction_matrix(M)
    result = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if A[i][c] != 0), None)
        if p is None:
            return 0
        if p != c:
            A[c], A[p] = A[p], A[c]
            result = -result
        result *= A[c][c]
        for i in range(c + 1, n):
            if A[i][c] != 0:
                f = A[i][c] / A[c][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[c])]
    return normalize(result)


def inverse(M) -> Matrix:
    n = len(M)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(to_fraction_matrix(M))]
    R, piv = _rref(aug)
    if piv[:n] != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return tuple(tuple(normalize(x) for x in row[n:]) for row in R)


def solve_rational(A, b) -> tuple[Scalar, ...] | None:
    """Return one exact solution x of A·x = b, or ``None`` if inconsistent.

    >>> solve_rational([[2]], [1])
    (Fraction(1, 2),)
    >>> solve_rational([[1], [1]], [0, 1]) is None
    True
    """
    m, n = shape(A)
    if m == 0:
        return tuple(0 for _ in range(n))
    aug = [[Fraction(x) for x in row] + [Fraction(bi)] for row, bi in zip(A, b)]
    R, piv = _rref(aug)
    if n in piv:
        return None
    x = [Fraction(0)] * n
    for r, c in enumerate(piv):
        x[c] = R[r][n]
    return tuple(normalize(v) for v in x)


def rational_kernel(M, ncols: int | None = None) -> Matrix:
    """Basis (rows) of the rational kernel of M, one vector per free column."""
    m, n = shape(M, ncols)
    if m == 0:
        return identity(n)
    R, piv = _rref(to_fraction_matrix(M))
    free = [c for c in range(n) if c not in piv]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for r, c in enumerate(piv):
            v[c] = -R[r][f]
        basis.append(tuple(v))
    return tuple(basis)


# ---------------------------------------------------------------- normal forms


def smith_normal_form(M, ncols: int | None = None) -> tuple[Matrix, Matrix, Matrix]:
    """Return (U, D, V) with U·M·V = D, U and V unimodular, D in Smith form.

    >>> smith_normal_form([[2, 0], [0, 3]])[1]
    ((1, 0), (0, 6))
    """
    m, n = shape(M, ncols)
    D = [[int(x) for x in row] for row in M]
    U = [list(r) for r in identity(m)]
    V = [list(r) for r in identity(n)]

    def swap_rows(i, j):
        D[i], D[j] = D[j], D[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for row in D:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, q):  # row_dst += q row_src
        D[dst] = [a + q * b for a, b in zip(D[dst], D[src])]
        U[dst] = [a + q * b for a, b in zip(U[dst], U[src])]

    def add_col(dst, src, q):
        for row in D:
            row[dst] += q * row[src]
        for row in V:
            row[dst] += q * row[src]

    for t in range(min(m, n)):
        while True:
            best = None
            for i in range(t, m):
                for j in range(t, n):
                    if D[i][j] and (best is None or abs(D[i][j]) < abs(D[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                return freeze(U), freeze(D), freeze(V)
            swap_rows(t, best[0])
            swap_cols(t, best[1])
            p = D[t][t]
            clean = True
            for i in range(t + 1, m):
                if D[i][t]:
                    add_row(i, t, -(D[i][t] // p))
                    clean = clean and D[i][t] == 0
            for j in range(t + 1, n):
                if D[t][j]:
                    add_col(j, t, -(D[t][j] // p))
                    clean = clean and D[t][j] == 0
            if not clean:
                continue
            bad = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if D[i][j] % p),
                None,
            )
            if bad is not None:
                add_row(t, bad, 1)
                continue
            break
        if D[t][t] < 0:
            D[t] = [-x for x in D[t]]
            U[t] = [-x for x in U[t]]
    return freeze(U), freeze(D), freeze(V)


def invariant_factors(M, ncols: int | None = None) -> tuple[int, ...]:
    _, D, _ = smith_normal_form(M, ncols)
    return tuple(D[i][i] for i in range(min(len(D), len(D[0]) if D else 0)))


def hermite_rows(rows, ncols: int | None = None) -> Matrix:
    """Row-style Hermite normal form of the lattice spanned by integer rows.

    Pivots are positive, entries above a pivot lie in [0, pivot), zero rows
    are dropped. The result is a canonical basis of the row lattice.
    """
    A = [[int(x) for x in row] for row in rows]
    m, n = shape(A, ncols)
    r = 0
    for c in range(n):
        # gcd-combine column c into row r
        for i in range(r + 1, m):
            while A[i][c]:
                if A[r][c] == 0 or abs(A[i][c]) < abs(A[r][c]):
                    A[r], A[i] = A[i], A[r]
                    continue
                q = A[i][c] // A[r][c]
                A[i] = [a - q * b for a, b in zip(A[i], A[r])]
        if r < m and A[r][c]:
            if A[r][c] < 0:
                A[r] = [-x for x in A[r]]
            p = A[r][c]
            for i in range(r):
                q = A[i][c] // p
                if q:
                    A[i] = [a - q * b for a, b in zip(A[i], A[r])]
            r += 1
            if r == m:
                break
    return tuple(tuple(row) for row in A[:r] if any(row))


def kernel_saturated(M, ncols: int | None = None) -> Matrix:
    """Z-basis (rows, Hermite form) of ker(M) ∩ Z^ncols.

    >>> kernel_saturated([[2, 4]])
    ((2, -1),)
    """
    m, n = shape(M, ncols)
    if m == 0 or is_zero(M):
        return identity(n)
    M = clear_denominators(M) if any(isinstance(x, Fraction) for row in M for x in row) else M
    _, D, V = smith_normal_form(M, n)
    r = sum(1 for i in range(min(m, n)) if D[i][i] != 0)
    basis = [tuple(V[i][j] for i in range(n)) for j in range(r, n)]
    return hermite_rows(basis, n)


def saturate(rows, ncols: int) -> Matrix:
    """Basis of (Q-span of rows) ∩ Z^ncols."""
    rows = clear_denominators(rows) if rows else ()
    if not rows or is_zero(rows):
        return ()
    ann = kernel_saturated(rows, ncols)
    if not ann:
        return identity(ncols)
    return kernel_saturated(ann, ncols)


def cokernel_order(M) -> int | float:
    """|det M| for square M, or ``INFINITE`` when singular."""
    d = det(M)
    return INFINITE if d == 0 else abs(int(d))


def complete_basis(sub, full) -> Matrix:
    """Vectors extending a saturated sublattice basis ``sub`` to a basis of ``full``.

    Both arguments are integer row bases with span(sub) ⊆ span(full) and
    span(sub) saturated in span(full). Returns rows of Z^n whose images give
    a basis of full/sub.
    """
    k = len(full)
    if not sub:
        return freeze(full)
    ft = transpose(full)
    coords = []
    for v in sub:
        c = solve_rational(ft, v)
        if c is None or any(Fraction(x).denominator != 1 for x in c):
            raise ValueError("sublattice not contained in lattice")
        coords.append(tuple(int(x) for x in c))
    _, D, V = smith_normal_form(coords, k)
    if any(D[i][i] != 1 for i in range(len(sub))):
        raise ValueError("sublattice is not saturated")
    Vinv = inverse(V)
    comp_coords = [tuple(int(x) for x in Vinv[i]) for i in range(len(sub), k)]
    comp_coords = hermite_rows(comp_coords, k) if comp_coords else ()
    return tuple(tuple(sum(c * f[j] for c, f in zip(cc, full)) for j in range(len(full[0]))) for cc in comp_coords)

