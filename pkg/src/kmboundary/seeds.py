"""Small worked degenerations used by tests, the CLI fixtures and the README."""

from __future__ import annotations

from .quadlattice import Lattice, make_lattice


def _block(a, b):
    n, m = len(a), len(b)
    out = [[0] * (n + m) for _ in range(n + m)]
    for i in range(n):
        for j in range(n):
            out[i][j] = a[i][j]
    for i in range(m):
        for j in range(m):
            out[n + i][n + j] = b[i][j]
    return out


# basis a1, a2, b1, b2 with Q(a1,b2) = 1, Q(a2,b1) = -1
TYPE_II_GRAM = [[0, 0, 0, 1], [0, 0, -1, 0], [0, -1, 0, 0], [1, 0, 0, 0]]
# T = 1 + N with N a_i = b_i
TYPE_II_T = [[1, 0, 0, 0], [0, 1, 0, 0], [1, 0, 1, 0], [0, 1, 0, 1]]
# e^{2,1} = a1 + (i/2) a2, as (real part, imaginary part)
TYPE_II_E21 = ((1, 0, 0, 0), (0, "1/2", 0, 0))

# basis b1, b2, b3, u
TYPE_III_GRAM = _block([[0, 0, 1], [0, -2, 0], [1, 0, 0]], [[2]])
TYPE_III_T = [[1, 0, 0, 0], [1, 1, 0, 0], [1, 2, 1, 0], [0, 0, 0, 1]]
TYPE_III_E22 = (1, 0, 0, 0)


def type_ii_seed(extra: int | None = None) -> tuple[Lattice, list]:
    """The rank-4 type II seed, optionally with an orthogonal summand [extra]."""
    if extra is None:
        return make_lattice(TYPE_II_GRAM, "seed-II"), [row[:] for row in TYPE_II_T]
    gram = _block(TYPE_II_GRAM, [[extra]])
    T = _block(TYPE_II_T, [[1]])
    return make_lattice(gram, f"seed-II+[{extra}]"), T


def type_iii_seed() -> tuple[Lattice, list]:
    return make_lattice(TYPE_III_GRAM, "seed-III"), [row[:] for row in TYPE_III_T]
