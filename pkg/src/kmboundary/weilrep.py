"""Weil representation of Mp2(Z) on C[L∨/L] and the intertwiners ι.

Words are strings over ``S``, ``T`` and ``t`` (the inverse of T); the word
``"ST"`` is represented by ρ(S)·ρ(T).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import exact
from .degeneration import TYPE_III, DegenerationData, GradedData, graded_data, graded_piece
from .errors import NotIsotropic, NotPerp, TypeMismatch
from .quadlattice import (
    FiniteQuadraticModule,
    Lattice,
    discriminant_group,
    gram_of,
    make_lattice,
    orthogonal_complement,
    same_span,
    signature,
)


def _phase(x: Fraction) -> complex:
    """exp(2πi x) for rational x, with exact values at quarter turns."""
    x = x - math.floor(x)
    exact_values = {Fraction(0): 1, Fraction(1, 4): 1j, Fraction(1, 2): -1, Fraction(3, 4): -1j}
    if x in exact_values:
        return complex(exact_values[x])
    return cmath.exp(2j * math.pi * float(x))


@dataclass(frozen=True)
class WeilRep:
    module: FiniteQuadraticModule
    signature: tuple[int, int]

    @property
    def dim(self) -> int:
        return self.module.size

    @cached_property
    def T(self) -> np.ndarray:
        return np.diag([_phase(q / 2) for q in self.module.qvalues])

    @cached_property
    def S(self) -> np.ndarray:
        A = self.module
        bp, bm = self.signature
        c = _phase(Fraction(bm - bp, 8)) / math.sqrt(A.size)
        M = np.empty((A.size, A.size), dtype=complex)
        for lam in range(A.size):
            for mu in range(A.size):
                M[lam, mu] = c * _phase(-A.bform(mu, lam))
        return M


def weil_rep(L: Lattice) -> WeilRep:
    return WeilRep(discriminant_group(L), signature(L))


def rho_generator(W: WeilRep, g: str) -> np.ndarray:
    if g == "T":
        return W.T
    if g == "S":
        return W.S
    if g == "t":
        return W.T.conj()
    raise ValueError(f"unknown generator {g!r}")


def rho_word(W: WeilRep, word: str) -> np.ndarray:
    M = np.eye(W.dim, dtype=complex)
    for g in word:
        M = M @ rho_generator(W, g)
    return M


def relation_defects(W: WeilRep) -> dict[str, float]:
    """Max-entry defects of the defining relations and unitarity."""
    I = np.eye(W.dim)
    S, T = W.S, W.T
    return {
        "ST3_vs_S2": float(np.abs(rho_word(W, "STSTST") - S @ S).max()),
        "S8": float(np.abs(np.linalg.matrix_power(S, 8) - I).max()),
        "unitary_S": float(np.abs(S @ S.conj().T - I).max()),
        "unitary_T": float(np.abs(T @ T.conj().T - I).max()),
    }


# ------------------------------------------------------------ isotropic ι


@dataclass(frozen=True)
class IsotropicIota:
    """ι: C[A_{Gr2}] -> C[A_L] for an isotropic W1 with W2 = W1^perp."""

    lattice: Lattice
    W1: exact.Matrix
    W2: exact.Matrix
    gr2_reps: exact.Matrix
    gr2: Lattice
    matrix: np.ndarray  # |A_L| x |A_Gr2|, 0/1 entries
    lifts: tuple  # dual lift in L∨ ∩ W2 of each Gr2 class rep
    support: int


def _subgroup_closure(A: FiniteQuadraticModule, gens: list[int]) -> list[int]:
    seen = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = A.add(x, g)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return sorted(seen)


def iota_isotropic(L: Lattice, W1, W2=None) -> IsotropicIota:
    n = L.rank
    W1 = exact.freeze(W1)
    if any(L.q(u, v) != 0 for u in W1 for v in W1):
        raise NotIsotropic("W1 is not isotropic")
    perp = orthogonal_complement(L, W1)
    if W2 is None:
        W2 = perp
    elif not same_span(W2, perp, n):
        raise NotPerp("W2 is not the orthogonal complement of W1")
    W2 = exact.freeze(W2)
    piece = graded_piece(W1, W2)
    reps = piece.reps
    gr2 = make_lattice(gram_of(L, reps), "Gr2") if reps else Lattice((), "Gr2")
    A_L = discriminant_group(L)
    A_2 = discriminant_group(gr2)

    # complement of W2 in L pairs nondegenerately with W1
    comp = exact.complete_basis(W2, exact.identity(n))
    P = [[L.q(w, c) for c in comp] for w in W1]  # r1 x r1

    lifts = []
    for crep in A_2.reps:
        x = [Fraction(0)] * n
        for c, r in zip(crep, reps):
            for j in range(n):
                x[j] += Fraction(c) * r[j]
        if W1:
            target = [-Fraction(L.q(x, c)) for c in comp]
            t = exact.solve_rational(exact.transpose(P), target)
            for ti, w in zip(t, W1):
                for j in range(n):
                    x[j] += Fraction(ti) * w[j]
        lifts.append(tuple(exact.normalize(v) for v in x))

    # (L∨ ∩ W1 + L)/L
    gens = []
    if W1:
        M = exact.matmul(W1, L.gram)  # t·M integral <=> t·W1 in L∨
        U, D, _ = exact.smith_normal_form(M)
        for i in range(len(W1)):
            d = D[i][i]
            t = [Fraction(U[i][k], d) for k in range(len(W1))]
            vec = tuple(sum(ti * w[j] for ti, w in zip(t, W1)) for j in range(n))
            gens.append(A_L.index_of(vec))
    H = _subgroup_closure(A_L, gens)

    mat = np.zeros((A_L.size, A_2.size), dtype=int)
    for col, x in enumerate(lifts):
        base = A_L.index_of(x)
        for h in H:
            mat[A_L.add(base, h), col] = 1
    return IsotropicIota(L, W1, W2, reps, gr2, mat, tuple(lifts), len(H))


def intertwining_defect(iota: np.ndarray, rho_small: WeilRep | tuple, rho_big: WeilRep) -> float:
    """max over g in {T, S} of |ι ρ_small(g) - ρ_big(g) ι|."""
    worst = 0.0
    for g in "TS":
        small = rho_small[g] if isinstance(rho_small, dict) else rho_generator(rho_small, g)
        lhs = iota @ small
        rhs = rho_generator(rho_big, g) @ iota
        worst = max(worst, float(np.abs(lhs - rhs).max()) if lhs.size else 0.0)
    return worst


# ------------------------------------------------------------ graded tensor ι


@dataclass(frozen=True)
class GradedTensorIota:
    matrix: np.ndarray  # |A_V| x (|A_prim| * |A_Gr4|), Kronecker column order
    prim: Lattice
    gr4_neg: Lattice
    gr2_class: dict  # (lam, nu) -> Gr2 class index, only for admissible pairs
    iso: IsotropicIota


def iota_graded_tensor(D: DegenerationData, G: GradedData | None = None) -> GradedTensorIota:
    if D.kind != TYPE_III:
        raise TypeMismatch("graded tensor map requires a type III degeneration")
    G = G or graded_data(D)
    from .degeneration import gr4_lattice, prim_lattice

    iso = iota_isotropic(D.lattice, D.W[1], D.W[2])
    assert iso.gr2_reps == G.gr[2].reps
    P = prim_lattice(G)
    F = gr4_lattice(G, negate=True)
    A_P, A_F, A_2 = discriminant_group(P), discriminant_group(F), discriminant_group(iso.gr2)
    q2 = G.q2
    g2 = len(q2)
    mat = np.zeros((iso.matrix.shape[0], A_P.size * A_F.size), dtype=int)
    classes = {}
    for i, lam in enumerate(A_P.reps):
        lam2 = [sum(Fraction(c) * b[j] for c, b in zip(lam, G.prim)) for j in range(g2)]
        for k, nu in enumerate(A_F.reps):
            nn = [sum(Fraction(c) * b[j] for c, b in zip(nu, G.n_gr4)) for j in range(g2)]
            x = tuple(a + b for a, b in zip(lam2, nn))
            y = exact.matvec(q2, x)
            if any(Fraction(t).denominator != 1 for t in y):
                continue
            mu = A_2.index_of(x)
            classes[(i, k)] = mu
            mat[:, i * A_F.size + k] = iso.matrix[:, mu]
    return GradedTensorIota(mat, P, F, classes, iso)


def tensor_rep(P: WeilRep, F: WeilRep) -> dict:
    return {g: np.kron(rho_generator(P, g), rho_generator(F, g)) for g in "TS"}
