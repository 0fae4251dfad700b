"""Boundary series at type II and type III cusps and the assembled generating series."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .degeneration import (
    TYPE_II,
    TYPE_III,
    DegenerationData,
    GradedData,
    Invariants,
    gr2_lattice,
    gr4_lattice,
    graded_data,
    invariants,
)
from .errors import (
    ClassIndexMismatch,
    InvariantInconsistency,
    RankTooSmall,
    TruncationBudgetExceeded,
    TypeMismatch,
    WeightMismatch,
)
from .quadlattice import Lattice, discriminant_group
from .thetaforms import (
    CoeffFn,
    VVQExpansion,
    eichler_integral,
    frac_str,
    g2_times,
    q_derivative,
    slash_residual,
    theta_qexp,
    unary_R,
)
from .weilrep import iota_graded_tensor, iota_isotropic, weil_rep

FOUR_PI = 4 * math.pi


@dataclass
class CuspContribution:
    label: str
    kind: str
    expansion: VVQExpansion
    provenance: dict = field(default_factory=dict)
    exact_table: dict = field(default_factory=dict)  # type II: (m, class) -> multiple of 1/(4πy)


def _weight(L: Lattice) -> Fraction:
    return Fraction(L.rank, 2)


def prefactor_ii(inv: Invariants) -> Fraction:
    """r1/degQ3, checked against the radical form sqrt(r1/disc31)."""
    c = Fraction(inv.r, inv.size)
    if c * c != Fraction(inv.r, inv.disc):
        raise InvariantInconsistency("r1/degQ3 differs from sqrt(r1/disc31)")
    return c


def z_minus_type_ii(D: DegenerationData, m_max, label: str = "") -> CuspContribution:
    if D.kind != TYPE_II:
        raise TypeMismatch("type II boundary term needs a type II degeneration")
    G = graded_data(D)
    inv = invariants(D, G)
    c = prefactor_ii(inv)
    gr2 = gr2_lattice(G)
    iota = iota_isotropic(D.lattice, D.W[1], D.W[2])
    theta = theta_qexp(gr2, m_max)
    table: dict = {}
    small = VVQExpansion(theta.dim, _weight(D.lattice), {}, theta.m_max)
    for (m, mu), f in theta.coeffs.items():
        small.add_term(m, mu, CoeffFn(inv_y=float(c * f.const) / FOUR_PI))
    for (m, mu), f in theta.coeffs.items():
        for row in np.nonzero(iota.matrix[:, mu])[0]:
            key = (m, int(row))
            table[key] = table.get(key, Fraction(0)) + c * f.const
    expansion = small.embed(iota.matrix)
    prov = {
        "r1": inv.r,
        "disc31": inv.disc,
        "degQ3": inv.size,
        "prefactor": frac_str(c),
        "gr2_rank": gr2.rank,
        "iota_support": iota.support,
    }
    return CuspContribution(label, TYPE_II, expansion, prov, table)


def _class_map(src: Lattice, dst: Lattice) -> dict[int, int]:
    """Match classes of two discriminant groups with identical representatives."""
    A, B = discriminant_group(src), discriminant_group(dst)
    return {i: B.index_of(x) for i, x in enumerate(A.reps)}


def w_tail_bound(vol: int, w_max, y: float) -> float:
    """Bound on the omitted terms Q4(w)/2 > w_max of the unary series, per unit of Θ_prim."""
    t0 = math.sqrt(2 * float(w_max) / vol)
    a = math.pi * y * vol
    if a * t0 * 2 <= 0:
        return math.inf
    # sum over t in ν+Z, |t| > t0 of 2 e^{-π y Q4} / (4π √y)
    geo = 2 * math.exp(-a * t0 * t0) / (1 - math.exp(-2 * a * t0)) if t0 > 0 else math.inf
    return geo * 2 / (FOUR_PI * math.sqrt(y))


def z_minus_type_iii(
    D: DegenerationData,
    m_max,
    w_max=12,
    label: str = "",
    tol: float = 1e-12,
    y_min: float = 0.5,
) -> CuspContribution:
    if D.kind != TYPE_III:
        raise TypeMismatch("type III boundary term needs a type III degeneration")
    G = graded_data(D)
    inv = invariants(D, G)
    gt = iota_graded_tensor(D, G)
    tail = w_tail_bound(inv.size, w_max, y_min)
    if tail > tol:
        raise TruncationBudgetExceeded(f"unary tail bound {tail:.2e} exceeds {tol:.2e} at y >= {y_min}")
    theta_p = theta_qexp(gt.prim, m_max)
    gr4 = gr4_lattice(G)
    R = unary_R(gr4, w_max)
    to_neg = _class_map(gr4, gt.gr4_neg)
    nF = discriminant_group(gt.gr4_neg).size
    factor = math.sqrt(inv.r / (2 * inv.disc))
    tensor = VVQExpansion(gt.matrix.shape[1], _weight(D.lattice), {}, Fraction(m_max))
    for (m1, lam), a in theta_p.coeffs.items():
        for (m2, nu), r in R.coeffs.items():
            col = lam * nF + to_neg[nu]
            if not gt.matrix[:, col].any():
                continue
            tensor.add_term(m1 + m2, col, r.scale(factor * float(a.const)))
    expansion = tensor.embed(gt.matrix)
    prov = {
        "r2": inv.r,
        "disc40": inv.disc,
        "Vol4": inv.size,
        "prefactor_squared": frac_str(Fraction(inv.r, 2 * inv.disc)),
        "prim_rank": gt.prim.rank,
        "w_max": frac_str(w_max),
        "w_tail_bound": tail,
    }
    return CuspContribution(label, TYPE_III, expansion, prov)


def z_minus_integral_form_iii(D: DegenerationData, tau: complex, m_max, w_max=12, tol: float = 1e-10) -> np.ndarray:
    """The same boundary term via the Eichler integral of Θ_{Gr4} (quadrature)."""
    if D.kind != TYPE_III:
        raise TypeMismatch("type III boundary term needs a type III degeneration")
    G = graded_data(D)
    inv = invariants(D, G)
    gt = iota_graded_tensor(D, G)
    gr4 = gr4_lattice(G)
    theta4 = theta_qexp(gr4, w_max)
    E = eichler_integral(theta4, tau, tol)
    to_neg = _class_map(gr4, gt.gr4_neg)
    E_neg = np.zeros(len(E), dtype=complex)
    for i, k in to_neg.items():
        E_neg[k] = E[i]
    theta_p = theta_qexp(gt.prim, m_max).evaluate(tau)
    vec = np.kron(theta_p, E_neg)
    return (inv.r / math.sqrt(inv.size)) * (gt.matrix @ vec)


def holomorphic_replacement_ii(D: DegenerationData, variant: str, m_max) -> VVQExpansion:
    """Holomorphic stand-ins for a type II boundary term, in the same weight."""
    if D.kind != TYPE_II:
        raise TypeMismatch("replacement needs a type II degeneration")
    G = graded_data(D)
    c = prefactor_ii(invariants(D, G))
    iota = iota_isotropic(D.lattice, D.W[1], D.W[2])
    theta = theta_qexp(gr2_lattice(G), m_max)
    rk = D.lattice.rank
    if variant == "g2":
        small = g2_times(theta).scale(-2 * c)
    elif variant == "qddq":
        if rk <= 4:
            raise RankTooSmall("q d/dq variant needs rank > 4")
        small = q_derivative(theta).scale(c * Fraction(2, rk - 4))
    else:
        raise ValueError(f"unknown variant {variant!r}")
    small.weight = _weight(D.lattice)
    return small.embed(iota.matrix)


# ------------------------------------------------------------ assembly


@dataclass
class GeneratingSeriesInput:
    dim: int
    coeffs: dict  # (Fraction m, class) -> Fraction

    def expansion(self, weight: Fraction, m_max=None) -> VVQExpansion:
        out = VVQExpansion(self.dim, weight, {}, None if m_max is None else Fraction(m_max))
        for (m, c), v in self.coeffs.items():
            if not 0 <= c < self.dim:
                raise ClassIndexMismatch(f"class index {c} out of range")
            out.add_term(m, c, CoeffFn(const=Fraction(v)))
        return out


@dataclass
class Assembled:
    lattice: Lattice
    parts: list  # (name, VVQExpansion)

    @property
    def weight(self) -> Fraction:
        return _weight(self.lattice)

    def evaluate(self, tau: complex) -> np.ndarray:
        out = np.zeros(self.parts[0][1].dim, dtype=complex)
        for _, p in self.parts:
            out += p.evaluate(tau)
        return out

    __call__ = evaluate

    def residuals(self, taus: Sequence[complex], words=("S", "T")) -> dict[str, float]:
        W = weil_rep(self.lattice)
        return {w: slash_residual(self.evaluate, self.weight, W, w, taus) for w in words}

    def exponent_violations(self) -> list:
        A = discriminant_group(self.lattice)
        bad = []
        for name, p in self.parts:
            bad += [(name, frac_str(m), c) for m, c in p.check_exponents(A.qvalues)]
        return bad


def assemble(zplus: VVQExpansion | None, cusps: Sequence[CuspContribution], L: Lattice) -> Assembled:
    dim = discriminant_group(L).size
    w = _weight(L)
    parts = []
    if zplus is not None:
        parts.append(("Z+", zplus))
    for c in cusps:
        parts.append((c.label or c.kind, c.expansion))
    if not parts:
        parts.append(("zero", VVQExpansion(dim, w, {})))
    for name, p in parts:
        if p.dim != dim:
            raise ClassIndexMismatch(f"{name}: dimension {p.dim} differs from |A| = {dim}")
        if p.weight != w:
            raise WeightMismatch(f"{name}: weight {p.weight} differs from rk/2 = {w}")
    out = Assembled(L, parts)
    bad = out.exponent_violations()
    if bad:
        raise ClassIndexMismatch(f"exponents inconsistent with the discriminant form: {bad[:3]}")
    return out
