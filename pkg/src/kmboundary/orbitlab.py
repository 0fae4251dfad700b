"""Closed-form R-split nilpotent-orbit models for type II and type III cusps.

A model is built from user-supplied splitting data:

* type II: a Gaussian-rational vector ``e21`` (given as real and imaginary
  parts). The remaining vectors are ``e10 = N e21`` and the complex conjugates.
* type III: a rational vector ``e22`` with ``Q(e22, e22) = 0`` and
  ``c = Q(e22, N^2 e22) > 0``. The model works with ``e22 / sqrt(c)`` but all
  functionals are kept rational by carrying ``c`` along.

On top of the models sit the Hodge norm, the truncated theta sums over W2 and
the residue fit that compares the logarithmic growth of the local Green
function with the boundary series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate, special

from . import exact
from .degeneration import TYPE_II, TYPE_III, DegenerationData
from .errors import CutoffTooSmall, FitUnstable, InvalidOrbitModel, NotInW2, TypeMismatch
from .quadlattice import Lattice, discriminant_group
from .thetaforms import short_vectors

TWO_PI = 2 * math.pi

# complex rational numbers are pairs (re, im) of Fractions
CQ = tuple[Fraction, Fraction]


def _cmul(a: CQ, b: CQ) -> CQ:
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _conj(a: CQ) -> CQ:
    return (a[0], -a[1])


def _abs2(a: CQ) -> Fraction:
    return a[0] * a[0] + a[1] * a[1]


@dataclass(frozen=True)
class OrbitModel:
    kind: str
    D: DegenerationData
    # type II: real/imag parts of e21 and e10; type III: e22, N e22, N^2 e22
    basis: tuple
    c: Fraction = Fraction(1)  # Q(e22, N^2 e22) for type III

    @property
    def lattice(self) -> Lattice:
        return self.D.lattice

    @property
    def chern_weight(self) -> int:
        return 1 if self.kind == TYPE_II else 2


def _q(L: Lattice, u, v) -> Fraction:
    return Fraction(L.q(u, v))


def _qc(L: Lattice, u: tuple, v: tuple) -> CQ:
    """Complex-bilinear Q on vectors given as (real part, imaginary part)."""
    (ur, ui), (vr, vi) = u, v
    return (_q(L, ur, vr) - _q(L, ui, vi), _q(L, ur, vi) + _q(L, ui, vr))


def _frac_vec(v) -> tuple:
    return tuple(Fraction(x) for x in v)


def type_ii_model(D: DegenerationData, e21) -> OrbitModel:
    if D.kind != TYPE_II:
        raise TypeMismatch("type II model needs a type II degeneration")
    L = D.lattice
    re, im = _frac_vec(e21[0]), _frac_vec(e21[1])
    if len(re) != L.rank or len(im) != L.rank:
        raise InvalidOrbitModel("e21 has the wrong length")
    e21c = (re, im)
    e12c = (re, tuple(-x for x in im))
    e10c = (_frac_vec(D.apply_N(re)), _frac_vec(D.apply_N(im)))
    e01c = (e10c[0], tuple(-x for x in e10c[1]))
    vecs = (e21c, e12c, e10c, e01c)
    block = [[_qc(L, u, v) for v in vecs] for u in vecs]
    z, pi, mi = (Fraction(0), Fraction(0)), (Fraction(0), Fraction(1)), (Fraction(0), Fraction(-1))
    expected = [[z, z, z, mi], [z, z, pi, z], [z, pi, z, z], [mi, z, z, z]]
    if block != expected:
        raise InvalidOrbitModel(f"Q on (e21, e12, e10, e01) is {block}, not the normalized block")
    return OrbitModel(TYPE_II, D, (e21c, e10c))


def type_iii_model(D: DegenerationData, e22) -> OrbitModel:
    if D.kind != TYPE_III:
        raise TypeMismatch("type III model needs a type III degeneration")
    L = D.lattice
    e = _frac_vec(e22)
    if len(e) != L.rank:
        raise InvalidOrbitModel("e22 has the wrong length")
    ne = _frac_vec(D.apply_N(e))
    nne = _frac_vec(D.apply_N(e, 2))
    if _q(L, e, e) != 0:
        raise InvalidOrbitModel("Q(e22, e22) must vanish")
    c = _q(L, e, nne)
    if c <= 0:
        raise InvalidOrbitModel("Q(e22, N^2 e22) must be positive")
    model = OrbitModel(TYPE_III, D, (e, ne, nne), c)
    gram = _u_block_gram(model)
    if gram and not all(d > 0 for d in _pivots(gram)):
        raise InvalidOrbitModel("orthogonal complement of the e22 block is not positive definite")
    return model


def orbit_model(D: DegenerationData, e21=None, e22=None) -> OrbitModel:
    if D.kind == TYPE_II:
        if e21 is None:
            raise InvalidOrbitModel("type II model needs e21")
        return type_ii_model(D, e21)
    if D.kind == TYPE_III:
        if e22 is None:
            raise InvalidOrbitModel("type III model needs e22")
        return type_iii_model(D, e22)
    raise TypeMismatch("orbit models exist only for type II and type III")


def _pivots(gram) -> list[Fraction]:
    """Leading principal minor ratios (LDL pivots) of a symmetric rational matrix."""
    q = [[Fraction(x) for x in row] for row in gram]
    n = len(q)
    piv = []
    for i in range(n):
        p = q[i][i]
        piv.append(p)
        if p == 0:
            break
        for j in range(i + 1, n):
            f = q[j][i] / p
            for k in range(i, n):
                q[j][k] -= f * q[i][k]
    return piv


def _u_block_gram(model: OrbitModel):
    L = model.lattice
    U = exact.rational_kernel([list(exact.matvec(L.gram, b)) for b in model.basis], L.rank)
    return [[_q(L, u, v) for v in U] for u in U]


# ------------------------------------------------------------ functionals


def _in_w2(D: DegenerationData, v) -> bool:
    W2 = D.W[2]
    return exact.rank(list(W2) + [list(v)]) == len(W2)


def a_ii(model: OrbitModel, v) -> CQ:
    """Coordinate of v along e10: a = -i Q(v, e12)."""
    (re, im), _ = model.basis
    L = model.lattice
    q = (_q(L, v, re), -_q(L, v, im))  # Q(v, e12)
    return _cmul((Fraction(0), Fraction(-1)), q)


def ab_iii(model: OrbitModel, v) -> tuple[Fraction, Fraction, Fraction]:
    """(sqrt(c)·a, sqrt(c)·b, c): a and b scaled to stay rational."""
    e, ne, _ = model.basis
    L = model.lattice
    return -_q(L, v, ne), _q(L, v, e), model.c


def _split_ii(model: OrbitModel, v):
    a = a_ii(model, v)
    _, (nr, ni) = model.basis
    # a e10 + conj(a) e01 = 2 Re(a e10)
    w1 = tuple(2 * (a[0] * x - a[1] * y) for x, y in zip(nr, ni))
    v2 = tuple(Fraction(x) - w for x, w in zip(v, w1))
    return a, v2


def _split_iii(model: OrbitModel, v):
    A, B, c = ab_iii(model, v)
    _, ne, nne = model.basis
    vU = tuple(Fraction(x) - A / c * p - B / c * r for x, p, r in zip(v, ne, nne))
    return A, B, vU


@dataclass(frozen=True)
class HodgeNorm:
    normsq: float
    h: float
    exact_parts: dict = field(default_factory=dict)


def hodge_norm(model: OrbitModel, v, z: complex) -> HodgeNorm:
    """Hodge norm of v ∈ W2 at z and h(s_v) = |Q(v, e_z)|^2 / ||e_z||^2 · 2."""
    if z.imag <= 0:
        raise ValueError("z must lie in the upper half plane")
    v = _frac_vec(v)
    if not _in_w2(model.D, v):
        raise NotInW2("vector is not in W2")
    L = model.lattice
    x, Y = z.real, z.imag
    if model.kind == TYPE_II:
        a, v2 = _split_ii(model, v)
        q22 = _q(L, v2, v2)
        h = float(_abs2(a)) / Y
        return HodgeNorm(float(q22) + 2 * h, h, {"Q(v2,v2)": q22, "|a|^2": _abs2(a), "a": a})
    A, B, vU = _split_iii(model, v)
    c = model.c
    quu = _q(L, vU, vU)
    a2 = A * A / c
    # (b - a x)^2 with a = A/sqrt(c), b = B/sqrt(c)
    shifted = float(B * B / c) - 2 * x * float(A * B / c) + x * x * float(a2)
    h = float(a2) + shifted / (Y * Y)
    return HodgeNorm(float(quu) + float(a2) + 2 * shifted / (Y * Y), h, {"Q(vU,vU)": quu, "a^2": a2, "b^2": B * B / c})


def e20_norm(model: OrbitModel, z: complex) -> float:
    """-Q(e_z, conj e_z) for the holomorphic section e_z of the Hodge line."""
    L = model.lattice
    G = np.array([[float(x) for x in row] for row in L.gram])
    if model.kind == TYPE_II:
        (r, i), (nr, ni) = model.basis
        e21 = np.array([float(t) for t in r]) + 1j * np.array([float(t) for t in i])
        e10 = np.array([float(t) for t in nr]) + 1j * np.array([float(t) for t in ni])
        ez = e21 + z * e10
        scale = 1.0
    else:
        e, ne, nne = (np.array([float(t) for t in b]) for b in model.basis)
        ez = e + z * ne + z * z / 2 * nne
        scale = float(model.c)
    return float((-(ez @ G @ ez.conj()) / scale).real)


def chern_form_scale(model: OrbitModel | str) -> complex:
    """Coefficient of dz∧dz̄/Im(z)^2 in the Chern form of the Hodge line."""
    kind = model if isinstance(model, str) else model.kind
    k = {TYPE_II: 1, TYPE_III: 2}[kind]
    return 1j * k / (8 * math.pi)


def chern_form_scale_numeric(model: OrbitModel, z: complex = 0.3 + 1.7j, step: float = 1e-3) -> complex:
    """Same constant from a finite-difference Laplacian of log ||e_z||^2."""
    f = lambda w: math.log(e20_norm(model, w))  # noqa: E731
    lap = (f(z + step) + f(z - step) + f(z + 1j * step) + f(z - 1j * step) - 4 * f(z)) / step**2
    # (1/2πi) ∂∂̄ = (1/2πi)(Δ/4) dz∧dz̄
    return lap / 4 / (2j * math.pi) * z.imag**2


# ------------------------------------------------------------ profiles


def km_profile(kind: str, x) -> float:
    if kind == TYPE_II:
        s = math.pi * abs(complex(x)) ** 2
        return math.exp(-s) * (s - 1)
    if kind == TYPE_III:
        b2 = float(x) ** 2
        return math.exp(-2 * math.pi * b2) * (4 * math.pi * b2 - 1)
    raise ValueError(f"unknown kind {kind!r}")


def profile_zeroth_coefficient(kind: str) -> float:
    """Integral of the profile over C (type II, polar) or R (type III)."""
    if kind == TYPE_II:
        val, _ = integrate.quad(lambda r: km_profile(TYPE_II, r) * r, 0, np.inf, epsabs=1e-13)
        return TWO_PI * val
    val, _ = integrate.quad(lambda b: km_profile(TYPE_III, b), -np.inf, np.inf, epsabs=1e-13)
    return val


# ------------------------------------------------------------ lattice sums over W2


def _dual_rows(L: Lattice, rows) -> list[tuple]:
    """Basis of span(rows) ∩ L∨."""
    M = exact.matmul(rows, L.gram)
    U, Dm, _ = exact.smith_normal_form(M)
    n = L.rank
    out = []
    for i in range(len(rows)):
        d = Dm[i][i]
        t = [Fraction(U[i][k], d) for k in range(len(rows))]
        out.append(tuple(sum(ti * w[j] for ti, w in zip(t, rows)) for j in range(n)))
    return out


def _combine(coeffs, basis) -> tuple:
    n = len(basis[0])
    return tuple(sum((Fraction(c) * b[j] for c, b in zip(coeffs, basis)), Fraction(0)) for j in range(n))


def _gram_on(form, basis) -> list[list[Fraction]]:
    return [[form(u, v) for v in basis] for u in basis]


@dataclass(frozen=True)
class W2Term:
    """One lattice vector of (μ + L) ∩ W2 with its exact data."""

    v: tuple
    Q: Fraction
    h: float


def _cutoff(y: float, tol: float) -> float:
    return (math.log(1 / tol) + 8) / (TWO_PI * y)


def _ii_terms(model: OrbitModel, mu: int, m: Fraction, z: complex, hmax: float):
    L = model.lattice
    A = discriminant_group(L)
    basis = _dual_rows(L, model.D.W[2])
    Yq = Fraction(z.imag).limit_denominator(10**6)

    def form(u, v):
        au, av = a_ii(model, u), a_ii(model, v)
        return _q(L, u, v) + 2 * (au[0] * av[0] + au[1] * av[1]) / Yq

    gram = _gram_on(form, basis)
    bound = 2 * m + 2 * Fraction(hmax * 1.01 * float(Yq) / z.imag).limit_denominator(10**6) + Fraction(1, 10**6)
    for coeffs, _ in short_vectors(gram, [0] * len(basis), bound):
        v = _combine(coeffs, basis)
        if _q(L, v, v) != 2 * m or A.index_of(v) != mu:
            continue
        yield W2Term(v, 2 * m, float(_abs2(a_ii(model, v))) / z.imag)


def _iii_pieces(model: OrbitModel, mu: int, m: Fraction, amax: float):
    """Yield (p, a, b, b0, k0, order) for the part of W2 ∩ L∨ transverse to W0.

    Every v = p + k w0 in the class μ has k ≡ k0 mod order.
    """
    L = model.lattice
    A = discriminant_group(L)
    W2d = _dual_rows(L, model.D.W[2])
    W0d = _dual_rows(L, model.D.W[0])
    w0 = W0d[0]
    # complement of the W0 line inside W2 ∩ L∨, in ambient coordinates
    comp = exact.complete_basis([w0], W2d)
    cls_w0 = A.index_of(w0)
    order, k = 1, cls_w0
    while k != 0:
        k = A.add(k, cls_w0)
        order += 1
    multiples = {}
    k = 0
    for j in range(order):
        multiples.setdefault(k, j)
        k = A.add(k, cls_w0)
    c = model.c

    def form(u, v):
        return _q(L, u, v) + 2 * ab_iii(model, u)[0] * ab_iii(model, v)[0] / c

    gram = _gram_on(form, comp)
    _, B0, _ = ab_iii(model, w0)
    bound = 2 * m + 2 * Fraction(amax * 1.01).limit_denominator(10**6) + Fraction(1, 10**6)
    for coeffs, _ in short_vectors(gram, [0] * len(comp), bound):
        p = _combine(coeffs, comp)
        if _q(L, p, p) != 2 * m:
            continue
        need = A.add(mu, A.negate(A.index_of(p)))
        if need not in multiples:
            continue
        Ap, Bp, _ = ab_iii(model, p)
        yield p, Ap, Bp, B0, multiples[need], order, w0


def _line_sum_direct(Acoef: float, s: float, tol: float) -> float:
    """Σ_j exp(-π A (j + s)^2)."""
    R = math.sqrt(math.log(1 / tol) / (math.pi * Acoef)) + 2
    j = np.arange(math.floor(-s - R), math.ceil(-s + R) + 1)
    return float(np.exp(-math.pi * Acoef * (j + s) ** 2).sum())


def _line_sum_poisson(Acoef: float, s: float, tol: float) -> float:
    """Same sum after Poisson summation."""
    K = math.ceil(math.sqrt(math.log(1 / tol) * Acoef / math.pi)) + 2
    k = np.arange(1, K + 1)
    return float((1 + 2 * (np.exp(-math.pi * k**2 / Acoef) * np.cos(TWO_PI * k * s)).sum()) / math.sqrt(Acoef))


def _z_from_t(t: complex) -> complex:
    if not 0 < abs(t) < 1:
        raise ValueError("t must lie in the punctured unit disk")
    return complex(math.atan2(t.imag, t.real) / TWO_PI, -math.log(abs(t)) / TWO_PI)


def theta_prime_truncated(
    model: OrbitModel,
    y: float,
    t: complex,
    m=0,
    mu: int = 0,
    tol: float = 1e-12,
    hmax: float | None = None,
    line_sum: str = "direct",
) -> float:
    """Σ exp(-2π y h(s_v)) over v ∈ (μ + L) ∩ W2 with Q(v, v) = 2m.

    ``hmax`` caps h(s_v); the default makes the Gaussian tail smaller than
    ``tol``. ``line_sum`` selects the direct or Poisson-dual evaluation of the
    W0 line sums (type III only).
    """
    z = _z_from_t(complex(t))
    m = Fraction(m)
    default = _cutoff(y, tol)
    hmax = default if hmax is None else hmax
    if hmax < default:
        tail = math.exp(-TWO_PI * y * hmax) * (1 + hmax) ** 2
        if tail > tol:
            raise CutoffTooSmall(f"cutoff h <= {hmax} leaves a tail of about {tail:.1e}")
    if model.kind == TYPE_II:
        return float(sum(math.exp(-TWO_PI * y * term.h) for term in _ii_terms(model, mu, m, z, hmax)))
    x, Y = z.real, z.imag
    total = 0.0
    summer = _line_sum_direct if line_sum == "direct" else _line_sum_poisson
    c = float(model.c)
    for _, Ap, Bp, B0, k0, order, _ in _iii_pieces(model, mu, m, hmax):
        a2 = Ap * Ap / c
        beta = (float(Bp) - x * float(Ap)) / math.sqrt(c) + k0 * float(B0) / math.sqrt(c)
        step = order * float(B0) / math.sqrt(c)
        Acoef = 2 * y * step * step / (Y * Y)
        total += math.exp(-TWO_PI * y * float(a2)) * summer(Acoef, beta / step, tol)
    return total


def green_truncated(model: OrbitModel, y: float, Y: float, m=0, mu: int = 0, tol: float = 1e-12) -> float:
    """∫_1^∞ Σ_v exp(-2π u y h(s_v)) du/u at z = iY, omitting the Y-independent h = 0 terms."""
    m = Fraction(m)
    hmax = _cutoff(y, tol)
    z = complex(0, Y)
    if model.kind == TYPE_II:
        hs = np.array([term.h for term in _ii_terms(model, mu, m, z, hmax) if term.h > 0])
        return float(special.exp1(TWO_PI * y * hs).sum()) if hs.size else 0.0
    total = 0.0
    c = float(model.c)
    for _, Ap, Bp, B0, k0, order, _ in _iii_pieces(model, mu, m, hmax):
        a2 = float(Ap * Ap) / c
        if a2 > hmax:
            continue
        step = order * float(B0) / math.sqrt(c)
        beta = float(Bp) / math.sqrt(c) + k0 * float(B0) / math.sqrt(c)
        R = Y * math.sqrt(max(hmax - a2, 0.0)) / abs(step) + 2
        j = np.arange(math.floor(-beta / step - R), math.ceil(-beta / step + R) + 1)
        h = a2 + ((beta + j * step) / Y) ** 2
        h = h[h > 1e-300]
        total += float(special.exp1(TWO_PI * y * h).sum())
    return total


# ------------------------------------------------------------ determinants


def alpha_determinant_squared(model: OrbitModel) -> Fraction:
    """(2 Im(α1 conj α2))^2 for a basis λ_j = α_j e10 + conj(α_j) e01 of W1 ∩ L."""
    if model.kind != TYPE_II:
        raise TypeMismatch("the α-determinant is a type II quantity")
    l1, l2 = model.D.W[1]
    a1, a2 = a_ii(model, l1), a_ii(model, l2)
    im = _cmul(a1, _conj(a2))[1]
    return 4 * im * im


def w0_generator_b_squared(model: OrbitModel) -> Fraction:
    """b(v0)^2 for a generator v0 of W0 ∩ L."""
    if model.kind != TYPE_III:
        raise TypeMismatch("b(v0) is a type III quantity")
    _, B, c = ab_iii(model, model.D.W[0][0])
    return B * B / c


# ------------------------------------------------------------ residue fit

DEFAULT_YS = (8, 16, 32, 64)


@dataclass(frozen=True)
class ResidueFit:
    m: Fraction
    mu: int
    y: float
    Ys: tuple
    values: tuple
    slope: float
    log_coefficient: float
    predicted: float
    rel_error: float
    secant_slopes: tuple
    secant_errors: tuple
    fit_residual: float

    def to_report(self) -> dict:
        return {
            "m": str(self.m),
            "class": self.mu,
            "y": self.y,
            "Y": list(self.Ys),
            "slope": self.slope,
            "predicted": self.predicted,
            "rel_error": self.rel_error,
            "log_coefficient": self.log_coefficient,
            "secant_slopes": list(self.secant_slopes),
            "fit_residual": self.fit_residual,
        }


def predicted_slope(model: OrbitModel, y: float, m=0, mu: int = 0) -> float:
    """Z^-(y)_{m,μ} from the boundary series of the same cusp."""
    from .boundary import z_minus_type_ii, z_minus_type_iii

    m = Fraction(m)
    m_max = max(m, Fraction(0))
    if model.kind == TYPE_II:
        contrib = z_minus_type_ii(model.D, m_max)
    else:
        contrib = z_minus_type_iii(model.D, m_max, y_min=min(y, 0.5))
    return float(contrib.expansion.coefficient(m, mu).evaluate(y).real)


def residue_slope(
    model: OrbitModel,
    y: float = 1.0,
    m=0,
    mu: int = 0,
    Ys=DEFAULT_YS,
    tol: float = 1e-12,
    max_residual: float = 1e-3,
) -> ResidueFit:
    """Fit the Green integral against -log|t|^2 = 4πY along t = exp(-2πY).

    The model G(Y) = s·4πY + b·log Y + c absorbs the logarithmic correction
    coming from the vectors nearest the origin; ``fit_residual`` is the RMS
    misfit relative to max |G|.
    """
    m = Fraction(m)
    Ys = tuple(float(Y) for Y in Ys)
    G = np.array([green_truncated(model, y, Y, m, mu, tol) for Y in Ys])
    pred = predicted_slope(model, y, m, mu)
    X = np.column_stack([4 * math.pi * np.array(Ys), np.log(Ys), np.ones(len(Ys))])
    scale = max(float(np.abs(G).max()), 1e-300)
    if not G.any():
        slope, logc, resid = 0.0, 0.0, 0.0
    else:
        coef, *_ = np.linalg.lstsq(X, G, rcond=None)
        slope, logc = float(coef[0]), float(coef[1])
        resid = float(np.sqrt(np.mean((X @ coef - G) ** 2)) / scale) if len(Ys) > 3 else 0.0
    if resid > max_residual:
        raise FitUnstable(f"relative fit residual {resid:.2e} exceeds {max_residual:.1e}")
    secants = tuple(float((G[i + 1] - G[i]) / (4 * math.pi * (Ys[i + 1] - Ys[i]))) for i in range(len(Ys) - 1))

    def err(s):
        return abs(s - pred) / abs(pred) if pred != 0 else abs(s)

    return ResidueFit(m, mu, y, Ys, tuple(map(float, G)), slope, logc, pred, err(slope), secants, tuple(err(s) for s in secants), resid)
