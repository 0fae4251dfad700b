"""Vector-valued q-expansions and the special functions they are built from.

Coefficients are ``CoeffFn`` values: finite sums of a constant, a multiple
of 1/y, and terms c·y^{-1/2}·β(κy) with β(t) = ∫_1^∞ u^{-3/2} e^{-tu} du.
The rate κ is stored exactly as the rational κ/2π.

Branch convention for the weight factor under S: φ(τ) = √τ, principal
branch, so arg φ(τ) ∈ (0, π/2) for τ in the upper half plane.
"""

from __future__ import annotations

import cmath
import math
from collections import defaultdict
from collections.abc import Callable, Iterator
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate, special

from . import exact
from .errors import (
    NegativeArgument,
    NotHolomorphicInput,
    NotPositiveDefinite,
    PathTruncationFailure,
    WrongRank,
)
from .quadlattice import Lattice, discriminant_group, is_positive_definite
from .weilrep import WeilRep, rho_generator

TWO_PI = 2 * math.pi


# ------------------------------------------------------------ special functions


def beta32(t: float) -> float:
    """β(t) = ∫_1^∞ u^{-3/2} e^{-tu} du = 2e^{-t} - 2√(πt) erfc(√t)."""
    if t < 0:
        raise NegativeArgument("beta32 needs t >= 0")
    if t == 0:
        return 2.0
    return math.exp(-t) * beta32_scaled(t)


def beta32_scaled(t: float) -> float:
    """e^t β(t), computed without overflow or cancellation in e^t."""
    if t < 0:
        raise NegativeArgument("beta32 needs t >= 0")
    if t == 0:
        return 2.0
    if t > 1e6:
        # asymptotic series of e^t β(t) = 1/t - 3/(2t^2) + ...
        return 1 / t - 1.5 / t**2 + 3.75 / t**3
    return 2.0 - 2.0 * math.sqrt(math.pi * t) * float(special.erfcx(math.sqrt(t)))


def beta32_quadrature(t: float) -> float:
    """The defining integral by adaptive quadrature (reference values only)."""
    val, _ = integrate.quad(lambda u: u**-1.5 * math.exp(-t * u), 1, np.inf, epsabs=1e-14, epsrel=1e-13, limit=500)
    return val


def sigma1(n: int) -> int:
    total = 0
    d = 1
    while d * d <= n:
        if n % d == 0:
            total += d
            if d * d != n:
                total += n // d
        d += 1
    return total


def g2_qexp(n_max: int) -> list[Fraction]:
    """Coefficients of G2(q) = -1/24 + Σ σ1(n) q^n up to q^{n_max}."""
    return [Fraction(-1, 24)] + [Fraction(sigma1(n)) for n in range(1, n_max + 1)]


def g2_eval(tau: complex, n_max: int = 200) -> complex:
    q = cmath.exp(2j * math.pi * tau)
    total = -1 / 24
    qn = 1
    for n in range(1, n_max + 1):
        qn *= q
        total += sigma1(n) * qn
    return total


def g2_star(tau: complex, n_max: int = 200) -> complex:
    return g2_eval(tau, n_max) + 1 / (8 * math.pi * tau.imag)


# ------------------------------------------------------------ coefficient algebra


@dataclass(frozen=True)
class CoeffFn:
    const: complex = 0
    inv_y: complex = 0
    beta: tuple[tuple[complex, Fraction], ...] = ()  # (c, κ/2π), sorted by κ

    @staticmethod
    def make(const=0, inv_y=0, beta=()) -> "CoeffFn":
        acc: dict[Fraction, complex] = defaultdict(complex)
        for c, k in beta:
            acc[Fraction(k)] += c
        return CoeffFn(const, inv_y, tuple((acc[k], k) for k in sorted(acc) if acc[k] != 0))

    def __add__(self, other: "CoeffFn") -> "CoeffFn":
        return CoeffFn.make(self.const + other.const, self.inv_y + other.inv_y, self.beta + other.beta)

    def scale(self, s) -> "CoeffFn":
        return CoeffFn.make(self.const * s, self.inv_y * s, tuple((c * s, k) for c, k in self.beta))

    def times_const(self, other: "CoeffFn") -> "CoeffFn":
        if not other.is_holomorphic:
            raise NotHolomorphicInput("can only multiply by a constant coefficient")
        return self.scale(other.const)

    @property
    def is_holomorphic(self) -> bool:
        return self.inv_y == 0 and not self.beta

    @property
    def is_zero(self) -> bool:
        return self.const == 0 and self.inv_y == 0 and not self.beta

    def evaluate(self, y: float) -> complex:
        val = complex(self.const) + self.inv_y / y
        for c, k in self.beta:
            val += c * y**-0.5 * beta32(TWO_PI * float(k) * y)
        return val

    def term(self, m: Fraction, tau: complex) -> complex:
        """coefficient(y) · e^{2πimτ}, with exponentials combined for stability."""
        x, y = tau.real, tau.imag
        phase = cmath.exp(2j * math.pi * float(m) * x)
        decay = -TWO_PI * float(m) * y
        out = 0j
        if self.const or self.inv_y:
            out += (complex(self.const) + self.inv_y / y) * math.exp(decay)
        for c, k in self.beta:
            t = TWO_PI * float(k) * y
            out += c * y**-0.5 * beta32_scaled(t) * math.exp(decay - t)
        return out * phase


Key = tuple[Fraction, int]


@dataclass
class VVQExpansion:
    dim: int
    weight: Fraction
    coeffs: dict[Key, CoeffFn] = field(default_factory=dict)
    m_max: Fraction | None = None

    def add_term(self, m, cls: int, c: CoeffFn) -> None:
        key = (Fraction(m), cls)
        prev = self.coeffs.get(key)
        new = c if prev is None else prev + c
        if new.is_zero:
            self.coeffs.pop(key, None)
        else:
            self.coeffs[key] = new

    def items(self) -> list[tuple[Key, CoeffFn]]:
        return sorted(self.coeffs.items(), key=lambda kv: (kv[0][1], kv[0][0]))

    def __add__(self, other: "VVQExpansion") -> "VVQExpansion":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        out = VVQExpansion(self.dim, self.weight, dict(self.coeffs), _min_bound(self.m_max, other.m_max))
        for (m, c), f in other.coeffs.items():
            out.add_term(m, c, f)
        return out

    def scale(self, s) -> "VVQExpansion":
        out = VVQExpansion(self.dim, self.weight, {}, self.m_max)
        for (m, c), f in self.coeffs.items():
            out.add_term(m, c, f.scale(s))
        return out

    def map_coeffs(self, fn: Callable[[CoeffFn], CoeffFn]) -> "VVQExpansion":
        out = VVQExpansion(self.dim, self.weight, {}, self.m_max)
        for (m, c), f in self.coeffs.items():
            out.add_term(m, c, fn(f))
        return out

    def embed(self, matrix: np.ndarray) -> "VVQExpansion":
        """Push forward along a linear map given by an integer matrix (rows: target)."""
        target = matrix.shape[0]
        out = VVQExpansion(target, self.weight, {}, self.m_max)
        for (m, c), f in self.coeffs.items():
            for row in np.nonzero(matrix[:, c])[0]:
                out.add_term(m, int(row), f.scale(int(matrix[row, c])))
        return out

    @property
    def is_holomorphic(self) -> bool:
        return all(f.is_holomorphic for f in self.coeffs.values())

    def coefficient(self, m, cls: int) -> CoeffFn:
        return self.coeffs.get((Fraction(m), cls), CoeffFn())

    def evaluate(self, tau: complex) -> np.ndarray:
        out = np.zeros(self.dim, dtype=complex)
        for (m, c), f in self.coeffs.items():
            out[c] += f.term(m, tau)
        return out

    def __call__(self, tau: complex) -> np.ndarray:
        return self.evaluate(tau)

    def check_exponents(self, qvalues) -> list[Key]:
        """Keys whose exponent is not in qvalue/2 + Z."""
        return [(m, c) for (m, c) in self.coeffs if (m - Fraction(qvalues[c]) / 2).denominator != 1]

    def to_report(self) -> dict:
        per_class: dict[str, list] = {}
        for (m, c), f in self.items():
            per_class.setdefault(str(c), []).append(
                {
                    "m": frac_str(m),
                    "const": _cnum(f.const),
                    "invY": _cnum(f.inv_y),
                    "beta": [{"c": _cnum(cc), "kappa_over_2pi": frac_str(k)} for cc, k in f.beta],
                }
            )
        return {
            "dim": self.dim,
            "weight": frac_str(self.weight),
            "m_max": None if self.m_max is None else frac_str(self.m_max),
            "classes": per_class,
        }


def _min_bound(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def frac_str(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _cnum(z, digits: int = 15):
    z = complex(z)
    if z.imag == 0:
        return float(f"{z.real:.{digits}g}")
    return [float(f"{z.real:.{digits}g}"), float(f"{z.imag:.{digits}g}")]


# ------------------------------------------------------------ enumeration


def short_vectors(gram, shift, bound) -> Iterator[tuple[tuple[int, ...], Fraction]]:
    """All n ∈ Z^r with Q(shift + n) <= bound, yielded with the exact value.

    Exact Fincke–Pohst recursion on a rational positive definite Gram; floats
    only seed the integer search interval, which is then corrected exactly.
    """
    r = len(gram)
    bound = Fraction(bound)
    if r == 0:
        if bound >= 0:
            yield (), Fraction(0)
        return
    q = [[Fraction(x) for x in row] for row in gram]
    for i in range(r):
        if q[i][i] <= 0:
            raise NotPositiveDefinite("gram is not positive definite")
        for j in range(i + 1, r):
            q[j][i] = q[i][j]
            q[i][j] = q[i][j] / q[i][i]
        for k in range(i + 1, r):
            for l in range(k, r):
                q[k][l] -= q[k][i] * q[i][l]
    x = [Fraction(s) for s in shift]
    v = [Fraction(0)] * r
    n = [0] * r

    def rec(i: int, remaining: Fraction):
        center = -sum(q[i][j] * v[j] for j in range(i + 1, r))
        s = center - x[i]
        rad2 = remaining / q[i][i]
        rad = math.sqrt(float(rad2))
        lo = math.floor(float(s) - rad) - 1
        hi = math.ceil(float(s) + rad) + 1
        while (lo - s) ** 2 > rad2 and lo <= hi:
            lo += 1
        while (hi - s) ** 2 > rad2 and hi >= lo:
            hi -= 1
        for k in range(lo, hi + 1):
            v[i] = x[i] + k
            n[i] = k
            used = q[i][i] * (v[i] - center) ** 2
            if used > remaining:
                continue
            if i == 0:
                yield tuple(n), bound - remaining + used
            else:
                yield from rec(i - 1, remaining - used)

    yield from rec(r - 1, bound)


def _require_posdef(L: Lattice) -> None:
    if L.rank and not is_positive_definite(L.gram):
        raise NotPositiveDefinite(f"lattice {L.label or L.gram} is not positive definite")


def rep_numbers(L: Lattice, mu, m_max) -> dict[Fraction, int]:
    """#{v ∈ μ + L : Q(v, v) = 2m} for m <= m_max."""
    _require_posdef(L)
    counts: dict[Fraction, int] = defaultdict(int)
    for _, val in short_vectors(L.gram, mu, 2 * Fraction(m_max)):
        counts[val / 2] += 1
    return dict(sorted(counts.items()))


def theta_qexp(L: Lattice, m_max) -> VVQExpansion:
    _require_posdef(L)
    A = discriminant_group(L)
    out = VVQExpansion(A.size, Fraction(L.rank, 2), {}, Fraction(m_max))
    for i, mu in enumerate(A.reps):
        for m, cnt in rep_numbers(L, mu, m_max).items():
            out.add_term(m, i, CoeffFn(const=cnt))
    return out


def unary_R(L4: Lattice, m_max, nu: int | None = None) -> VVQExpansion:
    """The non-holomorphic unary series, classes ν of L4∨/L4 (all, or one).

    Exponent -Q4(v,v)/2 carries BetaHalf(1/4π, 2π Q4(v,v)); terms with
    Q4(v,v)/2 <= m_max are kept.
    """
    if L4.rank != 1:
        raise WrongRank("unary series needs a rank-one lattice")
    _require_posdef(L4)
    A = discriminant_group(L4)
    out = VVQExpansion(A.size, Fraction(1, 2), {}, None)
    c = 1 / (4 * math.pi)
    classes = range(A.size) if nu is None else [nu]
    for i in classes:
        for _, val in short_vectors(L4.gram, A.reps[i], 2 * Fraction(m_max)):
            out.add_term(-val / 2, i, CoeffFn.make(beta=((c, val),)))
    return out


# ------------------------------------------------------------ raising operator


def quasi_raise(f: VVQExpansion, k) -> VVQExpansion:
    """f ↦ q df/dq + 2k G2 f, truncated at f.m_max."""
    if not f.is_holomorphic:
        raise NotHolomorphicInput("quasi_raise needs a holomorphic expansion")
    k = Fraction(k)
    out = VVQExpansion(f.dim, f.weight + 2 if f.weight is not None else k + 2, {}, f.m_max)
    if not f.coeffs:
        return out
    top = f.m_max if f.m_max is not None else max(m for m, _ in f.coeffs)
    lowest = min(m for m, _ in f.coeffs)
    g2 = g2_qexp(max(0, math.floor(top - lowest)))
    for (m, c), a in f.coeffs.items():
        if m != 0:
            out.add_term(m, c, CoeffFn(const=m * a.const))
        for j, g in enumerate(g2):
            if m + j > top:
                break
            out.add_term(m + j, c, CoeffFn(const=2 * k * g * a.const))
    return out


def g2_times(f: VVQExpansion) -> VVQExpansion:
    """G2 · f for holomorphic f, truncated at f.m_max; weight +2."""
    if not f.is_holomorphic:
        raise NotHolomorphicInput("G2 product needs a holomorphic expansion")
    out = VVQExpansion(f.dim, f.weight + 2, {}, f.m_max)
    if not f.coeffs:
        return out
    top = f.m_max if f.m_max is not None else max(m for m, _ in f.coeffs)
    lowest = min(m for m, _ in f.coeffs)
    g2 = g2_qexp(max(0, math.floor(top - lowest)))
    for (m, c), a in f.coeffs.items():
        for j, g in enumerate(g2):
            if m + j > top:
                break
            out.add_term(m + j, c, CoeffFn(const=g * a.const))
    return out


def q_derivative(f: VVQExpansion) -> VVQExpansion:
    if not f.is_holomorphic:
        raise NotHolomorphicInput("q d/dq needs a holomorphic expansion")
    out = VVQExpansion(f.dim, f.weight + 2, {}, f.m_max)
    for (m, c), a in f.coeffs.items():
        if m != 0:
            out.add_term(m, c, CoeffFn(const=m * a.const))
    return out


# ------------------------------------------------------------ Eichler integral


def eichler_integral(theta4: VVQExpansion, tau: complex, tol: float = 1e-10) -> np.ndarray:
    """(1/4πi) ∫_{-τ̄}^{i∞} Θ(z) ((z+τ)/i)^{-3/2} dz, per class, by quadrature.

    On the vertical path z = -x + i(y+s) the factor ((z+τ)/i) is 2y + s.
    The substitution 2y + s = 2y/r² maps s ∈ [0, ∞) onto r ∈ (0, 1], where
    the integrand is smooth, so no truncation of the path is needed.
    """
    if not theta4.is_holomorphic:
        raise NotHolomorphicInput("eichler_integral needs a holomorphic theta series")
    x, y = tau.real, tau.imag
    items = list(theta4.coeffs.items())
    ms = np.array([float(m) for (m, _), _ in items])
    cls = np.array([c for (_, c), _ in items], dtype=int)
    amps = np.array([complex(f.const) for _, f in items])
    dim = theta4.dim

    def integrand(r: float) -> np.ndarray:
        if r == 0:
            zpart = np.where(ms == 0, 1.0, 0.0)
        else:
            s = 2 * y * (1 / r**2 - 1)
            zpart = np.exp(2j * math.pi * ms * complex(-x, y + s))
        # dz = i ds and (2y+s)^{-3/2} ds = 2 (2y)^{-1/2} dr
        vals = amps * zpart * (2 / math.sqrt(2 * y)) * 1j
        out = np.zeros(dim, dtype=complex)
        np.add.at(out, cls, vals)
        return np.concatenate([out.real, out.imag])

    val, err = integrate.quad_vec(integrand, 0.0, 1.0, epsabs=tol * 1e-2, epsrel=1e-12, limit=2000)
    if err > tol:
        raise PathTruncationFailure(f"quadrature error {err:.2e} above tolerance {tol:.2e}")
    total = val[:dim] + 1j * val[dim:]
    return total / (4j * math.pi)


# ------------------------------------------------------------ slash residual


def _act(g: str, tau: complex) -> tuple[complex, complex]:
    """(g·τ, φ_g(τ)) for a generator."""
    if g == "S":
        return -1 / tau, cmath.sqrt(tau)
    if g == "T":
        return tau + 1, 1
    if g == "t":
        return tau - 1, 1
    raise ValueError(f"unknown generator {g!r}")


def slash_residual(
    f: Callable[[complex], np.ndarray],
    k,
    W: WeilRep,
    word: str,
    taus,
) -> float:
    """max over τ of |f(γτ) - φ(τ)^{2k} ρ(γ) f(τ)| for γ the given word."""
    two_k = Fraction(k) * 2
    if two_k.denominator != 1:
        raise ValueError("weight must be a half-integer")
    two_k = int(two_k)
    worst = 0.0
    for tau in taus:
        cur = complex(tau)
        factor = 1 + 0j
        M = np.eye(W.dim, dtype=complex)
        for g in reversed(word):
            new, phi = _act(g, cur)
            factor *= phi**two_k
            M = rho_generator(W, g) @ M
            cur = new
        resid = f(cur) - factor * (M @ f(complex(tau)))
        worst = max(worst, float(np.abs(resid).max()))
    return worst
