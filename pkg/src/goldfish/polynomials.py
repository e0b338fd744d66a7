"""Monic polynomials bridging particle positions and coefficient variables,
plus exact integer/rational polynomial arithmetic.

Two coefficient conventions coexist for a monic degree-N polynomial:

* ``PLAIN``: ``sum_m c_m z^(N-m)`` with ``c_0 = 1``;
* ``TILDE``: ``sum_m i^m c_m z^(N-m)`` with ``c_0 = 1``.

The TILDE variant keeps the coefficient sequences of the isochronous
systems real at their equilibria; converting between the two multiplies
``c_m`` by ``i^(+-m)``.

Exact-arithmetic utilities (:class:`IntegerPolynomial`,
:func:`pencil_charpoly_exact`, :func:`integer_roots`) never round: they
run over :class:`fractions.Fraction` with arbitrary-precision integers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "CoefficientConvention",
    "IntegerPolynomial",
    "MonicPolynomial",
    "RootFindingError",
    "cluster_roots",
    "coeff_velocities",
    "exact_binomial",
    "find_roots",
    "from_roots",
    "integer_roots",
    "pencil_charpoly_exact",
]


class RootFindingError(RuntimeError):
    """Simultaneous root iteration failed to reach the residual target."""


class CoefficientConvention(enum.Enum):
    PLAIN = "plain"
    TILDE = "tilde"

    def strip(self, plain: np.ndarray) -> np.ndarray:
        """Convert plain coefficients to this convention."""
        if self is CoefficientConvention.PLAIN:
            return plain
        m = np.arange(len(plain))
        return plain * (-1j) ** m

    def unstrip(self, coeffs: np.ndarray) -> np.ndarray:
        """Convert coefficients in this convention back to plain."""
        if self is CoefficientConvention.PLAIN:
            return coeffs
        m = np.arange(len(coeffs))
        return coeffs * 1j ** m


PLAIN = CoefficientConvention.PLAIN
TILDE = CoefficientConvention.TILDE


@dataclass(frozen=True)
class MonicPolynomial:
    """Monic degree-N polynomial stored as coefficients ``c_0..c_N``.

    ``c_0`` is exactly 1; the meaning of ``c_m`` depends on ``convention``.
    """

    coeffs: np.ndarray
    convention: CoefficientConvention = PLAIN

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size < 1:
            raise ValueError("coefficients must form a non-empty vector")
        if c[0] != 1:
            raise ValueError("polynomial must be monic (c_0 == 1)")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def plain_coeffs(self) -> np.ndarray:
        return self.convention.unstrip(self.coeffs)

    def __call__(self, z: complex) -> complex:
        acc = 0.0 + 0.0j
        for c in self.plain_coeffs():
            acc = acc * z + c
        return acc


def from_roots(roots, conv: CoefficientConvention = PLAIN) -> MonicPolynomial:
    """Monic polynomial with the given zeros (Vieta expansion)."""
    r = np.asarray(roots, dtype=complex)
    if not np.all(np.isfinite(r.view(float))):
        raise ValueError("roots must be finite")
    plain = np.atleast_1d(np.poly(r)).astype(complex) if r.size else np.array([1.0 + 0j])
    return MonicPolynomial(conv.strip(plain), conv)


def find_roots(poly: MonicPolynomial, tol: float = 1e-12, max_iter: int = 500) -> np.ndarray:
    """All zeros via Aberth-Ehrlich simultaneous iteration.

    Initial guesses sit on a circle of radius ``1 + max|c_m|`` with an
    index-dependent phase offset to break symmetry.  Iteration stops once
    every residual satisfies ``|p(root)| <= tol * (1 + max|c_m|)``.
    Clusters of nearly coincident roots converge more slowly but are
    legitimate output; use :func:`cluster_roots` to group them.
    """
    n = poly.degree
    if n < 1:
        raise ValueError("degree must be at least 1")
    c = poly.plain_coeffs()
    cnorm = float(np.max(np.abs(c)))
    radius = 1.0 + cnorm
    ks = np.arange(n)
    z = radius * np.exp(2j * np.pi * (ks + 0.37) / n + 1j * 0.11 * ks)

    dcoef = c[:-1] * np.arange(n, 0, -1)

    def horner(coefs, x):
        acc = np.zeros_like(x)
        for a in coefs:
            acc = acc * x + a
        return acc

    target = tol * (1.0 + cnorm)
    for _ in range(max_iter):
        p = horner(c, z)
        if np.all(np.abs(p) <= target):
            return z
        dp = horner(dcoef, z)
        w = p / np.where(dp == 0, 1e-300, dp)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        s = np.sum(1.0 / diff, axis=1)
        z = z - w / (1.0 - w * s)
    p = horner(c, z)
    if np.all(np.abs(p) <= target * 10):
        # multiple roots stall at the attainable accuracy; accept slightly
        # looser residuals rather than failing on a legitimate cluster
        return z
    raise RootFindingError(
        f"root iteration did not converge within {max_iter} iterations "
        f"(max residual {float(np.max(np.abs(p))):.3e})"
    )


def cluster_roots(roots, tol: float = 1e-8):
    """Group roots closer than ``tol`` into (center, multiplicity) clusters."""
    remaining = list(np.asarray(roots, dtype=complex))
    clusters = []
    while remaining:
        seed = remaining.pop(0)
        members = [seed]
        changed = True
        while changed:
            changed = False
            for r in remaining[:]:
                if any(abs(r - m) <= tol for m in members):
                    members.append(r)
                    remaining.remove(r)
                    changed = True
        clusters.append((complex(np.mean(members)), len(members)))
    return clusters


def coeff_velocities(zeros, zero_velocities, conv: CoefficientConvention = PLAIN) -> np.ndarray:
    """Time derivatives of the monic coefficients from zero velocities.

    Differentiating the Vieta expansion gives
    ``psi_t(z) = -sum_n zdot_n prod_{m != n} (z - z_m)``; the returned
    vector holds the coefficients of ``z^(N-m)`` for ``m = 1..N``.
    """
    z = np.asarray(zeros, dtype=complex)
    v = np.asarray(zero_velocities, dtype=complex)
    if z.shape != v.shape or z.ndim != 1:
        raise ValueError("zeros and velocities must be equal-length vectors")
    n = z.size
    for i in range(n):
        for j in range(i + 1, n):
            if z[i] == z[j]:
                raise ValueError("exactly coincident zeros make deflation ambiguous")
    cdot = np.zeros(n, dtype=complex)
    for k in range(n):
        rest = np.delete(z, k)
        q = np.atleast_1d(np.poly(rest)).astype(complex)  # degree n-1, monic
        cdot -= v[k] * q
    return conv.strip(np.concatenate([[1.0 + 0j], cdot]))[1:]


# ---------------------------------------------------------------------------
# exact integer / rational polynomial arithmetic


def exact_binomial(x, k: int) -> Fraction:
    """Binomial coefficient as a falling-factorial product, exact for
    rational ``x``; zero for negative ``k``."""
    if k < 0:
        return Fraction(0)
    num = Fraction(1)
    x = Fraction(x)
    for j in range(k):
        num *= x - j
    return num / math.factorial(k)


@dataclass(frozen=True)
class IntegerPolynomial:
    """Exact polynomial with rational coefficients, ascending by power.

    Trailing zero coefficients are trimmed; the zero polynomial is ``(0,)``.
    """

    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        c = [Fraction(x) for x in self.coeffs]
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        if not c:
            c = [Fraction(0)]
        object.__setattr__(self, "coeffs", tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs == (Fraction(0),)

    @property
    def leading(self) -> Fraction:
        return self.coeffs[-1]

    def __call__(self, x) -> Fraction:
        acc = Fraction(0)
        x = Fraction(x)
        for a in reversed(self.coeffs):
            acc = acc * x + a
        return acc

    def __add__(self, other: "IntegerPolynomial") -> "IntegerPolynomial":
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        return IntegerPolynomial(
            tuple(
                (a[i] if i < len(a) else Fraction(0)) + (b[i] if i < len(b) else Fraction(0))
                for i in range(n)
            )
        )

    def __mul__(self, other):
        if isinstance(other, IntegerPolynomial):
            out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                if a == 0:
                    continue
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
            return IntegerPolynomial(tuple(out))
        return IntegerPolynomial(tuple(a * Fraction(other) for a in self.coeffs))

    __rmul__ = __mul__

    def deflate(self, root) -> "IntegerPolynomial":
        """Exact synthetic division by ``(x - root)``; root must divide."""
        r = Fraction(root)
        c = self.coeffs
        q = [Fraction(0)] * (len(c) - 1)
        carry = Fraction(0)
        for k in range(len(c) - 1, 0, -1):
            carry = c[k] + carry * r
            q[k - 1] = carry
        rem = c[0] + carry * r
        if rem != 0:
            raise ValueError(f"{root} is not a root (remainder {rem})")
        return IntegerPolynomial(tuple(q))

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        parts = []
        for k in range(self.degree, -1, -1):
            a = self.coeffs[k]
            if a == 0:
                continue
            mag = abs(a)
            coef = "" if (mag == 1 and k > 0) else str(mag)
            if k == 0:
                term = str(mag)
            elif k == 1:
                term = f"{coef}p" if coef else "p"
            else:
                term = f"{coef}p^{k}" if coef else f"p^{k}"
            sign = "-" if a < 0 else "+"
            parts.append((sign, term))
        sign0, term0 = parts[0]
        text = ("-" if sign0 == "-" else "") + term0
        for sign, term in parts[1:]:
            text += f" {sign} {term}"
        return text

    @staticmethod
    def one() -> "IntegerPolynomial":
        return IntegerPolynomial((Fraction(1),))

    @staticmethod
    def monomial(root) -> "IntegerPolynomial":
        """The linear factor ``(p - root)``."""
        return IntegerPolynomial((-Fraction(root), Fraction(1)))

    @staticmethod
    def from_integer_roots(roots) -> "IntegerPolynomial":
        acc = IntegerPolynomial.one()
        for r in roots:
            acc = acc * IntegerPolynomial.monomial(r)
        return acc


def _bareiss_det(rows) -> Fraction:
    """Exact determinant by fraction-free (Bareiss) elimination.

    Rational entries are scaled to integers first so all intermediate
    divisions are exact integer divisions.
    """
    n = len(rows)
    if n == 0:
        return Fraction(1)
    den = 1
    fr = [[Fraction(x) for x in row] for row in rows]
    for row in fr:
        for x in row:
            den = den * x.denominator // math.gcd(den, x.denominator)
    m = [[int(x * den) for x in row] for row in fr]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return Fraction(0)
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[k][k] * m[i][j] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return Fraction(sign * m[n - 1][n - 1], den ** n)


def _lagrange_interpolate(points, values, degree: int) -> IntegerPolynomial:
    """Exact Lagrange interpolation through ``degree + 1`` nodes."""
    acc = [Fraction(0)] * (degree + 1)
    for i, (xi, yi) in enumerate(zip(points, values)):
        basis = [Fraction(1)]
        denom = Fraction(1)
        for j, xj in enumerate(points):
            if j == i:
                continue
            new = [Fraction(0)] * (len(basis) + 1)
            for k, b in enumerate(basis):
                new[k] += -xj * b
                new[k + 1] += b
            basis = new
            denom *= xi - xj
        w = Fraction(yi) / denom
        for k, b in enumerate(basis):
            acc[k] += w * b
    return IntegerPolynomial(tuple(acc))


def pencil_charpoly_exact(A, B) -> IntegerPolynomial:
    """``det(p^2 I + p A + B)`` computed exactly for rational ``A``, ``B``.

    The determinant is evaluated at the ``2N + 1`` integers ``p = -N..N``
    by fraction-free elimination and interpolated exactly; the result is
    cross-checked at one extra evaluation point and must be monic of
    degree exactly ``2N``.
    """
    A = [list(map(Fraction, row)) for row in A]
    B = [list(map(Fraction, row)) for row in B]
    n = len(A)
    if any(len(r) != n for r in A) or len(B) != n or any(len(r) != n for r in B):
        raise ValueError("A and B must be square matrices of equal size")

    def det_at(p: int) -> Fraction:
        p = Fraction(p)
        m = [
            [(p * p if i == j else Fraction(0)) + p * A[i][j] + B[i][j] for j in range(n)]
            for i in range(n)
        ]
        return _bareiss_det(m)

    points = list(range(-n, n + 1))
    values = [det_at(p) for p in points]
    poly = _lagrange_interpolate(points, values, 2 * n)
    check = n + 1
    if poly(check) != det_at(check):
        raise ArithmeticError("interpolation cross-check failed")
    if poly.degree != 2 * n or poly.leading != 1:
        raise ArithmeticError(
            f"characteristic polynomial must be monic of degree {2 * n}, "
            f"got degree {poly.degree} with leading {poly.leading}"
        )
    return poly


def _root_bound(q: IntegerPolynomial) -> int:
    """Integer window radius containing all roots.

    Uses the smaller of the Cauchy bound ``1 + max|c_k/c_n|`` and the
    Fujiwara bound ``2 max_k |c_(n-k)/c_n|^(1/k)``; the Cauchy bound alone
    grows with the coefficient size and becomes impractically wide for the
    high-degree spectra handled here.
    """
    c = q.coeffs
    n = q.degree
    lead = abs(c[-1])
    cauchy = 1 + max(abs(a) / lead for a in c[:-1]) if n >= 1 else Fraction(0)
    fuji = 0.0
    for k in range(1, n + 1):
        a = abs(c[n - k] / lead)
        if a:
            fuji = max(fuji, float(a) ** (1.0 / k))
    bound = min(float(cauchy), 2.0 * fuji)
    return int(math.floor(bound)) + 1


def integer_roots(q: IntegerPolynomial):
    """All integer roots (with multiplicity) and the deflated remainder.

    Every integer in the root-bound window is tested; found roots are
    deflated exactly and re-tested, so multiplicities are counted. The
    remainder has no integer roots.
    """
    if q.is_zero:
        raise ValueError("the zero polynomial has no well-defined root set")
    roots = []
    rem = q
    while rem.degree >= 1:
        bound = _root_bound(rem)
        found = None
        for r in range(-bound, bound + 1):
            if rem(r) == 0:
                found = r
                break
        if found is None:
            break
        # deflate repeatedly to absorb the full multiplicity
        while rem.degree >= 1 and rem(found) == 0:
            roots.append(found)
            rem = rem.deflate(found)
    return sorted(roots), rem
