"""Small oscillations about the isochronous equilibria.

Linearising the isochronous coefficient system about an equilibrium
``cbar`` and inserting the harmonic ansatz ``rho_m = r_m exp(i p t)``
turns the dynamics into the quadratic eigenvalue problem
``(p^2 + A p + B) r = 0`` with explicit matrices built from ``cbar``.
Since every nonsingular solution of the system has period ``2 pi``, all
``2N`` pencil eigenvalues must be integers; this module verifies that
exactly (arbitrary-precision characteristic polynomial, integer root
extraction) and tests the stronger conjectured product formulas for the
full spectrum, emitting structured counterexample records whenever a
conjectured formula disagrees with the exact one.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linear_sum_assignment

from .equilibria import EquilibriumConfig, cbar_closed_form
from .linalg import eigenvalues
from .polynomials import IntegerPolynomial, integer_roots, pencil_charpoly_exact

__all__ = [
    "C215Result",
    "C217Result",
    "ConjectureCounterexample",
    "DEFAULT_NU5_SAMPLES",
    "PencilSample",
    "QuadraticPencil",
    "SpectralReport",
    "build_pencil",
    "conjecture_215_product",
    "conjecture_217_claim",
    "linearized_apply",
    "solve_pencil_numeric",
    "verify_conjectures",
    "verify_integrality",
]

# free-constant samples for the nu = 5 family
DEFAULT_NU5_SAMPLES = (Fraction(0), Fraction(1), Fraction(-3), Fraction(7, 2))


@dataclass(frozen=True)
class QuadraticPencil:
    """The pair ``(A, B)`` of the quadratic eigenvalue problem, exact."""

    A: tuple[tuple[Fraction, ...], ...]
    B: tuple[tuple[Fraction, ...], ...]

    @property
    def N(self) -> int:
        return len(self.A)


def _as_cbar(config_or_cbar) -> tuple[Fraction, ...]:
    if isinstance(config_or_cbar, EquilibriumConfig):
        return tuple(Fraction(x) for x in config_or_cbar.cbar)
    return tuple(Fraction(x) for x in config_or_cbar)


def build_pencil(config_or_cbar) -> QuadraticPencil:
    """Assemble ``A`` and ``B`` componentwise from the equilibrium
    coefficients ``cbar_1..cbar_N`` (``cbar_{N+1}`` is zero where the
    construction references it)."""
    cb = _as_cbar(config_or_cbar)
    N = len(cb)
    if N < 1:
        raise ValueError("need at least one coefficient")

    def c(m: int) -> Fraction:
        if m == 0:
            return Fraction(1)
        return cb[m - 1] if 1 <= m <= N else Fraction(0)

    A = [[Fraction(0)] * N for _ in range(N)]
    B = [[Fraction(0)] * N for _ in range(N)]
    for n in range(1, N + 1):
        for m in range(1, N + 1):
            v = Fraction(0)
            if m == n + 1:
                v += 2 * (n - 1)
            if m == n:
                v += -(2 * n + 1 + 2 * c(1))
            if m == 1:
                v += 2 * c(n)
            A[n - 1][m - 1] = v
            w = Fraction(0)
            if m == n + 2:
                w += (n + 2) * (n - 3)
            if m == n + 1:
                w += -2 * (n - 1) * (n + 1 + c(1))
            if m == n:
                w += n * (n + 1) + 2 * (n - 1) * c(1) - 2 * c(1) ** 2 + 6 * c(2)
            if m == 1:
                w += 2 * (-(n - 1) * c(n + 1) + (n - 1 - 2 * c(1)) * c(n))
            if m == 2:
                w += 6 * c(n)
            B[n - 1][m - 1] = w
    return QuadraticPencil(tuple(map(tuple, A)), tuple(map(tuple, B)))


def solve_pencil_numeric(pencil: QuadraticPencil) -> np.ndarray:
    """All ``2N`` pencil eigenvalues via companion linearisation.

    With ``s = p r`` the quadratic problem is the ordinary eigenvalue
    problem of the block matrix ``[[0, I], [-B, -A]]``.
    """
    N = pencil.N
    A = np.array([[float(x) for x in row] for row in pencil.A])
    B = np.array([[float(x) for x in row] for row in pencil.B])
    comp = np.block([[np.zeros((N, N)), np.eye(N)], [-B, -A]])
    return eigenvalues(comp)


def linearized_apply(cbar, r, p):
    """Apply the linearised small-oscillation operator directly.

    Written from the recurrence form of the linearised equations (with
    the boundary values zeroed) rather than the assembled matrices; it
    must agree with ``(p^2 + A p + B) r`` componentwise, which the test
    suite asserts.
    """
    cb = [complex(x) for x in _as_cbar(cbar)]
    N = len(cb)
    r = np.asarray(r, dtype=complex)

    def c(m: int) -> complex:
        if m == 0:
            return 1.0 + 0.0j
        return cb[m - 1] if 1 <= m <= N else 0.0 + 0.0j

    def R(m: int) -> complex:
        return r[m - 1] if 1 <= m <= N else 0.0 + 0.0j

    out = np.empty(N, dtype=complex)
    for m in range(1, N + 1):
        out[m - 1] = (
            p * p * R(m)
            + 2 * (m - 1) * p * R(m + 1)
            - (2 * m + 1 + 2 * c(1)) * p * R(m)
            + 2 * p * c(m) * R(1)
            + (m + 2) * (m - 3) * R(m + 2)
            - 2 * (m - 1) * (m + 1 + c(1)) * R(m + 1)
            + (m * (m + 1) + 2 * (m - 1) * c(1) - 2 * c(1) ** 2 + 6 * c(2)) * R(m)
            - 2 * ((m - 1) * c(m + 1) - (m - 1 - 2 * c(1)) * c(m)) * R(1)
            + 6 * c(m) * R(2)
        )
    return out


@dataclass(frozen=True)
class PencilSample:
    """Exact spectral data of one pencil (one free-constant value)."""

    free: Fraction
    charpoly: IntegerPolynomial
    integer_roots: tuple[int, ...]
    remainder: IntegerPolynomial
    all_integers: bool


@dataclass(frozen=True)
class SpectralReport:
    nu: int
    mu: Fraction
    N: int
    samples: tuple[PencilSample, ...]
    all_integers: bool


def _nu5_samples(nu: int, free_samples):
    if nu != 5:
        return (Fraction(0),)
    return tuple(Fraction(c) for c in (free_samples or DEFAULT_NU5_SAMPLES))


def verify_integrality(
    nu: int,
    mu,
    N: int,
    free_samples=None,
    perturb_c1: Fraction = Fraction(0),
) -> SpectralReport:
    """Exact integer-spectrum check for one ``(nu, mu, N)`` cell.

    Builds the equilibrium coefficients, the pencil, and the exact
    characteristic polynomial, then extracts every integer root.  The
    cell passes when the ``2N`` integer roots exhaust the polynomial
    (remainder one).  ``perturb_c1`` shifts the first coefficient and
    serves as a negative control.
    """
    samples = []
    ok = True
    for cval in _nu5_samples(nu, free_samples):
        cb = list(cbar_closed_form(nu, mu, N, cval))
        cb[0] += Fraction(perturb_c1)
        pencil = build_pencil(cb)
        poly = pencil_charpoly_exact(pencil.A, pencil.B)
        roots, rem = integer_roots(poly)
        all_int = len(roots) == 2 * N and rem.coeffs == (Fraction(1),)
        ok = ok and all_int
        samples.append(PencilSample(cval, poly, tuple(roots), rem, all_int))
    return SpectralReport(nu, Fraction(mu), N, tuple(samples), ok)


# ---------------------------------------------------------------------------
# conjectured closed forms


def conjecture_215_product(nu: int, mu: int, N: int) -> IntegerPolynomial:
    """The conjectured exact factorisation of the pencil's characteristic
    polynomial for integer ``mu``, expanded exactly (empty products are
    one)."""
    lin = IntegerPolynomial.monomial
    acc = IntegerPolynomial.one()
    if nu == 0:
        for n in range(1, N - mu + 1):
            acc = acc * lin(n) * lin(n + 1)
        for n in range(1, mu + 1):
            acc = acc * lin(-n) * lin(5 - n)
    elif nu == 1:
        acc = acc * lin(-1) * lin(4)
        for n in range(1, N - mu + 1):
            acc = acc * lin(n) * lin(n + 5)
        for n in range(1, mu):
            acc = acc * lin(-n) * lin(7 - n)
    elif nu == 3:
        acc = acc * lin(-1) * lin(4)
        for n in range(1, N - mu + 1):
            acc = acc * lin(n) * lin(n - 5)
        for n in range(1, mu):
            acc = acc * lin(-n) * lin(n - mu + 7)
    elif nu == 4:
        acc = acc * lin(-1)
        for n in range(1, 4):
            acc = acc * lin(n + 1)
        for n in range(1, N - mu + 1):
            acc = acc * lin(n) * lin(n - 1)
        for n in range(1, mu - 3):
            acc = acc * lin(-n)
        for n in range(1, mu + 1):
            acc = acc * lin(-n - 1)
    elif nu == 5:
        for n in range(1, N - mu + 1):
            acc = acc * lin(n) * lin(n + 1)
        for n in range(1, mu + 1):
            acc = acc * lin(-n) * lin(n - mu + 4)
    else:
        raise ValueError(f"no conjectured product for nu = {nu}")
    return acc


def conjecture_217_claim(nu: int, mu, N: int):
    """The conjectured partial eigenvalue list for arbitrary ``mu``.

    Covers only part of the ``2N`` eigenvalues (the rest carry no
    conjectured description); size floors are ``N >= 5`` for
    ``nu in {0, 4, 5}`` and ``N >= 8`` for ``nu in {1, 3}``.
    """
    mu = Fraction(mu)
    if nu in (0, 5):
        if N < 5:
            raise ValueError("need N >= 5")
        return tuple([Fraction(2), Fraction(3), Fraction(4)] + [k - mu for k in range(5, N + 1)])
    if nu == 4:
        if N < 5:
            raise ValueError("need N >= 5")
        return tuple([Fraction(2), Fraction(3), Fraction(4)] + [k - mu for k in range(4, N)])
    if nu == 1:
        if N < 8:
            raise ValueError("need N >= 8")
        return tuple([Fraction(-1), Fraction(4), Fraction(6)] + [k - mu for k in range(8, N + 1)])
    if nu == 3:
        if N < 8:
            raise ValueError("need N >= 8")
        return tuple(
            [Fraction(-1), Fraction(4), Fraction(6)] + [k - mu for k in range(3, N - 4)]
        )
    raise ValueError(f"no conjectured partial spectrum for nu = {nu}")


@dataclass(frozen=True)
class ConjectureCounterexample:
    """A cell where a conjectured formula disagrees with the exact one."""

    nu: int
    mu: Fraction
    N: int
    free: Fraction
    charpoly: IntegerPolynomial
    conjectured: IntegerPolynomial

    def as_record(self) -> dict:
        return {
            "nu": self.nu,
            "mu": str(self.mu),
            "N": self.N,
            "free": str(self.free),
            "charpoly": str(self.charpoly),
            "conjectured": str(self.conjectured),
        }


@dataclass(frozen=True)
class C215Result:
    nu: int
    mu: int
    N: int
    match: bool
    charpoly: IntegerPolynomial
    conjectured: IntegerPolynomial
    counterexamples: tuple[ConjectureCounterexample, ...]


@dataclass(frozen=True)
class C217Result:
    nu: int
    mu: Fraction
    N: int
    contained: bool
    max_match_error: float
    claimed: tuple[Fraction, ...]
    spectrum: tuple[complex, ...]


def verify_conjectures(which: str, nu: int, mu, N: int, free_samples=None, tol: float = 1e-6):
    """Check one conjectured spectral formula on one cell.

    ``which = "c215"`` expands the conjectured product exactly and
    demands coefficientwise equality with the exact characteristic
    polynomial (for the free-constant family, for every sampled value);
    disagreements come back as counterexample records, never exceptions.
    ``which = "c217"`` solves the pencil numerically and asserts only
    that the claimed partial list is contained in the spectrum within
    ``tol`` (the complement is deliberately not asserted).
    """
    which = which.lower()
    if which == "c215":
        mu = int(mu)
        product = conjecture_215_product(nu, mu, N)
        counterexamples = []
        charpoly = None
        for cval in _nu5_samples(nu, free_samples):
            cb = cbar_closed_form(nu, mu, N, cval)
            pencil = build_pencil(cb)
            poly = pencil_charpoly_exact(pencil.A, pencil.B)
            if charpoly is None:
                charpoly = poly
            if poly.coeffs != product.coeffs:
                counterexamples.append(
                    ConjectureCounterexample(nu, Fraction(mu), N, cval, poly, product)
                )
        return C215Result(
            nu, mu, N, not counterexamples, charpoly, product, tuple(counterexamples)
        )
    if which == "c217":
        mu = Fraction(mu)
        claimed = conjecture_217_claim(nu, mu, N)
        cval = _nu5_samples(nu, free_samples)[0]
        cb = cbar_closed_form(nu, mu, N, cval)
        spectrum = solve_pencil_numeric(build_pencil(cb))
        # injective matching of the claimed values into the spectrum
        cost = np.abs(
            np.array([complex(x) for x in claimed])[:, None] - spectrum[None, :]
        )
        rows, cols = linear_sum_assignment(cost)
        err = float(np.max(cost[rows, cols]))
        return C217Result(
            nu,
            mu,
            N,
            err <= tol,
            err,
            claimed,
            tuple(complex(s) for s in spectrum),
        )
    raise ValueError(f"unknown conjecture {which!r}")
