"""Closed-form equilibrium families of the goldfish coefficient systems.

All coefficient vectors are produced in exact rational arithmetic.  For
the isochronous system the equilibrium polynomial factors as

    psi(z) = phi(z) * (z - i)^(mu - nu) * z^(N - mu),

with ``phi`` a monic degree-``nu`` core polynomial whose coefficients
obey a two-term recurrence that is solvable only for
``nu in {0, 1, 3, 4, 5}`` (``nu = 2`` fails at the normalisation step and
``nu >= 6`` hits a contradictory constraint, which
:func:`phi_recursion_obstruction` exhibits).  In the TILDE coefficient
convention the factor sequences convolve over plain rationals, so the
whole expansion stays exact.

For the rational-time system the same construction runs over the factors
``(z - a)`` and ``(z + a)`` in the plain convention; three families cover
all equilibria: a binomial one and two carrying a free constant.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .polynomials import (
    MonicPolynomial,
    PLAIN,
    TILDE,
    cluster_roots,
    exact_binomial,
    find_roots,
)

__all__ = [
    "EquilibriumConfig",
    "Family",
    "GenuinenessReport",
    "RecursionSolution",
    "altgold_binomial_closed_form",
    "cbar_closed_form",
    "chi_recurrence_residuals",
    "enumerate_altgold_equilibria",
    "enumerate_iso_equilibria",
    "equilibrium_residual",
    "expand_altgold_psi",
    "expand_iso_psi",
    "genuineness_check",
    "iso_core_residual",
    "phi_recursion_obstruction",
    "solve_chi_recursion",
    "solve_phi_recursion",
    "ISO_NU_VALUES",
    "RESONANT_NU",
    "ResonantBranchError",
    "DEFAULT_FREE_SAMPLES",
]

ISO_NU_VALUES = (0, 1, 3, 4, 5)
DEFAULT_FREE_SAMPLES = (
    Fraction(-2),
    Fraction(0),
    Fraction(1, 3),
    Fraction(1),
    Fraction(7),
)


class Family(enum.Enum):
    ISO = "iso"
    ALTGOLD_BINOMIAL = "altgold_binomial"
    ALTGOLD_NU2 = "altgold_nu2"
    ALTGOLD_NU5PLUS = "altgold_nu5plus"


@dataclass(frozen=True)
class EquilibriumConfig:
    """One member of a closed-form equilibrium family.

    ``cbar`` holds the exact coefficients ``c_1..c_N`` (TILDE convention
    for the isochronous family, plain for the others); ``free`` records
    the sampled values of any free parameters.
    """

    family: Family
    N: int
    nu: int
    mu: int
    free: dict
    cbar: tuple[Fraction, ...]

    def polynomial(self) -> MonicPolynomial:
        coeffs = np.array([1.0] + [float(c) for c in self.cbar], dtype=complex)
        conv = TILDE if self.family is Family.ISO else PLAIN
        return MonicPolynomial(coeffs, conv)


@dataclass(frozen=True)
class RecursionSolution:
    """Core-polynomial coefficients satisfying their two-term recurrence."""

    nu: int
    coefficients: tuple[Fraction, ...]
    free_label: str | None = None


# ---------------------------------------------------------------------------
# exact polynomial helpers (descending coefficient lists, index = power drop)


def _conv(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def _pow(base, k: int):
    acc = [Fraction(1)]
    for _ in range(k):
        acc = _conv(acc, base)
    return acc


def _add(p, q):
    # align constant terms (lists are descending in power)
    n = max(len(p), len(q))
    pp = [Fraction(0)] * (n - len(p)) + list(p)
    qq = [Fraction(0)] * (n - len(q)) + list(q)
    return [a + b for a, b in zip(pp, qq)]


# ---------------------------------------------------------------------------
# the core-polynomial recurrences


RESONANT_NU = 8


class ResonantBranchError(ValueError):
    """Raised when asked for an obstruction at the resonant degree.

    At ``nu = 8`` the recurrence factor vanishes one step early
    (``phi_4 = 0``), so the degree-five constraint is vacuous rather than
    contradictory and a one-parameter solution family exists.  The
    enumeration excludes it unless explicitly asked.
    """


def solve_phi_recursion(nu: int, c: Fraction = Fraction(0)) -> RecursionSolution:
    """Coefficients of the degree-``nu`` isochronous core polynomial.

    The recurrence ``m (m - 5) phi_m = (m - nu - 1)(m + 3 nu/(2 - nu)) phi_{m-1}``
    with ``phi_0 = 1`` pins every coefficient for ``nu in {0, 1, 3, 4}``;
    ``nu = 5`` leaves ``phi_5`` free, parametrised here as
    ``phi_5 = -(1 + c)`` so that ``c`` is the free constant of the
    matching binomial closed form; ``nu = 2`` breaks the normalisation.
    The recurrence is contradictory for all larger degrees except the
    resonant ``nu = 8``, where the right side vanishes at ``m = 4`` and a
    free tail opens up (``phi_5 = c`` here); the resulting equilibria are
    exact and verified by the test suite, but they sit outside the five
    standard families.
    """
    if nu == 2:
        raise ValueError("nu = 2 is excluded: the normalisation constraint fails")
    if nu not in ISO_NU_VALUES and nu != RESONANT_NU:
        m, lhs, rhs = phi_recursion_obstruction(nu)
        raise ValueError(
            f"no degree-{nu} core polynomial: at m = {m} the recurrence "
            f"demands {lhs} * phi_{m} = {rhs} with zero left coefficient"
        )
    phi = [Fraction(1)]
    for m in range(1, nu + 1):
        if m == 5:
            phi.append(-(1 + Fraction(c)) if nu == 5 else Fraction(c))
            continue
        factor = Fraction(m - nu - 1) * (Fraction(m) + Fraction(3 * nu, 2 - nu))
        phi.append(factor * phi[m - 1] / Fraction(m * (m - 5)))
    label = "c" if nu >= 5 else None
    return RecursionSolution(nu, tuple(phi), label)


def phi_recursion_obstruction(nu: int):
    """Exhibit the contradictory constraint for ``nu >= 6``.

    Returns ``(m, lhs_coefficient, rhs_value)`` with ``lhs_coefficient``
    zero and ``rhs_value`` nonzero: the recurrence has no solution.  The
    resonant degree ``nu = 8`` carries no obstruction (the right side
    vanishes as well) and raises :class:`ResonantBranchError` instead.
    """
    if nu < 6 or nu == 2:
        raise ValueError("an obstruction exists only for nu >= 6")
    phi = [Fraction(1)]
    for m in range(1, 5):
        factor = Fraction(m - nu - 1) * (Fraction(m) + Fraction(3 * nu, 2 - nu))
        phi.append(factor * phi[m - 1] / Fraction(m * (m - 5)))
    m = 5
    rhs = Fraction(m - nu - 1) * (Fraction(m) + Fraction(3 * nu, 2 - nu)) * phi[4]
    if rhs == 0:
        raise ResonantBranchError(
            f"degree {nu} carries no obstruction: the recurrence right side "
            "vanishes at m = 4, opening a one-parameter solution branch"
        )
    return m, Fraction(m * (m - 5)), rhs


def solve_chi_recursion(nu: int, chi1: Fraction | None = None, chi5: Fraction = Fraction(0)):
    """Coefficients of the shifted core polynomial of the rational-time
    system, from its two-term recurrence.

    For ``nu != 2`` the first coefficient is forced to ``-nu``; for
    ``nu = 2`` it is free.  ``chi5`` parametrises the free tail that
    appears from degree five on.
    """
    if nu == 2:
        if chi1 is None:
            raise ValueError("nu = 2 leaves chi_1 free; provide it")
        chi = [Fraction(1), Fraction(chi1), Fraction(chi1) * (Fraction(chi1) + 1) / 3]
        return RecursionSolution(nu, tuple(chi), "chi1")
    chi = [Fraction(1)]
    for m in range(1, nu + 1):
        if m == 1:
            chi.append(Fraction(-nu))
        elif m == 5:
            chi.append(Fraction(chi5))
        else:
            val = (
                2
                * Fraction(nu + 1 - m)
                * (Fraction(3 - nu - m) - chi[1])
                * chi[m - 1]
                / Fraction(m * (m - 5))
            )
            chi.append(val)
    return RecursionSolution(nu, tuple(chi), "chi5" if nu >= 5 else None)


def chi_recurrence_residuals(sol: RecursionSolution):
    """Exact residuals of the two-term recurrence for a chi solution."""
    chi = list(sol.coefficients) + [Fraction(0)]
    nu = sol.nu
    out = []
    for m in range(1, nu + 2):
        cm = chi[m] if m <= nu else Fraction(0)
        cm1 = chi[m - 1]
        out.append(Fraction(m * (m - 5)) * cm - 2 * Fraction(nu + 1 - m) * (Fraction(3 - nu - m) - chi[1]) * cm1)
    return tuple(out)


# ---------------------------------------------------------------------------
# isochronous equilibria


def cbar_closed_form(nu: int, mu, N: int, c: Fraction = Fraction(0)):
    """Equilibrium coefficients ``c_1..c_N`` from the binomial closed forms.

    ``mu`` may be any rational for the spectral sweeps; the standard
    enumeration uses integers ``nu <= mu <= N``.
    """
    mu = Fraction(mu)
    out = []
    for m in range(1, N + 1):
        sign = Fraction(-1) ** m
        if nu == 0:
            val = exact_binomial(mu, m)
        elif nu == 1:
            if mu == 1:
                out.append(Fraction(1) if m == 1 else Fraction(0))
                continue
            val = exact_binomial(mu - 2, m) - exact_binomial(mu - 2, m - 2)
        elif nu == 3:
            val = (
                exact_binomial(mu - 3, m)
                + 6 * exact_binomial(mu - 3, m - 1)
                + 14 * exact_binomial(mu - 3, m - 2)
                + 14 * exact_binomial(mu - 3, m - 3)
            )
        elif nu == 4:
            val = sum(
                exact_binomial(mu - 4, m - k) * math.comb(5, k) for k in range(5)
            )
        elif nu == 5:
            val = Fraction(c) * exact_binomial(mu - 5, m - 5) + sum(
                exact_binomial(mu - 5, m - k) * math.comb(5, k) for k in range(6)
            )
        else:
            raise ValueError(f"nu must be one of {ISO_NU_VALUES}, got {nu}")
        out.append(sign * val)
    return tuple(out)


def expand_iso_psi(nu: int, mu: int, N: int, c: Fraction = Fraction(0)):
    """Equilibrium coefficients by exact expansion of the factored
    equilibrium polynomial ``phi(z) (z - i)^(mu-nu) z^(N-mu)``.

    Works on the TILDE-stripped sequences, which convolve over plain
    rationals: ``phi`` contributes its recurrence coefficients and each
    ``(z - i)`` factor contributes ``(1, -1)``.
    """
    if not (0 <= nu <= mu <= N):
        raise ValueError("need 0 <= nu <= mu <= N")
    phi = list(solve_phi_recursion(nu, c).coefficients)
    seq = _conv(phi, _pow([Fraction(1), Fraction(-1)], mu - nu))
    seq = seq + [Fraction(0)] * (N - mu)
    assert seq[0] == 1 and len(seq) == N + 1
    return tuple(seq[1:])


def enumerate_iso_equilibria(N: int, free_samples=DEFAULT_FREE_SAMPLES, include_resonant=False):
    """All equilibrium configurations of the isochronous coefficient
    system, one per ``(nu, mu)`` cell (and per sampled free constant for
    the ``nu = 5`` family).

    ``include_resonant`` adds the degree-8 resonant branch (free
    coefficient tail) on top of the five standard families.
    """
    if N < 1:
        raise ValueError("N must be positive")
    nus = ISO_NU_VALUES + ((RESONANT_NU,) if include_resonant else ())
    configs = []
    for nu in nus:
        for mu in range(nu, N + 1):
            if nu > N:
                continue
            samples = free_samples if nu >= 5 else (Fraction(0),)
            for c in samples:
                cbar = expand_iso_psi(nu, mu, N, c)
                free = {"c": Fraction(c)} if nu >= 5 else {}
                configs.append(EquilibriumConfig(Family.ISO, N, nu, mu, free, cbar))
    return configs


def iso_core_residual(roots) -> float:
    """Residual of the algebraic system obeyed by the core-polynomial
    zeros of the isochronous equilibria:
    ``z_n + i + sum_{m != n} z_m (z_m - i) / (z_n - z_m) = 0``."""
    z = np.asarray(roots, dtype=complex)
    worst = 0.0
    for n in range(z.size):
        r = z[n] + 1j
        for m in range(z.size):
            if m != n:
                r += z[m] * (z[m] - 1j) / (z[n] - z[m])
        worst = max(worst, abs(r))
    return worst


# ---------------------------------------------------------------------------
# rational-time equilibria


def expand_altgold_psi(family: Family, N: int, a, mu: int, nu: int = 0, c=Fraction(0)):
    """Equilibrium coefficients by exact expansion of one of the three
    factored families of the rational-time system."""
    a = Fraction(a)
    c = Fraction(c)
    zma = [Fraction(1), -a]
    zpa = [Fraction(1), a]
    if family is Family.ALTGOLD_BINOMIAL:
        if not 0 <= mu <= N:
            raise ValueError("binomial family needs 0 <= mu <= N")
        seq = _conv(_pow(zma, mu), _pow(zpa, N - mu))
    elif family is Family.ALTGOLD_NU2:
        if N < 2 or not 0 <= mu <= N - 2:
            raise ValueError("quadratic family needs N >= 2 and 0 <= mu <= N - 2")
        quad = [Fraction(1), c, (c * c - a * a) / 3]
        seq = _conv(quad, _conv(_pow(zma, mu), _pow(zpa, N - 2 - mu)))
    elif family is Family.ALTGOLD_NU5PLUS:
        if not (5 <= nu <= N and 0 <= mu <= N - nu):
            raise ValueError("tail family needs 5 <= nu <= N and 0 <= mu <= N - nu")
        bracket = _pow(zpa, nu)  # times 1
        bracket = _add(bracket, _conv([-nu * a], _pow(zpa, nu - 1)))
        bracket = _add(bracket, _conv([Fraction(nu * (nu - 1), 3) * a * a], _pow(zpa, nu - 2)))
        for e in range(nu - 5 + 1):
            w = (
                c
                * Fraction((-2) ** e, (e + 5) * (e + 4) * (e + 3))
                * exact_binomial(nu - 5, e)
                * a ** (e + 5)
            )
            bracket = _add(bracket, _conv([w], _pow(zpa, nu - 5 - e)))
        seq = _conv(_pow(zma, mu), _conv(_pow(zpa, N - mu - nu), bracket))
    else:
        raise ValueError(f"not a rational-time family: {family}")
    assert seq[0] == 1 and len(seq) == N + 1
    return tuple(seq[1:])


def altgold_binomial_closed_form(N: int, a, mu: int):
    """Binomial-family coefficients from the double-binomial closed form
    (independent of the polynomial expansion; used as its oracle)."""
    a = Fraction(a)
    out = []
    for m in range(1, N + 1):
        s = Fraction(0)
        for el in range(max(0, m + mu - N), min(mu, m) + 1):
            s += Fraction(-1) ** el * math.comb(mu, el) * math.comb(N - mu, m - el)
        out.append(a ** m * s)
    return tuple(out)


def enumerate_altgold_equilibria(N: int, a, free_samples=DEFAULT_FREE_SAMPLES):
    """All equilibrium configurations of the rational-time coefficient
    system: the binomial family plus the two free-constant families."""
    if N < 1:
        raise ValueError("N must be positive")
    a = Fraction(a)
    configs = []
    for mu in range(N + 1):
        cbar = expand_altgold_psi(Family.ALTGOLD_BINOMIAL, N, a, mu)
        configs.append(
            EquilibriumConfig(Family.ALTGOLD_BINOMIAL, N, 0, mu, {"a": a}, cbar)
        )
    if N >= 2:
        for mu in range(N - 1):
            for c in free_samples:
                cbar = expand_altgold_psi(Family.ALTGOLD_NU2, N, a, mu, c=c)
                configs.append(
                    EquilibriumConfig(
                        Family.ALTGOLD_NU2, N, 2, mu, {"a": a, "c": Fraction(c)}, cbar
                    )
                )
    for nu in range(5, N + 1):
        for mu in range(N - nu + 1):
            for c in free_samples:
                cbar = expand_altgold_psi(Family.ALTGOLD_NU5PLUS, N, a, mu, nu=nu, c=c)
                configs.append(
                    EquilibriumConfig(
                        Family.ALTGOLD_NU5PLUS, N, nu, mu, {"a": a, "c": Fraction(c)}, cbar
                    )
                )
    return configs


# ---------------------------------------------------------------------------
# residual verification and genuineness


def equilibrium_residual(config: EquilibriumConfig):
    """Exact residual vector of the algebraic equilibrium system matching
    the config's family (isochronous or rational-time)."""
    N = config.N
    cb = config.cbar

    def C(m):
        if m == 0:
            return Fraction(1)
        return cb[m - 1] if 1 <= m <= N else Fraction(0)

    out = []
    if config.family is Family.ISO:
        for m in range(1, N + 1):
            out.append(
                -Fraction((m + 2) * (m - 3)) * C(m + 2)
                + 2 * Fraction(m - 1) * (Fraction(m + 1) + C(1)) * C(m + 1)
                + (
                    -Fraction(m * (m + 1))
                    - 2 * Fraction(m - 1) * C(1)
                    + 2 * C(1) ** 2
                    - 6 * C(2)
                )
                * C(m)
            )
    else:
        a2 = Fraction(config.free["a"]) ** 2
        for m in range(1, N + 1):
            out.append(
                Fraction((m + 2) * (m - 3)) * C(m + 2)
                - 2 * Fraction(m - 1) * C(1) * C(m + 1)
                + 2 * (Fraction(m * (N + 2 - m)) * a2 - C(1) ** 2 + 3 * C(2)) * C(m)
                - 2 * Fraction(N + 1 - m) * a2 * C(1) * C(m - 1)
                + Fraction((N + 2 - m) * (N + 1 - m)) * a2 ** 2 * C(m - 2)
            )
    return tuple(out)


@dataclass(frozen=True)
class GenuinenessReport:
    verdict: str  # "GENUINE" | "DEGENERATE"
    multiplicities: tuple[tuple[complex, int], ...]
    necessary_condition_met: bool | None
    roots: tuple[complex, ...]


def _phi_internal_roots(nu: int, c: Fraction):
    """(root, multiplicity) pairs of the isochronous core polynomial.

    The multiplicity of the root zero is exact (trailing zero
    coefficients); the free-constant quintic has the closed form
    ``(z - i)^5 - i c`` whose roots are the shifted fifth roots of
    ``i c``; remaining factors are root-found numerically and clustered.
    """
    if nu == 0:
        return []
    phi = list(solve_phi_recursion(nu, c).coefficients)
    k = 0
    while k < nu and phi[nu - k] == 0:
        k += 1
    out = [(0.0 + 0.0j, k)] if k else []
    core = phi[: nu - k + 1]
    deg = nu - k
    if deg == 0:
        return out
    if nu == 5:
        if c == 0:
            return out + [(1j, 5)]
        w = (1j * complex(c)) ** (1 / 5)
        return out + [(1j + w * np.exp(2j * np.pi * j / 5), 1) for j in range(5)]
    coeffs = np.array(
        [complex(1j ** m * Fraction(p)) for m, p in enumerate(core)], dtype=complex
    )
    roots = find_roots(MonicPolynomial(coeffs, PLAIN))
    return out + [(complex(r), int(m)) for r, m in cluster_roots(roots, tol=1e-6)]


def genuineness_check(config: EquilibriumConfig) -> GenuinenessReport:
    """Classify an equilibrium: genuine means all position roots distinct.

    Multiplicities come from the factored construction (block exponents
    plus exact coincidence tests of the core factor at the block roots),
    so repeated roots are detected exactly rather than through numeric
    clustering, which cannot resolve high multiplicities reliably.
    """
    if config.family is not Family.ISO:
        return _genuineness_altgold(config)
    N, nu, mu = config.N, config.nu, config.mu
    c = Fraction(config.free.get("c", 0))
    mult_zero = N - mu
    mult_i = mu - nu
    phi_roots = _phi_internal_roots(nu, c)
    # the zero-block of the core is exact; fold it into the main block
    zero_extra = sum(m for r, m in phi_roots if r == 0)
    phi_roots = [(r, m) for r, m in phi_roots if r != 0]
    mult_zero += zero_extra
    # exact test for a core root at i: phi(i) = i^deg * sum of the
    # stripped coefficients
    if nu >= 1 and sum(solve_phi_recursion(nu, c).coefficients) == 0:
        hit = [(r, m) for r, m in phi_roots if abs(r - 1j) < 1e-6]
        phi_roots = [(r, m) for r, m in phi_roots if abs(r - 1j) >= 1e-6]
        mult_i += sum(m for _, m in hit) if hit else 1
    merged = []
    if mult_zero:
        merged.append((0.0 + 0.0j, mult_zero))
    if mult_i:
        merged.append((1j, mult_i))
    merged.extend(phi_roots)
    degenerate = any(m >= 2 for _, m in merged)
    necessary = mu >= N - 1 and nu >= mu - 1
    roots = []
    for r, m in merged:
        roots.extend([complex(r)] * m)
    return GenuinenessReport(
        "DEGENERATE" if degenerate else "GENUINE",
        tuple((complex(r), int(m)) for r, m in merged),
        necessary,
        tuple(roots),
    )


def _genuineness_altgold(config: EquilibriumConfig) -> GenuinenessReport:
    a = Fraction(config.free["a"])
    c = Fraction(config.free.get("c", 0))
    N, nu, mu = config.N, config.nu, config.mu
    blocks: list[tuple[complex, int]] = []
    if config.family is Family.ALTGOLD_BINOMIAL:
        mult_a, mult_ma, core = mu, N - mu, []
    elif config.family is Family.ALTGOLD_NU2:
        mult_a, mult_ma = mu, N - 2 - mu
        # quadratic core z^2 + c z + (c^2 - a^2)/3: all special cases exact
        disc = c * c - 4 * (c * c - a * a) / 3
        double = disc == 0
        at_a = (a + c) * (2 * a + c) == 0
        at_ma = (a - c) * (2 * a - c) == 0
        r1 = (-complex(c) + np.sqrt(complex(disc))) / 2
        r2 = (-complex(c) - np.sqrt(complex(disc))) / 2
        if double:
            core = [(r1, 2)]
        else:
            core = [(r1, 1), (r2, 1)]
        if at_a:
            mult_a += sum(m for r, m in core if abs(r - complex(a)) < 1e-9)
            core = [(r, m) for r, m in core if abs(r - complex(a)) >= 1e-9]
        if at_ma:
            mult_ma += sum(m for r, m in core if abs(r + complex(a)) < 1e-9)
            core = [(r, m) for r, m in core if abs(r + complex(a)) >= 1e-9]
    else:
        mult_a, mult_ma = mu, N - mu - nu
        coeffs = [Fraction(1)] + list(
            expand_altgold_psi(config.family, nu, a, 0, nu=nu, c=c)
        )
        arr = np.array([complex(x) for x in coeffs])
        roots = find_roots(MonicPolynomial(arr, PLAIN))
        core = cluster_roots(roots, tol=1e-6)
        val_a = sum(Fraction(x) * a ** (nu - k) for k, x in enumerate(coeffs))
        val_ma = sum(Fraction(x) * (-a) ** (nu - k) for k, x in enumerate(coeffs))
        if val_a == 0:
            mult_a += sum(m for r, m in core if abs(r - complex(a)) < 1e-6)
            core = [(r, m) for r, m in core if abs(r - complex(a)) >= 1e-6]
        if val_ma == 0:
            mult_ma += sum(m for r, m in core if abs(r + complex(a)) < 1e-6)
            core = [(r, m) for r, m in core if abs(r + complex(a)) >= 1e-6]
    if a == 0 and (mult_a or mult_ma):
        blocks.append((0.0 + 0.0j, mult_a + mult_ma))
    else:
        if mult_a:
            blocks.append((complex(a), mult_a))
        if mult_ma:
            blocks.append((-complex(a), mult_ma))
    blocks.extend(core)
    degenerate = any(m >= 2 for _, m in blocks)
    roots = []
    for r, m in blocks:
        roots.extend([complex(r)] * m)
    return GenuinenessReport(
        "DEGENERATE" if degenerate else "GENUINE",
        tuple((complex(r), int(m)) for r, m in blocks),
        None,
        tuple(roots),
    )
