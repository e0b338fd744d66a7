from fractions import Fraction

import numpy as np
import pytest

from goldfish.equilibria import iso_core_residual
from goldfish.polynomials import (
    IntegerPolynomial,
    MonicPolynomial,
    PLAIN,
    TILDE,
    coeff_velocities,
    exact_binomial,
    find_roots,
    from_roots,
    integer_roots,
    pencil_charpoly_exact,
)


def test_from_roots_plain():
    poly = from_roots([1.0, 2.0])
    assert np.allclose(poly.coeffs, [1, -3, 2])


def test_from_roots_all_zero():
    poly = from_roots([0.0, 0.0, 0.0])
    assert np.allclose(poly.coeffs, [1, 0, 0, 0])


def test_from_roots_tilde_strips_phases():
    # z (z - i)^2 = z^3 - 2i z^2 - z
    poly = from_roots([0.0, 1j, 1j], TILDE)
    assert np.allclose(poly.coeffs, [1, -2, 1, 0], atol=1e-14)


def test_find_roots_quadratic():
    poly = MonicPolynomial(np.array([1.0, -3.0, 2.0], dtype=complex))
    roots = np.sort_complex(find_roots(poly))
    assert np.allclose(roots, [1.0, 2.0], atol=1e-12)


def test_find_roots_round_trip():
    rng = np.random.default_rng(11)
    while True:
        roots = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        gaps = np.abs(roots[:, None] - roots[None, :]) + np.eye(8)
        if gaps.min() > 0.3:
            break
    poly = from_roots(roots)
    found = find_roots(poly, tol=1e-14)
    cost = np.abs(roots[:, None] - found[None, :])
    from scipy.optimize import linear_sum_assignment

    r, c = linear_sum_assignment(cost)
    assert float(np.max(cost[r, c])) < 1e-10


def test_find_roots_core_cubic_satisfies_algebraic_system():
    poly = MonicPolynomial(np.array([1, -6, 14, -14], dtype=complex), TILDE)
    roots = find_roots(poly)
    assert iso_core_residual(roots) < 1e-8


def test_coeff_velocities_zero():
    out = coeff_velocities([1.0, 2.0], [0.0, 0.0])
    assert np.allclose(out, 0)


def test_coeff_velocities_hand_value():
    # cdot_1 = -(v1 + v2), cdot_2 = v1 z2 + z1 v2
    out = coeff_velocities([1.0, -1.0], [1.0, 1.0])
    assert np.allclose(out, [-2.0, 0.0])


def test_coeff_velocities_single_zero():
    assert np.allclose(coeff_velocities([0.7], [2.5]), [-2.5])


def test_coeff_velocities_rejects_coincident_zeros():
    with pytest.raises(ValueError):
        coeff_velocities([1.0, 1.0], [0.0, 0.0])


def test_coeff_velocities_matches_finite_difference():
    rng = np.random.default_rng(5)
    z0 = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    v0 = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    acc = rng.standard_normal(4) + 1j * rng.standard_normal(4)

    def zpath(t):
        return z0 + v0 * t + 0.5 * acc * t * t

    def cof(t):
        return from_roots(zpath(t)).coeffs[1:]

    analytic = coeff_velocities(zpath(0.0), v0)

    def fd_err(h):
        fd = (cof(h) - cof(-h)) / (2 * h)
        return float(np.max(np.abs(fd - analytic)))

    e1, e2 = fd_err(1e-3), fd_err(5e-4)
    assert e1 < 1e-4
    # centered difference converges at second order
    assert e2 < e1 / 2.5


def test_convention_round_trip_exact():
    rng = np.random.default_rng(3)
    c = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    c[0] = 1.0
    back = TILDE.unstrip(TILDE.strip(c))
    assert np.array_equal(back, c)


def test_integer_polynomial_str_and_eval():
    p = IntegerPolynomial((Fraction(2), Fraction(-3), Fraction(1)))
    assert str(p) == "p^2 - 3p + 2"
    assert p(5) == 12
    assert p.deflate(1).coeffs == (Fraction(-2), Fraction(1))


def test_pencil_charpoly_scalar():
    poly = pencil_charpoly_exact([[-3]], [[2]])
    assert poly.coeffs == (Fraction(2), Fraction(-3), Fraction(1))


def test_pencil_charpoly_block_diagonal():
    poly = pencil_charpoly_exact([[-3, 0], [0, -5]], [[2, 0], [0, 6]])
    expect = IntegerPolynomial((Fraction(2), Fraction(-3), Fraction(1))) * IntegerPolynomial(
        (Fraction(6), Fraction(-5), Fraction(1))
    )
    assert poly.coeffs == expect.coeffs


def _poly_det_by_minors(entries):
    n = len(entries)
    if n == 1:
        return entries[0][0]
    acc = IntegerPolynomial((Fraction(0),))
    for j in range(n):
        minor = [row[:j] + row[j + 1 :] for row in entries[1:]]
        term = entries[0][j] * _poly_det_by_minors(minor)
        acc = acc + (term if j % 2 == 0 else term * Fraction(-1))
    return acc


def test_pencil_charpoly_matches_minor_expansion():
    rng = np.random.default_rng(17)
    n = 4
    A = rng.integers(-5, 6, (n, n))
    B = rng.integers(-5, 6, (n, n))
    fast = pencil_charpoly_exact(A.tolist(), B.tolist())
    entries = [
        [
            IntegerPolynomial(
                (
                    Fraction(int(B[i][j])),
                    Fraction(int(A[i][j])),
                    Fraction(1 if i == j else 0),
                )
            )
            for j in range(n)
        ]
        for i in range(n)
    ]
    slow = _poly_det_by_minors(entries)
    assert fast.coeffs == slow.coeffs


def test_pencil_charpoly_zero_a_diagonal_b():
    bdiag = [3, -2, 7]
    n = 3
    B = [[bdiag[i] if i == j else 0 for j in range(n)] for i in range(n)]
    A = [[0] * n for _ in range(n)]
    poly = pencil_charpoly_exact(A, B)
    expect = IntegerPolynomial((Fraction(1),))
    for b in bdiag:
        expect = expect * IntegerPolynomial((Fraction(b), Fraction(0), Fraction(1)))
    assert poly.coeffs == expect.coeffs


def test_integer_roots_simple():
    p = IntegerPolynomial((Fraction(2), Fraction(-3), Fraction(1)))
    roots, rem = integer_roots(p)
    assert roots == [1, 2] and rem.coeffs == (Fraction(1),)


def test_integer_roots_none():
    p = IntegerPolynomial((Fraction(1), Fraction(0), Fraction(1)))
    roots, rem = integer_roots(p)
    assert roots == [] and rem.coeffs == p.coeffs


def test_integer_roots_quartic_cell():
    # (p+1)(p-4)(p-1)(p-2)
    p = IntegerPolynomial.from_integer_roots([-1, 4, 1, 2])
    roots, rem = integer_roots(p)
    assert roots == [-1, 1, 2, 4] and rem.coeffs == (Fraction(1),)


def test_integer_roots_with_multiplicity():
    p = IntegerPolynomial.from_integer_roots([3, 3, -2])
    roots, rem = integer_roots(p)
    assert roots == [-2, 3, 3] and rem.coeffs == (Fraction(1),)


def test_exact_binomial_rational_argument():
    assert exact_binomial(Fraction(1, 2), 2) == Fraction(-1, 8)
    assert exact_binomial(5, 2) == 10
    assert exact_binomial(3, -1) == 0
