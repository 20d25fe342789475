import numpy as np
import pytest
from ftl.algebra import (
    ConjPoly,
    GaussianRational,
    RationalExpr,
    polarize,
    rational_arith,
)
from ftl.errors import ZeroDenominatorError
from ftl.selftest import finite_difference, random_poly, wirtinger_suite

z1, zb1, z2, zb2 = (ConjPoly.symbol(name) for name in ("z1", "zb1", "z2", "zb2"))


def test_gaussian_rational_arithmetic():
    a = GaussianRational(1, 2)
    b = GaussianRational(3, -1)
    assert a * b == GaussianRational(5, 5)
    assert (a * b) / b == a
    assert a.conjugate() == GaussianRational(1, -2)
    assert complex(a) == 1 + 2j
    with pytest.raises(ZeroDivisionError):
        a / 0


def test_derivatives_are_formal():
    p = z1 * zb1 + z2**2 * zb2
    assert p.derivative("z1") == zb1
    assert p.derivative("zb2") == z2**2
    assert p.derivative("z2") == 2 * z2 * zb2
    assert (z1 * zb1).derivative("z2").is_zero()


def test_derivative_matches_finite_differences():
    rng = np.random.default_rng(3)
    p = random_poly(rng)
    for var in ("z1", "zb1", "z2", "zb2"):
        exact = p.derivative(var).evaluate(0.3 + 0.2j, -0.1 + 0.4j)
        approx = finite_difference(p, var, 0.3 + 0.2j, -0.1 + 0.4j)
        assert abs(exact - approx) <= 1e-6 * max(1, abs(exact))


def test_wirtinger_suite_passes():
    result = wirtinger_suite(np.random.default_rng(11), cases=100)
    assert result.passed, result.detail


def test_conjugate_and_reality():
    sphere = z1 * zb1 + z2 * zb2 - 1
    assert sphere.is_real()
    assert (z1 * zb1 * zb1).conjugate() == zb1 * z1 * z1
    assert not (z1 * zb1 + z2**2 * zb1**2 - 1).is_real()
    i = GaussianRational(0, 1)
    assert z1.scale(i).conjugate() == zb1.scale(-i)


def test_evaluate_substitutes_true_conjugates():
    p = z1 * zb1 + z2 * zb2
    assert p.evaluate(3 + 4j, 1j) == pytest.approx(26)
    values = p.evaluate(np.array([1j, 2 + 0j]), np.array([0j, 1 + 0j]))
    assert np.allclose(values, [1, 5])


def test_json_round_trip():
    p = (z1 * zb2**2).scale(GaussianRational(1, 3)) - 7
    assert ConjPoly.from_json(p.to_json()) == p
    with pytest.raises(ValueError):
        ConjPoly.from_json([{"e": [1, 0, 0], "re": "1"}])


def test_polarization_diagonal_and_symmetry():
    rho = z1 * zb1 + (z2 * zb2) ** 2 - 1
    R = polarize(rho)
    assert R.diagonal() == rho
    assert R.conjugate_swap() == R
    z, w = (0.9 + 0.1j, 0.2j), (0.5 - 0.3j, 0.1 + 0.1j)
    assert R.evaluate(z, z) == pytest.approx(rho.evaluate(*z))
    assert R.evaluate(z, w) == pytest.approx(np.conj(R.evaluate(w, z)))


def test_polarized_kernel_is_holomorphic_in_z():
    R = polarize(z1 * zb1 + z2 * zb2 - 1)
    dR = R.derivative_z(0)
    # d/dz1 (z1 wb1 + z2 wb2 - 1) = wb1
    assert dR.evaluate((0.3j, 0.2), (0.5 + 0.5j, 0.1)) == pytest.approx(0.5 - 0.5j)
    assert R.derivative_z(1).evaluate((0, 0), (0, 2j)) == pytest.approx(-2j)


def test_rational_normalisation_and_equality():
    a = RationalExpr(z1 * z1 + z1 * z2, z1 * zb1)
    assert a.denominator == zb1
    assert a == RationalExpr(z1 + z2, zb1)
    assert RationalExpr(z1**2 - z2**2, z1 - z2) == RationalExpr(z1 + z2)
    assert RationalExpr(0, z1).is_zero()
    assert RationalExpr(z1 * 3, 3 * zb1).denominator == zb1


def test_rational_derivative():
    inverse = RationalExpr(1, z1)
    assert inverse.derivative("z1") == RationalExpr(-1, z1 * z1)
    assert inverse.derivative("zb1").is_zero()


def test_rational_arith_operations():
    a, b = RationalExpr(z1, zb1), RationalExpr(zb1, z1)
    assert rational_arith(a, b, "*") == RationalExpr(1)
    assert rational_arith(a, b, "÷") == RationalExpr(z1 * z1, zb1 * zb1)
    assert rational_arith(a, a, "−").is_zero()
    with pytest.raises(ValueError):
        rational_arith(a, b, "^")


def test_zero_denominators():
    with pytest.raises(ZeroDenominatorError):
        RationalExpr(1, 0)
    with pytest.raises(ZeroDenominatorError):
        RationalExpr(z1) / RationalExpr(0)
    with pytest.raises(ZeroDivisionError):
        RationalExpr(1, z1).evaluate(0j, 1 + 0j)


def test_ring_laws_on_random_triples():
    rng = np.random.default_rng(17)
    for _ in range(200):
        a, b, c = (random_poly(rng, terms=3) for _ in range(3))
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert (a + b) * c == a * c + b * c


def test_kernel_increment_matches_difference():
    kernel = polarize(z1 * zb1 + (z2 * zb2) ** 2 - 1)
    w = (0.8 + 0.1j, 0.3 - 0.2j)
    h = (0.05 - 0.02j, -0.01 + 0.04j)
    shifted = (w[0] + h[0], w[1] + h[1])
    expected = kernel.evaluate(shifted, w) - kernel.evaluate(w, w)
    assert kernel.increment(w, h) == pytest.approx(expected, abs=1e-14)
    steps = np.array([1e-3, -2e-5j, 3e-7])
    values = kernel.increment(w, (steps, 0.5 * steps))
    assert values.shape == (3,)
    assert values[0] == pytest.approx(kernel.increment(w, (1e-3, 5e-4)))


def test_kernel_increment_keeps_tiny_steps():
    kernel = polarize(z1 * zb1 + (z2 * zb2) ** 2 - 1)
    # R((1 + h, 0), (1, 0)) - R((1, 0), (1, 0)) is exactly h
    for h in (-3e-13 + 1e-14j, 2e-20, -1e-30j):
        assert kernel.increment((1 + 0j, 0j), (h, 0j)) == h
