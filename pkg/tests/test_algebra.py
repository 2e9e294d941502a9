"""Tests for the normal-ordered operator algebra."""

from fractions import Fraction

import numpy as np
import pytest
import sympy

from src.bosonic_sw.algebra import (
    ModeMonomial,
    NotDiagonalError,
    OperatorPolynomial,
    UnresolvedSymbolError,
    as_coefficient,
    canonical,
    coefficient_of,
    commutator,
    diagonal_matrix_element,
    divide_by_frequency,
    evaluate,
    expand_quadrature_power,
    multiply,
    phi_degrees,
    phi_weight,
    powers_of,
    render_coefficient,
    rotation_frequency,
    split_diagonal,
    symbol,
    terms,
    truncate_phi_degree,
)
from src.bosonic_sw.fock import matrix_of


def random_polynomial(rng, max_power: int = 3, max_terms: int = 3) -> OperatorPolynomial:
    entries = {}
    for _ in range(int(rng.integers(1, max_terms + 1))):
        p, q = (int(x) for x in rng.integers(0, max_power + 1, size=2))
        entries[ModeMonomial.of(p, q)] = Fraction(int(rng.integers(-3, 4)), int(rng.integers(1, 3)))
    return OperatorPolynomial(entries)


class TestCoefficients:
    """Test exact sympy coefficients."""

    def test_render_orders_by_phi_degree(self, g3_over_w):
        """Terms of equal phi degree are ordered by symbol text."""
        kerr = canonical(symbol("g4") * 6 - symbol("g3", 2) * symbol("w", -1) * 30)
        assert render_coefficient(kerr) == "-30*g3^2/w + 6*g4"
        assert render_coefficient(g3_over_w) == "g3/w"
        assert render_coefficient(canonical(symbol("g4") + symbol("g4", 2) / symbol("w"))) == "g4 + g4^2/w"

    def test_zero_terms_cancel(self):
        """Cancelling terms leave zero."""
        value = canonical(symbol("g3") * 2 - symbol("g3") * 2)
        assert value == 0
        assert render_coefficient(value) == "0"
        assert terms(value) == []

    def test_float_coefficients_rejected(self):
        """Inexact scalars are refused."""
        with pytest.raises(TypeError):
            as_coefficient(0.5)
        with pytest.raises(TypeError):
            OperatorPolynomial.identity(sympy.Float(0.5))

    def test_rational_arithmetic(self):
        """Division by integers stays exact."""
        value = canonical(symbol("g4") / 3 + symbol("g4") / 6)
        assert coefficient_of(value, {"g4": 1}) == sympy.Rational(1, 2)
        assert as_coefficient(Fraction(3, 4)) == sympy.Rational(3, 4)
        assert as_coefficient("3/4") == sympy.Rational(3, 4)
        assert as_coefficient("g5") == symbol("g5")

    def test_divide_by_monomial_frequency(self):
        """Single-term frequencies invert to negated exponents."""
        value = divide_by_frequency(sympy.Integer(1), symbol("w") * 3)
        assert coefficient_of(value, {"w": -1}) == sympy.Rational(1, 3)

    def test_detuning_cancels(self):
        """Dividing by w - w1 and multiplying back is exact for any numerator."""
        numerator = canonical(symbol("g") * symbol("w") + symbol("g3", 2) / symbol("w1") + 7)
        detuning = symbol("w") - symbol("w1")
        quotient = divide_by_frequency(numerator, detuning)
        assert canonical(quotient * detuning) == numerator
        assert canonical(quotient * (2 * detuning)) == canonical(2 * numerator)

    def test_equal_detunings_share_one_form(self):
        """g^2/(w - w1) reached two ways gives one canonical coefficient."""
        direct = divide_by_frequency(symbol("g", 2), symbol("w") - symbol("w1"))
        scaled = divide_by_frequency(-2 * symbol("g", 2), 2 * symbol("w1") - 2 * symbol("w"))
        assert direct == scaled
        assert render_coefficient(direct) == "g^2/(w - w1)"

    def test_zero_frequency_rejected(self):
        with pytest.raises(ZeroDivisionError):
            divide_by_frequency(symbol("g"), symbol("w") - symbol("w"))

    def test_evaluate(self):
        """Numeric evaluation substitutes every symbol."""
        kerr = canonical(symbol("g4") * 6 - symbol("g3", 2) * symbol("w", -1) * 30)
        assert evaluate(kerr, {"g3": 2.0, "g4": 1.0, "w": 10.0}) == pytest.approx(6 - 12)

    def test_evaluate_missing_symbol(self):
        """Missing values name the symbol."""
        with pytest.raises(UnresolvedSymbolError) as error:
            evaluate(symbol("g5"), {"g3": 1.0})
        assert error.value.symbol == "g5"

    def test_phi_weights(self):
        """Couplings scale as their index, frequencies as two."""
        assert phi_weight("g3") == 3
        assert phi_weight("g6") == 6
        assert phi_weight("w") == 2
        assert phi_weight("w2") == 2
        assert phi_weight("lam") == 0

    def test_truncate_phi_degree(self):
        """Only terms up to the given degree survive."""
        value = canonical(symbol("g4") + symbol("g4", 2) * symbol("w", -1))
        assert phi_degrees(value) == {4, 6}
        assert truncate_phi_degree(value, 4) == symbol("g4")

    def test_powers_of(self):
        """Grouping by one symbol strips it from the values."""
        value = canonical(symbol("g4") * 6 - symbol("g3", 2) * symbol("w", -1) * 30)
        grouped = powers_of(value, "g4")
        assert grouped[1] == 6
        assert grouped[0] == -30 * symbol("g3", 2) * symbol("w", -1)


class TestModeMonomial:
    """Test normal-ordered monomials."""

    def test_render(self):
        """Rendering uses ad/a with powers and mode suffixes."""
        assert str(ModeMonomial.of(2, 2)) == "ad^2 a^2"
        assert str(ModeMonomial.of(1, 1, mode=1)) == "ad1 a1"
        assert str(ModeMonomial.identity()) == "1"

    def test_properties(self):
        """Degree, diagonality and adjoint."""
        monomial = ModeMonomial.from_powers({0: (2, 1), 1: (0, 1)})
        assert monomial.degree == 4
        assert not monomial.is_diagonal
        assert monomial.adjoint() == ModeMonomial.from_powers({0: (1, 2), 1: (1, 0)})

    def test_rejects_unsorted_modes(self):
        """Factors must be in mode order."""
        with pytest.raises(ValueError):
            ModeMonomial(((1, 1, 0), (0, 1, 0)))


class TestNormalOrdering:
    """Test products and commutators."""

    def test_canonical_commutator(self, ladder):
        """[a, ad] = 1."""
        a, ad = ladder
        assert commutator(a, ad) == OperatorPolynomial.identity()

    def test_wick_rewrite(self, ladder):
        """a^2 ad^2 = ad^2 a^2 + 4 ad a + 2."""
        a, ad = ladder
        expected = OperatorPolynomial({ModeMonomial.of(2, 2): 1, ModeMonomial.of(1, 1): 4, ModeMonomial.identity(): 2})
        assert multiply(a**2, ad**2) == expected

    def test_modes_commute(self):
        """Operators on different modes commute."""
        a0 = OperatorPolynomial.annihilation(0)
        ad1 = OperatorPolynomial.creation(1)
        assert commutator(a0, ad1) == 0

    def test_quartic_quadrature(self):
        """(a + ad)^4 = ad^4 + 4 ad^3 a + 6 ad^2 a^2 + ... + 12 ad a + 3."""
        quartic = expand_quadrature_power(0, 4)
        assert quartic.coefficient(ModeMonomial.of(2, 2)) == 6
        assert quartic.coefficient(ModeMonomial.of(3, 1)) == 4
        assert quartic.coefficient(ModeMonomial.of(2, 0)) == 6
        assert quartic.coefficient(ModeMonomial.of(1, 1)) == 12
        assert quartic.coefficient(ModeMonomial.identity()) == 3
        assert quartic.is_hermitian()

    def test_cubic_quadrature(self):
        """(a + ad)^3 has the linear terms 3a + 3ad."""
        cubic = expand_quadrature_power(0, 3)
        assert cubic.coefficient(ModeMonomial.of(1, 0)) == 3
        assert cubic.coefficient(ModeMonomial.of(2, 1)) == 3
        assert cubic.coefficient(ModeMonomial.of(0, 3)) == 1

    def test_symbolic_coefficients_multiply(self, ladder, g3_over_w):
        """Coefficients multiply alongside the operators."""
        a, ad = ladder
        product = multiply(a * symbol("g3"), ad * symbol("w", -1))
        assert product.coefficient(ModeMonomial.identity()) == g3_over_w

    def test_render(self):
        """Polynomials render as (coefficient) * monomial."""
        kerr = OperatorPolynomial.monomial(2, 2, coefficient=-30 * symbol("g3", 2) * symbol("w", -1))
        assert kerr.render() == "(-30*g3^2/w) * ad^2 a^2"


class TestStructure:
    """Test diagonal splits, adjoints and rotation frequencies."""

    def test_split_diagonal(self):
        """Diagonal and off-diagonal parts add back to the whole."""
        quartic = expand_quadrature_power(0, 4)
        diagonal, offdiagonal = split_diagonal(quartic)
        assert diagonal.is_diagonal()
        assert all(not m.is_diagonal for m in offdiagonal)
        assert diagonal + offdiagonal == quartic

    def test_rotation_frequency(self):
        """Rotation frequency sums (p - q) w_j."""
        assert rotation_frequency(ModeMonomial.of(2, 1)) == symbol("w")
        assert rotation_frequency(ModeMonomial.of(0, 3)) == symbol("w") * -3
        mixed = ModeMonomial.from_powers({0: (1, 0), 1: (0, 1)})
        assert rotation_frequency(mixed) == symbol("w") - symbol("w1")

    def test_anti_hermitian(self, ladder):
        """ad - a is anti-Hermitian."""
        a, ad = ladder
        assert (ad - a).is_anti_hermitian()
        assert not (ad - a).is_hermitian()

    def test_diagonal_matrix_element(self):
        """<n| ad^k a^k |n> = n!/(n-k)!."""
        kerr = OperatorPolynomial.monomial(2, 2, coefficient=symbol("g4"))
        assert diagonal_matrix_element(kerr, 3) == symbol("g4") * 6
        assert diagonal_matrix_element(kerr, 1) == 0

    def test_diagonal_matrix_element_rejects_offdiagonal(self, ladder):
        a, _ = ladder
        with pytest.raises(NotDiagonalError):
            diagonal_matrix_element(a, 2)


class TestAlgebraProperties:
    """Randomised checks against matrices and the Lie-algebra identities."""

    def test_product_matches_matrix_oracle(self, rng):
        """Symbolic products agree with truncated matrix products away from the cutoff."""
        dim = 14
        for _ in range(500):
            lhs, rhs = random_polynomial(rng), random_polynomial(rng)
            product = matrix_of(lhs * rhs, {}, dim, hermitian=False)
            oracle = matrix_of(lhs, {}, dim, hermitian=False) @ matrix_of(rhs, {}, dim, hermitian=False)
            safe = dim - lhs.max_degree - rhs.max_degree
            np.testing.assert_allclose(product[:safe, :safe], oracle[:safe, :safe], atol=1e-9)

    def test_jacobi_and_antisymmetry(self, rng):
        """[A,B] = -[B,A] and the Jacobi identity hold exactly."""
        for _ in range(200):
            a, b, c = (random_polynomial(rng, max_power=2) for _ in range(3))
            assert commutator(a, b) == -commutator(b, a)
            jacobi = commutator(a, commutator(b, c)) + commutator(b, commutator(c, a)) + commutator(c, commutator(a, b))
            assert jacobi == 0
