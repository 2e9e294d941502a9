"""Exact normal-ordered algebra of multimode bosonic operator polynomials.

Operators are stored as sums of normal-ordered monomials
``prod_j ad_j^p a_j^q`` keyed to sympy coefficients: exact rational
functions of coupling symbols (``g3``, ``g4``, ...) and mode frequencies
(``w``, ``w1``, ...). Products are brought back to normal order with the
closed-form Wick rewrite ``a^q ad^r = sum_k k! C(q,k) C(r,k) ad^(r-k) a^(q-k)``.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import comb, factorial, perm
from typing import Iterator, Mapping, Sequence, Union

import sympy
from sympy.printing.str import StrPrinter

logger = logging.getLogger(__name__)

FREQUENCY_PREFIX = "w"
COUPLING_PATTERN = re.compile(r"^g(\d+)$")
RATIONAL_PATTERN = re.compile(r"-?\d+(/\d+)?")

Coefficient = sympy.Expr
Scalar = Union[int, Fraction, sympy.Expr]


class NotDiagonalError(ValueError):
    """Raised when an operation needs a diagonal operator and gets another."""


class UnresolvedSymbolError(ValueError):
    """Raised when a numeric evaluation meets a symbol without a value."""

    def __init__(self, symbol: str):
        super().__init__(f"No numeric value supplied for symbol '{symbol}'")
        self.symbol = symbol


# -- coefficients ---------------------------------------------------------------


def symbol(name: str, power: int = 1) -> Coefficient:
    return sympy.Symbol(name) ** power


def mode_frequency(mode: int) -> Coefficient:
    """Default frequency symbol of a mode: ``w`` for mode 0, ``w<j>`` otherwise."""
    return symbol(FREQUENCY_PREFIX if mode == 0 else f"{FREQUENCY_PREFIX}{mode}")


def as_coefficient(value: Scalar | str) -> Coefficient:
    """Coerce ints, Fractions, ``'p/q'`` strings and symbol names to an exact sympy coefficient.

    Raises:
        TypeError: For floats, which would make the algebra inexact
    """
    if isinstance(value, sympy.Basic):
        if value.has(sympy.Float):
            raise TypeError(f"Inexact coefficient {value}")
        return value
    if isinstance(value, float):
        raise TypeError(f"Inexact coefficient {value!r}: use int, Fraction or a 'p/q' string")
    if isinstance(value, Fraction):
        return sympy.Rational(value.numerator, value.denominator)
    if isinstance(value, str) and not RATIONAL_PATTERN.fullmatch(value):
        return sympy.Symbol(value)
    return sympy.Rational(value)


def _has_sum_denominator(expr: Coefficient) -> bool:
    return any(power.exp.is_negative and power.base.is_Add for power in expr.atoms(sympy.Pow))


def canonical(expr: Scalar | str) -> Coefficient:
    """Unique form of a coefficient, so structural equality is value equality.

    Laurent polynomials are fully expanded. Anything divided by a sum of
    frequencies is cancelled to lowest terms and written as expanded
    numerator terms over the factored denominator.
    """
    expr = sympy.expand(as_coefficient(expr))
    if not _has_sum_denominator(expr):
        return expr
    numerator, denominator = sympy.fraction(sympy.cancel(expr))
    denominator = sympy.factor(denominator)
    return sympy.Add(*(term / denominator for term in sympy.Add.make_args(sympy.expand(numerator))))


def divide_by_frequency(expr: Coefficient, frequency: Coefficient) -> Coefficient:
    """Divide by a rotation frequency such as ``3*w`` or ``w - w1``."""
    if canonical(frequency) == 0:
        raise ZeroDivisionError("Rotation frequency is identically zero")
    return canonical(expr / frequency)


def phi_weight(name: str) -> int:
    """Power of the zero-point fluctuation carried by one unit of a symbol.

    Couplings ``g<n>`` scale as phi_zpf^n and frequencies as phi_zpf^2;
    any other symbol is neutral.
    """
    match = COUPLING_PATTERN.match(name)
    if match:
        return int(match.group(1))
    if name.startswith(FREQUENCY_PREFIX):
        return 2
    return 0


def _base_weight(base: sympy.Expr) -> int:
    if base.is_Symbol:
        return phi_weight(base.name)
    if base.is_Add:
        return term_phi_degree(base.args[0])
    return 0


def _factors(term: Coefficient) -> list[tuple[sympy.Expr, int]]:
    return [(base, int(exponent)) for base, exponent in term.as_powers_dict().items() if not base.is_Number]


def term_phi_degree(term: Coefficient) -> int:
    return sum(_base_weight(base) * exponent for base, exponent in _factors(term))


def _term_key(term: Coefficient) -> tuple:
    return term_phi_degree(term), sorted((str(base), exponent) for base, exponent in _factors(term))


def terms(expr: Coefficient) -> list[Coefficient]:
    """Terms in canonical order: by phi_zpf degree, then factor text."""
    if expr == 0:
        return []
    return sorted(sympy.Add.make_args(expr), key=_term_key)


def phi_degrees(expr: Coefficient) -> set[int]:
    return {term_phi_degree(term) for term in terms(expr)}


def truncate_phi_degree(expr: Coefficient, max_degree: int) -> Coefficient:
    """Drop every term of zero-point-fluctuation degree above ``max_degree``."""
    return sympy.Add(*(term for term in terms(expr) if term_phi_degree(term) <= max_degree))


def powers_of(expr: Coefficient, name: str) -> dict[int, Coefficient]:
    """Group terms by the exponent of symbol ``name``; values no longer contain it."""
    variable = sympy.Symbol(name)
    grouped: dict[int, list[Coefficient]] = {}
    for term in terms(expr):
        exponent = int(term.as_powers_dict().get(variable, 0))
        grouped.setdefault(exponent, []).append(term / variable**exponent)
    return {exponent: sympy.Add(*parts) for exponent, parts in sorted(grouped.items())}


def coefficient_of(expr: Coefficient, exponents: Mapping[str, int] | None = None) -> sympy.Rational:
    """Rational coefficient of the monomial with the given exponents (0 if absent)."""
    wanted = sorted((name, power) for name, power in (exponents or {}).items() if power)
    for term in terms(expr):
        scale, rest = term.as_coeff_Mul()
        if sorted((str(base), exponent) for base, exponent in _factors(rest)) == wanted:
            return scale
    return sympy.S.Zero


def evaluate(expr: Coefficient, params: Mapping[str, float]) -> float:
    """Evaluate at numeric symbol values; exact until the substitution."""
    values = {}
    for variable in expr.free_symbols:
        if variable.name not in params:
            raise UnresolvedSymbolError(variable.name)
        values[variable] = sympy.Float(params[variable.name])
    return float(expr.xreplace(values))


class CoefficientPrinter(StrPrinter):
    """sympy's string printer with ``^`` powers and terms ordered by phi_zpf degree."""

    def _print_Pow(self, expr, rational=False):
        return super()._print_Pow(expr, rational).replace("**", "^")

    def _as_ordered_terms(self, expr, order=None):
        return sorted(expr.args, key=_term_key)


def render_coefficient(expr: Coefficient) -> str:
    """Stable text form such as ``-30*g3^2/w + 6*g4``."""
    return CoefficientPrinter().doprint(expr)


# -- monomials ------------------------------------------------------------------


def _mode_suffix(mode: int) -> str:
    return "" if mode == 0 else str(mode)


@dataclass(frozen=True, order=True)
class ModeMonomial:
    """Normal-ordered string ``prod_j ad_j^p_j a_j^q_j`` as sorted ``(mode, p, q)`` triples."""

    factors: tuple[tuple[int, int, int], ...] = ()

    def __post_init__(self):
        modes = [mode for mode, _, _ in self.factors]
        if modes != sorted(set(modes)):
            raise ValueError(f"Mode indices must be unique and sorted: {self.factors}")
        for mode, p, q in self.factors:
            if mode < 0 or p < 0 or q < 0:
                raise ValueError(f"Negative power or mode in {self.factors}")
            if p == 0 and q == 0:
                raise ValueError(f"Empty factor stored for mode {mode}")

    @classmethod
    def identity(cls) -> ModeMonomial:
        return cls(())

    @classmethod
    def of(cls, creation: int, annihilation: int, mode: int = 0) -> ModeMonomial:
        return cls.from_powers({mode: (creation, annihilation)})

    @classmethod
    def from_powers(cls, powers: Mapping[int, tuple[int, int]]) -> ModeMonomial:
        return cls(tuple((m, p, q) for m, (p, q) in sorted(powers.items()) if p or q))

    @property
    def modes(self) -> tuple[int, ...]:
        return tuple(mode for mode, _, _ in self.factors)

    def powers(self, mode: int) -> tuple[int, int]:
        for m, p, q in self.factors:
            if m == mode:
                return p, q
        return 0, 0

    def creation_power(self, mode: int = 0) -> int:
        return self.powers(mode)[0]

    def annihilation_power(self, mode: int = 0) -> int:
        return self.powers(mode)[1]

    def net_excitation(self, mode: int = 0) -> int:
        p, q = self.powers(mode)
        return p - q

    @property
    def is_identity(self) -> bool:
        return not self.factors

    @property
    def is_diagonal(self) -> bool:
        return all(p == q for _, p, q in self.factors)

    @property
    def degree(self) -> int:
        return sum(p + q for _, p, q in self.factors)

    def adjoint(self) -> ModeMonomial:
        return ModeMonomial(tuple((m, q, p) for m, p, q in self.factors))

    def __str__(self) -> str:
        if not self.factors:
            return "1"
        parts = []
        for mode, p, q in self.factors:
            suffix = _mode_suffix(mode)
            if p:
                parts.append(f"ad{suffix}" if p == 1 else f"ad{suffix}^{p}")
            if q:
                parts.append(f"a{suffix}" if q == 1 else f"a{suffix}^{q}")
        return " ".join(parts)


@lru_cache(maxsize=None)
def _single_mode_product(p1: int, q1: int, p2: int, q2: int) -> tuple[tuple[int, int, int], ...]:
    """(ad^p1 a^q1)(ad^p2 a^q2) as ``(p, q, weight)`` terms."""
    return tuple(
        (p1 + p2 - k, q1 + q2 - k, factorial(k) * comb(q1, k) * comb(p2, k))
        for k in range(min(q1, p2) + 1)
    )


@lru_cache(maxsize=None)
def _monomial_product(lhs: ModeMonomial, rhs: ModeMonomial) -> tuple[tuple[ModeMonomial, int], ...]:
    modes = sorted(set(lhs.modes) | set(rhs.modes))
    per_mode = [
        [(mode, p, q, w) for p, q, w in _single_mode_product(*lhs.powers(mode), *rhs.powers(mode))]
        for mode in modes
    ]
    results = []
    for combination in product(*per_mode):
        weight = 1
        factors = []
        for mode, p, q, w in combination:
            weight *= w
            if p or q:
                factors.append((mode, p, q))
        results.append((ModeMonomial(tuple(factors)), weight))
    return tuple(results)


# -- operator polynomials -------------------------------------------------------


class OperatorPolynomial:
    """Canonical sum of normal-ordered monomials with exact sympy coefficients.

    Immutable; no monomial maps to a zero coefficient, every coefficient is in
    :func:`canonical` form and terms are kept in lexicographic ``(mode, p, q)``
    order, so equal operators compare equal.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[ModeMonomial, Scalar | str] | None = None):
        cleaned = {}
        for monomial, coefficient in (terms or {}).items():
            coefficient = canonical(coefficient)
            if coefficient != 0:
                cleaned[monomial] = coefficient
        self._terms: dict[ModeMonomial, Coefficient] = dict(sorted(cleaned.items()))
        self._hash: int | None = None

    @classmethod
    def _from_buckets(cls, buckets: Mapping[ModeMonomial, list[Coefficient]]) -> OperatorPolynomial:
        return cls({monomial: sympy.Add(*parts) for monomial, parts in buckets.items()})

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls) -> OperatorPolynomial:
        return cls()

    @classmethod
    def identity(cls, coefficient: Scalar | str = 1) -> OperatorPolynomial:
        return cls({ModeMonomial.identity(): coefficient})

    @classmethod
    def monomial(
        cls, creation: int, annihilation: int, mode: int = 0, coefficient: Scalar | str = 1
    ) -> OperatorPolynomial:
        return cls({ModeMonomial.of(creation, annihilation, mode): coefficient})

    @classmethod
    def creation(cls, mode: int = 0) -> OperatorPolynomial:
        return cls.monomial(1, 0, mode)

    @classmethod
    def annihilation(cls, mode: int = 0) -> OperatorPolynomial:
        return cls.monomial(0, 1, mode)

    @classmethod
    def number(cls, mode: int = 0) -> OperatorPolynomial:
        return cls.monomial(1, 1, mode)

    # -- queries -------------------------------------------------------------

    def items(self) -> Iterator[tuple[ModeMonomial, Coefficient]]:
        return iter(self._terms.items())

    @property
    def monomials(self) -> tuple[ModeMonomial, ...]:
        return tuple(self._terms)

    def coefficient(self, monomial: ModeMonomial) -> Coefficient:
        return self._terms.get(monomial, sympy.S.Zero)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[ModeMonomial]:
        return iter(self._terms)

    @property
    def modes(self) -> tuple[int, ...]:
        return tuple(sorted({mode for monomial in self._terms for mode in monomial.modes}))

    @property
    def max_degree(self) -> int:
        return max((monomial.degree for monomial in self._terms), default=0)

    @property
    def free_symbols(self) -> set[str]:
        return {variable.name for coefficient in self._terms.values() for variable in coefficient.free_symbols}

    def is_diagonal(self) -> bool:
        return all(monomial.is_diagonal for monomial in self._terms)

    def is_hermitian(self) -> bool:
        return self.adjoint() == self

    def is_anti_hermitian(self) -> bool:
        return self.adjoint() == -self

    def adjoint(self) -> OperatorPolynomial:
        return adjoint(self)

    def split_diagonal(self) -> tuple[OperatorPolynomial, OperatorPolynomial]:
        return split_diagonal(self)

    def map_coefficients(self, function) -> OperatorPolynomial:
        return OperatorPolynomial({m: function(c) for m, c in self._terms.items()})

    def truncate_phi_degree(self, max_degree: int) -> OperatorPolynomial:
        return self.map_coefficients(lambda c: truncate_phi_degree(c, max_degree))

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: OperatorPolynomial) -> OperatorPolynomial:
        if not isinstance(other, OperatorPolynomial):
            other = OperatorPolynomial.identity(other)
        terms = dict(self._terms)
        for monomial, coefficient in other._terms.items():
            terms[monomial] = terms[monomial] + coefficient if monomial in terms else coefficient
        return OperatorPolynomial(terms)

    __radd__ = __add__

    def __neg__(self) -> OperatorPolynomial:
        return self.map_coefficients(lambda c: -c)

    def __sub__(self, other: OperatorPolynomial) -> OperatorPolynomial:
        if not isinstance(other, OperatorPolynomial):
            other = OperatorPolynomial.identity(other)
        return self + (-other)

    def __rsub__(self, other) -> OperatorPolynomial:
        return OperatorPolynomial.identity(other) - self

    def __mul__(self, other) -> OperatorPolynomial:
        if isinstance(other, OperatorPolynomial):
            return multiply(self, other)
        if isinstance(other, (int, Fraction, str, sympy.Basic)):
            factor = as_coefficient(other)
            return self.map_coefficients(lambda c: c * factor)
        return NotImplemented

    def __rmul__(self, other) -> OperatorPolynomial:
        # Scalars commute with everything.
        return self.__mul__(other)

    def __truediv__(self, other: int | Fraction) -> OperatorPolynomial:
        if not isinstance(other, (int, Fraction)):
            return NotImplemented
        return self * (1 / as_coefficient(other))

    def __pow__(self, exponent: int) -> OperatorPolynomial:
        if exponent < 0:
            raise ValueError("Negative operator powers are not defined")
        result = OperatorPolynomial.identity()
        for _ in range(exponent):
            result = multiply(result, self)
        return result

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int) and other == 0:
            return self.is_zero
        if not isinstance(other, OperatorPolynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # -- rendering -----------------------------------------------------------

    def render(self, multiline: bool = False) -> str:
        """Stable text form, e.g. ``(-30*g3^2/w) * ad^2 a^2``."""
        if not self._terms:
            return "0"
        terms = [f"({render_coefficient(coefficient)}) * {monomial}" for monomial, coefficient in self._terms.items()]
        return ("\n+ " if multiline else " + ").join(terms)

    def __str__(self) -> str:
        return self.render()

    def __repr__(self) -> str:
        return f"OperatorPolynomial('{self.render()}')"


def multiply(lhs: OperatorPolynomial, rhs: OperatorPolynomial) -> OperatorPolynomial:
    """Normal-ordered product ``lhs * rhs``."""
    buckets: dict[ModeMonomial, list[Coefficient]] = {}
    for left_monomial, left_coefficient in lhs.items():
        for right_monomial, right_coefficient in rhs.items():
            coefficient = left_coefficient * right_coefficient
            for monomial, weight in _monomial_product(left_monomial, right_monomial):
                buckets.setdefault(monomial, []).append(weight * coefficient)
    return OperatorPolynomial._from_buckets(buckets)


def commutator(lhs: OperatorPolynomial, rhs: OperatorPolynomial) -> OperatorPolynomial:
    return multiply(lhs, rhs) - multiply(rhs, lhs)


@lru_cache(maxsize=64)
def expand_quadrature_power(mode: int, n: int) -> OperatorPolynomial:
    """Normal-ordered ``(a + ad)^n`` for one mode."""
    if n < 0:
        raise ValueError(f"Quadrature power must be non-negative, got {n}")
    quadrature = OperatorPolynomial.creation(mode) + OperatorPolynomial.annihilation(mode)
    result = OperatorPolynomial.identity()
    for _ in range(n):
        result = multiply(result, quadrature)
    return result


def split_diagonal(polynomial: OperatorPolynomial) -> tuple[OperatorPolynomial, OperatorPolynomial]:
    """Split into (diagonal, off-diagonal) parts; diagonal means p_j == q_j for every mode."""
    diagonal = {m: c for m, c in polynomial.items() if m.is_diagonal}
    offdiagonal = {m: c for m, c in polynomial.items() if not m.is_diagonal}
    return OperatorPolynomial(diagonal), OperatorPolynomial(offdiagonal)


def _frequency_of(frequencies: Sequence[Coefficient | str] | None, mode: int) -> Coefficient:
    if frequencies is None:
        return mode_frequency(mode)
    if mode >= len(frequencies):
        raise IndexError(f"No frequency given for mode {mode}")
    return as_coefficient(frequencies[mode])


def rotation_frequency(monomial: ModeMonomial, frequencies: Sequence[Coefficient | str] | None = None) -> Coefficient:
    """Frequency ``sum_j (p_j - q_j) w_j`` at which the monomial rotates under the free evolution."""
    total = sympy.S.Zero
    for mode, p, q in monomial.factors:
        if p != q:
            total = total + _frequency_of(frequencies, mode) * (p - q)
    return canonical(total)


def adjoint(polynomial: OperatorPolynomial) -> OperatorPolynomial:
    """Hermitian conjugate; coefficients are real so only the monomials change."""
    return OperatorPolynomial({m.adjoint(): c for m, c in polynomial.items()})


def diagonal_matrix_element(polynomial: OperatorPolynomial, occupation: int | Sequence[int]) -> Coefficient:
    """``<n|P|n>`` for a diagonal polynomial via falling factorials n!/(n-k)!."""
    if isinstance(occupation, int):
        occupation = (occupation,)
    parts = []
    for monomial, coefficient in polynomial.items():
        if not monomial.is_diagonal:
            raise NotDiagonalError(f"Monomial {monomial} is off-diagonal")
        weight = 1
        for mode, k, _ in monomial.factors:
            n = occupation[mode] if mode < len(occupation) else 0
            weight *= perm(n, k)
        if weight:
            parts.append(coefficient * weight)
    return canonical(sympy.Add(*parts))
