"""Order-by-order Schrieffer-Wolff diagonalisation and the James time-averaged method."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
import sympy
from scipy.optimize import brentq

from .algebra import (
    Coefficient,
    OperatorPolynomial,
    adjoint,
    canonical,
    commutator,
    divide_by_frequency,
    evaluate,
    phi_degrees,
    powers_of,
    render_coefficient,
    rotation_frequency,
    split_diagonal,
    truncate_phi_degree,
)
from .fock import matrix_of
from .models import EffectiveExpansion, PerturbationProblem

logger = logging.getLogger(__name__)


class ResonanceError(ValueError):
    """An off-diagonal monomial has a vanishing rotation frequency."""


class ExpansionConsistencyError(RuntimeError):
    """The transformed Hamiltonian is not diagonal where it should be."""


class NoKerrFreePointError(ValueError):
    """The Kerr coefficient does not change sign in the searched range."""


def solve_generator(
    v_off: OperatorPolynomial, frequencies: Optional[Sequence[Coefficient]] = None
) -> OperatorPolynomial:
    """Generator S with [S, H0] = -V_off: each monomial is divided by its rotation frequency.

    Args:
        v_off: Off-diagonal operator to eliminate
        frequencies: Per-mode frequencies (default symbols ``w``, ``w1``, ...)

    Returns:
        Generator polynomial; anti-Hermitian whenever ``v_off`` is Hermitian

    Raises:
        ResonanceError: If a monomial does not rotate (diagonal or resonant)
    """
    terms = {}
    for monomial, coefficient in v_off.items():
        delta = rotation_frequency(monomial, frequencies)
        if delta == 0:
            raise ResonanceError(
                f"Monomial {monomial} has zero rotation frequency; remove secular terms with split_diagonal first"
            )
        terms[monomial] = divide_by_frequency(coefficient, delta)
    return OperatorPolynomial(terms)


def commutator_with_free(
    polynomial: OperatorPolynomial, frequencies: Optional[Sequence[Coefficient]] = None
) -> OperatorPolynomial:
    """[P, H0] for H0 = sum_j w_j ad_j a_j, i.e. each monomial times minus its rotation frequency."""
    terms = {}
    for monomial, coefficient in polynomial.items():
        delta = rotation_frequency(monomial, frequencies)
        if delta != 0:
            terms[monomial] = -canonical(coefficient * delta)
    return OperatorPolynomial(terms)


def bch_order_coefficients(
    problem: PerturbationProblem,
    generators: Sequence[OperatorPolynomial],
    max_order: Optional[int] = None,
) -> list[OperatorPolynomial]:
    """Coefficients of lambda^m in e^S (H0 + lambda V) e^-S with S = sum_n lambda^n S^(n).

    The nested commutators T_j = [S, T_(j-1)] are kept graded by lambda order
    and truncated at ``max_order`` (default: the problem order), so the sum
    over j stops at j = max_order.

    Returns:
        List of the order-0..max_order coefficients
    """
    top = problem.order if max_order is None else max_order
    if len(generators) > top:
        raise ValueError(f"{len(generators)} generators given for order {top}")

    totals = [OperatorPolynomial.zero() for _ in range(top + 1)]
    totals[0] = problem.h0
    if top >= 1:
        totals[1] = problem.v

    level: dict[int, OperatorPolynomial] = {0: problem.h0, 1: problem.v}
    for j in range(1, top + 1):
        next_level: dict[int, OperatorPolynomial] = {}
        for source_order, operator in level.items():
            for n, generator in enumerate(generators, start=1):
                target = source_order + n
                if target > top or generator.is_zero:
                    continue
                if source_order == 0:
                    term = commutator_with_free(generator, problem.frequencies)
                else:
                    term = commutator(generator, operator)
                if not term.is_zero:
                    next_level[target] = next_level[target] + term if target in next_level else term
        if not next_level:
            break
        weight = sympy.Rational(1, math.factorial(j))
        for target, operator in next_level.items():
            totals[target] = totals[target] + operator * weight
        level = next_level
    return totals


def effective_hamiltonian(
    problem: PerturbationProblem,
    verify: bool = True,
    progress_callback: Optional[Callable] = None,
) -> EffectiveExpansion:
    """Full diagonalisation of H0 + V to order M.

    At order m the generators S^(1)..S^(m-1) are fixed and the lambda^m
    coefficient V^(m) is split; its off-diagonal part fixes S^(m) and its
    diagonal part is H^(m).

    Args:
        problem: Hamiltonian and target order
        verify: Re-run the transformation with every generator and check diagonality
        progress_callback: Optional ``(current, total, message)`` hook

    Returns:
        EffectiveExpansion with per-order generators and diagonal terms

    Raises:
        ExpansionConsistencyError: If the verification pass finds an off-diagonal remainder
    """
    generators: list[OperatorPolynomial] = []
    diagonal_terms: list[OperatorPolynomial] = []
    perturbations: list[OperatorPolynomial] = []
    max_degrees: list[int] = []

    for m in range(1, problem.order + 1):
        if progress_callback:
            progress_callback(m - 1, problem.order, f"Order {m}/{problem.order}")

        v_m = bch_order_coefficients(problem, generators, max_order=m)[m]
        diagonal, offdiagonal = split_diagonal(v_m)
        try:
            s_m = solve_generator(offdiagonal, problem.frequencies)
        except ResonanceError as e:
            raise ExpansionConsistencyError(f"Order {m}: {e}") from e

        generators.append(s_m)
        diagonal_terms.append(diagonal)
        perturbations.append(v_m)
        max_degrees.append(max(v_m.max_degree, s_m.max_degree))
        logger.info(
            f"Order {m}: {len(s_m)} generator monomials, {len(diagonal)} diagonal monomials, "
            f"max degree {max_degrees[-1]}"
        )

    if verify:
        check = bch_order_coefficients(problem, generators)
        for m in range(1, problem.order + 1):
            if not check[m].is_diagonal():
                raise ExpansionConsistencyError(f"Order {m} of the transformed Hamiltonian is not diagonal")
            if check[m] != diagonal_terms[m - 1]:
                raise ExpansionConsistencyError(f"Order {m} diagonal part changed on the verification pass")
        logger.debug(f"Verified diagonality through order {problem.order}")

    if progress_callback:
        progress_callback(problem.order, problem.order, "Expansion complete")

    return EffectiveExpansion(
        problem=problem,
        generators=tuple(generators),
        diagonal_terms=tuple(diagonal_terms),
        perturbations=tuple(perturbations),
        max_degrees=tuple(max_degrees),
    )


def _net_excitation(polynomial: OperatorPolynomial) -> int:
    signs = {sum(p - q for _, p, q in monomial.factors) for monomial in polynomial}
    if len(signs) > 1 and any(s > 0 for s in signs) and any(s < 0 for s in signs):
        raise ValueError(f"Harmonic mixes raising and lowering monomials: {polynomial}")
    return max(signs, key=abs, default=0)


def james_second_order(
    h0: OperatorPolynomial, harmonics: Sequence[tuple[OperatorPolynomial, Coefficient]]
) -> OperatorPolynomial:
    """Time-averaged effective Hamiltonian h0 + sum_n (1/w_n) [h_n^dag, h_n].

    Each h_n is the component rotating as e^(-i w_n t). A harmonic given in
    raising form (net excitation > 0) is replaced by its lowering partner
    h_n^dag before the commutator is taken, so a lone g ad at w contributes
    -g^2/w rather than +g^2/w. With this convention the pure cubic resonator
    gives the -30 g3^2/w Kerr term of the full Schrieffer-Wolff expansion.

    Raises:
        ResonanceError: If a frequency is zero
        ValueError: If two harmonics share a frequency
    """
    frequencies = [canonical(frequency) for _, frequency in harmonics]
    for frequency in frequencies:
        if frequency == 0:
            raise ResonanceError("Harmonic frequencies must be nonzero")
    if len(set(frequencies)) != len(frequencies):
        raise ValueError("Harmonic frequencies must be pairwise distinct")

    result = h0
    for (harmonic, _), frequency in zip(harmonics, frequencies):
        if _net_excitation(harmonic) > 0:
            harmonic = adjoint(harmonic)
        term = commutator(adjoint(harmonic), harmonic)
        result = result + term.map_coefficients(lambda c: divide_by_frequency(c, frequency))
    return result


def harmonics_from_perturbation(
    v: OperatorPolynomial, frequencies: Optional[Sequence[Coefficient]] = None
) -> list[tuple[OperatorPolynomial, Coefficient]]:
    """Group the off-diagonal part of V into lowering-type harmonics (h_n, w_n), w_n > 0.

    Returns:
        Harmonics ordered by frequency text; h_n + h_n^dag summed over n gives V_off
    """
    _, offdiagonal = split_diagonal(v)
    groups: dict[Coefficient, dict] = {}
    for monomial, coefficient in offdiagonal.items():
        delta = rotation_frequency(monomial, frequencies)
        net = sum(p - q for _, p, q in monomial.factors)
        lowering = net < 0 or (net == 0 and delta.could_extract_minus_sign())
        if lowering:
            groups.setdefault(canonical(-delta), {})[monomial] = coefficient
    harmonics = [(OperatorPolynomial(terms), frequency) for frequency, terms in groups.items()]
    return sorted(harmonics, key=lambda item: (sorted(phi_degrees(item[1])), render_coefficient(item[1])))


@dataclass(frozen=True)
class KerrFreeRelation:
    """Kerr coefficient c_2 and its leading-order root g4* = -c2|g4=0 / (dc2/dg4)."""

    kerr: Coefficient
    leading_g4: Coefficient
    order: int

    def _kerr_at(self, g3: float, g4: float, w: float) -> float:
        return evaluate(self.kerr, {"g3": g3, "g4": g4, "w": w})

    def solve_g4(self, g3: float, w: float, bracket: Optional[tuple[float, float]] = None) -> float:
        """g4 at which c_2 vanishes for fixed (g3, w), any consistent frequency unit.

        Raises:
            NoKerrFreePointError: If c_2 does not change sign inside the bracket
        """
        estimate = evaluate(self.leading_g4, {"g3": g3, "w": w})
        if self.order <= 2:
            return estimate
        if g3 == 0:
            return 0.0
        low, high = bracket or (0.0, 2 * estimate)
        return self._root(lambda g4: self._kerr_at(g3, g4, w), low, high, "g4")

    def solve_g3(self, g4: float, w: float, bracket: Optional[tuple[float, float]] = None) -> float:
        """Non-negative g3 at which c_2 vanishes for fixed (g4, w).

        Raises:
            NoKerrFreePointError: If c_2 does not change sign inside the bracket
        """
        if g4 < 0:
            raise NoKerrFreePointError(f"No real Kerr-free g3 for g4 = {g4} < 0")
        estimate = math.sqrt(g4 * w / 5)
        if self.order <= 2:
            return estimate
        if g4 == 0:
            return 0.0
        low, high = bracket or (0.0, 2 * estimate)
        return self._root(lambda g3: self._kerr_at(g3, g4, w), low, high, "g3")

    @staticmethod
    def _root(function: Callable[[float], float], low: float, high: float, name: str) -> float:
        f_low, f_high = function(low), function(high)
        if np.sign(f_low) == np.sign(f_high):
            raise NoKerrFreePointError(f"No Kerr-free point in range {name} in [{low:.6g}, {high:.6g}]")
        root = brentq(function, low, high, xtol=1e-12 * max(abs(high), 1.0), rtol=1e-14)
        logger.debug(f"Kerr-free {name} = {root:.9g}")
        return root


def kerr_free_point(expansion: EffectiveExpansion, order: Optional[int] = None) -> KerrFreeRelation:
    """Kerr-free relation from c_2 truncated to the phi_zpf degree complete at ``order``.

    At order <= 2 the relation is the closed form g4* = 5 g3^2 / w; at higher
    orders :meth:`KerrFreeRelation.solve_g4` / ``solve_g3`` find the bracketed
    root of the truncated c_2.
    """
    order = expansion.order if order is None else order
    if order > expansion.order:
        raise ValueError(f"Expansion only reaches order {expansion.order}, asked for {order}")
    coefficients = expansion.diagonal_coefficients()
    if len(coefficients) < 3:
        raise NoKerrFreePointError("Expansion has no a^dag^2 a^2 term")
    kerr = truncate_phi_degree(coefficients[2], order + 2)

    quartic = truncate_phi_degree(kerr, 4)
    leading = powers_of(quartic, "g4")
    slope = leading.get(1)
    if slope is None or slope == 0 or set(leading) - {0, 1}:
        raise NoKerrFreePointError(f"Leading Kerr term {render_coefficient(quartic)} is not linear in g4")
    leading_g4 = canonical(-leading.get(0, sympy.S.Zero) / slope)
    logger.info(f"Leading-order Kerr-free point: g4* = {render_coefficient(leading_g4)}")
    return KerrFreeRelation(kerr=kerr, leading_g4=leading_g4, order=order)


def kerr_free_g3(expansion: EffectiveExpansion, g4: float, w: float, order: Optional[int] = None) -> float:
    """Improved Kerr-free g3 at fixed g4 (root of the truncated c_2)."""
    return kerr_free_point(expansion, order).solve_g3(g4, w)


def perturbative_energies(
    expansion: EffectiveExpansion,
    n_max: int,
    params: Mapping[str, float],
    truncated: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """E_n = w n + sum_k c_k n!/(n-k)! and Delta E_n = E_n - n E_1 for n = 0..n_max.

    Args:
        expansion: Single-mode effective expansion
        n_max: Highest level
        params: Numeric values for ``w`` and every coupling symbol
        truncated: Use the coefficients complete in phi_zpf degree

    Returns:
        (energies, delta_e) arrays of length n_max + 1
    """
    coefficients = [evaluate(c, params) for c in expansion.diagonal_coefficients(truncated=truncated)]
    omega = evaluate(expansion.problem.frequencies[0], params)
    levels = np.arange(n_max + 1)
    energies = omega * levels.astype(float)
    for k, c_k in enumerate(coefficients):
        energies = energies + c_k * np.array([float(math.perm(int(n), k)) for n in levels])
    energy_1 = energies[1] if n_max >= 1 else energies[0]
    return energies, energies - levels * energy_1


def generator_matrix_identity_check(
    problem: PerturbationProblem,
    expansion: EffectiveExpansion,
    dim: int,
    params: Mapping[str, float],
    order: int = 1,
) -> float:
    """Largest relative |<k|S|l> - <k|V_N|l>/(E_k - E_l)| over k != l for S^(order).

    Only the block below the highest generated monomial degree is compared.
    """
    if not problem.is_single_mode:
        raise ValueError("The matrix identity check is implemented for single-mode problems")
    if dim < 12:
        raise ValueError(f"dim must be at least 12, got {dim}")
    generator = expansion.generators[order - 1]
    if generator.is_zero:
        return 0.0

    _, v_off = split_diagonal(expansion.perturbations[order - 1])
    s_matrix = matrix_of(generator, params, dim, hermitian=False)
    v_matrix = matrix_of(v_off, params, dim, hermitian=False)
    energies = np.real(np.diag(matrix_of(problem.h0, params, dim)))

    safe = max(dim - max(generator.max_degree, v_off.max_degree), 2)
    gaps = energies[:safe, None] - energies[None, :safe]
    off = ~np.eye(safe, dtype=bool)
    predicted = np.zeros((safe, safe), dtype=complex)
    predicted[off] = v_matrix[:safe, :safe][off] / gaps[off]
    residual = np.abs(s_matrix[:safe, :safe] - predicted)[off]
    scale = np.max(np.abs(s_matrix[:safe, :safe]))
    result = float(np.max(residual) / scale) if scale > 0 else float(np.max(residual))
    logger.info(f"Generator identity at order {order}, dim {dim}: max relative residual {result:.3e}")
    return result
