"""SNAIL and ATS potentials, their minima, and the simplified mapping to couplings g_n."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import bisect, brentq

from .models import CouplingSet, DeviceSpec

logger = logging.getLogger(__name__)

SCAN_POINTS = 256
RESIDUAL_TOLERANCE = 1e-12


class MinimumNotFoundError(ValueError):
    """No potential minimum inside the search bracket."""


@dataclass(frozen=True)
class CosineTerm:
    """amplitude * cos(frequency * phi + phase)."""

    amplitude: float
    frequency: float
    phase: float

    def derivative(self, phi: float, k: int = 0) -> float:
        # d^k/dphi^k cos(x) cycles through cos, -sin, -cos, sin
        x = self.frequency * phi + self.phase
        cycle = (math.cos(x), -math.sin(x), -math.cos(x), math.sin(x))[k % 4]
        return self.amplitude * self.frequency**k * cycle


def cosine_terms(spec: DeviceSpec) -> list[CosineTerm]:
    """The potential as a sum of cosines.

    SNAIL: -alpha E_J cos(phi) - n E_J cos((phi_ext - phi)/n).
    ATS:   -2 alpha E_J cos(phi_sigma) cos(phi + phi_delta) - n E_J cos(phi/n),
    assuming identical small junctions.
    """
    n = spec.n_junctions
    if spec.kind == "snail":
        return [
            CosineTerm(-spec.alpha * spec.e_j, 1.0, 0.0),
            CosineTerm(-n * spec.e_j, -1.0 / n, spec.phi_ext / n),
        ]
    return [
        CosineTerm(-2 * spec.alpha * spec.e_j * math.cos(spec.phi_sigma), 1.0, spec.phi_delta),
        CosineTerm(-n * spec.e_j, 1.0 / n, 0.0),
    ]


def potential(spec: DeviceSpec, phi: float) -> float:
    return sum(term.derivative(phi, 0) for term in cosine_terms(spec))


def potential_derivative(spec: DeviceSpec, phi: float, k: int) -> float:
    """Closed-form k-th derivative of the potential."""
    if k < 1:
        raise ValueError(f"Derivative order must be >= 1, got {k}")
    return sum(term.derivative(phi, k) for term in cosine_terms(spec))


def ats_fluxes(phi_ext: float, phi_ext_prime: float) -> tuple[float, float]:
    """Per-loop fluxes to (phi_sigma, phi_delta) with 2 phi_sigma = sum and 2 phi_delta = difference."""
    return (phi_ext + phi_ext_prime) / 2, (phi_ext - phi_ext_prime) / 2


def default_bracket(spec: DeviceSpec) -> tuple[float, float]:
    """Search interval for the minimum.

    SNAIL: half-width pi around 2 pi k + x/2 where phi_ext = 2 pi k + x with x in (-pi, pi].
    ATS: [-pi, pi].
    """
    if spec.kind == "ats":
        return -math.pi, math.pi
    turns = math.ceil((spec.phi_ext - math.pi) / (2 * math.pi))
    reduced = spec.phi_ext - 2 * math.pi * turns
    centre = 2 * math.pi * turns + reduced / 2
    return centre - math.pi, centre + math.pi


def find_minimum(spec: DeviceSpec, bracket: Optional[tuple[float, float]] = None) -> float:
    """Global potential minimum in the bracket: dense pre-scan, then Brent root of U'.

    Args:
        spec: Device parameters
        bracket: Search interval (default from :func:`default_bracket`)

    Returns:
        phi_min with U'(phi_min) ~ 0 and U''(phi_min) > 0

    Raises:
        MinimumNotFoundError: If the minimum sits on the bracket edge, U' has no
            sign change around it, or the extremum found is not a minimum
    """
    low, high = bracket or default_bracket(spec)
    grid = np.linspace(low, high, SCAN_POINTS)
    values = np.array([potential(spec, phi) for phi in grid])
    lowest = values.min()
    candidates = np.flatnonzero(values <= lowest + 1e-12 * max(abs(lowest), spec.e_j))
    index = int(candidates[np.argmin(np.abs(grid[candidates]))])

    if index in (0, SCAN_POINTS - 1):
        raise MinimumNotFoundError(f"Potential minimum lies on the bracket edge [{low:.4f}, {high:.4f}]")

    def slope(phi: float) -> float:
        return potential_derivative(spec, phi, 1)

    left, right = grid[index - 1], grid[index + 1]
    if slope(left) * slope(right) > 0:
        raise MinimumNotFoundError(f"U' has no sign change in [{left:.6f}, {right:.6f}]")
    phi_min = brentq(slope, left, right, xtol=1e-15, rtol=4 * np.finfo(float).eps)

    if potential_derivative(spec, phi_min, 2) <= 0:
        raise MinimumNotFoundError(f"Extremum at phi = {phi_min:.6f} is not a minimum")
    residual = abs(slope(phi_min))
    if residual > RESIDUAL_TOLERANCE * spec.e_j:
        logger.warning(f"Minimum residual {residual:.2e} exceeds {RESIDUAL_TOLERANCE:.0e} E_J")
    logger.debug(f"{spec.kind.upper()} minimum at phi = {phi_min:.12f}")
    return float(phi_min)


def taylor_couplings(
    spec: DeviceSpec,
    n_max: int = 6,
    bare_frequency: Optional[float] = None,
    bracket: Optional[tuple[float, float]] = None,
) -> CouplingSet:
    """Taylor coefficients c_k = U^(k)(phi_min)/k! and the simplified mapping g_k = c_k phi_zpf^k.

    The frequency correction is omega_shift = 2 c_2 phi_zpf^2; capacitive
    renormalisation and mode hybridisation are ignored.
    """
    if n_max < 2:
        raise ValueError(f"n_max must be >= 2, got {n_max}")
    phi_min = find_minimum(spec, bracket)
    taylor = {k: potential_derivative(spec, phi_min, k) / math.factorial(k) for k in range(2, n_max + 1)}
    couplings = {k: c_k * spec.phi_zpf**k for k, c_k in taylor.items() if k >= 3}
    return CouplingSet(
        phi_min=phi_min,
        taylor=taylor,
        couplings=couplings,
        omega_shift=2 * taylor[2] * spec.phi_zpf**2,
        phi_zpf=spec.phi_zpf,
        bare_frequency=bare_frequency,
    )


def kerr_condition(g3: float, g4: float, omega_r: float) -> float:
    """Leading-order Kerr coefficient up to a factor: g4 - 5 g3^2 / w_r."""
    return g4 - 5 * g3**2 / omega_r


def find_kerr_free_points(
    coupling_fn: Callable[[float], tuple[float, float]],
    grid: Sequence[float],
    omega_r: float,
) -> list[float]:
    """Parameter values where g4 - 5 g3^2 / w_r changes sign, refined by bisection.

    Args:
        coupling_fn: Maps the swept parameter to (g3, g4)
        grid: Increasing sample points
        omega_r: Resonator frequency in the units of the couplings

    Returns:
        Sorted roots; empty (with a warning) when none is bracketed
    """

    def condition(x: float) -> float:
        try:
            g3, g4 = coupling_fn(x)
        except MinimumNotFoundError as e:
            logger.debug(f"Skipping {x:.6f}: {e}")
            return math.nan
        return kerr_condition(g3, g4, omega_r)

    grid = np.asarray(grid, dtype=float)
    values = np.array([condition(x) for x in grid])
    roots = []
    for k in range(grid.size):
        if values[k] == 0:
            roots.append(float(grid[k]))
        elif k + 1 < grid.size and np.isfinite(values[k]) and np.isfinite(values[k + 1]):
            if values[k] * values[k + 1] < 0:
                roots.append(float(bisect(condition, grid[k], grid[k + 1], xtol=1e-12)))

    if not roots:
        logger.warning("No Kerr-free point in the scanned range")
    return roots


def kerr_free_flux(
    spec: DeviceSpec,
    fluxes: Sequence[float],
    omega_r: float,
    flux_field: str = "phi_ext",
) -> list[float]:
    """Flux values where the leading-order Kerr coefficient of the device vanishes."""

    def couplings_at(flux: float) -> tuple[float, float]:
        coupling_set = taylor_couplings(spec.model_copy(update={flux_field: flux}), n_max=4)
        return coupling_set.g3, coupling_set.g4

    roots = find_kerr_free_points(couplings_at, fluxes, omega_r)
    logger.info(f"Found {len(roots)} Kerr-free {flux_field} value(s)")
    return roots


def flux_sweep(
    spec: DeviceSpec,
    fluxes: Sequence[float],
    omega_r: float,
    flux_field: str = "phi_ext",
    n_max: int = 6,
    progress_callback: Optional[Callable] = None,
) -> list[tuple[float, Optional[CouplingSet], bool]]:
    """Couplings along a flux grid.

    Returns:
        (flux, couplings or None when no minimum was found, kerr_free_flag) per grid point;
        the flag marks a sign change of g4 - 5 g3^2/w_r between this point and the next
    """
    rows = []
    for k, flux in enumerate(fluxes):
        if progress_callback:
            progress_callback(k, len(fluxes), f"Flux point {k + 1}/{len(fluxes)}")
        try:
            rows.append(taylor_couplings(spec.model_copy(update={flux_field: float(flux)}), n_max=n_max))
        except MinimumNotFoundError as e:
            logger.warning(f"{flux_field} = {flux:.6f}: {e}")
            rows.append(None)

    conditions = [kerr_condition(c.g3, c.g4, omega_r) if c is not None else math.nan for c in rows]
    flagged = []
    for k, flux in enumerate(fluxes):
        here = conditions[k]
        after = conditions[k + 1] if k + 1 < len(conditions) else math.nan
        flag = here == 0 or (math.isfinite(here) and math.isfinite(after) and here * after < 0)
        flagged.append((float(flux), rows[k], flag))
    return flagged
