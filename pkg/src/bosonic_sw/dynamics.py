"""State evolution, oscillation averaging, g3 optimisation and the cubic-phase sweep."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar
from scipy.signal import savgol_filter

from .fock import (
    cubic_phase_state,
    coherent_state,
    eigenspectrum,
    fidelity,
    mean_annihilation,
    quadrature_power,
    resonator_hamiltonian,
    rotation_maximized_fidelity,
    squeezed_vacuum,
)
from .models import EvolutionRecord, OptimizationResult, QuantumState, SweepResult

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-8


class IntegrationError(RuntimeError):
    """The adaptive integrator gave up (step size underflow or similar)."""


class SavgolParameterError(ValueError):
    """Invalid Savitzky-Golay window or polynomial order."""


def revival_time(g4: float) -> float:
    """Kerr revival time T = 2 pi / K with K = 12 g4."""
    if g4 <= 0:
        raise ValueError("Revival time needs g4 > 0")
    return math.pi / (6 * g4)


def time_step(omega_r: float, samples_per_period: int) -> float:
    return 2 * math.pi / omega_r / samples_per_period


def savgol_window(omega_r: float, dt: float, periods: float = 4.0, polyorder: int = 3) -> int:
    """Odd sample count spanning ``periods`` oscillations of w_r, at least polyorder + 2."""
    samples = int(round(periods * 2 * math.pi / omega_r / dt))
    if samples % 2 == 0:
        samples += 1
    minimum = polyorder + 2 if polyorder % 2 else polyorder + 1
    return max(samples, minimum)


def savgol_average(signal: Sequence[float], window: int, polyorder: int) -> np.ndarray:
    """Savitzky-Golay smoothing; edges use the polynomial fit of the one-sided window.

    Raises:
        SavgolParameterError: If the window is even, too short or longer than the signal
    """
    signal = np.asarray(signal, dtype=float)
    if window < 1 or window % 2 == 0:
        raise SavgolParameterError(f"Window must be a positive odd integer, got {window}")
    if not 0 <= polyorder < window:
        raise SavgolParameterError(f"Polynomial order {polyorder} must satisfy 0 <= polyorder < window {window}")
    if window > signal.size:
        raise SavgolParameterError(f"Window {window} is longer than the signal ({signal.size} samples)")
    return savgol_filter(signal, window, polyorder, mode="interp")


def evolve_static(
    hamiltonian: np.ndarray,
    psi0: QuantumState,
    times: Sequence[float],
    keep_snapshots: bool = False,
) -> EvolutionRecord:
    """Spectral propagation psi(t) = sum_k exp(-i E_k t) <k|psi0> |k> on a whole time grid."""
    times = np.asarray(times, dtype=float)
    energies, vectors = eigenspectrum(hamiltonian)
    weights = vectors.conj().T @ psi0.amplitudes
    states = vectors @ (np.exp(-1j * np.outer(energies, times)) * weights[:, None])

    norms = np.linalg.norm(states, axis=0)
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > NORM_TOLERANCE:
        logger.warning(f"Norm drift {drift:.2e} exceeds {NORM_TOLERANCE:.0e}")

    snapshots = [QuantumState(amplitudes=states[:, k]) for k in range(times.size)] if keep_snapshots else None
    return EvolutionRecord(
        times=times,
        abs_exp_a=np.abs(mean_annihilation(states)),
        snapshots=snapshots,
        max_norm_error=drift,
    )


def evolve_timedep(
    h_builder: Callable[[float], np.ndarray],
    psi0: QuantumState,
    t_end: float,
    tol: float = 1e-9,
    free_energies: Optional[np.ndarray] = None,
    t_start: float = 0.0,
) -> QuantumState:
    """Integrate i d/dt psi = H(t) psi with DOP853 and return the lab-frame state at ``t_end``.

    With ``free_energies`` (the diagonal of a static part of H) the equation is
    solved in the exact interaction picture of that part and transformed back,
    which keeps the step size set by the slow couplings instead of the level
    energies. No rotating-wave approximation is made.

    Args:
        h_builder: Full Hamiltonian H(t) as a dense matrix
        psi0: Initial state
        t_end: Final time
        tol: Relative tolerance (absolute tolerance is tol * 1e-3)
        free_energies: Optional diagonal of the static part to rotate away
        t_start: Initial time

    Raises:
        IntegrationError: If the integrator fails
    """
    y0 = np.array(psi0.amplitudes, dtype=complex)
    if t_end == t_start:
        return QuantumState(amplitudes=y0)

    if free_energies is None:

        def rhs(t, y):
            return -1j * (h_builder(t) @ y)

    else:
        free = np.asarray(free_energies, dtype=float)
        static = np.diag(free)

        def rhs(t, y):
            rotation = np.exp(-1j * free * t)
            return -1j * np.conj(rotation) * ((h_builder(t) - static) @ (rotation * y))

        y0 = np.exp(1j * free * t_start) * y0

    solution = solve_ivp(
        rhs, (t_start, t_end), y0, method="DOP853", rtol=tol, atol=tol * 1e-3, t_eval=[t_end]
    )
    if not solution.success:
        raise IntegrationError(f"Integration failed at t < {t_end:.3e}: {solution.message}")

    amplitudes = solution.y[:, -1]
    if free_energies is not None:
        amplitudes = np.exp(-1j * free * t_end) * amplitudes

    drift = abs(float(np.linalg.norm(amplitudes)) - 1.0)
    if drift > NORM_TOLERANCE:
        logger.warning(f"Norm drift {drift:.2e} after time-dependent evolution exceeds {NORM_TOLERANCE:.0e}")
    logger.debug(f"DOP853 used {solution.nfev} right-hand-side evaluations")
    return QuantumState(amplitudes=amplitudes)


def kerr_oscillations(
    omega_r: float,
    g3: float,
    g4: float,
    alpha0: float = 2.0,
    dim: int = 60,
    t_end: Optional[float] = None,
    samples_per_period: int = 16,
    savgol_periods: float = 4.0,
    polyorder: int = 3,
) -> EvolutionRecord:
    """|<a>|(t) of a coherent state under w ad a + g3 (a + ad)^3 + g4 (a + ad)^4.

    The grid runs from 0 to ``t_end`` (default: the revival time of ``g4``)
    plus half a smoothing window, so the smoothed value at ``t_end`` is an
    interior Savitzky-Golay point.
    """
    t_end = revival_time(g4) if t_end is None else t_end
    dt = time_step(omega_r, samples_per_period)
    window = savgol_window(omega_r, dt, savgol_periods, polyorder)
    steps = int(math.ceil(t_end / dt)) + window // 2
    times = np.arange(steps + 1) * dt

    hamiltonian = resonator_hamiltonian(omega_r, {3: g3, 4: g4}, dim)
    record = evolve_static(hamiltonian, coherent_state(alpha0, dim), times)
    smoothed = savgol_average(record.abs_exp_a, window, polyorder)
    logger.info(f"Kerr oscillations: {times.size} samples, window {window}, |<a>|(T) ~ {record.value_at(t_end, smoothed=False):.4f}")
    return record.model_copy(update={"smoothed": smoothed})


def averaged_amplitude_at(
    omega_r: float,
    g3: float,
    g4: float,
    t: float,
    alpha0: float = 2.0,
    dim: int = 60,
    samples_per_period: int = 16,
    savgol_periods: float = 4.0,
    polyorder: int = 3,
) -> float:
    """Oscillation-averaged |<a>| at time ``t`` from one smoothing window centred on it."""
    dt = time_step(omega_r, samples_per_period)
    window = savgol_window(omega_r, dt, savgol_periods, polyorder)
    half = window // 2
    times = t + dt * np.arange(-half, half + 1)
    hamiltonian = resonator_hamiltonian(omega_r, {3: g3, 4: g4}, dim)
    record = evolve_static(hamiltonian, coherent_state(alpha0, dim), times)
    return float(savgol_average(record.abs_exp_a, window, polyorder)[half])


def optimize_g3(
    omega_r: float,
    g4: float,
    g3_range: tuple[float, float],
    t: Optional[float] = None,
    points: int = 21,
    alpha0: float = 2.0,
    dim: int = 60,
    samples_per_period: int = 16,
    savgol_periods: float = 4.0,
    polyorder: int = 3,
    progress_callback: Optional[Callable] = None,
) -> OptimizationResult:
    """Maximise the averaged |<a>|(t) over g3 by grid scan then golden-section refinement.

    Args:
        omega_r: Resonator frequency (rad/s)
        g4: Quartic coupling (rad/s)
        g3_range: Scan interval (rad/s)
        t: Evaluation time (default: revival time of g4)

    Returns:
        OptimizationResult; ``at_edge`` is set when the scan maximum sits on the range edge
    """
    t = revival_time(g4) if t is None else t
    low, high = g3_range
    if not high > low:
        raise ValueError(f"Empty g3 scan range [{low}, {high}]")

    def objective(g3: float) -> float:
        return averaged_amplitude_at(
            omega_r, g3, g4, t, alpha0, dim, samples_per_period, savgol_periods, polyorder
        )

    grid = np.linspace(low, high, points)
    values = np.empty(points)
    for k, g3 in enumerate(grid):
        if progress_callback:
            progress_callback(k, points, f"Scanning g3 {k + 1}/{points}")
        values[k] = objective(g3)

    best = int(np.argmax(values))
    if best in (0, points - 1) or points < 3:
        logger.warning(f"g3 scan maximum at the range edge ({grid[best]:.6g} rad/s); widen the range")
        return OptimizationResult(
            argmax=float(grid[best]), value=float(values[best]), scan_points=grid, scan_values=values, at_edge=True
        )

    refined = minimize_scalar(
        lambda g3: -objective(g3),
        bracket=(grid[best - 1], grid[best], grid[best + 1]),
        method="golden",
        tol=1e-6,
    )
    argmax, value = float(refined.x), float(-refined.fun)
    if value < values[best]:
        argmax, value = float(grid[best]), float(values[best])
    if progress_callback:
        progress_callback(points, points, "Optimisation complete")
    logger.info(f"Optimal g3 = {argmax:.6g} rad/s, averaged |<a>| = {value:.5f}")
    return OptimizationResult(argmax=argmax, value=value, scan_points=grid, scan_values=values)


def preparation_time(gamma: float, g3_ac: float) -> float:
    """tau = 2|gamma| / (sqrt(8) |g3_ac|)."""
    if gamma == 0 or g3_ac == 0:
        raise ValueError("Cubic-phase preparation needs nonzero gamma and g3_ac")
    return 2 * abs(gamma) / (math.sqrt(8) * abs(g3_ac))


def prepared_state(
    omega_r: float,
    delta: float,
    g3_dc: float,
    g4_dc: float,
    g3_ac: float,
    gamma: float,
    r: float,
    dim: int = 60,
    tol: float = 1e-9,
) -> QuantumState:
    """Squeezed vacuum driven for tau and rotated back into the frame of w_r + delta."""
    tau = preparation_time(gamma, g3_ac)
    omega = omega_r + delta
    number = np.arange(dim, dtype=float)
    cubic = quadrature_power(3, dim)
    quartic = quadrature_power(4, dim)
    static = np.diag(omega * number) + g3_dc * cubic + g4_dc * quartic
    # Drive sign chosen so the averaged propagator is exp(+i gamma q^3).
    drive = -math.copysign(abs(g3_ac), gamma)

    def h_builder(t: float) -> np.ndarray:
        return static + drive * (math.cos(omega_r * t) + math.cos(3 * omega_r * t)) * cubic

    state = evolve_timedep(h_builder, squeezed_vacuum(r, dim), tau, tol, free_energies=omega * number)
    return QuantumState(amplitudes=np.exp(1j * omega * number * tau) * state.amplitudes)


def _sweep_point(arguments: tuple) -> tuple[int, int, float, float]:
    (i, j, omega_r, delta, g3_dc, g4_dc, g3_ac, gamma, r, dim, tol) = arguments
    rotated = prepared_state(omega_r, delta, g3_dc, g4_dc, g3_ac, gamma, r, dim, tol)
    target = cubic_phase_state(gamma, r, dim)
    error = max(0.0, 1.0 - fidelity(rotated, target))
    rotated_error = max(0.0, 1.0 - rotation_maximized_fidelity(rotated, target)[0])
    return i, j, error, rotated_error


def cubic_phase_sweep(
    omega_r: float,
    g4_dc: float,
    g3_ac: float,
    gamma: float,
    r: float,
    deltas: Sequence[float],
    g3_dc_values: Sequence[float],
    dim: int = 60,
    tol: float = 1e-9,
    threads: int = 1,
    progress_callback: Optional[Callable] = None,
) -> SweepResult:
    """State-preparation error E = 1 - |<gamma, r|psi(tau)>|^2 over a (delta, g3_dc) grid.

    The squeezed vacuum evolves under
    (w_r + delta) ad a + (g3_dc + g3_ac(t)) (a + ad)^3 + g4_dc (a + ad)^4 with
    g3_ac(t) = g3_ac [cos w_r t + cos 3 w_r t], then is rotated back by
    exp(i (w_r + delta) ad a tau) before the overlap.

    Raises:
        ValueError: If gamma or g3_ac is zero, or a grid is empty
    """
    deltas = np.asarray(deltas, dtype=float)
    g3_dc_values = np.asarray(g3_dc_values, dtype=float)
    if deltas.size == 0 or g3_dc_values.size == 0:
        raise ValueError("Sweep grids must be nonempty")
    tau = preparation_time(gamma, g3_ac)
    # Fail early on an undersized space.
    squeezed_vacuum(r, dim)
    cubic_phase_state(gamma, r, dim)

    jobs = [
        (i, j, omega_r, float(delta), float(g3_dc), g4_dc, g3_ac, gamma, r, dim, tol)
        for i, delta in enumerate(deltas)
        for j, g3_dc in enumerate(g3_dc_values)
    ]
    errors = np.empty((deltas.size, g3_dc_values.size))
    rotated = np.empty_like(errors)
    logger.info(f"Cubic-phase sweep: {len(jobs)} points, tau = {tau:.4e} s, dim {dim}, {threads} worker(s)")

    def record(done: int, result: tuple[int, int, float, float]):
        i, j, error, rotated_error = result
        errors[i, j] = error
        rotated[i, j] = rotated_error
        if progress_callback:
            progress_callback(done, len(jobs), f"Sweep point {done}/{len(jobs)}")

    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            for done, result in enumerate(executor.map(_sweep_point, jobs), start=1):
                record(done, result)
    else:
        for done, job in enumerate(jobs, start=1):
            record(done, _sweep_point(job))

    result = SweepResult(deltas=deltas, g3_dc_values=g3_dc_values, errors=errors, rotated_errors=rotated, tau=tau)
    delta, g3_dc, error = result.optimum
    logger.info(f"Sweep optimum: delta = {delta:.6g} rad/s, g3_dc = {g3_dc:.6g} rad/s, E = {error:.3e}")
    return result
