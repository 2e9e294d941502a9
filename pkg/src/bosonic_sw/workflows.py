"""Workflow engine: runs one configured analysis and writes its artifacts."""

import logging
import math
from pathlib import Path
from typing import Callable, Literal, Optional

import numpy as np

from .algebra import render_coefficient
from .circuits import flux_sweep, kerr_free_flux
from .dynamics import (
    cubic_phase_sweep,
    kerr_oscillations,
    optimize_g3,
    prepared_state,
    revival_time,
)
from .fock import delta_E, eigenspectrum, resonator_hamiltonian, wigner
from .models import EffectiveExpansion, PerturbationProblem, RunConfig, WorkflowResult
from .output import OutputHandler
from .schrieffer_wolff import (
    NoKerrFreePointError,
    effective_hamiltonian,
    kerr_free_point,
    perturbative_energies,
)
from .units import angular_to_hz, format_frequency, hz_to_angular, seconds_to_duration_str

logger = logging.getLogger(__name__)

Emit = Literal["symbolic", "coefficients", "csv"]


def ground_referenced_delta(energies: np.ndarray) -> np.ndarray:
    """(E_n - E_0) - n (E_1 - E_0) for every level given."""
    relative = np.asarray(energies, dtype=float) - energies[0]
    return relative - np.arange(relative.size) * relative[1]


class WorkflowEngine:
    """Dispatches a RunConfig to its workflow."""

    def __init__(
        self,
        config: RunConfig,
        threads: int = 1,
        emit: Emit = "csv",
        progress_callback: Optional[Callable] = None,
    ):
        self.config = config
        self.threads = max(1, threads)
        self.emit = emit
        self.progress_callback = progress_callback

    def run(self, out_dir: Path) -> WorkflowResult:
        """Run the configured workflow, writing CSVs and a ``*.report.txt`` into ``out_dir``.

        Raises:
            Whatever the workflow raises; errors are not swallowed here
        """
        handlers = {
            "expand-potential": self.run_expand_potential,
            "effective-hamiltonian": self.run_effective_hamiltonian,
            "spectrum": self.run_spectrum,
            "kerr-oscillations": self.run_kerr_oscillations,
            "cubic-phase": self.run_cubic_phase,
            "optimize-g3": self.run_optimize_g3,
        }
        output = OutputHandler(out_dir, self.config)
        logger.info(f"Running workflow {self.config.workflow} into {out_dir}")
        sections, console_text = handlers[self.config.workflow](output)

        title = f"{self.config.workflow} report"
        report = output.create_summary_report(title, sections)
        output.write_report(report, f"{self.config.workflow}.report.txt")
        return WorkflowResult(
            workflow=self.config.workflow, artifacts=list(output.written), report=report, console_text=console_text
        )

    def _expansion(self, order: Optional[int] = None, orders: Optional[tuple[int, ...]] = None) -> EffectiveExpansion:
        orders = orders or tuple(range(3, self.config.n_max + 1))
        problem = PerturbationProblem.single_mode(orders, order or self.config.order)
        return effective_hamiltonian(problem, progress_callback=self.progress_callback)

    def _params_hz(self) -> dict[str, float]:
        params = {f"g{n}": g for n, g in self.config.couplings().items()}
        params["w"] = self.config.f_r
        return params

    def _kerr_free_entries(self, expansion: EffectiveExpansion, g4_hz: float) -> list[tuple[str, str]]:
        w = self.config.f_r
        entries = [("Leading-order g3 at this g4", format_frequency(math.sqrt(max(g4_hz, 0.0) * w / 5)))]
        if expansion.order < 2:
            return entries
        if self.config.n_max > 4:
            # The relation is defined for the g3, g4 model only.
            expansion = self._expansion(expansion.order, orders=(3, 4))
        try:
            relation = kerr_free_point(expansion)
            entries.insert(0, ("Leading-order relation", f"g4* = {render_coefficient(relation.leading_g4)}"))
            if g4_hz > 0:
                improved = relation.solve_g3(g4_hz, w)
                entries.append((f"Order-{relation.order} Kerr-free g3", format_frequency(improved)))
        except NoKerrFreePointError as e:
            logger.warning(f"Improved Kerr-free point unavailable: {e}")
            entries.append(("Improved Kerr-free g3", f"none ({e})"))
        return entries

    def run_expand_potential(self, output: OutputHandler):
        config = self.config
        spec = config.device_spec()
        fluxes = np.linspace(config.flux_min, config.flux_max, config.flux_points)
        n_max = max(4, config.taylor_order)

        rows = flux_sweep(spec, fluxes, config.omega_r, config.flux_field, n_max, self.progress_callback)
        output.write_flux_sweep(rows, n_max=n_max)
        roots = kerr_free_flux(spec, fluxes, config.omega_r, config.flux_field)

        missing = sum(1 for _, couplings, _ in rows if couplings is None)
        return [
            ("Device", [("Kind", spec.kind.upper()), ("alpha", f"{spec.alpha:g}"), ("Junctions", str(spec.n_junctions))]),
            ("Flux grid", [(config.flux_field, f"{config.flux_min:.6g} .. {config.flux_max:.6g} ({config.flux_points} points)"),
                           ("Points without a minimum", str(missing))]),
            ("Kerr-free fluxes", [(f"{config.flux_field} #{k + 1}", f"{root:.9f}") for k, root in enumerate(roots)]),
        ], None

    def run_effective_hamiltonian(self, output: OutputHandler):
        expansion = self._expansion()
        params = self._params_hz()

        console_text = None
        if self.emit == "symbolic":
            console_text = output.render_symbolic(expansion)
            output.write_report(console_text, "effective_hamiltonian.txt")
        elif self.emit == "coefficients":
            console_text = output.render_coefficients(expansion, params)
            output.write_report(console_text, "coefficients.txt")
        else:
            output.write_coefficients(expansion, params)

        truncated = expansion.diagonal_coefficients(truncated=True)
        diagnostics = [(f"Order {m} max monomial degree", str(d)) for m, d in enumerate(expansion.max_degrees, start=1)]
        diagnostics.append(("Complete through phi_zpf degree", str(expansion.complete_phi_degree)))
        coefficients = [(f"c{n} (complete degrees)", render_coefficient(c_n)) for n, c_n in enumerate(truncated)]
        return [
            ("Expansion", [("Order", str(expansion.order)), ("Couplings", ", ".join(f"g{n}" for n in range(3, self.config.n_max + 1)))]),
            ("Coefficients", coefficients),
            ("Truncation diagnostics", diagnostics),
            ("Kerr-free point", self._kerr_free_entries(expansion, self.config.g4)),
        ], console_text

    def run_spectrum(self, output: OutputHandler):
        config = self.config
        dim = config.resolved_dim()
        couplings = {n: hz_to_angular(g) for n, g in config.couplings().items()}
        energies, _ = eigenspectrum(resonator_hamiltonian(config.omega_r, couplings, dim))
        exact_delta = delta_E(energies, config.levels)
        levels = exact_delta.size - 1

        expansion = self._expansion()
        params = {f"g{n}": g for n, g in couplings.items()}
        params["w"] = config.omega_r
        perturbative, _ = perturbative_energies(expansion, levels, params)
        perturbative_delta = ground_referenced_delta(perturbative)

        output.write_spectrum(energies[: levels + 1], perturbative, exact_delta, perturbative_delta)

        deviation = np.abs(exact_delta - perturbative_delta)
        window = min(60, levels)
        return [
            ("Spectrum", [("Dimension", str(dim)), ("Levels reported", str(levels + 1))]),
            ("Nonlinearity", [
                (f"max |dE_n| for n <= {window}", format_frequency(angular_to_hz(float(np.max(np.abs(exact_delta[: window + 1])))))),
                ("max |exact - perturbative|", format_frequency(angular_to_hz(float(np.max(deviation))))),
            ]),
            ("Kerr-free point", self._kerr_free_entries(expansion, config.g4)),
        ], None

    def run_kerr_oscillations(self, output: OutputHandler):
        config = self.config
        pairs = config.coupling_pairs()
        if config.t_end is not None:
            t_end = config.t_end
        else:
            g4_max = max(g4 for _, g4 in pairs)
            if g4_max <= 0:
                raise ValueError("kerr-oscillations needs t_end when no g4 is positive")
            t_end = revival_time(hz_to_angular(g4_max))

        entries = [("Evaluation time T", seconds_to_duration_str(t_end))]
        for k, (g3, g4) in enumerate(pairs, start=1):
            if self.progress_callback:
                self.progress_callback(k - 1, len(pairs), f"Evolution {k}/{len(pairs)}")
            record = kerr_oscillations(
                config.omega_r,
                hz_to_angular(g3),
                hz_to_angular(g4),
                config.alpha0,
                config.resolved_dim(),
                t_end,
                config.samples_per_period,
                config.savgol_periods,
                config.polyorder,
            )
            output.write_evolution(record, f"evolution_{k}.csv")
            label = f"g3 = {format_frequency(g3)}, g4 = {format_frequency(g4)}"
            entries.append((label, f"smoothed |<a>|(T) = {record.value_at(t_end):.4f}, raw = {record.value_at(t_end, smoothed=False):.4f}"))
        if self.progress_callback:
            self.progress_callback(len(pairs), len(pairs), "Evolutions complete")
        return [("Evolutions", entries)], None

    def run_optimize_g3(self, output: OutputHandler):
        config = self.config
        if config.g4 <= 0:
            raise ValueError("optimize-g3 needs g4 > 0")
        leading = math.sqrt(config.g4 * config.f_r / 5)
        low = config.g3_min if config.g3_min is not None else 0.9 * leading
        high = config.g3_max if config.g3_max is not None else 1.1 * leading
        g4 = hz_to_angular(config.g4)
        t = config.t_end if config.t_end is not None else revival_time(g4)

        result = optimize_g3(
            config.omega_r,
            g4,
            (hz_to_angular(low), hz_to_angular(high)),
            t,
            config.g3_points,
            config.alpha0,
            config.resolved_dim(),
            config.samples_per_period,
            config.savgol_periods,
            config.polyorder,
            self.progress_callback,
        )
        rows = zip((angular_to_hz(g3) for g3 in result.scan_points), result.scan_values)
        output.write_csv("g3_scan.csv", ("g3_hz", "abs_exp_a_smoothed"), rows)

        optimum = [
            ("Scan range", f"{format_frequency(low)} .. {format_frequency(high)}"),
            ("Evaluation time", seconds_to_duration_str(t)),
            ("Optimal g3", format_frequency(angular_to_hz(result.argmax))),
            ("Averaged |<a>| at optimum", f"{result.value:.4f}"),
        ]
        if result.at_edge:
            optimum.append(("Warning", "maximum on the scan edge; widen g3_min/g3_max"))
        kerr_free = self._kerr_free_entries(self._expansion(max(config.order, 2)), config.g4)
        return [("Numeric optimum", optimum), ("Kerr-free point", kerr_free)], None

    def run_cubic_phase(self, output: OutputHandler):
        config = self.config
        dim = config.resolved_dim()
        deltas = hz_to_angular(np.linspace(config.delta_min, config.delta_max, config.delta_points))
        g3_dc_values = hz_to_angular(np.linspace(config.g3_dc_min, config.g3_dc_max, config.g3_dc_points))
        g4_dc, g3_ac = hz_to_angular(config.g4_dc), hz_to_angular(config.g3_ac)

        result = cubic_phase_sweep(
            config.omega_r,
            g4_dc,
            g3_ac,
            config.gamma,
            config.squeezing,
            deltas,
            g3_dc_values,
            dim,
            config.tolerance,
            self.threads,
            self.progress_callback,
        )
        output.write_sweep(result)

        delta, g3_dc, error = result.optimum
        i, j = result.optimum_index
        state = prepared_state(
            config.omega_r, delta, g3_dc, g4_dc, g3_ac, config.gamma, config.squeezing, dim, config.tolerance
        )
        xs = np.linspace(-config.wigner_extent, config.wigner_extent, config.wigner_points)
        output.write_wigner(xs, xs, wigner(state, xs, xs))

        predicted = math.sqrt(max(config.g4_dc, 0.0) * config.f_r / 5)
        return [
            ("Preparation", [("Duration tau", seconds_to_duration_str(result.tau)), ("Dimension", str(dim)),
                             ("Grid", f"{deltas.size} x {g3_dc_values.size}")]),
            ("Optimum", [
                ("delta", format_frequency(angular_to_hz(delta))),
                ("g3_dc", format_frequency(angular_to_hz(g3_dc))),
                ("Error", f"{error:.4e}"),
                ("Error with free rotation", f"{result.rotated_errors[i, j]:.4e}"),
            ]),
            ("Leading-order expectations", [
                ("Kerr-free g3_dc", format_frequency(predicted)),
                ("Bare frequency shift 12 g4_dc", format_frequency(12 * config.g4_dc)),
            ]),
        ], None
