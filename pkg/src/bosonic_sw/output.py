"""Output handling: CSV artifacts with resolved-config headers, symbolic renderings and text reports."""

import csv
import logging
import math
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
import sympy

from . import __version__
from .algebra import Coefficient, evaluate, render_coefficient
from .models import CouplingSet, EffectiveExpansion, EvolutionRecord, RunConfig, SweepResult
from .units import angular_to_hz, format_frequency

logger = logging.getLogger(__name__)

TOOL_NAME = "bosonic-sw"


def format_number(value: float) -> str:
    """Deterministic float text: 15 significant digits, ``nan`` for missing values."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.15g}"


class OutputHandler:
    """Writes workflow artifacts into one output directory."""

    def __init__(self, out_dir: Path, config: RunConfig):
        self.out_dir = Path(out_dir)
        self.config = config
        self.written: list[Path] = []

    def header_lines(self) -> list[str]:
        lines = [f"# {TOOL_NAME} {__version__}", f"# workflow = {self.config.workflow}"]
        lines.extend(f"# {name} = {value}" for name, value in self.config.resolved_items() if name != "workflow")
        return lines

    def write_csv(self, name: str, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
        """Write ``name`` with the config header, a column row and formatted data rows.

        Args:
            name: File name inside the output directory
            columns: Column names
            rows: Data rows; each entry is formatted with :func:`format_number`
                unless it is already a string

        Returns:
            Path of the written file
        """
        path = self.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        count = 0
        with open(path, "w", encoding="utf-8", newline="") as f:
            for line in self.header_lines():
                f.write(line + "\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([entry if isinstance(entry, str) else format_number(entry) for entry in row])
                count += 1
        logger.info(f"Wrote {count} rows to {path}")
        self.written.append(path)
        return path

    def write_spectrum(
        self,
        exact: np.ndarray,
        perturbative: np.ndarray,
        exact_delta: np.ndarray,
        perturbative_delta: np.ndarray,
        name: str = "spectrum.csv",
    ) -> Path:
        """Energies relative to the ground level and Delta E_n, all converted to Hz."""
        count = min(len(exact), len(perturbative), len(exact_delta), len(perturbative_delta))
        rows = (
            (
                n,
                angular_to_hz(exact[n] - exact[0]),
                angular_to_hz(perturbative[n] - perturbative[0]),
                angular_to_hz(exact_delta[n]),
                angular_to_hz(perturbative_delta[n]),
            )
            for n in range(count)
        )
        return self.write_csv(
            name, ("n", "E_n_exact", "E_n_perturbative", "delta_E_n_exact", "delta_E_n_perturbative"), rows
        )

    def write_evolution(self, record: EvolutionRecord, name: str) -> Path:
        smoothed = record.smoothed if record.smoothed is not None else np.full(record.times.size, math.nan)
        rows = zip(record.times, record.abs_exp_a, smoothed)
        return self.write_csv(name, ("t", "abs_exp_a", "abs_exp_a_smoothed"), rows)

    def write_sweep(self, result: SweepResult, name: str = "sweep.csv") -> Path:
        rows = (
            (
                angular_to_hz(delta),
                angular_to_hz(g3_dc),
                result.errors[i, j],
                result.rotated_errors[i, j],
            )
            for i, delta in enumerate(result.deltas)
            for j, g3_dc in enumerate(result.g3_dc_values)
        )
        return self.write_csv(name, ("delta_hz", "g3_dc_hz", "error", "rotated_error"), rows)

    def write_wigner(self, xs: Sequence[float], ps: Sequence[float], values: np.ndarray, name: str = "wigner.csv") -> Path:
        rows = ((x, p, values[i, j]) for i, x in enumerate(xs) for j, p in enumerate(ps))
        return self.write_csv(name, ("x", "p", "W"), rows)

    def write_flux_sweep(
        self,
        rows: Sequence[tuple[float, Optional[CouplingSet], bool]],
        n_max: int = 6,
        name: str = "flux_sweep.csv",
    ) -> Path:
        """Flux, phi_min, Taylor coefficients c2..c_nmax, couplings g3..g_nmax in Hz and the Kerr-free flag."""
        taylor_orders = list(range(2, n_max + 1))
        coupling_orders = list(range(3, n_max + 1))
        columns = (
            ["flux", "phi_min"]
            + [f"c{k}" for k in taylor_orders]
            + [f"g{k}_hz" for k in coupling_orders]
            + ["kerr_free_flag"]
        )

        def row(flux: float, couplings: Optional[CouplingSet], flag: bool) -> list:
            if couplings is None:
                return [flux] + [math.nan] * (1 + len(taylor_orders) + len(coupling_orders)) + [flag]
            return (
                [flux, couplings.phi_min]
                + [angular_to_hz(couplings.taylor.get(k, math.nan)) for k in taylor_orders]
                + [angular_to_hz(couplings.couplings.get(k, math.nan)) for k in coupling_orders]
                + [flag]
            )

        return self.write_csv(name, columns, (row(*entry) for entry in rows))

    @staticmethod
    def _coefficient_pairs(expansion: EffectiveExpansion) -> list[tuple[Coefficient, Coefficient]]:
        """(complete, full) c_n pairs; the complete value keeps only phi_zpf degrees <= M + 2."""
        complete = expansion.diagonal_coefficients(truncated=True)
        full = expansion.diagonal_coefficients()
        size = max(len(complete), len(full))
        complete = complete + [sympy.S.Zero] * (size - len(complete))
        full = full + [sympy.S.Zero] * (size - len(full))
        return list(zip(complete, full))

    def write_coefficients(
        self,
        expansion: EffectiveExpansion,
        params_hz: Mapping[str, float],
        name: str = "coefficients.csv",
    ) -> Path:
        """c_n complete through phi_zpf degree M + 2, with the raw series in ``full_series``."""
        rows = [
            (n, render_coefficient(c_n), evaluate(c_n, params_hz), render_coefficient(full), expansion.is_listed(n))
            for n, (c_n, full) in enumerate(self._coefficient_pairs(expansion))
        ]
        return self.write_csv(name, ("n", "expression", "value_hz", "full_series", "listed"), rows)

    def write_report(self, text: str, name: str) -> Path:
        path = self.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        logger.info(f"Report written to {path}")
        self.written.append(path)
        return path

    def render_symbolic(self, expansion: EffectiveExpansion) -> str:
        """S^(m) and H^(m) for every order, one monomial per line."""
        blocks = []
        for m, (generator, diagonal) in enumerate(zip(expansion.generators, expansion.diagonal_terms), start=1):
            blocks.append(f"S^({m}) =\n{generator.render(multiline=True)}")
            blocks.append(f"H^({m}) =\n{diagonal.render(multiline=True)}")
        return "\n\n".join(blocks) + "\n"

    def render_coefficients(self, expansion: EffectiveExpansion, params_hz: Mapping[str, float]) -> str:
        lines = []
        for n, (c_n, full) in enumerate(self._coefficient_pairs(expansion)):
            marker = "" if expansion.is_listed(n) else "  [beyond c3]"
            lines.append(f"c{n} = {render_coefficient(c_n)}")
            lines.append(f"   = {format_frequency(evaluate(c_n, params_hz))}{marker}")
            if full != c_n:
                lines.append(f"   full series (incomplete above phi_zpf^{expansion.complete_phi_degree}): {render_coefficient(full)}")
        return "\n".join(lines) + "\n"

    def create_summary_report(self, title: str, sections: Sequence[tuple[str, Sequence[tuple[str, str]]]]) -> str:
        """Plain-text report: a title, the key configuration values and one block per section.

        Args:
            title: Report heading
            sections: (heading, [(label, value), ...]) pairs

        Returns:
            Report text
        """
        lines = [f"{title}", "=" * 50, "", f"Tool: {TOOL_NAME} {__version__}", f"Workflow: {self.config.workflow}"]
        lines.append(f"Resonator frequency: {format_frequency(self.config.f_r)}")
        for heading, entries in sections:
            lines.extend(["", f"{heading}:"])
            if not entries:
                lines.append("- none")
            lines.extend(f"- {label}: {value}" for label, value in entries)
        if self.written:
            lines.extend(["", "Artifacts:"])
            lines.extend(f"- {path.name}" for path in self.written)
        return "\n".join(lines) + "\n"
