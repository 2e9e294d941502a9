"""Tests for the workflow engine and the command line."""

import numpy as np
import pytest
import typer
from typer.testing import CliRunner

from src.bosonic_sw.cli import app, resolve_threads
from src.bosonic_sw.config import parse_config
from src.bosonic_sw.workflows import WorkflowEngine, ground_referenced_delta

EFFECTIVE_CONFIG = "\n".join(
    [
        "workflow = effective-hamiltonian",
        "f_r = 4 GHz",
        "g3 = 20 MHz",
        "g4 = 0.5 MHz",
        "order = 2",
    ]
)


def data_rows(path):
    lines = [line for line in path.read_text(encoding="utf-8").splitlines() if not line.startswith("#")]
    return [line.split(",") for line in lines]


def write_config(directory, text):
    path = directory / "run.cfg"
    path.write_text(text, encoding="utf-8")
    return path


class TestGroundReferencedDelta:
    def test_kerr_levels(self):
        """E_n = 7 + 2n + 0.5 n(n-1) leaves 0.5 n(n-1)."""
        n = np.arange(6)
        np.testing.assert_allclose(ground_referenced_delta(7 + 2 * n + 0.5 * n * (n - 1)), 0.5 * n * (n - 1))


class TestEffectiveHamiltonianWorkflow:
    """Emit modes of the effective-hamiltonian workflow."""

    def test_csv(self, temp_dir):
        result = WorkflowEngine(parse_config(EFFECTIVE_CONFIG)).run(temp_dir)
        names = [path.name for path in result.artifacts]
        assert names == ["coefficients.csv", "effective-hamiltonian.report.txt"]

        rows = data_rows(temp_dir / "coefficients.csv")
        assert rows[0] == ["n", "expression", "value_hz", "full_series", "listed"]
        assert [row[0] for row in rows[1:]] == [str(n) for n in range(len(rows) - 1)]
        assert all(row[4] == "1" for row in rows[1:4])
        assert rows[2][1] == "-60*g3^2/w + 12*g4"
        assert "g4^2/w" in rows[2][3]
        assert "Kerr-free point" in result.report
        assert "Order-2 Kerr-free g3" in result.report

    def test_symbolic(self, temp_dir):
        result = WorkflowEngine(parse_config(EFFECTIVE_CONFIG), emit="symbolic").run(temp_dir)
        assert result.console_text.startswith("S^(1) =")
        assert (temp_dir / "effective_hamiltonian.txt").read_text(encoding="utf-8") == result.console_text

    def test_coefficients(self, temp_dir):
        result = WorkflowEngine(parse_config(EFFECTIVE_CONFIG), emit="coefficients").run(temp_dir)
        assert "c2 = " in result.console_text
        assert "c1 = -60*g3^2/w + 12*g4\n" in result.console_text
        assert (temp_dir / "coefficients.txt").exists()

    def test_deterministic(self, temp_dir):
        config = parse_config(EFFECTIVE_CONFIG)
        WorkflowEngine(config).run(temp_dir / "one")
        WorkflowEngine(config).run(temp_dir / "two")
        first = (temp_dir / "one" / "coefficients.csv").read_bytes()
        assert first == (temp_dir / "two" / "coefficients.csv").read_bytes()

    def test_fifth_order_couplings(self, temp_dir):
        """With g5 present the Kerr-free relation still comes from the g3/g4 model."""
        config = parse_config(EFFECTIVE_CONFIG + "\nn_max = 5\ng5 = 1 kHz")
        result = WorkflowEngine(config).run(temp_dir)
        assert "Order-2 Kerr-free g3" in result.report


class TestOtherWorkflows:
    def test_spectrum(self, temp_dir):
        text = "workflow = spectrum\nf_r = 6 GHz\ng4 = 2 kHz\ng3 = auto-kerr-free\ndim = 50\norder = 2"
        WorkflowEngine(parse_config(text)).run(temp_dir)
        rows = data_rows(temp_dir / "spectrum.csv")
        assert rows[0] == ["n", "E_n_exact", "E_n_perturbative", "delta_E_n_exact", "delta_E_n_perturbative"]
        assert rows[1] == ["0", "0", "0", "0", "0"]
        assert float(rows[2][1]) == pytest.approx(6e9, rel=1e-3)
        for row in rows[1:12]:
            assert abs(float(row[3]) - float(row[4])) < 1e3

    def test_kerr_oscillations_needs_time_scale(self, temp_dir):
        config = parse_config("workflow = kerr-oscillations\nf_r = 4 GHz")
        with pytest.raises(ValueError, match="t_end"):
            WorkflowEngine(config).run(temp_dir)

    def test_optimize_needs_quartic(self, temp_dir):
        config = parse_config("workflow = optimize-g3\nf_r = 4 GHz")
        with pytest.raises(ValueError, match="g4 > 0"):
            WorkflowEngine(config).run(temp_dir)

    def test_expand_potential(self, temp_dir):
        text = "\n".join(
            [
                "workflow = expand-potential",
                "f_r = 4 GHz",
                "device = snail",
                "e_j = 100 GHz",
                "flux_min = 0",
                "flux_max = 0.4*2pi",
                "flux_points = 5",
                "taylor_order = 5",
            ]
        )
        result = WorkflowEngine(parse_config(text)).run(temp_dir)
        rows = data_rows(temp_dir / "flux_sweep.csv")
        assert rows[0] == ["flux", "phi_min", "c2", "c3", "c4", "c5", "g3_hz", "g4_hz", "g5_hz", "kerr_free_flag"]
        assert len(rows) == 6
        assert float(rows[1][6]) == pytest.approx(0.0, abs=1e-3)
        assert "Kerr-free fluxes" in result.report


class TestCli:
    """Command-line behaviour through typer's runner."""

    runner = CliRunner()

    def test_version(self):
        result = self.runner.invoke(app, ["--version"])
        assert result.exit_code == 0
        assert "bosonic-sw v0.1.0" in result.output

    def test_missing_config(self):
        result = self.runner.invoke(app, [])
        assert result.exit_code == 1
        assert "--config is required" in result.output

    def test_invalid_config(self, temp_dir):
        path = write_config(temp_dir, "workflow = spectrum\nf_r = -1")
        result = self.runner.invoke(app, ["--config", str(path), "--out", str(temp_dir / "out")])
        assert result.exit_code == 1
        assert "line 2" in result.output

    def test_unknown_emit(self, temp_dir):
        path = write_config(temp_dir, EFFECTIVE_CONFIG)
        result = self.runner.invoke(app, ["--config", str(path), "--emit", "latex"])
        assert result.exit_code == 1
        assert "Unknown --emit value" in result.output

    def test_workflow_error_exits_nonzero(self, temp_dir):
        path = write_config(temp_dir, "workflow = optimize-g3\nf_r = 4 GHz")
        result = self.runner.invoke(app, ["--config", str(path), "--out", str(temp_dir / "out")])
        assert result.exit_code == 1
        assert "Error during optimize-g3" in result.output

    def test_symbolic_run(self, temp_dir):
        path = write_config(temp_dir, EFFECTIVE_CONFIG)
        out = temp_dir / "out"
        result = self.runner.invoke(app, ["--config", str(path), "--out", str(out), "--emit", "symbolic"])
        assert result.exit_code == 0
        assert "S^(1) =" in result.output
        assert (out / "effective_hamiltonian.txt").exists()
        assert (out / "effective-hamiltonian.report.txt").exists()


class TestThreads:
    def test_flag_wins(self, monkeypatch):
        monkeypatch.setenv("BOSONIC_SW_THREADS", "8")
        assert resolve_threads(2) == 2

    def test_environment_fallback(self, monkeypatch):
        monkeypatch.setenv("BOSONIC_SW_THREADS", "3")
        assert resolve_threads(None) == 3
        monkeypatch.delenv("BOSONIC_SW_THREADS")
        assert resolve_threads(None) == 1

    def test_invalid_environment(self, monkeypatch):
        monkeypatch.setenv("BOSONIC_SW_THREADS", "many")
        with pytest.raises(typer.BadParameter):
            resolve_threads(None)
