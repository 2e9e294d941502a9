"""Command line interface for bosonic-sw."""

import logging
import os
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn, TimeRemainingColumn

from .config import ConfigError, load_config
from .workflows import WorkflowEngine

# Create console for rich output
console = Console()

app = typer.Typer(
    name="bosonic-sw",
    help="Schrieffer-Wolff effective Hamiltonians and Fock-space checks for weakly nonlinear oscillators",
    add_completion=False,
)

EMIT_CHOICES = ("symbolic", "coefficients", "csv")


def setup_logging(verbose: bool = False):
    """Setup logging with rich handler."""
    log_level = logging.DEBUG if verbose else logging.INFO

    logging.basicConfig(
        level=log_level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False)],
    )


def resolve_threads(threads: Optional[int]) -> int:
    """--threads, else BOSONIC_SW_THREADS, else 1."""
    if threads is not None:
        return threads
    raw = os.environ.get("BOSONIC_SW_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise typer.BadParameter(f"BOSONIC_SW_THREADS must be an integer, got {raw!r}")


@app.command()
def main(
    config_file: Optional[Path] = typer.Option(
        None,
        "--config",
        help="Run configuration file (key = value)",
        exists=True,
        file_okay=True,
        dir_okay=False,
        readable=True,
    ),
    out: Path = typer.Option(
        Path("out"),
        "--out",
        help="Output directory for CSVs and reports",
    ),
    emit: str = typer.Option(
        "csv",
        "--emit",
        help="effective-hamiltonian output: symbolic, coefficients or csv",
    ),
    threads: Optional[int] = typer.Option(
        None,
        "--threads",
        min=1,
        help="Worker processes for sweeps (fallback: BOSONIC_SW_THREADS)",
    ),
    seed: Optional[int] = typer.Option(
        None,
        "--seed",
        help="Reserved; every workflow is deterministic",
    ),
    verbose: bool = typer.Option(
        False,
        "-v", "--verbose",
        help="Enable verbose logging",
    ),
    version: bool = typer.Option(
        False,
        "--version",
        help="Show version information",
    ),
):
    """Run one configured analysis and write its artifacts."""

    if version:
        from . import __version__
        console.print(f"bosonic-sw v{__version__}")
        raise typer.Exit()

    setup_logging(verbose)

    if config_file is None:
        console.print("[red]Error:[/red] --config is required")
        raise typer.Exit(1)
    if emit not in EMIT_CHOICES:
        console.print(f"[red]Error:[/red] Unknown --emit value {emit!r}")
        console.print(f"Supported values: {', '.join(EMIT_CHOICES)}")
        raise typer.Exit(1)
    if seed is not None:
        logging.getLogger(__name__).debug(f"Seed {seed} ignored: all workflows are deterministic")

    try:
        config = load_config(config_file)
        worker_count = resolve_threads(threads)
    except (ConfigError, OSError, typer.BadParameter) as e:
        console.print(f"[red]Error reading configuration:[/red] {e}")
        raise typer.Exit(1)

    console.print(f"[blue]Workflow:[/blue] {config.workflow}")
    console.print(f"[blue]Config:[/blue] {config_file}")
    console.print(f"[blue]Output:[/blue] {out}")
    if worker_count > 1:
        console.print(f"[blue]Threads:[/blue] {worker_count}")

    try:
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            "[progress.percentage]{task.percentage:>3.0f}%",
            TimeRemainingColumn(),
            console=console,
        ) as progress:
            task = progress.add_task(f"Running {config.workflow}...", total=None)

            def update_progress(current: int, total: int, message: str):
                progress.update(task, completed=current, total=total, description=message)

            engine = WorkflowEngine(config, threads=worker_count, emit=emit, progress_callback=update_progress)
            result = engine.run(out)
            progress.update(task, description=f"{config.workflow} complete!")

    except KeyboardInterrupt:
        console.print("\n[yellow]Run interrupted by user.[/yellow]")
        raise typer.Exit(1)
    except Exception as e:
        console.print(f"\n[red]Error during {config.workflow}:[/red] {e}")
        raise typer.Exit(1)

    if result.console_text:
        console.print(result.console_text, markup=False, highlight=False)
    console.print(f"[green]{config.workflow} completed successfully![/green]")
    for path in result.artifacts:
        console.print(f"[blue]Wrote:[/blue] {path}")


if __name__ == "__main__":
    app()
