"""Pytest configuration and fixtures."""

import math
import tempfile
from pathlib import Path

import numpy as np
import pytest

from src.bosonic_sw.algebra import OperatorPolynomial, symbol
from src.bosonic_sw.models import PerturbationProblem
from src.bosonic_sw.schrieffer_wolff import effective_hamiltonian


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def rng():
    """Seeded generator for property suites."""
    return np.random.default_rng(20240611)


@pytest.fixture
def ladder():
    """(a, ad) for mode 0."""
    return OperatorPolynomial.annihilation(), OperatorPolynomial.creation()


@pytest.fixture
def g3_over_w():
    return symbol("g3") * symbol("w", -1)


@pytest.fixture(scope="session")
def second_order_expansion():
    """g3/g4 resonator expanded to second order."""
    return effective_hamiltonian(PerturbationProblem.single_mode((3, 4), order=2))


@pytest.fixture(scope="session")
def fourth_order_expansion():
    """g3/g4 resonator expanded to fourth order."""
    return effective_hamiltonian(PerturbationProblem.single_mode((3, 4), order=4))


@pytest.fixture
def kerr_free_params():
    """6 GHz resonator with 2 kHz quartic coupling, in rad/s."""
    w = 2 * math.pi * 6e9
    g4 = 2 * math.pi * 2e3
    return {"w": w, "g3": math.sqrt(g4 * w / 5), "g4": g4}


@pytest.fixture
def spectrum_config_text():
    return "\n".join(
        [
            "# Kerr-free spectrum",
            "workflow = spectrum",
            "",
            "[resonator]",
            "f_r = 6 GHz",
            "g4 = 2 kHz",
            "g3 = auto-kerr-free",
            "dim = 160",
        ]
    )
