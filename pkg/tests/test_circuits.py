"""Tests for SNAIL / ATS potentials and the coupling map."""

import math

import numpy as np
import pytest

from src.bosonic_sw.circuits import (
    MinimumNotFoundError,
    ats_fluxes,
    default_bracket,
    find_kerr_free_points,
    find_minimum,
    flux_sweep,
    kerr_condition,
    kerr_free_flux,
    potential,
    potential_derivative,
    taylor_couplings,
)
from src.bosonic_sw.models import DeviceSpec


@pytest.fixture
def snail():
    return DeviceSpec(kind="snail", alpha=0.29, n_junctions=3, e_j=1.0, phi_zpf=0.1, phi_ext=0.4 * 2 * math.pi)


class TestPotential:
    """Closed-form potentials and their derivatives."""

    def test_snail_at_zero_flux(self):
        """U(0) = -alpha E_J - n E_J."""
        spec = DeviceSpec(kind="snail", alpha=0.29, e_j=2.0, phi_zpf=0.1)
        assert potential(spec, 0.0) == pytest.approx(-0.29 * 2.0 - 3 * 2.0)

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_derivatives_match_finite_differences(self, snail, k):
        h = 1e-5
        phi = 0.37
        if k == 1:
            numeric = (potential(snail, phi + h) - potential(snail, phi - h)) / (2 * h)
        else:
            numeric = (
                potential_derivative(snail, phi + h, k - 1) - potential_derivative(snail, phi - h, k - 1)
            ) / (2 * h)
        assert potential_derivative(snail, phi, k) == pytest.approx(numeric, rel=1e-6, abs=1e-9)

    def test_derivative_order_must_be_positive(self, snail):
        with pytest.raises(ValueError):
            potential_derivative(snail, 0.0, 0)

    def test_ats_fluxes(self):
        """Sum and difference fluxes are half the sum and half the difference."""
        sigma, delta = ats_fluxes(1.0, 0.2)
        assert sigma == pytest.approx(0.6)
        assert delta == pytest.approx(0.4)

    def test_default_brackets(self, snail):
        low, high = default_bracket(snail)
        assert high - low == pytest.approx(2 * math.pi)
        assert low < snail.phi_ext / 2 < high
        ats = DeviceSpec(kind="ats", alpha=0.1, e_j=1.0, phi_zpf=0.1)
        assert default_bracket(ats) == (-math.pi, math.pi)


class TestMinimum:
    """Minimisation and Taylor coefficients."""

    def test_minimum_is_stationary(self, snail):
        phi_min = find_minimum(snail)
        assert abs(potential_derivative(snail, phi_min, 1)) <= 1e-12
        assert potential_derivative(snail, phi_min, 2) > 0

    def test_minimum_on_edge_raises(self):
        """A bracket on which U only increases has its lowest value at the edge."""
        spec = DeviceSpec(kind="snail", alpha=0.29, e_j=1.0, phi_zpf=0.1)
        with pytest.raises(MinimumNotFoundError):
            find_minimum(spec, bracket=(0.5, 2.0))

    def test_symmetric_snail_has_no_odd_couplings(self):
        """At zero flux the potential is even, so g3 and g5 vanish."""
        spec = DeviceSpec(kind="snail", alpha=0.29, e_j=1.0, phi_zpf=0.1)
        couplings = taylor_couplings(spec, n_max=6)
        assert couplings.phi_min == pytest.approx(0.0, abs=1e-12)
        assert couplings.g3 == pytest.approx(0.0, abs=1e-12)
        assert couplings.couplings[5] == pytest.approx(0.0, abs=1e-12)
        assert couplings.g4 < 0

    def test_coupling_map(self, snail):
        """g_k = c_k phi_zpf^k and omega_shift = 2 c_2 phi_zpf^2."""
        couplings = taylor_couplings(snail, n_max=5, bare_frequency=10.0)
        for k in (3, 4, 5):
            assert couplings.couplings[k] == pytest.approx(couplings.taylor[k] * 0.1**k)
        assert couplings.omega_shift == pytest.approx(2 * couplings.taylor[2] * 0.01)
        assert couplings.frequency == pytest.approx(10.0 + couplings.omega_shift)
        assert couplings.mapping == "simplified"

    def test_n_max_too_small(self, snail):
        with pytest.raises(ValueError):
            taylor_couplings(snail, n_max=1)

    def test_ats_at_half_quantum_is_even(self):
        """phi_sigma = pi/2 switches off the small junctions, leaving -n E_J cos(phi/n)."""
        spec = DeviceSpec(kind="ats", alpha=0.1, e_j=1.0, phi_zpf=0.1, phi_sigma=math.pi / 2, phi_delta=0.3)
        couplings = taylor_couplings(spec, n_max=4)
        assert couplings.phi_min == pytest.approx(0.0, abs=1e-12)
        assert couplings.g3 == pytest.approx(0.0, abs=1e-12)
        assert couplings.taylor[2] == pytest.approx(1.0 / (2 * 3))


class TestKerrFreePoints:
    """Sign changes of g4 - 5 g3^2 / w_r."""

    def test_condition(self):
        assert kerr_condition(2.0, 5.0, 4.0) == pytest.approx(0.0)

    def test_synthetic_root(self):
        """g3 = x, g4 = 1, w_r = 5 vanishes at x = 1."""
        roots = find_kerr_free_points(lambda x: (x, 1.0), np.linspace(0.0, 2.0, 8), 5.0)
        assert roots == [pytest.approx(1.0, abs=1e-10)]

    def test_root_on_grid_point(self):
        roots = find_kerr_free_points(lambda x: (x, 1.0), np.linspace(0.0, 2.0, 11), 5.0)
        assert roots == [pytest.approx(1.0)]

    def test_no_root(self):
        assert find_kerr_free_points(lambda x: (0.0, 1.0), [0.0, 1.0], 5.0) == []

    def test_snail_flux_sweep(self, snail):
        """Kerr-free fluxes of a SNAIL agree with the flags of the sweep."""
        fluxes = np.linspace(0.0, 0.48 * 2 * math.pi, 41)
        omega_r = 1e3
        roots = kerr_free_flux(snail, fluxes, omega_r)
        rows = flux_sweep(snail, fluxes, omega_r, n_max=4)

        assert roots
        assert sum(flag for _, _, flag in rows) == len(roots)
        for root in roots:
            couplings = taylor_couplings(snail.model_copy(update={"phi_ext": root}), n_max=4)
            assert abs(kerr_condition(couplings.g3, couplings.g4, omega_r)) < 1e-9

    def test_flux_sweep_reports_progress(self, snail):
        calls = []
        rows = flux_sweep(snail, [0.1, 0.2, 0.3], 1e3, n_max=4, progress_callback=lambda *args: calls.append(args))
        assert len(rows) == 3
        assert [c[0] for c in calls] == [0, 1, 2]
        assert all(row[1] is not None for row in rows)
