"""Pydantic models for the bosonic SW engine."""

import math
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import sympy
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .algebra import (
    Coefficient,
    ModeMonomial,
    OperatorPolynomial,
    expand_quadrature_power,
    mode_frequency,
    symbol,
)
from .units import hz_to_angular

AUTO_KERR_FREE = "auto-kerr-free"
LISTED_COEFFICIENTS = 4  # c0..c3 are the conventionally tabulated ones

Workflow = Literal[
    "expand-potential",
    "effective-hamiltonian",
    "spectrum",
    "kerr-oscillations",
    "cubic-phase",
    "optimize-g3",
]


class PerturbationProblem(BaseModel):
    """H = H0 + lambda*V with diagonal H0 = sum_j w_j ad_j a_j."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    h0: OperatorPolynomial = Field(description="Free Hamiltonian")
    v: OperatorPolynomial = Field(description="Hermitian perturbation")
    order: int = Field(ge=1, description="Target order M in lambda")
    frequencies: tuple[Coefficient, ...] = Field(
        default=(), description="Per-mode frequencies read off H0"
    )

    @field_validator("h0")
    @classmethod
    def validate_h0(cls, v: OperatorPolynomial) -> OperatorPolynomial:
        for monomial in v:
            if any(p != 1 or q != 1 for _, p, q in monomial.factors) or len(monomial.factors) != 1:
                raise ValueError(f"H0 must be a sum of number operators, found {monomial}")
        return v

    @field_validator("v")
    @classmethod
    def validate_v(cls, v: OperatorPolynomial) -> OperatorPolynomial:
        if not v.is_hermitian():
            raise ValueError("Perturbation V must be Hermitian")
        return v

    @model_validator(mode="after")
    def fill_frequencies(self):
        if not self.frequencies:
            modes = sorted(set(self.h0.modes) | set(self.v.modes))
            frequencies = tuple(
                self.h0.coefficient(ModeMonomial.of(1, 1, mode)) for mode in range(max(modes, default=0) + 1)
            )
            object.__setattr__(self, "frequencies", frequencies)
        for mode in self.v.modes:
            if mode >= len(self.frequencies) or self.frequencies[mode] == 0:
                raise ValueError(f"Mode {mode} appears in V but has no frequency in H0")
        return self

    @property
    def is_single_mode(self) -> bool:
        return set(self.h0.modes) | set(self.v.modes) <= {0}

    @classmethod
    def single_mode(cls, coupling_orders: tuple[int, ...] = (3, 4), order: int = 2) -> "PerturbationProblem":
        """Resonator model H0 = w ad a, V = sum_n g_n (a + ad)^n.

        Args:
            coupling_orders: Nonlinearity orders n >= 3 to include
            order: Target order M

        Returns:
            PerturbationProblem with symbolic couplings ``g<n>`` and frequency ``w``
        """
        if any(n < 3 for n in coupling_orders):
            raise ValueError(f"Coupling orders must be >= 3, got {coupling_orders}")
        h0 = OperatorPolynomial.number(0) * mode_frequency(0)
        v = OperatorPolynomial.zero()
        for n in sorted(set(coupling_orders)):
            v = v + expand_quadrature_power(0, n) * symbol(f"g{n}")
        return cls(h0=h0, v=v, order=order)


class EffectiveExpansion(BaseModel):
    """Per-order SW generators and diagonal contributions."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    problem: PerturbationProblem
    generators: tuple[OperatorPolynomial, ...] = Field(description="S^(m), m = 1..M")
    diagonal_terms: tuple[OperatorPolynomial, ...] = Field(description="H^(m), m = 1..M")
    perturbations: tuple[OperatorPolynomial, ...] = Field(description="Full V^(m) before splitting")
    max_degrees: tuple[int, ...] = Field(description="Largest monomial degree generated at each order")

    @model_validator(mode="after")
    def validate_orders(self):
        order = self.problem.order
        for name in ("generators", "diagonal_terms", "perturbations", "max_degrees"):
            if len(getattr(self, name)) != order:
                raise ValueError(f"{name} must hold exactly {order} entries")
        return self

    @property
    def order(self) -> int:
        return self.problem.order

    @property
    def complete_phi_degree(self) -> int:
        """Highest phi_zpf degree that is complete at this lambda order."""
        return self.order + 2

    @property
    def diagonal_sum(self) -> OperatorPolynomial:
        """sum_m H^(m), the effective Hamiltonian without H0."""
        total = OperatorPolynomial.zero()
        for term in self.diagonal_terms:
            total = total + term
        return total

    @property
    def effective_hamiltonian(self) -> OperatorPolynomial:
        return self.problem.h0 + self.diagonal_sum

    def diagonal_coefficients(self, truncated: bool = False) -> list[Coefficient]:
        """c_n with sum_m H^(m) = sum_n c_n ad^n a^n (single mode).

        Args:
            truncated: Keep only terms complete in phi_zpf degree

        Returns:
            List indexed by n, from c_0 to the highest generated power
        """
        if not self.problem.is_single_mode:
            raise ValueError("Diagonal coefficients c_n are defined for single-mode problems")
        total = self.diagonal_sum
        if truncated:
            total = total.truncate_phi_degree(self.complete_phi_degree)
        powers = [monomial.creation_power(0) for monomial in total]
        coefficients = [sympy.S.Zero for _ in range(max(powers, default=0) + 1)]
        for monomial, coefficient in total.items():
            coefficients[monomial.creation_power(0)] = coefficient
        while len(coefficients) > 1 and coefficients[-1] == 0:
            coefficients.pop()
        return coefficients

    def is_listed(self, n: int) -> bool:
        """Whether c_n belongs to the conventionally tabulated set c_0..c_3."""
        return n < LISTED_COEFFICIENTS


class DeviceSpec(BaseModel):
    """SNAIL / ATS dipole parameters."""

    kind: Literal["snail", "ats"] = Field(description="Circuit element kind")
    alpha: float = Field(description="Small-junction asymmetry, 0 < alpha < 1")
    n_junctions: int = Field(default=3, description="Number of large junctions")
    e_j: float = Field(description="Josephson energy in angular frequency units (rad/s)")
    phi_zpf: float = Field(description="Dimensionless zero-point phase fluctuation")
    phi_ext: float = Field(default=0.0, description="SNAIL external flux (rad)")
    phi_sigma: float = Field(default=0.0, description="ATS sum flux (rad)")
    phi_delta: float = Field(default=0.0, description="ATS difference flux (rad)")

    @field_validator("alpha")
    @classmethod
    def validate_alpha(cls, v):
        if not 0 < v < 1:
            raise ValueError("alpha must satisfy 0 < alpha < 1")
        return v

    @field_validator("n_junctions")
    @classmethod
    def validate_n_junctions(cls, v):
        if v < 1:
            raise ValueError("n_junctions must be at least 1")
        return v

    @field_validator("e_j", "phi_zpf")
    @classmethod
    def validate_positive(cls, v, info):
        if v <= 0:
            raise ValueError(f"{info.field_name} must be positive")
        return v


class CouplingSet(BaseModel):
    """Taylor coefficients around the potential minimum and the mapped couplings."""

    phi_min: float = Field(description="Location of the potential minimum (rad)")
    taylor: dict[int, float] = Field(description="U^(k)(phi_min)/k! for k = 2..n_max")
    couplings: dict[int, float] = Field(description="g_k = taylor_k * phi_zpf^k for k >= 3 (rad/s)")
    omega_shift: float = Field(description="2 * taylor_2 * phi_zpf^2 (rad/s)")
    phi_zpf: float
    bare_frequency: Optional[float] = Field(default=None, description="Caller-supplied bare frequency (rad/s)")
    mapping: str = Field(default="simplified", description="Label of the coupling mapping")

    @property
    def g3(self) -> float:
        return self.couplings.get(3, 0.0)

    @property
    def g4(self) -> float:
        return self.couplings.get(4, 0.0)

    @property
    def frequency(self) -> Optional[float]:
        """Bare frequency plus the potential-curvature shift, when a bare frequency was given."""
        if self.bare_frequency is None:
            return None
        return self.bare_frequency + self.omega_shift


class QuantumState(BaseModel):
    """Complex amplitudes over a truncated Fock basis."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    amplitudes: np.ndarray = Field(description="Complex amplitude vector of length dim")

    @field_validator("amplitudes", mode="before")
    @classmethod
    def validate_amplitudes(cls, v):
        array = np.asarray(v, dtype=complex)
        if array.ndim != 1 or array.size == 0:
            raise ValueError("Amplitudes must be a non-empty 1-D vector")
        return array

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def leakage(self) -> float:
        """Population in the top 10% of the basis (at least one state)."""
        top = max(1, math.ceil(0.1 * self.dim))
        return float(np.sum(np.abs(self.amplitudes[-top:]) ** 2))

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def normalized(self) -> "QuantumState":
        return QuantumState(amplitudes=self.amplitudes / self.norm)


class EvolutionRecord(BaseModel):
    """|<a>|(t) along an evolution."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: np.ndarray = Field(description="Time grid (s)")
    abs_exp_a: np.ndarray = Field(description="|<a>| at each time")
    smoothed: Optional[np.ndarray] = Field(default=None, description="Oscillation-averaged |<a>|")
    snapshots: Optional[list[QuantumState]] = Field(default=None, description="Optional states at each time")
    max_norm_error: float = Field(default=0.0, description="Largest | ||psi|| - 1 | observed")

    @field_validator("times", "abs_exp_a", mode="before")
    @classmethod
    def as_float_array(cls, v):
        return np.asarray(v, dtype=float)

    @model_validator(mode="after")
    def validate_grid(self):
        if self.times.ndim != 1 or self.times.shape != self.abs_exp_a.shape:
            raise ValueError("times and abs_exp_a must be 1-D arrays of equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("Time grid must be strictly increasing")
        if np.any(self.abs_exp_a < 0):
            raise ValueError("|<a>| must be non-negative")
        return self

    def value_at(self, t: float, smoothed: bool = True) -> float:
        """Signal at the grid point closest to ``t``."""
        signal = self.smoothed if smoothed and self.smoothed is not None else self.abs_exp_a
        return float(signal[int(np.argmin(np.abs(self.times - t)))])


class SweepResult(BaseModel):
    """State-preparation error over a (delta, g3_dc) grid, all in rad/s."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    deltas: np.ndarray = Field(description="Frequency detunings delta (rad/s)")
    g3_dc_values: np.ndarray = Field(description="Static cubic couplings (rad/s)")
    errors: np.ndarray = Field(description="E = 1 - fidelity, shape (len(deltas), len(g3_dc_values))")
    rotated_errors: Optional[np.ndarray] = Field(
        default=None, description="E with the fidelity maximised over a free rotation angle"
    )
    tau: float = Field(description="Preparation time (s)")

    @field_validator("deltas", "g3_dc_values", "errors", mode="before")
    @classmethod
    def as_float_array(cls, v):
        return np.asarray(v, dtype=float)

    @model_validator(mode="after")
    def validate_errors(self):
        if self.errors.shape != (self.deltas.size, self.g3_dc_values.size):
            raise ValueError(f"Error matrix shape {self.errors.shape} does not match the grid axes")
        if np.any(self.errors < -1e-12) or np.any(self.errors > 1 + 1e-12):
            raise ValueError("Errors must lie in [0, 1]")
        return self

    @property
    def optimum_index(self) -> tuple[int, int]:
        i, j = np.unravel_index(int(np.argmin(self.errors)), self.errors.shape)
        return int(i), int(j)

    @property
    def optimum(self) -> tuple[float, float, float]:
        """(delta, g3_dc, E) at the smallest error."""
        i, j = self.optimum_index
        return float(self.deltas[i]), float(self.g3_dc_values[j]), float(self.errors[i, j])


class OptimizationResult(BaseModel):
    """Outcome of a 1-D scan plus golden-section refinement."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    argmax: float = Field(description="Optimal coupling (rad/s)")
    value: float = Field(description="Objective at the optimum")
    scan_points: np.ndarray
    scan_values: np.ndarray
    at_edge: bool = Field(default=False, description="Scan maximum sat on the range edge")


class WorkflowResult(BaseModel):
    """Artifacts and console text produced by one workflow run."""

    workflow: str
    artifacts: list[Path] = Field(default_factory=list)
    report: str = ""
    console_text: Optional[str] = Field(default=None, description="Text to print for --emit symbolic|coefficients")


class RunConfig(BaseModel):
    """Resolved run configuration; user-facing frequencies are in Hz."""

    workflow: Workflow
    f_r: float = Field(description="Resonator frequency (Hz)")

    # Hamiltonian
    g3: Union[float, Literal["auto-kerr-free"]] = 0.0
    g4: float = 0.0
    g5: float = 0.0
    g6: float = 0.0
    g3_values: Optional[list[Union[float, Literal["auto-kerr-free"]]]] = None
    g4_values: Optional[list[float]] = None
    order: int = 4
    n_max: int = 4
    levels: Optional[int] = None
    dim: Optional[int] = None

    # Kerr oscillations and g3 optimisation
    alpha0: float = 2.0
    t_end: Optional[float] = None
    samples_per_period: int = 16
    savgol_periods: float = 4.0
    polyorder: int = 3
    g3_min: Optional[float] = None
    g3_max: Optional[float] = None
    g3_points: int = 21

    # Cubic phase
    g4_dc: float = 0.0
    g3_ac: float = 0.0
    gamma: float = 0.1
    squeezing: float = 0.69
    delta_min: float = -1.5e6
    delta_max: float = 0.5e6
    delta_points: int = 9
    g3_dc_min: float = 6e6
    g3_dc_max: float = 14e6
    g3_dc_points: int = 9
    wigner_extent: float = 4.0
    wigner_points: int = 81

    # Devices
    device: Optional[Literal["snail", "ats"]] = None
    alpha: float = 0.29
    n_junctions: int = 3
    e_j: Optional[float] = None
    phi_zpf: float = 0.1
    phi_ext: float = 0.0
    phi_sigma: float = 0.0
    phi_delta: float = 0.0
    flux_field: Literal["phi_ext", "phi_sigma", "phi_delta"] = "phi_ext"
    flux_min: float = 0.0
    flux_max: float = 2 * math.pi
    flux_points: int = 201
    taylor_order: int = 6

    # Numerics
    tolerance: float = 1e-9

    @field_validator("f_r")
    @classmethod
    def validate_f_r(cls, v):
        if v <= 0:
            raise ValueError("f_r must be positive")
        return v

    @field_validator("e_j")
    @classmethod
    def validate_e_j(cls, v):
        if v is not None and v <= 0:
            raise ValueError("e_j must be positive")
        return v

    @field_validator("order")
    @classmethod
    def validate_order(cls, v):
        if not 1 <= v <= 6:
            raise ValueError("order must satisfy 1 <= order <= 6")
        return v

    @field_validator("n_max")
    @classmethod
    def validate_n_max(cls, v):
        if not 3 <= v <= 6:
            raise ValueError("n_max must satisfy 3 <= n_max <= 6")
        return v

    @field_validator("levels")
    @classmethod
    def validate_levels(cls, v):
        if v is not None and v < 1:
            raise ValueError("levels must be at least 1")
        return v

    @field_validator("dim")
    @classmethod
    def validate_dim(cls, v):
        if v is not None and v < 16:
            raise ValueError("dim must be at least 16")
        return v

    @field_validator("samples_per_period", "g3_points", "delta_points", "g3_dc_points", "wigner_points", "flux_points")
    @classmethod
    def validate_counts(cls, v, info):
        if v < 1:
            raise ValueError(f"{info.field_name} must be at least 1")
        return v

    @field_validator("tolerance", "savgol_periods", "alpha0", "wigner_extent")
    @classmethod
    def validate_positive(cls, v, info):
        if v <= 0:
            raise ValueError(f"{info.field_name} must be positive")
        return v

    @model_validator(mode="after")
    def validate_workflow_inputs(self):
        if self.g3_values is not None or self.g4_values is not None:
            if self.g3_values is None or self.g4_values is None or len(self.g3_values) != len(self.g4_values):
                raise ValueError("g3_values and g4_values must be given together with equal lengths")
        if self.workflow == "expand-potential" and (self.device is None or self.e_j is None):
            raise ValueError("expand-potential requires device and e_j")
        if self.workflow == "cubic-phase" and self.g3_ac == 0:
            raise ValueError("cubic-phase requires a nonzero g3_ac")
        if self.workflow == "cubic-phase" and self.gamma == 0:
            raise ValueError("cubic-phase requires a nonzero gamma")
        return self

    @property
    def omega_r(self) -> float:
        return hz_to_angular(self.f_r)

    def resolved_dim(self) -> int:
        if self.dim is not None:
            return self.dim
        return 160 if self.workflow == "spectrum" else 60

    def resolve_g3(self, g3: Union[float, str, None] = None, g4: Optional[float] = None) -> float:
        """Resolve ``auto-kerr-free`` to sqrt(g4 f_r / 5) in Hz."""
        g3 = self.g3 if g3 is None else g3
        g4 = self.g4 if g4 is None else g4
        if g3 == AUTO_KERR_FREE:
            if g4 < 0:
                raise ValueError("auto-kerr-free needs g4 >= 0")
            return math.sqrt(g4 * self.f_r / 5)
        return float(g3)

    def couplings(self) -> dict[int, float]:
        """Resolved g_n in Hz for n = 3..n_max."""
        values = {3: self.resolve_g3(), 4: self.g4, 5: self.g5, 6: self.g6}
        return {n: g for n, g in values.items() if n <= self.n_max}

    def coupling_pairs(self) -> list[tuple[float, float]]:
        """(g3, g4) pairs in Hz, resolved."""
        if self.g3_values is None:
            return [(self.resolve_g3(), self.g4)]
        return [(self.resolve_g3(g3, g4), g4) for g3, g4 in zip(self.g3_values, self.g4_values)]

    def device_spec(self, **overrides) -> DeviceSpec:
        if self.device is None or self.e_j is None:
            raise ValueError("No device configured")
        values = dict(
            kind=self.device,
            alpha=self.alpha,
            n_junctions=self.n_junctions,
            e_j=hz_to_angular(self.e_j),
            phi_zpf=self.phi_zpf,
            phi_ext=self.phi_ext,
            phi_sigma=self.phi_sigma,
            phi_delta=self.phi_delta,
        )
        values.update(overrides)
        return DeviceSpec(**values)

    def resolved_items(self) -> list[tuple[str, str]]:
        """Every field with its resolved value, for output headers."""
        items = []
        for name in type(self).model_fields:
            value = getattr(self, name)
            if name == "g3" and value == AUTO_KERR_FREE:
                value = f"{self.resolve_g3()!r} ({AUTO_KERR_FREE})"
            elif name == "dim" and value is None:
                value = self.resolved_dim()
            items.append((name, str(value)))
        return items
