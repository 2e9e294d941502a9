"""Bosonic SW - effective Hamiltonians of weakly nonlinear oscillators."""

__version__ = "0.1.0"
