"""Frequency unit helpers for consistent Hz / angular handling."""

import math
import re

UNIT_SCALE = {
    "hz": 1.0,
    "khz": 1e3,
    "mhz": 1e6,
    "ghz": 1e9,
    "thz": 1e12,
}

_FREQUENCY_PATTERN = re.compile(
    r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zA-Z]*)\s*$"
)


def hz_to_angular(frequency_hz: float) -> float:
    """Convert a linear frequency f (Hz) to angular frequency 2*pi*f (rad/s)."""
    return 2 * math.pi * frequency_hz


def angular_to_hz(omega: float) -> float:
    """Convert an angular frequency (rad/s) to a linear frequency in Hz."""
    return omega / (2 * math.pi)


def parse_frequency(text: str) -> float:
    """Parse a frequency literal such as ``"4 GHz"``, ``"0.5MHz"`` or ``"20e6"`` to Hz.

    Args:
        text: Frequency literal; a bare number is read as Hz

    Returns:
        Frequency in Hz

    Raises:
        ValueError: If the literal or its unit is invalid
    """
    match = _FREQUENCY_PATTERN.match(text)
    if not match:
        raise ValueError(f"Invalid frequency literal: {text!r}")

    value, unit = match.groups()
    unit = unit.lower() or "hz"
    if unit not in UNIT_SCALE:
        raise ValueError(f"Unknown frequency unit '{match.group(2)}' in {text!r}")

    return float(value) * UNIT_SCALE[unit]


def format_frequency(frequency_hz: float, precision: int = 4) -> str:
    """Format a frequency in Hz with the largest unit that keeps the mantissa >= 1.

    Args:
        frequency_hz: Frequency in Hz
        precision: Significant digits

    Returns:
        String like ``"4 GHz"``, ``"20.67 MHz"`` or ``"0 Hz"``
    """
    magnitude = abs(frequency_hz)
    for unit, scale in (("THz", 1e12), ("GHz", 1e9), ("MHz", 1e6), ("kHz", 1e3)):
        if magnitude >= scale:
            return f"{frequency_hz / scale:.{precision}g} {unit}"
    return f"{frequency_hz:.{precision}g} Hz"


def seconds_to_duration_str(seconds: float) -> str:
    """Human-readable evolution time, e.g. ``"1.667 us"`` or ``"250 ns"``."""
    magnitude = abs(seconds)
    for unit, scale in (("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("ns", 1e-9)):
        if magnitude >= scale:
            return f"{seconds / scale:.4g} {unit}"
    return f"{seconds / 1e-12:.4g} ps"
