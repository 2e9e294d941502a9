"""Run configuration parsing: flat ``key = value`` files with optional [section] headers."""

import logging
import math
import re
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from .models import AUTO_KERR_FREE, RunConfig
from .units import parse_frequency

logger = logging.getLogger(__name__)

REQUIRED_KEYS = ("workflow", "f_r")

FREQUENCY_FIELDS = {
    "f_r", "g3", "g4", "g5", "g6", "g4_dc", "g3_ac", "delta_min", "delta_max",
    "g3_dc_min", "g3_dc_max", "g3_min", "g3_max", "e_j",
}
FREQUENCY_LIST_FIELDS = {"g3_values", "g4_values"}
INT_FIELDS = {
    "order", "n_max", "levels", "dim", "samples_per_period", "polyorder", "g3_points",
    "delta_points", "g3_dc_points", "wigner_points", "n_junctions", "flux_points", "taylor_order",
}
ANGLE_FIELDS = {"phi_ext", "phi_sigma", "phi_delta", "flux_min", "flux_max"}
WORD_FIELDS = {"workflow", "device", "flux_field"}

_SECTION_PATTERN = re.compile(r"^\[([A-Za-z0-9_\-]+)\]$")
_KEY_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_ANGLE_PATTERN = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?\s*\*?\s*(2?pi)$")


class ConfigError(ValueError):
    """Invalid configuration, with the 1-based line number it refers to."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_angle(text: str) -> float:
    """Radians from ``"1.2"``, ``"pi"``, ``"0.4*2pi"`` or ``"0.5 pi"``."""
    text = text.strip().lower()
    match = _ANGLE_PATTERN.match(text)
    if match:
        factor = float(match.group(1)) if match.group(1) else 1.0
        return factor * (2 * math.pi if match.group(2) == "2pi" else math.pi)
    return float(text)


def _convert(key: str, raw: str) -> Any:
    if key == "g3" and raw == AUTO_KERR_FREE:
        return raw
    if key in FREQUENCY_FIELDS:
        return parse_frequency(raw)
    if key in FREQUENCY_LIST_FIELDS:
        items = [item.strip() for item in raw.split(",") if item.strip()]
        if not items:
            raise ValueError("empty list")
        return [item if key == "g3_values" and item == AUTO_KERR_FREE else parse_frequency(item) for item in items]
    if key in INT_FIELDS:
        return int(raw)
    if key in ANGLE_FIELDS:
        return parse_angle(raw)
    if key in WORD_FIELDS:
        return raw.lower()
    return float(raw)


def parse_config(text: str) -> RunConfig:
    """Parse configuration text into a validated RunConfig.

    Args:
        text: Configuration file contents

    Returns:
        RunConfig with defaults filled in

    Raises:
        ConfigError: On syntax errors, unknown or duplicate keys, missing
            required keys or out-of-range values
    """
    known = set(RunConfig.model_fields)
    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    last_line = 0

    for number, raw_line in enumerate(text.splitlines(), start=1):
        last_line = number
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not _SECTION_PATTERN.match(line):
                raise ConfigError(f"Malformed section header {line!r}", number)
            continue
        if "=" not in line:
            raise ConfigError(f"Expected 'key = value', got {line!r}", number)

        key, raw = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if not _KEY_PATTERN.match(key):
            raise ConfigError(f"Invalid key {key!r}", number)
        if key not in known:
            raise ConfigError(f"Unknown key '{key}'", number)
        if key in values:
            raise ConfigError(f"Duplicate key '{key}' (first set on line {lines[key]})", number)
        if not raw:
            raise ConfigError(f"Missing value for '{key}'", number)

        try:
            values[key] = _convert(key, raw)
        except ValueError as e:
            raise ConfigError(f"Invalid value for '{key}': {e}", number) from e
        lines[key] = number

    anchor = lines.get("workflow", max(last_line, 1))
    for key in REQUIRED_KEYS:
        if key not in values:
            raise ConfigError(f"Missing required key '{key}'", anchor)

    try:
        config = RunConfig(**values)
    except ValidationError as e:
        error = e.errors()[0]
        field = str(error["loc"][0]) if error["loc"] else "workflow"
        raise ConfigError(f"{field}: {error['msg']}", lines.get(field, anchor)) from e

    logger.debug(f"Parsed {len(values)} configuration keys for workflow {config.workflow}")
    return config


def load_config(path: Path) -> RunConfig:
    """Read and parse a UTF-8 configuration file."""
    logger.info(f"Loading configuration from {path}")
    return parse_config(Path(path).read_text(encoding="utf-8"))
