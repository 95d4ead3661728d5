"""Flat ``key = value`` scenario files.

One assignment per line, ``#`` starts a comment. Keys are the field names of
:class:`ScenarioSpec`. Durations take ``s``, ``ms`` or ``us`` (bare numbers
are seconds). Packet rates take ``pkts_s``; ``bit_rate`` takes ``mbps``,
``kbps`` or ``bps`` (bare numbers are bits/second). Booleans are
``true``/``false``/``yes``/``no``/``1``/``0``.
"""
from __future__ import annotations

import dataclasses
import re
from pathlib import Path

from ..mac.scenario import ScenarioError, ScenarioSpec, fmt_duration

DURATION_KEYS = {"slot", "difs", "sifs", "duration", "warmup", "sample_window",
                 "attacker_burst_start", "attacker_burst_end", "stylized_backoff_mean"}
PACKET_RATE_KEYS = {"arrival_rate", "arrival_rate_high", "attacker_rate", "attacker_burst_rate"}
INT_KEYS = {"n_pairs", "packet_size", "retry_limit", "cw1", "cw_max", "seed"}
BOOL_KEYS = {"rts_cts", "stylized"}
STR_KEYS = {"topology_kind", "rate_policy"}
OPTIONAL_KEYS = {"arrival_rate_high", "attacker_burst_rate", "warmup", "stylized_backoff_mean"}

# divisors rather than factors: 20 / 1e6 rounds to the same float as 20e-6
DURATION_UNITS = {"s": 1.0, "ms": 1e3, "us": 1e6}
BIT_RATE_UNITS = {"bps": 1.0, "kbps": 1e3, "mbps": 1e6}
TRUE = {"true", "yes", "1", "on"}
FALSE = {"false", "no", "0", "off"}

_NUMBER = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z_]*)$")


class ScenarioParseError(ScenarioError):
    def __init__(self, source: str, line: int, column: int, message: str):
        super().__init__(f"{source}:{line}:{column}: {message}")
        self.source = source
        self.line = line
        self.column = column


def _number(text: str, units: dict, default_unit: str | None, divide: bool = False):
    m = _NUMBER.match(text)
    if not m:
        raise ValueError(f"expected a number, got {text!r}")
    value, unit = float(m.group(1)), m.group(2).lower()
    if not unit:
        if default_unit is None:
            raise ValueError("a unit suffix is required")
        unit = default_unit
    if unit not in units:
        raise ValueError(f"unknown unit {unit!r}; expected one of {sorted(units)}")
    return value / units[unit] if divide else value * units[unit]


def _convert(key: str, text: str):
    low = text.lower()
    if key in OPTIONAL_KEYS and low in ("none", "default"):
        return None
    if key in DURATION_KEYS:
        return _number(text, DURATION_UNITS, "s", divide=True)
    if key in PACKET_RATE_KEYS:
        return _number(text, {"pkts_s": 1.0}, "pkts_s")
    if key == "bit_rate":
        return _number(text, BIT_RATE_UNITS, "bps")
    if key in INT_KEYS:
        if not re.fullmatch(r"[-+]?\d+", text):
            raise ValueError(f"expected an integer, got {text!r}")
        return int(text)
    if key in BOOL_KEYS:
        if low in TRUE:
            return True
        if low in FALSE:
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if key in STR_KEYS:
        return text
    raise ValueError(f"no converter for {key}")


FIELDS = {f.name for f in dataclasses.fields(ScenarioSpec)}


def parse_scenario_text(text: str, source: str = "<scenario>", strict_loads: bool = True) -> ScenarioSpec:
    values: dict = {}
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            col = len(line) - len(line.lstrip()) + 1
            raise ScenarioParseError(source, lineno, col, "expected 'key = value'")
        key_part, value_part = line.split("=", 1)
        key = key_part.strip()
        key_col = len(key_part) - len(key_part.lstrip()) + 1
        value = value_part.strip()
        value_col = len(key_part) + 2 + len(value_part) - len(value_part.lstrip())
        if key not in FIELDS:
            raise ScenarioParseError(source, lineno, key_col, f"unknown key {key!r}")
        if key in seen:
            raise ScenarioParseError(source, lineno, key_col,
                                     f"duplicate key {key!r} (first set on line {seen[key]})")
        if not value:
            raise ScenarioParseError(source, lineno, value_col, f"missing value for {key!r}")
        try:
            values[key] = _convert(key, value)
        except ValueError as exc:
            raise ScenarioParseError(source, lineno, value_col, f"{key}: {exc}") from None
        seen[key] = lineno
    try:
        spec = ScenarioSpec(**values)
        spec.check_loads(strict=strict_loads)
    except ScenarioError as exc:
        raise ScenarioError(f"{source}: {exc}") from None
    return spec


def parse_scenario(path, strict_loads: bool = True) -> ScenarioSpec:
    path = Path(path)
    return parse_scenario_text(path.read_text(), str(path), strict_loads)


def format_scenario(spec: ScenarioSpec) -> str:
    """Render ``spec`` in the same format; parsing the result gives ``spec`` back."""
    lines = []
    for f in dataclasses.fields(ScenarioSpec):
        v = getattr(spec, f.name)
        if v is None:
            text = "none"
        elif f.name in DURATION_KEYS:
            text = fmt_duration(v)
            if _number(text, DURATION_UNITS, "s", divide=True) != v:
                text = repr(float(v))
        elif f.name in PACKET_RATE_KEYS:
            text = f"{float(v)!r} pkts_s"
        elif f.name == "bit_rate":
            text = f"{float(v)!r} bps"
        elif isinstance(v, bool):
            text = "true" if v else "false"
        else:
            text = str(v)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"
