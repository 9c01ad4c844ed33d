"""Deterministic report assembly: canonical JSON machine output and a flat
human rendering of the same data. No wall-clock fields; identical inputs,
seed and config produce identical bytes."""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction

from .rationals import format_rational

TOOL_NAME = "evimech"
TOOL_VERSION = "0.1.0"


def jsonable(value):
    """Recursively render report payloads into JSON-safe structures."""
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (frozenset, set)):
        return sorted(str(x) for x in value)
    if isinstance(value, dict):
        out = {}
        for key, item in value.items():
            if isinstance(key, (frozenset, set)):
                key = "{" + ",".join(sorted(str(x) for x in key)) + "}"
            elif isinstance(key, tuple):
                key = "|".join(str(jsonable(x)) for x in key)
            elif not isinstance(key, str):
                key = str(key)
            out[key] = jsonable(item)
        return {k: out[k] for k in sorted(out)}
    if isinstance(value, (list, tuple)):
        return [jsonable(x) for x in value]
    return str(value)


def input_digest(raw_bytes: bytes) -> str:
    return hashlib.sha256(raw_bytes).hexdigest()


def build_report(command: str, digest: str, config: dict, payload: dict) -> dict:
    return {
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "command": command,
        "input_digest": digest,
        "config": jsonable(config),
        "payload": jsonable(payload),
    }


def render_machine(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _flatten(prefix, value, rows):
    if isinstance(value, dict):
        if not value:
            rows.append((prefix, "{}"))
        for key in value:
            _flatten(f"{prefix}.{key}" if prefix else str(key), value[key], rows)
    elif isinstance(value, list):
        if not value:
            rows.append((prefix, "[]"))
        for i, item in enumerate(value):
            _flatten(f"{prefix}[{i}]", item, rows)
    else:
        rows.append((prefix, str(value)))


def render_human(report: dict) -> str:
    rows = []
    _flatten("", report, rows)
    width = max((len(k) for k, _ in rows), default=0)
    lines = [f"{key.ljust(width)}  {value}" for key, value in rows]
    return "\n".join(lines) + "\n"


def render(report: dict, fmt: str) -> str:
    if fmt == "machine":
        return render_machine(report)
    return render_human(report)
