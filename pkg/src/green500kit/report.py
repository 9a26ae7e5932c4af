"""Versioned JSON reports and their text rendering."""
from __future__ import annotations

import json
import math
from typing import Any

from .errors import ParseError

SCHEMA_VERSION = "1.0"


def make_report(command: str, ok: bool, inputs: dict, parameters: dict,
                verdicts: dict, metrics: dict, argv: list[str] | None = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "ok": bool(ok),
        "inputs": inputs,
        "parameters": parameters,
        "verdicts": verdicts,
        "metrics": metrics,
        "provenance": {"argv": list(argv or [])},
    }


def _clean(obj: Any):
    # JSON has no inf/nan; a report must stay parseable
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=False) + "\n"


def loads(text: str) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid report JSON ({exc.msg})", exc.lineno) from None
    if not isinstance(obj, dict) or "schema_version" not in obj:
        raise ParseError("not a green500kit report (no schema_version)")
    major = str(obj["schema_version"]).split(".")[0]
    if major != SCHEMA_VERSION.split(".")[0]:
        raise ParseError(f"unsupported report schema {obj['schema_version']}")
    return obj


def _lines(prefix: str, obj: Any, out: list[str]):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _lines(f"{prefix}.{k}" if prefix else k, v, out)
    elif isinstance(obj, list) and obj and all(isinstance(v, dict) for v in obj):
        for i, v in enumerate(obj):
            _lines(f"{prefix}[{i}]", v, out)
    elif isinstance(obj, float):
        out.append(f"  {prefix}: {obj:.6g}")
    else:
        out.append(f"  {prefix}: {obj}")


def render_text(report: dict) -> str:
    """Human-readable view of a report; the JSON stays the source of truth."""
    status = "OK" if report.get("ok") else "VIOLATION"
    out = [f"{report.get('command', '?')}: {status}  (schema {report.get('schema_version')})"]
    for section in ("metrics", "verdicts", "parameters", "inputs"):
        if report.get(section):
            out.append(f"{section}:")
            _lines("", report[section], out)
    return "\n".join(out) + "\n"
