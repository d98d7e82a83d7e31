"""
Report serialisation helpers: content hashing, config hashing, JSON writing
and the line-delimited training log.
"""

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from src import config

__all__ = [
    "content_hash",
    "config_hash",
    "to_json_text",
    "write_json_report",
    "write_trajectory_log",
    "check_report_schema",
]


def content_hash(*parts: bytes | np.ndarray) -> str:
    """
    SHA-256 of the concatenated bytes of the given parts.

    Arrays are hashed through their little-endian float64 / int64 bytes so the
    digest does not depend on the in-memory dtype chosen by a loader.
    """
    digest = hashlib.sha256()
    for part in parts:
        if isinstance(part, np.ndarray):
            if np.issubdtype(part.dtype, np.integer):
                part = np.ascontiguousarray(part, dtype="<i8").tobytes()
            else:
                part = np.ascontiguousarray(part, dtype="<f8").tobytes()
        digest.update(part)
    return digest.hexdigest()


def config_hash(cfg: dict[str, Any]) -> str:
    """SHA-256 of the canonical (sorted-key) JSON form of a config mapping."""
    return hashlib.sha256(to_json_text(cfg).encode("utf-8")).hexdigest()


def _default(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serialisable")


def to_json_text(payload: dict[str, Any]) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(payload, sort_keys=True, indent=2, default=_default) + "\n"


def write_json_report(path: Path, payload: dict[str, Any], timestamp: bool = True) -> Path:
    """
    Write a report document as canonical JSON.

    Args:
        path: Destination file (parent directories are created)
        payload: Report mapping
        timestamp: Add a UTC ``timestamp`` field; it is the only field allowed
            to differ between two runs with identical flags and seeds

    Returns:
        The path written
    """
    document = dict(payload)
    if timestamp:
        document["timestamp"] = datetime.now(timezone.utc).isoformat()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json_text(document), encoding="utf-8")
    print(f"✓ Report written to: {path}")
    return path


def write_trajectory_log(path: Path, records: list[dict[str, float]]) -> Path:
    """Write training records {iteration, objective, risk_term, gap_term} as JSON lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame.from_records(
        records, columns=["iteration", "objective", "risk_term", "gap_term"]
    )
    frame.to_json(path, orient="records", lines=True, double_precision=15)
    print(f"✓ Training log written to: {path} ({len(frame)} records)")
    return path


_JSON_TYPES: dict[str, tuple[type, ...]] = {
    "object": (dict,),
    "array": (list,),
    "string": (str,),
    "integer": (int,),
    "number": (int, float),
}


def _range_problems(name: str, value: float, rule: dict[str, Any]) -> list[str]:
    checks = (
        ("minimum", lambda limit: value >= limit, ">="),
        ("exclusiveMinimum", lambda limit: value > limit, ">"),
        ("maximum", lambda limit: value <= limit, "<="),
        ("exclusiveMaximum", lambda limit: value < limit, "<"),
    )
    return [
        f"'{name}' must be {op} {rule[keyword]}, got {value!r}"
        for keyword, holds, op in checks
        if keyword in rule and not holds(rule[keyword])
    ]


def check_report_schema(payload: dict[str, Any], schema_path: Path | None = None) -> list[str]:
    """
    Problems found when checking a report against the shipped JSON schema.

    Covers required keys, top-level types, enums, numeric ranges and the
    ledger entries; an empty list means the report conforms.
    """
    schema = json.loads(Path(schema_path or config.REPORT_SCHEMA_FILE).read_text(encoding="utf-8"))
    problems = [f"missing key '{key}'" for key in schema["required"] if key not in payload]
    for key, rule in schema["properties"].items():
        if key not in payload:
            continue
        value = payload[key]
        expected = _JSON_TYPES.get(rule.get("type", ""), (object,))
        if not isinstance(value, expected) or isinstance(value, bool):
            problems.append(f"'{key}' should be of type {rule['type']}")
            continue
        if "enum" in rule and value not in rule["enum"]:
            problems.append(f"'{key}' has unexpected value {value!r}")
        if "const" in rule and value != rule["const"]:
            problems.append(f"'{key}' must equal {rule['const']!r}")
        if isinstance(value, (int, float)):
            problems.extend(_range_problems(key, value, rule))
        if key == "terms":
            missing = [name for name in rule["required"] if name not in value]
            problems.extend(f"terms lacks '{name}'" for name in missing)
        if key == "delta_ledger":
            purposes = rule["items"]["properties"]["purpose"]["enum"]
            share_rule = rule["items"]["properties"]["share"]
            for entry in value:
                share = entry.get("share")
                if (
                    entry.get("purpose") not in purposes
                    or not isinstance(share, (int, float))
                    or _range_problems("share", share, share_rule)
                ):
                    problems.append(f"bad ledger entry {entry!r}")
    return problems
