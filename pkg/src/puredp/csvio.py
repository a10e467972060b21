"""The CSV output contract.

Comma separation, ``.`` decimal, ``#``-prefixed metadata lines, LF line
endings, and shortest-round-trip float formatting.  Every numeric cell must
be finite; NaN or Inf aborts the write.  The metadata block records the full
resolved configuration plus its hash so that any output file identifies the
run that produced it byte-exactly.
"""

from __future__ import annotations

import hashlib
import json
import math

__all__ = ["config_hash", "format_cell", "render_csv", "write_csv"]


def config_hash(config: dict) -> str:
    """SHA-256 of the canonical JSON form of a resolved configuration."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def format_cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value} in CSV output")
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        if any(ch in value for ch in ",\n\r#"):
            raise ValueError(f"unsupported characters in CSV cell {value!r}")
        return value
    # numpy scalars and anything else with .item()
    if hasattr(value, "item"):
        return format_cell(value.item())
    raise TypeError(f"unsupported CSV cell type {type(value).__name__}")


def render_csv(columns: list[str], rows: list[tuple], config: dict) -> str:
    """Render the full file body (metadata, header, rows) as one LF string."""
    lines = [
        f"# config_hash={config_hash(config)}",
        f"# config={json.dumps(config, sort_keys=True, separators=(',', ':'))}",
        ",".join(columns),
    ]
    for row in rows:
        if len(row) != len(columns):
            raise ValueError("row width does not match header")
        lines.append(",".join(format_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path: str, columns: list[str], rows: list[tuple], config: dict) -> None:
    body = render_csv(columns, rows, config)
    with open(path, "w", newline="\n") as fh:
        fh.write(body)
