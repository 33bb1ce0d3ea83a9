"""Plain-text configuration: dotted keys, one `key = value` per line.

Values are parsed as int, float, or string; comma-separated values become
lists.  Command-line flags override file values.
"""
from __future__ import annotations

from pathlib import Path


def _parse_scalar(tok: str):
    tok = tok.strip()
    for cast in (int, float):
        try:
            return cast(tok)
        except ValueError:
            pass
    return tok


def parse_value(raw: str):
    raw = raw.strip()
    if "," in raw:
        return [_parse_scalar(t) for t in raw.split(",") if t.strip()]
    return _parse_scalar(raw)


def load_config(path) -> dict:
    """Read a dotted-key config file into a flat dict."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = line.split("=", 1)
        out[key.strip()] = parse_value(raw)
    return out


def format_config(cfg: dict) -> str:
    lines = []
    for key in sorted(cfg):
        val = cfg[key]
        if isinstance(val, (list, tuple)):
            val = ",".join(str(v) for v in val)
        lines.append(f"{key} = {val}")
    return "\n".join(lines)
