"""Key-value text config files.

One `key = value` pair per line; values are JSON fragments (numbers,
strings, lists, objects) with bare words falling back to strings. Blank
lines and `#` comments are ignored. Used for tracker overrides, synthetic
sequence specs, and benchmark manifests.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import FormatError


def parse_kv_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise FormatError(f"{source}:{lineno}: empty key")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def load_kv_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"config file not found: {path}")
    return parse_kv_text(path.read_text(), source=str(path))
