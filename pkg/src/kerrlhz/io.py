"""Config validation, reproducible file formats and atomic writes."""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "ConfigError",
    "Field",
    "load_config",
    "validate",
    "format_float",
    "csv_text",
    "json_text",
    "write_atomic",
    "config_hash",
    "state_to_json",
]


class ConfigError(ValueError):
    """Schema violation; ``key`` names the offending entry and ``line`` its line in the file."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = f" (line {line})" if line else ""
        super().__init__(f"{message}{where}")
        self.key = key
        self.line = line


@dataclass(frozen=True)
class Field:
    """One config entry: accepted JSON types, default, and an optional nested schema."""

    kinds: tuple
    default: Any = None
    required: bool = False
    nested: Mapping[str, "Field"] | None = None


def _line_of(text: str, key: str) -> int | None:
    pattern = re.compile(re.escape(json.dumps(key)) + r"\s*:")
    for i, line in enumerate(text.splitlines(), 1):
        if pattern.search(line):
            return i
    return None


def _check_kind(value, kinds) -> bool:
    for k in kinds:
        if k is float and isinstance(value, (int, float)) and not isinstance(value, bool):
            return True
        if k is int and isinstance(value, int) and not isinstance(value, bool):
            return True
        if k is bool and isinstance(value, bool):
            return True
        if k in (str, list, dict) and isinstance(value, k):
            return True
        if k is None and value is None:
            return True
    return False


def validate(raw: Mapping[str, Any], schema: Mapping[str, Field], text: str = "", prefix: str = "") -> dict:
    """Check keys and types against ``schema`` and fill defaults."""
    if not isinstance(raw, Mapping):
        raise ConfigError(f"expected an object at {prefix or 'top level'}")
    out = {}
    for key, value in raw.items():
        name = prefix + key
        if key not in schema:
            raise ConfigError(f"unknown config key '{name}'", name, _line_of(text, key))
        f = schema[key]
        if not _check_kind(value, f.kinds):
            kinds = "/".join("null" if k is None else k.__name__ for k in f.kinds)
            raise ConfigError(f"config key '{name}' must be {kinds}", name, _line_of(text, key))
        if f.nested is not None and isinstance(value, Mapping):
            value = validate(value, f.nested, text, name + ".")
        out[key] = value
    for key, f in schema.items():
        if key not in out:
            if f.required:
                raise ConfigError(f"missing required config key '{prefix + key}'", prefix + key)
            out[key] = validate({}, f.nested, text, prefix + key + ".") if f.nested is not None and f.default is None \
                else f.default
    return out


def load_config(path: str | None, schema: Mapping[str, Field]) -> tuple[dict, str]:
    """Parse and validate a JSON config; returns the config and the raw text (empty when no file)."""
    if path is None:
        return validate({}, schema), ""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", None, exc.lineno) from exc
    return validate(raw, schema, text), text


def format_float(x) -> str:
    """Shortest decimal that round-trips to the same double."""
    return repr(float(x))


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_atomic(path: str, text: str) -> str:
    """Write via a temporary file in the target directory and rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def config_hash(config: Mapping, extra: Mapping | None = None) -> str:
    payload = json.dumps(_jsonable({"config": config, **(extra or {})}), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def state_to_json(amplitudes: np.ndarray, dims: Sequence[int], labels: Sequence[str]) -> dict:
    """Amplitudes as ``[re, im]`` pairs with the slot layout."""
    a = np.asarray(amplitudes)
    return {"dims": list(dims), "slots": list(labels), "amplitudes": [[float(z.real), float(z.imag)] for z in a]}
