"""Record serialisation, grid parsing and ``key = value`` config files."""

import csv
import io
import json
import math

import numpy as np

from .errors import InvalidParameterError

GRID_ATOL = 1e-12


class ConfigError(InvalidParameterError):
    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


def parse_grid(text):
    """Parse ``start:stop:step`` (inclusive), ``a,b,c`` or a single number."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [float(x) for x in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise InvalidParameterError(f"bad grid {text!r}: need step > 0 and stop >= start")
            n = int(math.floor((stop - start) / step + GRID_ATOL / step + 1e-9)) + 1
            vals = start + step * np.arange(n)
            vals[np.abs(vals - stop) <= GRID_ATOL] = stop
            return [float(round(v, 12)) for v in vals]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InvalidParameterError(f"cannot parse grid {text!r}") from None


def _fmt_csv(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def _fmt_json(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def render(records, fmt="csv", columns=None):
    """Render records (flat dicts) as CSV text or a JSON array."""
    records = list(records)
    if columns is None:
        columns = list(records[0]) if records else []
    for r in records:
        if list(r) != list(columns):
            raise InvalidParameterError("records must share one schema")
    if fmt == "json":
        return json.dumps([{k: _fmt_json(r[k]) for k in columns} for r in records], indent=1) + "\n"
    if fmt != "csv":
        raise InvalidParameterError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in records:
        w.writerow([_fmt_csv(r[k]) for k in columns])
    return buf.getvalue()


def emit(records, fmt="csv", destination=None, columns=None, stream=None):
    """Write rendered records to ``destination`` (a path) or ``stream``.

    Raises ``OSError`` if the destination cannot be written.
    """
    text = render(records, fmt, columns)
    if destination is None:
        stream.write(text)
        return
    with open(destination, "w", newline="") as fh:
        fh.write(text)


CONFIG_KEYS = {
    "beta": float,
    "eta": float,
    "etap": float,
    "mu": str,
    "reference_mu": float,
    "omega_max": float,
    "scan_points": int,
    "format": str,
    "threads": int,
    "seed": int,
    "rounds": int,
}

DEFAULTS = {
    "beta": 1.0,
    "eta": 1.0,
    "etap": None,
    "mu": "asymptotic",
    "reference_mu": 1e6,
    "omega_max": 10.0,
    "scan_points": 400,
    "format": "csv",
    "threads": None,
    "seed": 0,
    "rounds": 1_000_000,
}


def _check_value(key, value):
    if key in ("beta", "eta", "etap") and value is not None and not 0.0 < value <= 1.0:
        raise InvalidParameterError(f"{key} must be in (0, 1], got {value}")
    if key == "format" and value not in ("csv", "json"):
        raise InvalidParameterError(f"format must be csv or json, got {value!r}")


def load_config(path):
    """Read ``key = value`` defaults; ``#`` starts a comment.

    Unknown keys, malformed lines and out-of-range values raise
    :class:`ConfigError` carrying the offending line number.
    """
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in CONFIG_KEYS:
                raise ConfigError(f"unknown key {key!r}", lineno)
            try:
                parsed = CONFIG_KEYS[key](value)
            except ValueError:
                raise ConfigError(f"bad value for {key}: {value!r}", lineno) from None
            try:
                _check_value(key, parsed)
            except InvalidParameterError as exc:
                raise ConfigError(str(exc), lineno) from None
            out[key] = parsed
    return out


def merge_settings(flags, config):
    """Flags beat config values, which beat built-in defaults."""
    merged = dict(DEFAULTS)
    merged.update(config)
    merged.update({k: v for k, v in flags.items() if v is not None})
    for k, v in merged.items():
        _check_value(k, v)
    return merged
