"""Result serialization: headers with version and config hash, CSV and JSON writers."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import sys
from contextlib import contextmanager

import numpy as np

from . import __version__

UNITS = "atomic"
HARTREE_TO_CM1 = 219474.6313632


def _plain(obj):
    """JSON-safe copy: numpy scalars and arrays become Python numbers and lists."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def header(config: dict) -> dict:
    return {"tool": "vibsim", "version": __version__, "config_sha256": config_hash(config), "units": UNITS, "config": _plain(config)}


def format_float(x: float) -> str:
    return repr(float(x))


def csv_text(config: dict, columns: list[str], rows) -> str:
    buf = io.StringIO()
    h = header(config)
    buf.write(f"# tool: vibsim {h['version']}\n")
    buf.write(f"# config_sha256: {h['config_sha256']}\n")
    buf.write(f"# units: {UNITS}\n")
    buf.write(f"# config: {canonical_json(config)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def json_text(config: dict, payload: dict) -> str:
    doc = {"header": header(config), **_plain(payload)}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def read_csv_rows(text: str) -> tuple[list[str], list[list[str]]]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


@contextmanager
def output_stream(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh
