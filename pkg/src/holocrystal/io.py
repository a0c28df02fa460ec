"""Deterministic CSV, JSON and manifest writers."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np


def format_value(v):
    """Floats with 17 significant digits; booleans as ``true``/``false``."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    return path


def jsonable(obj):
    """Plain JSON types; non-finite floats become ``null``, complex becomes ``[re, im]``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(obj.real), jsonable(obj.imag)]
    return obj


def dumps(obj):
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir, command, config, files, versions):
    """Resolved config, tool versions and a hash of every artifact (no timestamps)."""
    out_dir = Path(out_dir)
    record = {
        "command": command,
        "config": config,
        "seed": config.get("seed"),
        "versions": versions,
        "files": {Path(f).name: sha256(f) for f in sorted(files, key=lambda p: Path(p).name)},
    }
    return write_json(out_dir / "manifest.json", record)
