"""Deterministic report serialisation and run manifests.

Numbers are written with 12 significant digits so that identical inputs
give byte-identical files. Wall-clock timings and other run-specific facts
go only into the manifest, never into the data files.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
import sys
from datetime import date, datetime
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__

SIG_DIGITS = 12


def fmt(value) -> str:
    """Text form of one CSV cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if v == 0:
            return "0"
        return f"{v:.{SIG_DIGITS}g}"
    if isinstance(value, (date, datetime)):
        return value.isoformat()
    return str(value)


def jsonable(value):
    """Recursively convert to JSON-safe values, rounding floats to 12 digits."""
    if isinstance(value, Mapping):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return float(f"{v:.{SIG_DIGITS}g}") + 0.0
    if isinstance(value, (date, datetime)):
        return value.isoformat()
    if isinstance(value, Path):
        return str(value)
    return value


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Mapping]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row.get(c)) for c in columns])
            n += 1
    return n


def write_json(path: Path, payload) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(jsonable(payload), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def file_digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def versions() -> dict:
    import scipy

    return {"tca": __version__, "python": sys.version.split()[0], "numpy": np.__version__,
            "scipy": scipy.__version__, "platform": platform.platform()}


def write_manifest(path: Path, *, command: str, config: Mapping, inputs: Mapping[str, Path],
                   row_counts: Mapping, timings: Mapping, outputs: Mapping[str, Path],
                   notes: Mapping | None = None) -> dict:
    manifest = {
        "command": command,
        "created": datetime.now().isoformat(timespec="seconds"),
        "config": config,
        "inputs": {k: {"path": str(p), "sha256": file_digest(p)} for k, p in sorted(inputs.items())},
        "outputs": {k: {"path": str(p), "sha256": file_digest(p)} for k, p in sorted(outputs.items())},
        "versions": versions(),
        "row_counts": row_counts,
        "timings_seconds": timings,
        "notes": notes or {},
    }
    write_json(path, manifest)
    return manifest


def verify_manifest(path: Path) -> dict[str, bool]:
    """Recompute every recorded digest; ``{path: matches}``."""
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    out = {}
    for section in ("inputs", "outputs"):
        for entry in manifest.get(section, {}).values():
            p = Path(entry["path"])
            out[str(p)] = p.exists() and file_digest(p) == entry["sha256"]
    return out
