"""Deterministic CSV emission with a provenance comment line.

Every emitted file starts with ``# raggededge=<version> seed=<seed>
config=<hash>`` so reruns are byte-comparable and traceable to their run
configuration.  Floats are written with ``repr`` (shortest round-trip
form), which is stable across runs.
"""

from __future__ import annotations

import hashlib
import json

import pandas as pd

VERSION = "0.1.0"


def config_hash(doc: dict) -> str:
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: str, rows, fieldnames=None, seed: int = 0, cfg_hash: str = "") -> None:
    """Write list-of-dicts or a DataFrame with the provenance header."""
    if isinstance(rows, pd.DataFrame):
        fieldnames = list(rows.columns)
        rows = rows.to_dict("records")
    elif fieldnames is None:
        fieldnames = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fh:
        fh.write(f"# raggededge={VERSION} seed={seed} config={cfg_hash}\n")
        fh.write(",".join(fieldnames) + "\n")
        for row in rows:
            fh.write(",".join(_cell(row[name]) for name in fieldnames) + "\n")
