"""Deterministic CSV/JSON emission with a provenance header."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from qaoa_kvc import __version__


def provenance(cfg) -> dict:
    return {
        "experiment": cfg.kind,
        "config_sha256": cfg.config_hash(),
        "master_seed": cfg.seed,
        "code_version": __version__,
    }


def header_line(cfg) -> str:
    prov = provenance(cfg)
    return "# qaoa_kvc " + " ".join(f"{k}={v}" for k, v in prov.items())


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    return v


def csv_text(cfg, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(header_line(cfg) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def json_text(cfg, payload: dict) -> str:
    return json.dumps({"provenance": provenance(cfg), **payload}, indent=1, sort_keys=True, allow_nan=False) + "\n"


def jsonl_text(cfg, records) -> str:
    head = json.dumps({"provenance": provenance(cfg)}, sort_keys=True)
    lines = [head] + [json.dumps(r, sort_keys=True) for r in records]
    return "\n".join(lines) + "\n"


def read_csv(path) -> tuple[str, list[dict]]:
    """(header comment, rows as dicts of strings)."""
    lines = Path(path).read_text().splitlines()
    return lines[0], list(csv.DictReader(lines[1:]))
