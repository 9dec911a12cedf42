"""records.csv / summary.json persistence."""
from __future__ import annotations

import csv
import json
import math
import os
from importlib import resources

import jsonschema
import numpy as np

COLUMNS = ("seed", "good_psi", "t", "lambda_M_Y", "lambda_M_X", "zeta_minus",
           "lambda_minus_t", "gamma_N", "tw_stat")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def record_row(rec, M: int) -> dict:
    row = {k: getattr(rec, k) for k in COLUMNS if k != "tw_stat"}
    row["tw_stat"] = rec.tw_stat(M)
    return row


def write_records(records, path, M: int):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for rec in records:
            if rec.failed:
                continue
            row = record_row(rec, M)
            w.writerow([_fmt(row[k]) for k in COLUMNS])


def read_records(path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            d = {}
            for k, v in row.items():
                if k == "good_psi":
                    d[k] = v == "true"
                elif k == "seed":
                    d[k] = int(v)
                else:
                    d[k] = float(v)
            out.append(d)
    return out


def load_schema() -> dict:
    text = resources.files("rmtedge").joinpath("data/summary.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if hasattr(x, "to_dict"):
        return _jsonable(x.to_dict())
    return x


def write_summary(summary: dict, path):
    doc = _jsonable(summary)
    jsonschema.validate(doc, load_schema())
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return doc


def export(records, summary: dict, path, M: int, spectra=None):
    """Write records.csv and summary.json (and spectra.npz if given) under ``path``."""
    os.makedirs(path, exist_ok=True)
    write_records(records, os.path.join(path, "records.csv"), M)
    doc = write_summary(summary, os.path.join(path, "summary.json"))
    if spectra:
        np.savez_compressed(os.path.join(path, "spectra.npz"), **{str(k): v for k, v in spectra.items()})
    return doc
