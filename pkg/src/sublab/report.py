"""Report records, JSON-lines and CSV output, and the human-readable digest."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np


def plain(v):
    """Convert numpy scalars/arrays and tuples to JSON-friendly Python objects."""
    if isinstance(v, dict):
        return {str(k): plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return plain(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        f = float(v)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    return v


@dataclass
class InequalityReport:
    experiment: str
    tag: str
    inputs: dict
    values: dict
    tolerance: float
    verdict: bool
    engine: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    note: str = ""

    def to_dict(self) -> dict:
        return plain(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _sort_key(r: InequalityReport):
    return (r.experiment, r.tag)


def write_jsonl(reports, path: Path) -> None:
    lines = [r.to_json() for r in sorted(reports, key=_sort_key)]
    _atomic_write(Path(path), "\n".join(lines) + ("\n" if lines else ""))


def write_csv(reports, path: Path) -> None:
    """One row per report: experiment, tag, verdict, tolerance and the scalar values."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["experiment", "tag", "verdict", "tolerance", "key", "value"])
    for r in sorted(reports, key=_sort_key):
        for k, v in sorted(plain(r.values).items()):
            if isinstance(v, (int, float, str, bool)):
                w.writerow([r.experiment, r.tag, "pass" if r.verdict else "FAIL", r.tolerance, k, v])
    _atomic_write(Path(path), buf.getvalue())


def write_table(rows, header, path: Path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(plain(list(row)))
    _atomic_write(Path(path), buf.getvalue())


def read_jsonl(path: Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def digest_text(records: list[dict]) -> str:
    lines = []
    for rec in sorted(records, key=lambda d: (d["experiment"], d["tag"])):
        lines.append(f"{rec['experiment']:<16} {rec['tag']:<32} {'pass' if rec['verdict'] else 'FAIL'}")
    n_fail = sum(1 for rec in records if not rec["verdict"])
    lines.append(f"{len(records)} reports, {n_fail} failing")
    return "\n".join(lines) + "\n"


def digest(directory) -> str:
    d = Path(directory)
    records = []
    for p in sorted(d.glob("*.jsonl")):
        records.extend(read_jsonl(p))
    return digest_text(records)
