"""Result tables with Wilson intervals, written as CSV plus a JSON sidecar."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

Z95 = 1.959963984540054
TIMING_SUFFIX = "_train_s"


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        return 0.0, 1.0
    p = successes / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def wilson_halfwidth(successes: int, n: int, z: float = Z95) -> float:
    lo, hi = wilson_interval(successes, n, z)
    return 0.5 * (hi - lo)


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


@dataclass
class ResultTable:
    name: str
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, row: dict) -> None:
        missing = set(self.columns) - set(row)
        if missing:
            raise KeyError(f"row lacks columns {sorted(missing)}")
        self.rows.append(row)

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]

    def sort(self, key: str) -> None:
        self.rows.sort(key=lambda r: r[key])

    def to_csv(self, include_timing: bool = True) -> str:
        """CSV text with rows ordered by the first (grid) column."""
        cols = [c for c in self.columns if include_timing or not c.endswith(TIMING_SUFFIX)]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in sorted(self.rows, key=lambda r: r[self.columns[0]]):
            w.writerow([_fmt(r[c]) for c in cols])
        return buf.getvalue()

    def determinism_hash(self) -> str:
        return hashlib.sha256(self.to_csv(include_timing=False).encode()).hexdigest()

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{self.name}.csv"
        meta_path = out / f"{self.name}.meta.json"
        csv_path.write_text(self.to_csv())
        meta = dict(self.metadata, determinism_hash=self.determinism_hash(), columns=self.columns)
        meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True, default=str))
        return csv_path, meta_path


def read_csv_rows(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
