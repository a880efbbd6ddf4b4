"""Simulation result container with deterministic export.

Outputs are reproducible byte-for-byte: numeric formatting is fixed,
dictionaries are sorted, and manifests carry content digests instead of
timestamps.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


@dataclass
class SimResult:
    """Recorded timelines plus bookkeeping from one scenario run."""

    data: dict          # name -> 1-D ndarray, all equal length, 't' present
    ledger: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    events: list = field(default_factory=list)   # (time s, label)
    meta: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.data["t"])
        for name, arr in self.data.items():
            if len(arr) != n:
                raise ValueError(f"column {name!r} length {len(arr)} != {n}")

    def column_names(self) -> list[str]:
        return ["t"] + sorted(k for k in self.data if k != "t")

    def to_csv(self, path: str | Path) -> None:
        names = self.column_names()
        cols = [np.asarray(self.data[k], dtype=float) for k in names]
        lines = [",".join(names)]
        for row in zip(*cols):
            lines.append(",".join(_fmt(v) for v in row))
        Path(path).write_text("\n".join(lines) + "\n")

    def _payload(self) -> dict:
        return {
            "columns": {k: [float(v) for v in self.data[k]]
                        for k in self.column_names()},
            "events": [[float(t), label] for t, label in self.events],
            "ledger": {k: float(v) for k, v in sorted(self.ledger.items())},
            "flags": {k: self.flags[k] for k in sorted(self.flags)},
            "summary": _jsonable(self.summary),
            "meta": _jsonable(self.meta),
        }

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self._payload(), sort_keys=True,
                                         separators=(",", ":")) + "\n")

    def save(self, out_dir: str | Path, name: str, fmt: str = "csv") -> list[Path]:
        """Write the data file plus a manifest; returns the paths written."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        if fmt == "csv":
            data_path = out / f"{name}.csv"
            self.to_csv(data_path)
            side_path = out / f"{name}_summary.json"
            side = {"events": [[float(t), s] for t, s in self.events],
                    "ledger": {k: float(v) for k, v in sorted(self.ledger.items())},
                    "flags": {k: self.flags[k] for k in sorted(self.flags)},
                    "summary": _jsonable(self.summary)}
            side_path.write_text(json.dumps(side, sort_keys=True,
                                            separators=(",", ":")) + "\n")
            written += [data_path, side_path]
        elif fmt == "json":
            data_path = out / f"{name}.json"
            self.to_json(data_path)
            written.append(data_path)
        else:
            raise ValueError(f"unknown output format {fmt!r}")
        manifest = {
            "name": name,
            "format": fmt,
            "meta": _jsonable(self.meta),
            "digests": {p.name: _sha256(p) for p in written},
        }
        man_path = out / f"{name}_manifest.json"
        man_path.write_text(json.dumps(manifest, sort_keys=True,
                                       separators=(",", ":")) + "\n")
        written.append(man_path)
        return written


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(obj[k]) for k in sorted(obj, key=str)}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    return float(obj)
