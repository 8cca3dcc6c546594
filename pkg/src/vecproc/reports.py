"""Shared report containers and CSV/JSON emission.

CSV files are RFC-4180 with a header row, LF line endings and UTF-8; floats
are written with 17 significant digits so re-parsing round-trips exactly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class TailReport:
    """Empirical exceedance frequencies against a theoretical tail bound.

    A threshold passes when its empirical frequency is at most the bound
    plus three binomial standard errors.
    """

    thresholds: np.ndarray
    freqs: np.ndarray
    ses: np.ndarray
    bounds: np.ndarray
    reps: int
    seed: int
    label: str = field(default="t")

    @property
    def ok(self) -> np.ndarray:
        return self.freqs <= self.bounds + 3.0 * self.ses

    @property
    def all_ok(self) -> bool:
        return bool(np.all(self.ok))

    def rows(self):
        return [(float(t), float(f), float(s), float(b), bool(o))
                for t, f, s, b, o in zip(self.thresholds, self.freqs,
                                         self.ses, self.bounds, self.ok)]

    def write_csv(self, path):
        write_csv(path, ["threshold", "freq", "se", "bound", "ok"], self.rows())

    def to_json(self):
        return {"label": self.label, "reps": self.reps, "seed": self.seed,
                "all_ok": self.all_ok,
                "rows": [{"threshold": t, "freq": f, "se": s, "bound": b, "ok": o}
                         for t, f, s, b, o in self.rows()]}


def binomial_report(thresholds, counts, bounds, reps, seed, label="t") -> TailReport:
    freqs = np.asarray(counts, float) / reps
    ses = np.sqrt(freqs * (1.0 - freqs) / reps)
    return TailReport(thresholds=np.asarray(thresholds, float), freqs=freqs,
                      ses=ses, bounds=np.asarray(bounds, float), reps=reps,
                      seed=seed, label=label)
