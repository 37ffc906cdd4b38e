"""Experiment reports: per-seed measurements, summary statistics and a bounds check."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

REPORT_SCHEMA = 1
STATISTICS = ("mean", "median", "fraction", "value")


def _clean(v):
    """JSON-safe scalar: NaN and infinities become None."""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


@dataclass
class ExperimentReport:
    """Outcome of one experiment.

    ``measurements`` holds one dict per seed (``seed`` plus ``value``; a value of
    None marks a timeout). ``statistic`` names how the headline ``value`` is
    formed: medians treat timeouts as infinitely slow, means require none.
    """

    name: str
    statistic: str
    bounds: Optional[tuple] = None
    reference: str = ""
    params: dict = field(default_factory=dict)
    measurements: list = field(default_factory=list)
    value: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.statistic not in STATISTICS:
            raise ValueError(f"statistic must be one of {STATISTICS}")
        if self.value is None:
            self.value = self._headline()

    @property
    def values(self) -> list:
        return [m["value"] for m in self.measurements]

    @property
    def failures(self) -> int:
        return sum(v is None for v in self.values)

    def _headline(self) -> Optional[float]:
        vals = self.values
        if not vals:
            return None
        ok = [v for v in vals if v is not None]
        if self.statistic == "median":
            return float(np.median([math.inf if v is None else v for v in vals]))
        if self.statistic == "value":
            return ok[0] if ok else None
        return float(np.mean(ok)) if ok else None

    @property
    def summary(self) -> dict:
        ok = np.array([v for v in self.values if v is not None], dtype=float)
        if ok.size == 0:
            return {"n": len(self.values), "failures": self.failures,
                    "mean": None, "median": None, "p5": None, "p95": None}
        p5, med, p95 = np.percentile(ok, [5, 50, 95])
        return {"n": len(self.values), "failures": self.failures, "mean": float(ok.mean()),
                "median": float(med), "p5": float(p5), "p95": float(p95)}

    @property
    def passed(self) -> bool:
        if self.bounds is None:
            return True
        v = self.value
        if v is None or not math.isfinite(v):
            return False
        if self.statistic == "mean" and self.failures:
            return False
        lo, hi = self.bounds
        return lo <= v <= hi

    def to_dict(self) -> dict:
        return _clean({
            "schema": REPORT_SCHEMA,
            "name": self.name,
            "statistic": self.statistic,
            "value": self.value,
            "bounds": list(self.bounds) if self.bounds is not None else None,
            "passed": self.passed,
            "reference": self.reference,
            "params": self.params,
            "summary": self.summary,
            "extra": self.extra,
            "measurements": self.measurements,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        keys = sorted({k for m in self.measurements for k in m})
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(keys)
        for m in self.measurements:
            w.writerow(["" if m.get(k) is None else m.get(k) for k in keys])
        return buf.getvalue()

    def line(self) -> str:
        """One human-readable status line."""
        b = "-" if self.bounds is None else f"[{self.bounds[0]:g}, {self.bounds[1]:g}]"
        v = "none" if self.value is None else f"{self.value:.4g}"
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.statistic}={v} bounds={b}"
