"""Mergeable experiment summaries.

A :class:`Report` holds only order-insensitive aggregates (counts, sums,
extrema, histograms) plus per-cell CSV rows, so reports over disjoint trial
sets combine exactly. Derived figures such as means and pass/fail checks are
recomputed from the merged aggregates.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

CSV_COLUMNS = ("experiment", "n", "d", "L", "seed", "statistic", "value")


def _bin(value: float, width: float | None):
    if width is None:
        return value
    return round(math.floor(value / width) * width, 10)


def _finite(obj):
    """Replace NaN/inf with None so the output is strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


@dataclass
class Stat:
    """Running count / sum / sum of squares / extrema and a histogram.

    Integer-valued samples are histogrammed exactly; for real-valued samples
    pass ``bin_width``.
    """

    bin_width: float | None = None
    count: int = 0
    total: float = 0
    total_sq: float = 0
    min: float | None = None
    max: float | None = None
    hist: dict = field(default_factory=dict)

    def add(self, x) -> None:
        self.count += 1
        self.total += x
        self.total_sq += x * x
        self.min = x if self.min is None or x < self.min else self.min
        self.max = x if self.max is None or x > self.max else self.max
        b = _bin(x, self.bin_width)
        self.hist[b] = self.hist.get(b, 0) + 1

    def merge(self, other: "Stat") -> "Stat":
        if self.bin_width != other.bin_width:
            raise ValueError("cannot merge stats with different bin widths")
        out = Stat(self.bin_width, self.count + other.count, self.total + other.total,
                   self.total_sq + other.total_sq)
        mins = [x for x in (self.min, other.min) if x is not None]
        maxs = [x for x in (self.max, other.max) if x is not None]
        out.min = min(mins) if mins else None
        out.max = max(maxs) if maxs else None
        out.hist = dict(self.hist)
        for k, c in other.hist.items():
            out.hist[k] = out.hist.get(k, 0) + c
        return out

    @property
    def mean(self) -> float:
        return self.total / self.count if self.count else math.nan

    @property
    def variance(self) -> float:
        """Unbiased sample variance."""
        if self.count < 2:
            return 0.0
        var = (self.total_sq - self.total * self.total / self.count) / (self.count - 1)
        return max(var, 0.0)

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count else math.nan

    def quantile(self, q: float) -> float:
        """Lower ``q``-quantile read off the histogram; exact for unbinned data."""
        if not self.count:
            return math.nan
        target = q * self.count
        seen = 0
        keys = sorted(self.hist)
        for k in keys:
            seen += self.hist[k]
            if seen >= target:
                return k
        return keys[-1]

    def median(self) -> float:
        """Median of the histogram (average of the two middle values when even)."""
        if not self.count:
            return math.nan
        keys = sorted(self.hist)
        lo_rank, hi_rank = (self.count - 1) // 2, self.count // 2
        seen = 0
        lo = hi = None
        for k in keys:
            seen += self.hist[k]
            if lo is None and seen > lo_rank:
                lo = k
            if seen > hi_rank:
                hi = k
                break
        return (lo + hi) / 2

    def summary(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "variance": self.variance,
            "stderr": self.stderr,
            "min": self.min,
            "max": self.max,
            "median": self.median(),
            "q90": self.quantile(0.9),
            "q99": self.quantile(0.99),
        }

    def to_dict(self) -> dict:
        return {
            "bin_width": self.bin_width,
            "count": self.count,
            "total": self.total,
            "total_sq": self.total_sq,
            "min": self.min,
            "max": self.max,
            "hist": [[k, self.hist[k]] for k in sorted(self.hist)],
            "summary": self.summary(),
        }


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    op: str
    passed: bool

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.value:.6g} {self.op} {self.threshold:.6g}"


def check(name: str, value: float, op: str, threshold: float) -> Check:
    ops = {
        "<=": value <= threshold,
        "<": value < threshold,
        ">=": value >= threshold,
        ">": value > threshold,
        "==": value == threshold,
    }
    return Check(name, value, threshold, op, bool(ops[op]))


@dataclass
class Report:
    experiment: str
    config: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)
    counters: dict = field(default_factory=dict)
    cells: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def stat(self, name: str, bin_width: float | None = None) -> Stat:
        s = self.stats.get(name)
        if s is None:
            s = self.stats[name] = Stat(bin_width)
        return s

    def bump(self, name: str, by: int = 1) -> None:
        self.counters[name] = self.counters.get(name, 0) + by

    def cell(self, n, d, L, seed, statistic: str, value) -> None:
        self.cells.append((n, d, L, seed, statistic, value))

    def merge(self, other: "Report") -> "Report":
        """Combine raw aggregates of two disjoint trial sets; checks are not carried over."""
        if other.experiment != self.experiment:
            raise ValueError("cannot merge reports of different experiments")
        out = Report(self.experiment, dict(self.config))
        for name in sorted(set(self.stats) | set(other.stats)):
            a, b = self.stats.get(name), other.stats.get(name)
            if a is not None and b is not None:
                out.stats[name] = a.merge(b)
            else:
                only = a if a is not None else b
                out.stats[name] = only.merge(Stat(only.bin_width))
        for name in sorted(set(self.counters) | set(other.counters)):
            out.counters[name] = self.counters.get(name, 0) + other.counters.get(name, 0)
        out.cells = self.cells + other.cells
        return out

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "config": self.config,
            "passed": self.passed,
            "checks": [vars(c) for c in self.checks],
            "counters": dict(sorted(self.counters.items())),
            "stats": {k: self.stats[k].to_dict() for k in sorted(self.stats)},
            "diagnostics": self.diagnostics,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(_finite(self.to_dict()), sort_keys=True, indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.cells:
            w.writerow((self.experiment, *row))
        return buf.getvalue()

    def summary_lines(self) -> list[str]:
        return [str(c) for c in self.checks]
