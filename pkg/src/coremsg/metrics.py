"""Comparison metrics and report tables: correlation, mutual information, volatility."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .aspects import ASPECT_PRIORITY, Aspect, AspectAssignment
from .sentiment import SentimentLabel, SentimentScore

DEFAULT_BINS = 10
LABEL_BINS = 3
LABEL_VALUES = frozenset({-1.0, 0.0, 1.0})


class MetricError(ValueError):
    pass


class ZeroVariance(MetricError):
    pass


class LengthMismatch(MetricError):
    pass


class SinglePoint(MetricError):
    pass


def _pair(x: Sequence[float], y: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    a, b = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"series lengths differ: {a.shape} vs {b.shape}")
    if len(a) < 2:
        raise SinglePoint("need at least two paired observations")
    return a, b


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    a, b = _pair(x, y)
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise ZeroVariance("correlation undefined for a constant series")
    da, db = a - a.mean(), b - b.mean()
    r = float(np.dot(da, db) / math.sqrt(float(np.dot(da, da)) * float(np.dot(db, db))))
    return max(-1.0, min(1.0, r))


def bin_indices(x: np.ndarray, bins: int) -> np.ndarray:
    """Equal-width bin index over the series' own range; a flat series is one bin."""
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        return np.zeros(len(x), dtype=int)
    idx = np.floor((x - lo) / (hi - lo) * bins).astype(int)
    return np.clip(idx, 0, bins - 1)


def is_label_valued(x: Iterable[float]) -> bool:
    return set(float(v) for v in x) <= LABEL_VALUES


def mutual_information(x: Sequence[float], y: Sequence[float], bins: Optional[int] = None) -> float:
    """Plug-in histogram estimate of mutual information, in nats.

    Parameters
    ----------
    x, y : sequence of float
        Paired observations of equal length.
    bins : int, optional
        Equal-width bins per series.  Defaults to 3 when both series only
        take the values -1, 0, +1, else 10.

    Returns
    -------
    float
        Non-negative mutual information.
    """
    a, b = _pair(x, y)
    if bins is None:
        bins = LABEL_BINS if is_label_valued(a) and is_label_valued(b) else DEFAULT_BINS
    if bins < 1:
        raise MetricError("bins must be positive")
    ia, ib = bin_indices(a, bins), bin_indices(b, bins)
    n = len(a)
    joint = np.zeros((bins, bins))
    np.add.at(joint, (ia, ib), 1.0)
    pxy = joint / n
    px, py = pxy.sum(axis=1), pxy.sum(axis=0)
    mi = 0.0
    for i, j in zip(*np.nonzero(pxy)):
        mi += pxy[i, j] * math.log(pxy[i, j] / (px[i] * py[j]))
    return max(mi, 0.0)


def binned_entropy(x: Sequence[float], bins: int) -> float:
    counts = np.bincount(bin_indices(np.asarray(x, dtype=float), bins))
    p = counts[counts > 0] / len(x)
    return float(-np.sum(p * np.log(p)))


def volatility(x: Sequence[float]) -> float:
    """Sample standard deviation (divisor n - 1)."""
    a = np.asarray(x, dtype=float)
    if len(a) < 2:
        raise SinglePoint("volatility needs at least two points")
    d = a - a.mean()
    return math.sqrt(float(np.dot(d, d)) / (len(a) - 1))


# ---------------------------------------------------------------------------
# count tables


@dataclass(frozen=True)
class CountTable:
    title: str
    counts: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def render(self) -> str:
        width = max(len(k) for k in [*self.counts, "total"]) + 2
        lines = [self.title, f"{'':<{width}}{'count':>8}"]
        for k, v in self.counts.items():
            lines.append(f"{k:<{width}}{v:>8,}")
        lines.append(f"{'total':<{width}}{self.total:>8,}")
        return "\n".join(lines)

    def to_csv(self, key: str = "label") -> str:
        return f"{key},count\n" + "".join(f"{k},{v}\n" for k, v in self.counts.items())


def aspect_distribution(assignments: Sequence[AspectAssignment | Aspect | str]) -> CountTable:
    if not assignments:
        raise MetricError("no assignments to count")
    c: Counter = Counter()
    for a in assignments:
        c[Aspect(a.aspect if isinstance(a, AspectAssignment) else a)] += 1
    return CountTable("Aspect selection", {a.value: c[a] for a in ASPECT_PRIORITY})


SENTIMENT_ORDER = (SentimentLabel.NEUTRAL, SentimentLabel.POSITIVE, SentimentLabel.NEGATIVE)


def sentiment_distribution(scores: Sequence[SentimentScore | SentimentLabel | str]) -> CountTable:
    if not scores:
        raise MetricError("no scores to count")
    c: Counter = Counter()
    for s in scores:
        c[SentimentLabel(s.label if isinstance(s, SentimentScore) else s)] += 1
    return CountTable("Sentiment distribution", {l.value: c[l] for l in SENTIMENT_ORDER})


# ---------------------------------------------------------------------------
# evaluation report


def _safe(fn, *args) -> Optional[float]:
    try:
        return fn(*args)
    except (ZeroVariance, SinglePoint):
        return None


@dataclass
class EvalReport:
    """Comparison of score streams against reference labels.

    ``correlation`` and ``mutual_information`` are keyed by stream name;
    ``volatility`` additionally carries the reference labels under
    ``"labels"``.  A value is None when the metric is undefined (constant
    series, too few documents).
    """

    n: int
    correlation: dict[str, Optional[float]]
    mutual_information: dict[str, float]
    volatility: dict[str, Optional[float]]
    bins: int
    aspect_counts: dict[str, int] = field(default_factory=dict)
    sentiment_counts: dict[str, int] = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def to_json(self, digits: int = 6) -> dict:
        def r(v):
            return None if v is None else round(v, digits)

        return {
            "n": self.n,
            "bins": self.bins,
            "correlation": {k: r(v) for k, v in self.correlation.items()},
            "mutual_information": {k: r(v) for k, v in self.mutual_information.items()},
            "volatility": {k: r(v) for k, v in self.volatility.items()},
            "aspect_counts": dict(self.aspect_counts),
            "sentiment_counts": dict(self.sentiment_counts),
            "provenance": self.provenance,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def render(self) -> str:
        streams = list(self.correlation)
        cols = streams + ["labels"]
        w = max(12, *(len(c) + 2 for c in cols))

        def cell(v):
            return f"{'-':>{w}}" if v is None else f"{v:>{w}.3f}"

        lines = [
            f"Statistical comparison against labels (n={self.n}, MI bins={self.bins})",
            f"{'metric':<22}" + "".join(f"{c:>{w}}" for c in cols),
            f"{'correlation':<22}" + "".join(cell(self.correlation[s]) for s in streams) + cell(None),
            f"{'mutual information':<22}" + "".join(cell(self.mutual_information[s]) for s in streams) + cell(None),
            f"{'volatility':<22}" + "".join(cell(self.volatility.get(c)) for c in cols),
        ]
        if self.aspect_counts:
            lines += ["", CountTable("Aspect selection", self.aspect_counts).render()]
        if self.sentiment_counts:
            lines += ["", CountTable("Sentiment distribution", self.sentiment_counts).render()]
        return "\n".join(lines) + "\n"


def per_document_means(keys: Sequence[tuple[str, int]], values: Sequence[float]) -> list[float]:
    groups: dict[str, list[float]] = {}
    for (doc, _), v in zip(keys, values):
        groups.setdefault(doc, []).append(float(v))
    return [math.fsum(groups[d]) / len(groups[d]) for d in sorted(groups)]


def compare_streams(
    keys: Sequence[tuple[str, int]],
    labels: Sequence[float],
    streams: Mapping[str, Sequence[float]],
    bins: Optional[int] = None,
) -> EvalReport:
    """Compare aligned score streams with label scores (-1/0/+1)."""
    if not streams:
        raise MetricError("at least one score stream is required")
    for name, vals in streams.items():
        if len(vals) != len(labels):
            raise LengthMismatch(f"stream {name!r} has {len(vals)} values for {len(labels)} labels")
    if bins is None:
        label_like = is_label_valued(labels) and all(is_label_valued(v) for v in streams.values())
        bins = LABEL_BINS if label_like else DEFAULT_BINS
    corr = {n: _safe(pearson, labels, v) for n, v in streams.items()}
    mi = {n: mutual_information(labels, v, bins) for n, v in streams.items()}
    vol = {n: _safe(volatility, per_document_means(keys, v)) for n, v in streams.items()}
    vol["labels"] = _safe(volatility, per_document_means(keys, labels))
    return EvalReport(len(labels), corr, mi, vol, bins, sentiment_counts=_label_counts(labels))


def _label_counts(labels: Sequence[float]) -> dict[str, int]:
    if not is_label_valued(labels):
        return {}
    c = Counter(float(v) for v in labels)
    return {"neutral": c[0.0], "positive": c[1.0], "negative": c[-1.0]}
