"""Monthly resampling and smoothing filters for sentiment time series.

Four filters are provided: trailing moving average, Hodrick-Prescott trend,
level-1 Haar wavelet shrinkage and Savitzky-Golay.
"""

from __future__ import annotations

import csv
import io
import datetime as dt
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


class Cadence(str, enum.Enum):
    IRREGULAR = "IRREGULAR"
    MONTHLY = "MONTHLY"


class GapFill(str, enum.Enum):
    LINEAR = "LINEAR"
    HOLD = "HOLD"


class Boundary(str, enum.Enum):
    WRAP = "WRAP"
    MIRROR = "MIRROR"
    NEAREST = "NEAREST"
    INTERP = "INTERP"


class SmoothingError(ValueError):
    pass


class SinglePointSeries(SmoothingError):
    pass


class InsufficientSpan(SmoothingError):
    pass


class SeriesTooShort(SmoothingError):
    pass


class WindowExceedsSeries(SmoothingError):
    pass


class InvalidOrder(SmoothingError):
    pass


def month_index(d: dt.date) -> int:
    return d.year * 12 + d.month - 1


def month_start(index: int) -> dt.date:
    return dt.date(index // 12, index % 12 + 1, 1)


@dataclass(frozen=True)
class TimeSeries:
    timestamps: tuple[dt.date, ...]
    values: np.ndarray
    cadence: Cadence = Cadence.IRREGULAR

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        if vals.ndim != 1 or len(vals) != len(self.timestamps):
            raise SmoothingError("timestamps and values must have the same length")
        if len(vals) == 0:
            raise SmoothingError("a series needs at least one point")
        if not np.all(np.isfinite(vals)):
            raise SmoothingError("series contains NaN or Inf")
        for a, b in zip(self.timestamps, self.timestamps[1:]):
            if not a < b:
                raise SmoothingError(f"timestamps not strictly increasing at {b}")
        if self.cadence is Cadence.MONTHLY:
            for a, b in zip(self.timestamps, self.timestamps[1:]):
                if month_index(b) - month_index(a) != 1 or a.day != b.day:
                    raise SmoothingError(f"monthly series skips between {a} and {b}")

    def __len__(self) -> int:
        return len(self.values)

    def with_values(self, values: Sequence[float] | np.ndarray) -> "TimeSeries":
        return TimeSeries(self.timestamps, np.asarray(values, dtype=float), self.cadence)


def resample_monthly(series: TimeSeries, gap_fill: GapFill = GapFill.LINEAR) -> TimeSeries:
    """Average observations per calendar month and fill the empty months in between."""
    if len(series) < 2:
        raise SinglePointSeries("need at least two observations to resample")
    buckets: dict[int, list[float]] = {}
    for d, v in zip(series.timestamps, series.values):
        buckets.setdefault(month_index(d), []).append(float(v))
    months = sorted(buckets)
    if len(months) < 2:
        raise InsufficientSpan("observations must span at least two calendar months")
    known = {m: math.fsum(vs) / len(vs) for m, vs in buckets.items()}
    out = []
    prev = months[0]
    for m in range(months[0], months[-1] + 1):
        if m in known:
            out.append(known[m])
            prev = m
            continue
        if gap_fill is GapFill.HOLD:
            out.append(known[prev])
        else:
            nxt = next(k for k in months if k > m)
            frac = (m - prev) / (nxt - prev)
            out.append(known[prev] + frac * (known[nxt] - known[prev]))
    stamps = tuple(month_start(m) for m in range(months[0], months[-1] + 1))
    return TimeSeries(stamps, np.array(out), Cadence.MONTHLY)


def moving_average(series: TimeSeries, window: int) -> TimeSeries:
    """Trailing mean; the first ``window - 1`` points average what is available."""
    if window < 1:
        raise SmoothingError("moving-average window must be >= 1")
    x = series.values
    out = np.array([x[max(0, i - window + 1):i + 1].mean() for i in range(len(x))])
    return series.with_values(out)


# ---------------------------------------------------------------------------
# Hodrick-Prescott

HP_PRESETS = {"annual": 100.0, "quarterly": 1600.0, "monthly": 14400.0}
HP_DEFAULT_LAMBDA = 10.0


@dataclass(frozen=True)
class HPParams:
    lam: float = HP_DEFAULT_LAMBDA

    def __post_init__(self):
        if not self.lam > 0:
            raise SmoothingError("HP lambda must be positive")

    @classmethod
    def preset(cls, cadence: str) -> "HPParams":
        try:
            return cls(HP_PRESETS[cadence.lower()])
        except KeyError:
            raise SmoothingError(f"unknown HP preset {cadence!r}; choose from {sorted(HP_PRESETS)}") from None


def hp_bands(n: int, lam: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Diagonal, first and second superdiagonal of ``I + lam * D'D``."""
    d0 = np.ones(n)
    d1 = np.zeros(n - 1)
    d2 = np.zeros(n - 2)
    c = (1.0, -2.0, 1.0)
    for r in range(n - 2):
        for a in range(3):
            d0[r + a] += lam * c[a] * c[a]
        for a in range(2):
            d1[r + a] += lam * c[a] * c[a + 1]
        d2[r] += lam * c[0] * c[2]
    return d0, d1, d2


def solve_pentadiagonal(d0: np.ndarray, d1: np.ndarray, d2: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Solve a symmetric positive-definite pentadiagonal system by banded LDL'.

    Parameters
    ----------
    d0, d1, d2 : ndarray
        Main diagonal (n), first superdiagonal (n-1), second superdiagonal (n-2).
    y : ndarray
        Right-hand side of length n.

    Returns
    -------
    ndarray
        The solution vector.
    """
    n = len(d0)
    D = np.zeros(n)
    l1 = np.zeros(max(n - 1, 0))
    l2 = np.zeros(max(n - 2, 0))
    for i in range(n):
        v = d0[i]
        if i >= 1:
            v -= l1[i - 1] ** 2 * D[i - 1]
        if i >= 2:
            v -= l2[i - 2] ** 2 * D[i - 2]
        D[i] = v
        if i < n - 1:
            w = d1[i]
            if i >= 1:
                w -= l2[i - 1] * l1[i - 1] * D[i - 1]
            l1[i] = w / D[i]
        if i < n - 2:
            l2[i] = d2[i] / D[i]
    z = np.zeros(n)
    for i in range(n):
        v = y[i]
        if i >= 1:
            v -= l1[i - 1] * z[i - 1]
        if i >= 2:
            v -= l2[i - 2] * z[i - 2]
        z[i] = v
    z /= D
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        v = z[i]
        if i + 1 < n:
            v -= l1[i] * x[i + 1]
        if i + 2 < n:
            v -= l2[i] * x[i + 2]
        x[i] = v
    return x


def hp_filter(series: TimeSeries, params: HPParams = HPParams()) -> tuple[TimeSeries, TimeSeries]:
    """Hodrick-Prescott decomposition into trend and cycle.

    The trend solves ``(I + lam D'D) tau = y`` with ``D`` the second-difference
    operator; the cycle is ``y - tau``.
    """
    y = series.values
    if len(y) < 4:
        raise SeriesTooShort("HP filter needs at least 4 points")
    trend = solve_pentadiagonal(*hp_bands(len(y), params.lam), y)
    return series.with_values(trend), series.with_values(y - trend)


# ---------------------------------------------------------------------------
# Haar wavelet shrinkage


@dataclass(frozen=True)
class WaveletParams:
    threshold: float = 0.9
    family: str = "haar"
    level: int = 1
    extension: str = "periodic"
    mode: str = "soft"

    def __post_init__(self):
        if self.threshold < 0:
            raise SmoothingError("wavelet threshold must be >= 0")
        if (self.family, self.level, self.extension, self.mode) != ("haar", 1, "periodic", "soft"):
            raise SmoothingError("only level-1 periodic Haar with soft thresholding is supported")


def soft_threshold(d: np.ndarray, t: float) -> np.ndarray:
    return np.sign(d) * np.maximum(np.abs(d) - t, 0.0)


def haar_denoise(series: TimeSeries, params: WaveletParams = WaveletParams()) -> TimeSeries:
    """Level-1 Haar DWT, soft-threshold the details, invert.

    Odd lengths pair the last sample with the first (periodic extension);
    the reconstruction of that wrapped copy is discarded.
    """
    x = series.values
    n = len(x)
    if n < 2:
        raise SeriesTooShort("Haar denoising needs at least 2 points")
    ext = np.append(x, x[0]) if n % 2 else x
    even, odd = ext[0::2], ext[1::2]
    s = 1.0 / math.sqrt(2.0)
    approx = (even + odd) * s
    detail = soft_threshold((even - odd) * s, params.threshold)
    rec = np.empty(len(ext))
    rec[0::2] = (approx + detail) * s
    rec[1::2] = (approx - detail) * s
    return series.with_values(rec[:n])


# ---------------------------------------------------------------------------
# Savitzky-Golay


@dataclass(frozen=True)
class SGParams:
    window: int = 20
    polyorder: int = 2
    deriv: int = 0
    delta: float = 1.0
    boundary: Boundary = Boundary.WRAP

    def __post_init__(self):
        if self.window < 1:
            raise InvalidOrder("window must be positive")
        if self.polyorder < 0 or self.polyorder >= self.window:
            raise InvalidOrder(f"polyorder {self.polyorder} must be in [0, window)")
        if self.deriv < 0 or self.deriv > self.polyorder:
            raise InvalidOrder(f"deriv {self.deriv} must be in [0, polyorder]")
        if not self.delta > 0:
            raise InvalidOrder("delta must be positive")
        object.__setattr__(self, "boundary", Boundary(self.boundary))


def sg_offsets(window: int) -> np.ndarray:
    """Sample offsets of a window evaluated at position ``window // 2``."""
    c = window // 2
    return np.arange(-c, window - c, dtype=float)


def _fit_weights(offsets: np.ndarray, at: float, polyorder: int, deriv: int, delta: float) -> np.ndarray:
    """Weights w with ``w @ window_values`` = deriv-th derivative of the LS fit at ``at``."""
    A = np.vander(offsets, polyorder + 1, increasing=True)
    pinv = np.linalg.pinv(A)  # rows map samples to monomial coefficients
    dcoef = np.zeros(polyorder + 1)
    for p in range(deriv, polyorder + 1):
        dcoef[p] = math.factorial(p) / math.factorial(p - deriv) * at ** (p - deriv)
    return (dcoef @ pinv) / delta**deriv


def sg_coefficients(params: SGParams) -> np.ndarray:
    return _fit_weights(sg_offsets(params.window), 0.0, params.polyorder, params.deriv, params.delta)


def _index_matrix(n: int, offsets: np.ndarray, boundary: Boundary) -> np.ndarray:
    idx = np.arange(n)[:, None] + offsets.astype(int)[None, :]
    if boundary is Boundary.WRAP:
        return idx % n
    if boundary is Boundary.NEAREST:
        return np.clip(idx, 0, n - 1)
    # MIRROR reflects about the end samples without repeating them
    period = 2 * (n - 1) if n > 1 else 1
    idx = np.abs(idx) % period
    return np.where(idx >= n, period - idx, idx)


def savitzky_golay(series: TimeSeries, params: SGParams) -> TimeSeries:
    """Local least-squares polynomial smoothing (or differentiation)."""
    x = series.values
    n = len(x)
    if params.window > n:
        raise WindowExceedsSeries(f"window {params.window} exceeds series length {n}")
    offsets = sg_offsets(params.window)
    weights = sg_coefficients(params)
    if params.boundary is not Boundary.INTERP:
        return series.with_values(x[_index_matrix(n, offsets, params.boundary)] @ weights)
    c = params.window // 2
    inner = np.arange(n)[:, None] + offsets.astype(int)[None, :]
    out = np.empty(n)
    ok = (inner[:, 0] >= 0) & (inner[:, -1] < n)
    out[ok] = x[inner[ok]] @ weights
    # edge points: evaluate the fit of the first / last full window off-center
    for i in np.flatnonzero(~ok):
        start = 0 if i < c else n - params.window
        w = _fit_weights(offsets, float(i - start - c), params.polyorder, params.deriv, params.delta)
        out[i] = x[start:start + params.window] @ w
    return series.with_values(out)


# ---------------------------------------------------------------------------
# configuration and dispatch


@dataclass(frozen=True)
class SmoothingConfig:
    method: str = "sg"
    sg: SGParams = field(default_factory=SGParams)
    hp: HPParams = field(default_factory=HPParams)
    wavelet: WaveletParams = field(default_factory=WaveletParams)
    ma_window: int = 12
    gap_fill: GapFill = GapFill.LINEAR

    def __post_init__(self):
        if self.method not in METHODS:
            raise SmoothingError(f"unknown smoothing method {self.method!r}; choose from {sorted(METHODS)}")


METHODS = ("sg", "hp", "wavelet", "ma")


def fit_sg_window(params: SGParams, n: int) -> SGParams:
    """Shrink the SG window to fit a short series, keeping the polynomial order valid."""
    if params.window <= n:
        return params
    window = n
    polyorder = min(params.polyorder, window - 1)
    deriv = min(params.deriv, polyorder)
    return SGParams(window, polyorder, deriv, params.delta, params.boundary)


def apply_filter(series: TimeSeries, cfg: SmoothingConfig, method: Optional[str] = None) -> TimeSeries:
    method = method or cfg.method
    if method == "sg":
        return savitzky_golay(series, cfg.sg)
    if method == "hp":
        return hp_filter(series, cfg.hp)[0]
    if method == "wavelet":
        return haar_denoise(series, cfg.wavelet)
    if method == "ma":
        return moving_average(series, cfg.ma_window)
    raise SmoothingError(f"unknown smoothing method {method!r}")


# ---------------------------------------------------------------------------
# CSV


def _parse_date(text: str) -> tuple[dt.date, bool]:
    text = text.strip()
    try:
        if len(text) == 7:
            return dt.date.fromisoformat(text + "-01"), True
        return dt.date.fromisoformat(text), False
    except ValueError:
        raise SmoothingError(f"bad date {text!r}; expected YYYY-MM or YYYY-MM-DD") from None


def read_series_csv(path: str | Path) -> TimeSeries:
    """Read a ``date,value`` CSV; all-month-precision consecutive dates give a monthly series."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip().lower() for c in rows[0][:2]] != ["date", "value"]:
        raise SmoothingError(f"{path}: header row 'date,value' required")
    stamps, values, monthly = [], [], True
    for lineno, row in enumerate(rows[1:], 2):
        if not row:
            continue
        if len(row) < 2:
            raise SmoothingError(f"{path}:{lineno}: expected two columns")
        d, is_month = _parse_date(row[0])
        monthly &= is_month
        try:
            values.append(float(row[1]))
        except ValueError:
            raise SmoothingError(f"{path}:{lineno}: non-numeric value {row[1]!r}") from None
        stamps.append(d)
    consecutive = all(month_index(b) - month_index(a) == 1 for a, b in zip(stamps, stamps[1:]))
    cadence = Cadence.MONTHLY if monthly and consecutive else Cadence.IRREGULAR
    return TimeSeries(tuple(stamps), np.array(values), cadence)


def format_date(d: dt.date, cadence: Cadence) -> str:
    return d.strftime("%Y-%m") if cadence is Cadence.MONTHLY else d.isoformat()


def format_series_csv(series: TimeSeries, fmt: str = "%.6f") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", "value"])
    for d, v in zip(series.timestamps, series.values):
        w.writerow([format_date(d, series.cadence), fmt % v])
    return buf.getvalue()


def write_series_csv(series: TimeSeries, path: str | Path, fmt: str = "%.6f") -> None:
    Path(path).write_text(format_series_csv(series, fmt), encoding="utf-8")
