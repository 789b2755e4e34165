"""Outage probability and level crossing statistics of SINR series.

Both metrics are computed empirically from per-packet SINR samples:
outage is the fraction of packets strictly below a threshold, and the
level crossing rate counts downward threshold crossings per second of
crossing-to-crossing time. Curves over a threshold grid are the unit of
comparison between transmission schemes.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class MetricsError(Exception):
    """Invalid series data or an unanswerable metrics query."""


@dataclass(frozen=True)
class SinrSeries:
    """Per-packet SINR samples in dB at strictly increasing times."""

    times_ms: np.ndarray
    values_db: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times_ms, dtype=np.float64)
        values = np.asarray(self.values_db, dtype=np.float64)
        if times.ndim != 1 or values.ndim != 1 or times.size != values.size:
            raise MetricsError("times and values must be 1-D arrays of equal length")
        if times.size == 0:
            raise MetricsError("series must contain at least one sample")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise MetricsError("series times and values must be finite")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise MetricsError("series times must be strictly increasing")
        for name, arr in (("times_ms", times), ("values_db", values)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_samples(self) -> int:
        return int(self.values_db.size)

    def cadence_ms(self) -> float:
        """Uniform sample spacing; raises if the cadence varies."""
        if self.n_samples < 2:
            raise MetricsError("cadence undefined for a single-sample series")
        diffs = np.diff(self.times_ms)
        if not np.allclose(diffs, diffs[0], rtol=1e-9, atol=0.0):
            raise MetricsError("series cadence is not uniform")
        return float(diffs[0])


@dataclass(frozen=True)
class MetricsCurve:
    """Metric values over a strictly increasing threshold grid in dB."""

    kind: str  # "outage" | "lcr"
    thresholds_db: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in ("outage", "lcr"):
            raise MetricsError(f"unknown curve kind {self.kind!r}")
        thresholds = np.asarray(self.thresholds_db, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if thresholds.ndim != 1 or thresholds.size == 0 or thresholds.size != values.size:
            raise MetricsError("thresholds and values must be 1-D arrays of equal length")
        if thresholds.size > 1 and not np.all(np.diff(thresholds) > 0):
            raise MetricsError("thresholds must be strictly increasing")
        if not np.all(np.isfinite(thresholds)):
            raise MetricsError("thresholds must be finite")
        if self.kind == "outage":
            if not (np.all(values >= 0.0) and np.all(values <= 1.0)):
                raise MetricsError("outage probabilities must lie in [0, 1]")
            if thresholds.size > 1 and np.any(np.diff(values) < -1e-12):
                raise MetricsError("outage curve must be non-decreasing")
        else:
            if not np.all(values >= 0.0):
                raise MetricsError("crossing rates must be nonnegative")
        for name, arr in (("thresholds_db", thresholds), ("values", values)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def default_thresholds() -> np.ndarray:
    """Default SINR threshold grid: -30 dB to +50 dB in 0.5 dB steps."""
    return np.linspace(-30.0, 50.0, 161)


def empirical_outage(values_db: np.ndarray, thresholds_db: np.ndarray | None = None,
                     ) -> MetricsCurve:
    """Outage curve from a bag of SINR samples (order does not matter)."""
    if thresholds_db is None:
        thresholds_db = default_thresholds()
    values = np.sort(np.asarray(values_db, dtype=np.float64))
    if values.size == 0:
        raise MetricsError("outage needs at least one sample")
    counts = np.searchsorted(values, np.asarray(thresholds_db, dtype=np.float64),
                             side="left")
    return MetricsCurve("outage", thresholds_db, counts / values.size)


def outage_curve(series: SinrSeries, thresholds_db: np.ndarray | None = None,
                 ) -> MetricsCurve:
    """Empirical outage probability Pr(SINR < threshold) over a grid.

    The comparison is strict, so samples exactly at a threshold do not
    count as outage.
    """
    return empirical_outage(series.values_db, thresholds_db)


def threshold_at_outage(curve: MetricsCurve, probability: float) -> float:
    """Invert an outage curve: the threshold where it reaches a probability.

    Linear interpolation on the (threshold, probability) polyline; if the
    probability falls on a flat segment the left endpoint is returned. A
    probability outside the curve's value range raises.
    """
    if curve.kind != "outage":
        raise MetricsError(f"threshold_at_outage needs an outage curve, got {curve.kind!r}")
    if not 0 < probability < 1:
        raise MetricsError(f"probability must lie in (0, 1), got {probability}")
    values, thresholds = curve.values, curve.thresholds_db
    if probability < values[0] or probability > values[-1]:
        raise MetricsError(f"probability {probability} not bracketed by curve values "
                           f"[{values[0]}, {values[-1]}]")
    j = int(np.searchsorted(values, probability, side="left"))
    if values[j] == probability:
        return float(thresholds[j])
    t0, t1 = thresholds[j - 1], thresholds[j]
    v0, v1 = values[j - 1], values[j]
    return float(t0 + (probability - v0) * (t1 - t0) / (v1 - v0))


def level_crossing_rate(series: SinrSeries, threshold_db: float) -> float:
    """Downward crossing rate of a threshold, in crossings per second.

    A crossing happens at sample i when the series was at or above the
    threshold at i-1 and below it at i. The rate is the crossing count
    divided by the total time between the first and the last crossing;
    fewer than two crossings give 0 Hz. Requires a uniform cadence.
    """
    if series.n_samples >= 2:
        series.cadence_ms()
    values = series.values_db
    down = (values[:-1] >= threshold_db) & (values[1:] < threshold_db)
    crossing_idx = np.nonzero(down)[0] + 1
    n = int(crossing_idx.size)
    if n <= 1:
        return 0.0
    crossing_times = series.times_ms[crossing_idx]
    return n / (float(crossing_times[-1] - crossing_times[0]) / 1000.0)


def lcr_curve(series: SinrSeries, thresholds_db: np.ndarray | None = None,
              ) -> MetricsCurve:
    """Level crossing rate over a threshold grid."""
    if thresholds_db is None:
        thresholds_db = default_thresholds()
    rates = [level_crossing_rate(series, float(t)) for t in thresholds_db]
    return MetricsCurve("lcr", thresholds_db, np.array(rates))


def gain_at_outage(coop_curve: MetricsCurve, single_curve: MetricsCurve,
                   probability: float) -> float:
    """How many dB more threshold the cooperative scheme tolerates.

    Difference of the inverted outage curves at the same probability,
    positive when cooperation helps.
    """
    return (threshold_at_outage(coop_curve, probability)
            - threshold_at_outage(single_curve, probability))


_CURVE_HEADER_RE = re.compile(
    r"^kind,(?P<kind>outage|lcr),scheme,(?P<scheme>[^,]+),subject,(?P<subject>[^,]+)$")


def write_curve_csv(curve: MetricsCurve, path, scheme: str, subject) -> None:
    """Write a curve with its identifying header line."""
    lines = [f"kind,{curve.kind},scheme,{scheme},subject,{subject}"]
    for threshold, value in zip(curve.thresholds_db, curve.values):
        lines.append(f"{float(threshold)!r},{float(value)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_curve_csv(path) -> tuple[MetricsCurve, str, str]:
    """Read a curve CSV back into (curve, scheme, subject)."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise MetricsError(f"{path}:1: empty file, expected a curve header")
    header = _CURVE_HEADER_RE.match(lines[0].strip())
    if header is None:
        raise MetricsError(f"{path}:1: malformed curve header {lines[0]!r}")
    thresholds, values = [], []
    for lineno, raw in enumerate(lines[1:], start=2):
        text = raw.strip()
        if not text:
            continue
        parts = text.split(",")
        if len(parts) != 2:
            raise MetricsError(f"{path}:{lineno}: expected '<threshold_db>,<value>', got {raw!r}")
        try:
            thresholds.append(float(parts[0]))
            values.append(float(parts[1]))
        except ValueError as exc:
            raise MetricsError(f"{path}:{lineno}: {exc}") from exc
    if not thresholds:
        raise MetricsError(f"{path}:2: no data rows")
    return (MetricsCurve(header.group("kind"), np.array(thresholds), np.array(values)),
            header.group("scheme"), header.group("subject"))


def write_series_csv(series: SinrSeries, path) -> None:
    """Write a SINR series as 'time_ms,sinr_db' rows."""
    lines = ["time_ms,sinr_db"]
    for t, v in zip(series.times_ms, series.values_db):
        lines.append(f"{float(t)!r},{float(v)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_series_csv(path) -> SinrSeries:
    """Read a 'time_ms,sinr_db' series file, reporting bad lines by number."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != "time_ms,sinr_db":
        raise MetricsError(f"{path}:1: expected header 'time_ms,sinr_db'")
    times, values = [], []
    for lineno, raw in enumerate(lines[1:], start=2):
        text = raw.strip()
        if not text:
            continue
        parts = text.split(",")
        if len(parts) != 2:
            raise MetricsError(f"{path}:{lineno}: expected '<time_ms>,<sinr_db>', got {raw!r}")
        try:
            times.append(float(parts[0]))
            values.append(float(parts[1]))
        except ValueError as exc:
            raise MetricsError(f"{path}:{lineno}: {exc}") from exc
    if not times:
        raise MetricsError(f"{path}:2: no data rows")
    try:
        return SinrSeries(np.array(times), np.array(values))
    except MetricsError as exc:
        raise MetricsError(f"{path}: {exc}") from exc
