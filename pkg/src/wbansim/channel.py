"""Block-fading channel traces for on-body and body-to-body radio links.

Channel gains are carried in dB throughout (so ``10**(g/10)`` is the linear
power gain). Trace manipulation (downsampling, shadowing extraction,
overlaying) is exact additive arithmetic in the dB domain; conversion to
linear power happens only where SINR is computed.

Traces can be ingested from CSV files, e.g. measurement campaigns sampled
at 15 ms (on-body) or 40 ms (body-to-body), or synthesised with a
first-order autoregressive lognormal shadowing model. Either way they are
decimated to a common block-fading epoch period (120 ms by default) before
simulation.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.signal import lfilter

from .seeding import substream

SPEED_OF_LIGHT = 299_792_458.0


class TraceError(Exception):
    """Malformed trace data or an inconsistent trace operation."""


class MissingLinkError(TraceError):
    """A channel set has no trace for a required link."""


class BodyLocation(enum.Enum):
    """Device placements on a subject's body."""

    LEFT_HIP = "LH"
    RIGHT_HIP = "RH"
    CHEST = "C"
    HEAD = "HD"
    RIGHT_WRIST = "RW"
    LEFT_WRIST = "LW"
    UPPER_LEFT_ARM = "LAR"
    LEFT_ANKLE = "LA"
    RIGHT_ANKLE = "RA"
    BACK = "B"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "BodyLocation":
        code = str(text).strip()
        for member in cls:
            if code.upper() == member.value or code.upper() == member.name:
                return member
        valid = ", ".join(m.value for m in cls)
        raise ValueError(f"unknown body location {text!r} (expected one of {valid})")


@dataclass(frozen=True)
class LinkId:
    """Directed radio link between two body-worn devices.

    Endpoints are (subject index, body location) pairs; a link from a
    device to itself is not a link.
    """

    tx_subject: int
    tx_location: BodyLocation
    rx_subject: int
    rx_location: BodyLocation

    def __post_init__(self):
        if (self.tx_subject, self.tx_location) == (self.rx_subject, self.rx_location):
            raise ValueError(f"link endpoints coincide: {self.tx_subject}:{self.tx_location}")

    @property
    def is_intra(self) -> bool:
        """True for an on-body link (both endpoints on the same subject)."""
        return self.tx_subject == self.rx_subject

    def __str__(self) -> str:
        return (f"{self.tx_subject}:{self.tx_location}"
                f"->{self.rx_subject}:{self.rx_location}")

    _LINK_RE = re.compile(r"^(\d+):([A-Za-z]+)->(\d+):([A-Za-z]+)$")

    @classmethod
    def parse(cls, text: str) -> "LinkId":
        m = cls._LINK_RE.match(text.strip())
        if m is None:
            raise ValueError(f"malformed link label {text!r} (expected like 1:LH->2:C)")
        return cls(int(m.group(1)), BodyLocation.parse(m.group(2)),
                   int(m.group(3)), BodyLocation.parse(m.group(4)))


@dataclass(frozen=True)
class ChannelTrace:
    """Uniformly sampled channel gain series in dB for one link."""

    link: LinkId
    sample_period_ms: float
    samples: np.ndarray

    def __post_init__(self):
        if not (math.isfinite(self.sample_period_ms) and self.sample_period_ms > 0):
            raise TraceError(f"sample period must be positive, got {self.sample_period_ms}")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise TraceError(f"trace {self.link} needs a nonempty 1-D sample array")
        if not np.all(np.isfinite(samples)):
            raise TraceError(f"trace {self.link} contains non-finite gains")
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def n_samples(self) -> int:
        return int(self.samples.size)

    @property
    def duration_ms(self) -> float:
        return self.n_samples * self.sample_period_ms


@dataclass(frozen=True)
class SyntheticChannelParams:
    """Parameters of the autoregressive lognormal shadowing generator."""

    mean_gain_db: float
    shadow_sigma_db: float
    coherence_time_ms: float
    duration_ms: float
    sample_period_ms: float
    seed: int

    def __post_init__(self):
        if not math.isfinite(self.mean_gain_db):
            raise ValueError("mean_gain_db must be finite")
        if not (math.isfinite(self.shadow_sigma_db) and self.shadow_sigma_db >= 0):
            raise ValueError("shadow_sigma_db must be nonnegative")
        if not (math.isfinite(self.coherence_time_ms) and self.coherence_time_ms > 0):
            raise ValueError("coherence_time_ms must be positive")
        if not (0 < self.sample_period_ms <= self.duration_ms):
            raise ValueError("need 0 < sample_period_ms <= duration_ms")


_HEADER_RE = re.compile(r"^link=(?P<link>[^,]+),period_ms=(?P<period>[^,\s]+)$")


def load_trace(path, link: LinkId | None = None) -> ChannelTrace:
    """Load a trace CSV, validating the header and the timestamp grid.

    The first line must read ``link=<tx>:<loc>-><rx>:<loc>,period_ms=<p>``
    and data rows must be ``<t_ms>,<gain_db>`` with timestamps running
    0, p, 2p, ... strictly. Passing ``link`` relabels the trace, which is
    how a measured file is assigned to a differently labelled link.
    """
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise TraceError(f"cannot read trace file {path}: {exc}") from exc
    if not lines:
        raise TraceError(f"{path}:1: empty file, expected a header line")
    header = _HEADER_RE.match(lines[0].strip())
    if header is None:
        raise TraceError(f"{path}:1: malformed header {lines[0]!r}")
    try:
        file_link = LinkId.parse(header.group("link"))
        period = float(header.group("period"))
    except ValueError as exc:
        raise TraceError(f"{path}:1: {exc}") from exc
    if not (math.isfinite(period) and period > 0):
        raise TraceError(f"{path}:1: period_ms must be positive, got {header.group('period')}")

    gains = []
    tol = 1e-6 * period
    for lineno, raw in enumerate(lines[1:], start=2):
        text = raw.strip()
        if not text:
            continue
        parts = text.split(",")
        if len(parts) != 2:
            raise TraceError(f"{path}:{lineno}: expected '<t_ms>,<gain_db>', got {raw!r}")
        try:
            t, gain = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise TraceError(f"{path}:{lineno}: {exc}") from exc
        expected_t = len(gains) * period
        if abs(t - expected_t) > tol:
            raise TraceError(f"{path}:{lineno}: timestamp {t} is not the expected "
                             f"multiple {expected_t} of period {period}")
        if not math.isfinite(gain):
            raise TraceError(f"{path}:{lineno}: non-finite gain {parts[1]!r}")
        gains.append(gain)
    if not gains:
        raise TraceError(f"{path}:2: no data rows")
    return ChannelTrace(link if link is not None else file_link, period, np.array(gains))


def save_trace(trace: ChannelTrace, path) -> None:
    """Write a trace in the CSV format understood by :func:`load_trace`."""
    path = Path(path)
    lines = [f"link={trace.link},period_ms={float(trace.sample_period_ms)!r}"]
    for i, gain in enumerate(trace.samples):
        lines.append(f"{float(i * trace.sample_period_ms)!r},{float(gain)!r}")
    path.write_text("\n".join(lines) + "\n")


def downsample(trace: ChannelTrace, target_period_ms: float) -> ChannelTrace:
    """Decimate a trace to a coarser period that is an integer multiple.

    Keeps every k-th sample starting from the first, where
    k = target_period_ms / sample_period_ms must be a whole number.
    """
    ratio = target_period_ms / trace.sample_period_ms
    stride = round(ratio)
    if stride < 1 or abs(ratio - stride) > 1e-9:
        raise TraceError(f"cannot downsample period {trace.sample_period_ms} ms to "
                         f"{target_period_ms} ms: ratio {ratio} is not a whole number")
    if stride == 1:
        return trace
    return ChannelTrace(trace.link, target_period_ms, trace.samples[::stride])


def fspl_db(distance_m: float, frequency_hz: float) -> float:
    """Free-space path loss in dB at the given distance and frequency.

    Args:
        distance_m: Transmitter-receiver separation in metres, > 0.
        frequency_hz: Carrier frequency in Hz, > 0.
    """
    if not (math.isfinite(distance_m) and distance_m > 0):
        raise ValueError(f"distance must be positive, got {distance_m}")
    if not (math.isfinite(frequency_hz) and frequency_hz > 0):
        raise ValueError(f"frequency must be positive, got {frequency_hz}")
    return 20.0 * math.log10(4.0 * math.pi * distance_m * frequency_hz / SPEED_OF_LIGHT)


def extract_shadowing(trace: ChannelTrace, distance_m: float,
                      frequency_hz: float) -> ChannelTrace:
    """Remove the free-space component of a measured gain trace.

    A gain sample is modelled as shadowing minus free-space path loss, so
    adding the loss back leaves the shadowing process alone.
    """
    loss = fspl_db(distance_m, frequency_hz)
    return ChannelTrace(trace.link, trace.sample_period_ms, trace.samples + loss)


def overlay(part1: ChannelTrace, part2_shadowing: ChannelTrace,
            out_link: LinkId) -> ChannelTrace:
    """Add a shadowing trace onto a base trace sample by sample (in dB).

    Both traces must share the sample period; the result is truncated to
    the shorter of the two and relabelled to ``out_link``. This is how a
    measured cross-body channel is extended with on-body shadowing to
    stand in for an unmeasured receiver location.
    """
    if abs(part1.sample_period_ms - part2_shadowing.sample_period_ms) > 1e-9:
        raise TraceError(f"overlay needs equal sample periods, got "
                         f"{part1.sample_period_ms} ms and {part2_shadowing.sample_period_ms} ms")
    n = min(part1.n_samples, part2_shadowing.n_samples)
    return ChannelTrace(out_link, part1.sample_period_ms,
                        part1.samples[:n] + part2_shadowing.samples[:n])


def generate_synthetic(params: SyntheticChannelParams, link: LinkId) -> ChannelTrace:
    """Generate a lognormal block-fading trace with exponential correlation.

    The dB-domain gain follows a stationary AR(1) process

        s[0] = mean + sigma * w[0]
        s[i] = mean + rho * (s[i-1] - mean) + sigma * sqrt(1 - rho^2) * w[i]

    with rho = exp(-period / coherence_time) and w ~ N(0, 1), so every
    sample is N(mean, sigma^2) and the autocorrelation decays with the
    configured coherence time. Deterministic in (params, link): the
    generator stream is derived from the seed and the link label.
    """
    n = int(math.floor(params.duration_ms / params.sample_period_ms + 1e-9))
    rho = math.exp(-params.sample_period_ms / params.coherence_time_ms)
    shocks = substream(params.seed, "trace", str(link)).standard_normal(n)
    shocks[0] *= params.shadow_sigma_db
    if n > 1:
        shocks[1:] *= params.shadow_sigma_db * math.sqrt(1.0 - rho * rho)
    deviations = lfilter([1.0], [1.0, -rho], shocks)
    return ChannelTrace(link, params.sample_period_ms, params.mean_gain_db + deviations)


def gain_at(trace: ChannelTrace, t_ms: float) -> float:
    """Gain in dB at time t, holding each sample for one period."""
    if not (0 <= t_ms < trace.duration_ms):
        raise TraceError(f"time {t_ms} ms outside trace span [0, {trace.duration_ms}) ms")
    return float(trace.samples[int(t_ms // trace.sample_period_ms)])


class ChannelSet:
    """Immutable collection of equal-period traces indexed by link.

    Besides exact link lookup, the set resolves interference lookups by
    (transmitting subject, receiving subject, receiving location): all
    transmitters of a foreign network are collapsed onto that network's
    single assembled interference channel per receiver location.
    """

    def __init__(self, traces: Iterable[ChannelTrace]):
        self._traces: dict[LinkId, ChannelTrace] = {}
        for trace in traces:
            if trace.link in self._traces:
                raise TraceError(f"duplicate trace for link {trace.link}")
            self._traces[trace.link] = trace
        if not self._traces:
            raise TraceError("channel set needs at least one trace")
        periods = {t.sample_period_ms for t in self._traces.values()}
        if len(periods) != 1:
            raise TraceError(f"channel set mixes sample periods: {sorted(periods)}")
        self._period = periods.pop()
        self._cross: dict[tuple[int, int, BodyLocation], list[LinkId]] = {}
        for link in self._traces:
            if not link.is_intra:
                key = (link.tx_subject, link.rx_subject, link.rx_location)
                self._cross.setdefault(key, []).append(link)

    @property
    def sample_period_ms(self) -> float:
        return self._period

    def links(self) -> list[LinkId]:
        return sorted(self._traces, key=str)

    def min_samples(self) -> int:
        return min(t.n_samples for t in self._traces.values())

    def trace(self, link: LinkId) -> ChannelTrace:
        try:
            return self._traces[link]
        except KeyError:
            raise MissingLinkError(f"no channel trace for link {link}") from None

    def gain_db(self, link: LinkId, epoch: int) -> float:
        return float(self.trace(link).samples[epoch])

    def cross_trace(self, tx_subject: int, rx_subject: int,
                    rx_location: BodyLocation) -> ChannelTrace:
        key = (tx_subject, rx_subject, rx_location)
        candidates = self._cross.get(key, [])
        if not candidates:
            raise MissingLinkError(f"no interference trace from subject {tx_subject} "
                                   f"to {rx_subject}:{rx_location}")
        if len(candidates) > 1:
            raise TraceError(f"ambiguous interference traces from subject {tx_subject} "
                             f"to {rx_subject}:{rx_location}: "
                             + ", ".join(str(c) for c in candidates))
        return self._traces[candidates[0]]

    def cross_gain_db(self, tx_subject: int, rx_subject: int,
                      rx_location: BodyLocation, epoch: int) -> float:
        return float(self.cross_trace(tx_subject, rx_subject, rx_location).samples[epoch])
