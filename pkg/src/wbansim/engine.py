"""Experiment orchestration: channel assembly, epoch loop, sweeps.

A run simulates one victim network against zero or more interfering
networks over a window of block-fading epochs. Each epoch covers exactly
one TDMA cycle (with the defaults, two 60 ms slots per 120 ms channel
block): all networks draw fresh superframe offsets, every victim sensor
packet is scored under both transmission schemes, and the resulting SINR
series feed the outage and level crossing metrics.

A sweep repeats runs over a victim x interferer combination matrix with
several repetitions at varied channel start indices, and aggregates the
summary quantities.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .channel import (BodyLocation, ChannelSet, ChannelTrace, LinkId, MissingLinkError,
                      SyntheticChannelParams, TraceError, downsample, extract_shadowing,
                      generate_synthetic, load_trace, overlay)
from .metrics import (MetricsCurve, MetricsError, SinrSeries, empirical_outage,
                      lcr_curve, level_crossing_rate, threshold_at_outage,
                      default_thresholds)
from .network import MacConfig, WbanConfig, overlap_lengths, superframe_layout
from .relaying import NoiseModel
from .seeding import derive_seed, substream


class ConfigError(Exception):
    """A configuration problem, named after the offending section or key."""


@dataclass(frozen=True)
class ShadowParams:
    """Marginal statistics and coherence of one class of links."""

    mean_gain_db: float
    shadow_sigma_db: float
    coherence_time_ms: float

    def __post_init__(self):
        if not math.isfinite(self.mean_gain_db):
            raise ValueError(f"mean_gain_db must be finite, got {self.mean_gain_db}")
        if not self.shadow_sigma_db >= 0.0:
            raise ValueError(f"shadow_sigma_db must be >= 0, got {self.shadow_sigma_db}")
        if not self.coherence_time_ms > 0.0:
            raise ValueError(
                f"coherence_time_ms must be positive, got {self.coherence_time_ms}")


@dataclass(frozen=True, eq=False)
class SyntheticChannelSource:
    """Generates every required trace with the AR(1) shadowing model.

    on_body parameters apply to links within a subject, inter_body to
    links between subjects; overrides (keyed by link string) replace the
    class parameters for individual links.
    """

    sample_period_ms: float = 120.0
    duration_ms: float = 4_800_000.0
    on_body: ShadowParams = ShadowParams(-55.0, 6.0, 240.0)
    inter_body: ShadowParams = ShadowParams(-70.0, 6.0, 500.0)
    overrides: Mapping[str, ShadowParams] = field(default_factory=dict)

    def __post_init__(self):
        if not self.sample_period_ms > 0.0:
            raise ValueError(
                f"sample_period_ms must be positive, got {self.sample_period_ms}")
        if not self.duration_ms >= self.sample_period_ms:
            raise ValueError("duration_ms must cover at least one sample, got "
                             f"{self.duration_ms}")

    def params_for(self, link: LinkId) -> ShadowParams:
        override = self.overrides.get(str(link))
        if override is not None:
            return override
        return self.on_body if link.is_intra else self.inter_body

    def trace(self, link: LinkId, seed: int) -> ChannelTrace:
        p = self.params_for(link)
        return generate_synthetic(
            SyntheticChannelParams(p.mean_gain_db, p.shadow_sigma_db,
                                   p.coherence_time_ms, self.duration_ms,
                                   self.sample_period_ms, seed), link)


@dataclass(frozen=True)
class CsvChannelSource:
    """Serves traces from a directory of trace CSVs, indexed by header link."""

    directory: Path

    def _index(self) -> dict[LinkId, Path]:
        directory = Path(self.directory)
        if not directory.is_dir():
            raise ConfigError(f"channels: csv_dir {directory} is not a directory")
        index: dict[LinkId, Path] = {}
        for path in sorted(directory.glob("*.csv")):
            trace = load_trace(path)
            if trace.link in index:
                raise TraceError(f"duplicate trace for link {trace.link}: "
                                 f"{index[trace.link]} and {path}")
            index[trace.link] = path
        return index

    def trace(self, link: LinkId, seed: int) -> ChannelTrace:
        index = self._index()
        if link not in index:
            raise MissingLinkError(f"no channel trace for link {link} in {self.directory}")
        return load_trace(index[link], link)


def _distance_key(a: BodyLocation, b: BodyLocation) -> tuple[str, str]:
    return tuple(sorted((a.value, b.value)))


@dataclass(frozen=True, eq=False)
class RadioConfig:
    """Carrier frequency and inter-device distances for shadowing extraction."""

    frequency_hz: float = 2.36e9
    link_distances_m: Mapping[tuple[str, str], float] = field(
        default_factory=lambda: {("C", "LH"): 0.40, ("LH", "RH"): 0.30})

    def distance_m(self, a: BodyLocation, b: BodyLocation) -> float:
        key = _distance_key(a, b)
        try:
            return self.link_distances_m[key]
        except KeyError:
            raise ConfigError(f"radio: no link distance configured for pair "
                              f"{key[0]}-{key[1]}") from None


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Complete description of one reproducible experiment."""

    wbans: tuple[WbanConfig, ...]
    victim_subject: int
    interferer_subjects: tuple[int, ...]
    epochs: int
    mac: MacConfig = MacConfig()
    noise: NoiseModel = NoiseModel()
    radio: RadioConfig = RadioConfig()
    channels: SyntheticChannelSource | CsvChannelSource = SyntheticChannelSource()
    master_seed: int = 0
    repetitions: int = 1
    start_index: int | None = None
    start_indices: tuple[int, ...] | None = None
    epoch_period_ms: float = 120.0
    interferer_source_location: BodyLocation = BodyLocation.LEFT_HIP
    hop_weights: tuple[float, float] = (1.0, 1.0)
    thresholds_db: np.ndarray = field(default_factory=default_thresholds)
    lcr_ref_threshold_db: float = 5.0
    sweep_victims: tuple[int, ...] = ()
    sweep_interferers: tuple[int, ...] = ()

    def __post_init__(self):
        subjects = [w.subject for w in self.wbans]
        if len(set(subjects)) != len(subjects):
            raise ConfigError(f"wbans: duplicate subject ids in {subjects}")
        for subject in (self.victim_subject, *self.interferer_subjects,
                        *self.sweep_victims, *self.sweep_interferers):
            if subject not in subjects:
                raise ConfigError(f"no wban defined for subject {subject}")
        if self.victim_subject in self.interferer_subjects:
            raise ConfigError(f"victim subject {self.victim_subject} cannot interfere "
                              "with itself")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be >= 1, got {self.repetitions}")
        if not (math.isfinite(self.epoch_period_ms) and self.epoch_period_ms > 0):
            raise ConfigError(f"epoch_period_ms must be positive, got {self.epoch_period_ms}")
        if not all(w > 0 and math.isfinite(w) for w in self.hop_weights):
            raise ConfigError(f"relaying: hop_weights must be positive, got {self.hop_weights}")

    def wban(self, subject: int) -> WbanConfig:
        for wban in self.wbans:
            if wban.subject == subject:
                return wban
        raise ConfigError(f"no wban defined for subject {subject}")

    @property
    def victim(self) -> WbanConfig:
        return self.wban(self.victim_subject)

    @property
    def interferers(self) -> tuple[WbanConfig, ...]:
        return tuple(self.wban(s) for s in self.interferer_subjects)


def required_source_links(config: ExperimentConfig) -> list[LinkId]:
    """Links whose raw traces the channel source must provide.

    Victim on-body links first (sensor hops, relay hops and the anchor
    links that donate shadowing), then one cross-body base link per
    interferer, ending at the victim's anchor location.
    """
    victim = config.victim
    subject = victim.subject
    hub_loc = victim.hub.location
    anchor = config.interferer_source_location
    links: dict[LinkId, None] = {}
    for sensor in victim.sensors:
        for target in (hub_loc, victim.relays[0].location, victim.relays[1].location):
            links.setdefault(LinkId(subject, sensor.location, subject, target))
    for relay in victim.relays:
        links.setdefault(LinkId(subject, relay.location, subject, hub_loc))
    device_locs = (hub_loc, victim.relays[0].location, victim.relays[1].location)
    for loc in device_locs:
        if loc != anchor:
            links.setdefault(LinkId(subject, anchor, subject, loc))
    for interferer in config.interferers:
        links.setdefault(LinkId(interferer.subject, anchor, subject, anchor))
    return list(links)


def assemble_channels(config: ExperimentConfig) -> ChannelSet:
    """Fetch, decimate and overlay every trace the simulation needs.

    On-body victim traces are used directly. Interference channels are
    assembled per interferer and victim device location: the cross-body
    base trace (interferer to the victim's anchor location) passes
    through unchanged for the anchor location itself, and is overlaid
    with the shadowing extracted from the victim's on-body anchor-to-
    location trace for the other device locations.
    """
    victim = config.victim
    subject = victim.subject
    anchor = config.interferer_source_location
    seed = derive_seed(config.master_seed, "channels")

    def fetch(link: LinkId) -> ChannelTrace:
        return downsample(config.channels.trace(link, seed), config.epoch_period_ms)

    traces: dict[LinkId, ChannelTrace] = {}
    for link in required_source_links(config):
        traces[link] = fetch(link)

    device_locs = (victim.hub.location, victim.relays[0].location,
                   victim.relays[1].location)
    for interferer in config.interferers:
        base = traces[LinkId(interferer.subject, anchor, subject, anchor)]
        for loc in device_locs:
            if loc == anchor:
                continue
            shadow_source = traces[LinkId(subject, anchor, subject, loc)]
            shadowing = extract_shadowing(shadow_source,
                                          config.radio.distance_m(anchor, loc),
                                          config.radio.frequency_hz)
            out_link = LinkId(interferer.subject, anchor, subject, loc)
            traces[out_link] = overlay(base, shadowing, out_link)
    return ChannelSet(traces.values())


@dataclass(frozen=True)
class SummaryRow:
    """Per-(run, scheme) summary quantities; NaN where not computable."""

    combination: str
    victim: int
    interferer: str
    rep: int
    scheme: str
    thr_at_1pct_db: float
    thr_at_10pct_db: float
    gain_at_10pct_db: float
    lcr_at_ref_hz: float


@dataclass(frozen=True)
class AggregateRow:
    """Mean and spread of summary quantities across repetitions."""

    combination: str
    victim: int
    interferer: str
    scheme: str
    mean_thr_at_1pct_db: float
    std_thr_at_1pct_db: float
    mean_thr_at_10pct_db: float
    std_thr_at_10pct_db: float
    mean_gain_at_10pct_db: float
    std_gain_at_10pct_db: float
    mean_lcr_at_ref_hz: float
    std_lcr_at_ref_hz: float


@dataclass
class RunResult:
    """All outputs of one run: per-sensor series, curves and summaries."""

    victim_subject: int
    interferer_subjects: tuple[int, ...]
    rep: int
    start_index: int
    series: dict[int, dict[str, SinrSeries]]
    curves: dict[str, dict[str, MetricsCurve]]
    summary: list[SummaryRow]


def _combination_id(victim: int, interferers: tuple[int, ...]) -> tuple[str, str]:
    label = "+".join(str(s) for s in interferers) if interferers else "-"
    return f"{victim}x{label}", label


def _quantile_or_nan(curve: MetricsCurve, probability: float) -> float:
    try:
        return threshold_at_outage(curve, probability)
    except MetricsError:
        return math.nan


def _execute_run(config: ExperimentConfig, channels: ChannelSet,
                 start_index: int, rep: int) -> RunResult:
    victim = config.victim
    epochs, period = config.epochs, config.epoch_period_ms
    if abs(channels.sample_period_ms - period) > 1e-9:
        raise ConfigError(f"assembled channels are sampled at "
                          f"{channels.sample_period_ms} ms, expected {period} ms")
    available = channels.min_samples()
    if start_index < 0 or start_index + epochs > available:
        raise ConfigError(f"channel traces cover {available} epochs but the run needs "
                          f"[{start_index}, {start_index + epochs})")
    for sensor in victim.sensors:
        if not math.isfinite(sensor.tx_power_dbm):
            raise ConfigError(f"victim sensor at {sensor.location} must have finite "
                              "tx power")
    mac, cycle = config.mac, config.mac.cycle_ms
    window = slice(start_index, start_index + epochs)
    subject, hub_loc = victim.subject, victim.hub.location

    offsets = {w.subject: substream(config.master_seed, "offsets", w.subject)
               .uniform(0.0, cycle, epochs)
               for w in (victim, *config.interferers)}

    # Power-weighted overlap of foreign transmissions with each victim
    # receive sub-interval, per epoch.
    v_layout = superframe_layout(victim, mac)
    v_intervals = {}
    for i in range(len(victim.sensors)):
        v_intervals[(i, "broadcast")] = v_layout.broadcast[i]
        v_intervals[(i, "forward")] = v_layout.forward[i]
    weights: dict[tuple[int, int, str], np.ndarray] = {}
    for interferer in config.interferers:
        i_layout = superframe_layout(interferer, mac)
        delta_base = offsets[interferer.subject] - offsets[subject]
        for (i, kind), (rel_a, dur_a) in v_intervals.items():
            weighted = np.zeros(epochs)
            for rel_b, dur_b, node in i_layout.transmissions:
                power_mw = 10.0 ** (node.tx_power_dbm / 10.0)
                delta = (delta_base + rel_b - rel_a) % cycle
                weighted += (overlap_lengths(delta, dur_a, dur_b, cycle) / dur_a) * power_mw
            weights[(interferer.subject, i, kind)] = weighted

    def link_gain(tx_loc: BodyLocation, rx_loc: BodyLocation) -> np.ndarray:
        trace = channels.trace(LinkId(subject, tx_loc, subject, rx_loc))
        return 10.0 ** (trace.samples[window] / 10.0)

    def interference_mw(rx_loc: BodyLocation, i: int, kind: str) -> np.ndarray:
        total = np.zeros(epochs)
        for interferer in config.interferers:
            cross = channels.cross_trace(interferer.subject, subject, rx_loc)
            total += (10.0 ** (cross.samples[window] / 10.0)
                      * weights[(interferer.subject, i, kind)])
        return total

    noise_mw = config.noise.noise_mw
    w_in, w_out = config.hop_weights
    times = (start_index + np.arange(epochs)) * period
    series: dict[int, dict[str, SinrSeries]] = {}
    for i, sensor in enumerate(victim.sensors):
        p_sensor = 10.0 ** (sensor.tx_power_dbm / 10.0)
        den_hub_b = noise_mw + interference_mw(hub_loc, i, "broadcast")
        den_hub_f = noise_mw + interference_mw(hub_loc, i, "forward")
        nu_direct = p_sensor * link_gain(sensor.location, hub_loc) / den_hub_b
        nu_sr, nu_rh = [], []
        for relay in victim.relays:
            den_relay_b = noise_mw + interference_mw(relay.location, i, "broadcast")
            nu_sr.append(p_sensor * link_gain(sensor.location, relay.location) / den_relay_b)
            p_relay = 10.0 ** (relay.tx_power_dbm / 10.0)
            nu_rh.append(p_relay * link_gain(relay.location, hub_loc) / den_hub_f)
        mins = (np.minimum(nu_sr[0], nu_rh[0]), np.minimum(nu_sr[1], nu_rh[1]))
        metric1 = np.minimum(w_in * nu_sr[0], w_out * nu_rh[0])
        metric2 = np.minimum(w_in * nu_sr[1], w_out * nu_rh[1])
        chosen_min = np.where(metric1 >= metric2, mins[0], mins[1])
        single = nu_direct
        coop = np.maximum(nu_direct, chosen_min)
        series[i] = {"single": SinrSeries(times, 10.0 * np.log10(single)),
                     "coop": SinrSeries(times, 10.0 * np.log10(coop))}

    thresholds = config.thresholds_db
    curves: dict[str, dict[str, MetricsCurve]] = {}
    for scheme in ("single", "coop"):
        pooled = np.concatenate([series[i][scheme].values_db
                                 for i in range(len(victim.sensors))])
        outage = empirical_outage(pooled, thresholds)
        lcr_values = np.mean(
            [lcr_curve(series[i][scheme], thresholds).values
             for i in range(len(victim.sensors))], axis=0)
        curves[scheme] = {"outage": outage,
                          "lcr": MetricsCurve("lcr", thresholds, lcr_values)}

    combination, interferer_label = _combination_id(subject, config.interferer_subjects)
    thr10 = {s: _quantile_or_nan(curves[s]["outage"], 0.10) for s in ("single", "coop")}
    gain10 = thr10["coop"] - thr10["single"]
    summary = []
    for scheme in ("single", "coop"):
        ref_lcr = float(np.mean([
            level_crossing_rate(series[i][scheme], config.lcr_ref_threshold_db)
            for i in range(len(victim.sensors))]))
        summary.append(SummaryRow(
            combination, subject, interferer_label, rep, scheme,
            _quantile_or_nan(curves[scheme]["outage"], 0.01), thr10[scheme],
            gain10, ref_lcr))
    return RunResult(subject, config.interferer_subjects, rep, start_index,
                     series, curves, summary)


def run(config: ExperimentConfig) -> RunResult:
    """Execute one deterministic run with the configured start index."""
    channels = assemble_channels(config)
    start = config.start_index if config.start_index is not None else 0
    return _execute_run(config, channels, start, rep=0)


@dataclass
class SweepResult:
    """Outputs of a combination sweep."""

    rows: list[SummaryRow]
    aggregates: list[AggregateRow]
    runs: list[RunResult]


def _sweep_pairs(config: ExperimentConfig) -> list[tuple[int, int]]:
    victims = config.sweep_victims or (config.victim_subject,)
    interferers = config.sweep_interferers or config.interferer_subjects
    pairs = [(v, u) for v in victims for u in interferers if v != u]
    if not pairs:
        raise ConfigError("sweep: empty combination matrix")
    return pairs


def _start_index_for(config: ExperimentConfig, victim: int, interferer: int,
                     rep: int, usable: int) -> int:
    if config.start_indices is not None:
        if rep >= len(config.start_indices):
            raise ConfigError(f"start_indices lists {len(config.start_indices)} entries "
                              f"but repetition {rep} is requested")
        return int(config.start_indices[rep])
    if config.start_index is not None:
        return int(config.start_index)
    rng = substream(config.master_seed, "start", victim, interferer, rep)
    return int(rng.integers(0, usable + 1))


def _run_combination(config: ExperimentConfig, victim: int,
                     interferer: int) -> list[RunResult]:
    comb_config = replace(config, victim_subject=victim,
                          interferer_subjects=(interferer,))
    channels = assemble_channels(comb_config)
    usable = channels.min_samples() - comb_config.epochs
    if usable < 0:
        raise ConfigError(f"channel traces cover {channels.min_samples()} epochs "
                          f"but each run needs {comb_config.epochs}")
    results = []
    for rep in range(comb_config.repetitions):
        start = _start_index_for(comb_config, victim, interferer, rep, usable)
        results.append(_execute_run(comb_config, channels, start, rep))
    return results


def sweep(config: ExperimentConfig, workers: int = 1) -> SweepResult:
    """Run the victim x interferer matrix with repetitions and aggregate.

    The combination matrix comes from sweep_victims x sweep_interferers
    (minus self-pairs), falling back to the configured victim and
    interferers. Results are deterministic in the master seed and
    independent of the worker count; standard deviations are population
    deviations over the repetitions.
    """
    pairs = _sweep_pairs(config)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_pair = list(pool.map(
                lambda vu: _run_combination(config, vu[0], vu[1]), pairs))
    else:
        per_pair = [_run_combination(config, v, u) for v, u in pairs]

    rows: list[SummaryRow] = []
    aggregates: list[AggregateRow] = []
    runs: list[RunResult] = []
    for (victim, interferer), results in zip(pairs, per_pair):
        runs.extend(results)
        pair_rows = [row for result in results for row in result.summary]
        rows.extend(pair_rows)
        combination, label = _combination_id(victim, (interferer,))
        for scheme in ("single", "coop"):
            scheme_rows = [r for r in pair_rows if r.scheme == scheme]
            columns = {name: np.array([getattr(r, name) for r in scheme_rows])
                       for name in ("thr_at_1pct_db", "thr_at_10pct_db",
                                    "gain_at_10pct_db", "lcr_at_ref_hz")}
            aggregates.append(AggregateRow(
                combination, victim, label, scheme,
                float(np.mean(columns["thr_at_1pct_db"])),
                float(np.std(columns["thr_at_1pct_db"])),
                float(np.mean(columns["thr_at_10pct_db"])),
                float(np.std(columns["thr_at_10pct_db"])),
                float(np.mean(columns["gain_at_10pct_db"])),
                float(np.std(columns["gain_at_10pct_db"])),
                float(np.mean(columns["lcr_at_ref_hz"])),
                float(np.std(columns["lcr_at_ref_hz"]))))
    return SweepResult(rows, aggregates, runs)


SUMMARY_COLUMNS = ("combination", "victim", "interferer", "rep", "scheme",
                   "thr_at_1pct_db", "thr_at_10pct_db", "gain_at_10pct_db",
                   "lcr_at_ref_hz")

AGGREGATE_COLUMNS = ("combination", "victim", "interferer", "scheme",
                     "mean_thr_at_1pct_db", "std_thr_at_1pct_db",
                     "mean_thr_at_10pct_db", "std_thr_at_10pct_db",
                     "mean_gain_at_10pct_db", "std_gain_at_10pct_db",
                     "mean_lcr_at_ref_hz", "std_lcr_at_ref_hz")


def _format_cell(value) -> str:
    return repr(float(value)) if isinstance(value, float) else str(value)


def write_summary_csv(rows: list[SummaryRow], path) -> None:
    lines = [",".join(SUMMARY_COLUMNS)]
    for row in rows:
        lines.append(",".join(_format_cell(getattr(row, c)) for c in SUMMARY_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n")


def write_aggregate_csv(rows: list[AggregateRow], path) -> None:
    lines = [",".join(AGGREGATE_COLUMNS)]
    for row in rows:
        lines.append(",".join(_format_cell(getattr(row, c)) for c in AGGREGATE_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n")
