import math
from dataclasses import replace

import numpy as np
import pytest

from helpers import HD, LW, make_wban
from wbansim.channel import (BodyLocation, ChannelTrace, LinkId, fspl_db,
                             save_trace)
from wbansim.engine import (ConfigError, CsvChannelSource, ExperimentConfig,
                            RadioConfig, ShadowParams, SyntheticChannelSource,
                            assemble_channels, required_source_links, run, sweep)
from wbansim.metrics import lcr_curve, threshold_at_outage
from wbansim.network import build_schedule
from wbansim.relaying import evaluate_superframe
from wbansim.seeding import derive_seed, substream


def base_config(**kw):
    defaults = dict(
        wbans=(make_wban(1), make_wban(2)),
        victim_subject=1,
        interferer_subjects=(2,),
        epochs=40,
        channels=SyntheticChannelSource(duration_ms=120.0 * 200),
        master_seed=3,
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


def flat_source(on_db=-55.0, inter_db=-70.0, n=200):
    return SyntheticChannelSource(duration_ms=120.0 * n,
                                  on_body=ShadowParams(on_db, 0.0, 240.0),
                                  inter_body=ShadowParams(inter_db, 0.0, 500.0))


# ----------------------------------------------------------------- validation

@pytest.mark.parametrize("kwargs,match", [
    (dict(wbans=(make_wban(1), make_wban(1))), "duplicate subject"),
    (dict(victim_subject=9), "no wban defined"),
    (dict(interferer_subjects=(1,)), "cannot interfere"),
    (dict(sweep_victims=(7,)), "no wban defined"),
    (dict(epochs=0), "epochs"),
    (dict(repetitions=0), "repetitions"),
    (dict(hop_weights=(0.0, 1.0)), "hop_weights"),
    (dict(epoch_period_ms=0.0), "epoch_period_ms"),
])
def test_config_validation(kwargs, match):
    with pytest.raises(ConfigError, match=match):
        base_config(**kwargs)


def test_radio_config_lookup():
    radio = RadioConfig()
    assert radio.distance_m(BodyLocation.LEFT_HIP, BodyLocation.CHEST) == 0.40
    assert radio.distance_m(BodyLocation.RIGHT_HIP, BodyLocation.LEFT_HIP) == 0.30
    with pytest.raises(ConfigError, match="C-RH"):
        radio.distance_m(BodyLocation.CHEST, BodyLocation.RIGHT_HIP)


# -------------------------------------------------------------- trace sourcing

def test_required_source_links():
    links = {str(l) for l in required_source_links(base_config())}
    assert links == {"1:HD->1:C", "1:HD->1:LH", "1:HD->1:RH",
                     "1:LH->1:C", "1:RH->1:C", "1:LH->1:RH",
                     "2:LH->1:LH"}


def test_assemble_overlays_interference_channels(tmp_path):
    values = {"1:HD->1:C": -60.0, "1:HD->1:LH": -50.0, "1:HD->1:RH": -40.0,
              "1:LH->1:C": -55.0, "1:RH->1:C": -70.0, "1:LH->1:RH": -52.0,
              "2:LH->1:LH": -72.0}
    for k, (text, gain) in enumerate(values.items()):
        save_trace(ChannelTrace(LinkId.parse(text), 120.0, np.full(8, gain)),
                   tmp_path / f"t{k}.csv")
    config = base_config(channels=CsvChannelSource(tmp_path), epochs=8)
    channels = assemble_channels(config)

    base = channels.trace(LinkId.parse("2:LH->1:LH"))
    np.testing.assert_array_equal(base.samples, np.full(8, -72.0))  # pass-through
    to_chest = channels.trace(LinkId.parse("2:LH->1:C"))
    np.testing.assert_allclose(
        to_chest.samples, -72.0 + (-55.0 + fspl_db(0.40, 2.36e9)), rtol=1e-12)
    to_rh = channels.trace(LinkId.parse("2:LH->1:RH"))
    np.testing.assert_allclose(
        to_rh.samples, -72.0 + (-52.0 + fspl_db(0.30, 2.36e9)), rtol=1e-12)
    np.testing.assert_array_equal(
        channels.trace(LinkId.parse("1:HD->1:C")).samples, np.full(8, -60.0))


def test_assemble_downsamples_to_epoch_period(tmp_path):
    links = [str(l) for l in required_source_links(base_config())]
    for k, text in enumerate(links):
        save_trace(ChannelTrace(LinkId.parse(text), 40.0, np.arange(24.0)),
                   tmp_path / f"t{k}.csv")
    channels = assemble_channels(base_config(channels=CsvChannelSource(tmp_path),
                                             epochs=8))
    assert channels.sample_period_ms == 120.0
    np.testing.assert_array_equal(
        channels.trace(LinkId.parse("1:HD->1:C")).samples,
        np.arange(0.0, 24.0, 3.0))


def test_assemble_needs_a_distance_for_the_anchor_pairs():
    config = base_config(
        interferer_source_location=BodyLocation.RIGHT_HIP)
    with pytest.raises(ConfigError, match="no link distance"):
        assemble_channels(config)


def test_missing_trace_is_reported(tmp_path):
    config = base_config(channels=CsvChannelSource(tmp_path))
    with pytest.raises(Exception, match="no channel trace"):
        assemble_channels(config)


# ----------------------------------------------------- vectorized vs reference

def test_run_matches_per_epoch_reference():
    config = base_config(wbans=(make_wban(1, sensor_locs=(HD, LW)), make_wban(2)),
                         epochs=30, start_index=5, master_seed=11,
                         hop_weights=(1.0, 1.5))
    result = run(config)
    channels = assemble_channels(config)
    cycle = config.mac.cycle_ms
    offsets = {s: substream(config.master_seed, "offsets", s)
               .uniform(0.0, cycle, config.epochs) for s in (1, 2)}
    for e in range(config.epochs):
        schedules = [build_schedule(config.wban(s), config.mac, offsets[s][e])
                     for s in (1, 2)]
        decisions = evaluate_superframe(config.victim, schedules, channels,
                                        config.noise, epoch=5 + e,
                                        hop_weights=config.hop_weights)
        for d in decisions:
            got = result.series[d.sensor_index]
            assert got["single"].times_ms[e] == (5 + e) * 120.0
            np.testing.assert_allclose(
                10.0 ** (got["single"].values_db[e] / 10.0), d.single, rtol=1e-9)
            np.testing.assert_allclose(
                10.0 ** (got["coop"].values_db[e] / 10.0), d.cooperative, rtol=1e-9)


def test_run_is_deterministic():
    config = base_config()
    a, b = run(config), run(config)
    for i in a.series:
        for scheme in ("single", "coop"):
            np.testing.assert_array_equal(a.series[i][scheme].values_db,
                                          b.series[i][scheme].values_db)
    assert a.summary == b.summary


def test_muted_interferer_equals_absent_interferer():
    quiet = make_wban(2, sensor_power=-math.inf, relay_power=-math.inf,
                      hub_power=-math.inf)
    with_muted = run(base_config(wbans=(make_wban(1), quiet)))
    without = run(base_config(wbans=(make_wban(1), quiet),
                              interferer_subjects=()))
    for scheme in ("single", "coop"):
        np.testing.assert_array_equal(with_muted.series[0][scheme].values_db,
                                      without.series[0][scheme].values_db)


def test_muted_relays_reduce_coop_to_single():
    config = base_config(wbans=(make_wban(1, relay_power=-math.inf), make_wban(2)))
    result = run(config)
    np.testing.assert_array_equal(result.series[0]["coop"].values_db,
                                  result.series[0]["single"].values_db)


def test_cooperation_never_hurts():
    result = run(base_config(epochs=150))
    assert np.all(result.series[0]["coop"].values_db
                  >= result.series[0]["single"].values_db)
    outage = result.curves
    assert np.all(outage["coop"]["outage"].values <= outage["single"]["outage"].values)


# ------------------------------------------------------------ run-level output

def test_flat_channels_give_flat_series():
    config = base_config(channels=flat_source(), interferer_subjects=())
    result = run(config)
    single = result.series[0]["single"].values_db
    np.testing.assert_allclose(single, 45.0, rtol=1e-12)
    np.testing.assert_allclose(result.series[0]["coop"].values_db, 45.0, rtol=1e-12)
    curve = result.curves["single"]["outage"]
    grid = curve.thresholds_db
    np.testing.assert_array_equal(curve.values[grid <= 44.5], 0.0)
    np.testing.assert_array_equal(curve.values[grid >= 45.5], 1.0)
    np.testing.assert_array_equal(result.curves["single"]["lcr"].values, 0.0)
    for row in result.summary:
        assert row.gain_at_10pct_db == 0.0
        assert row.lcr_at_ref_hz == 0.0


def test_curves_aggregate_over_sensors():
    config = base_config(wbans=(make_wban(1, sensor_locs=(HD, LW)), make_wban(2)),
                         epochs=60)
    result = run(config)
    pooled = result.curves["coop"]["outage"]
    # Pooled outage equals the mean of the two per-sensor curves (equal
    # sample counts), and the lcr curve is the per-sensor mean.
    per_sensor = [np.searchsorted(np.sort(result.series[i]["coop"].values_db),
                                  pooled.thresholds_db, side="left") / 60.0
                  for i in (0, 1)]
    np.testing.assert_allclose(pooled.values, np.mean(per_sensor, axis=0), atol=1e-12)
    per_lcr = [lcr_curve(result.series[i]["coop"], pooled.thresholds_db).values
               for i in (0, 1)]
    np.testing.assert_allclose(result.curves["coop"]["lcr"].values,
                               np.mean(per_lcr, axis=0), atol=1e-12)


def test_summary_rows_are_consistent_with_curves():
    result = run(base_config(epochs=150))
    rows = {row.scheme: row for row in result.summary}
    assert set(rows) == {"single", "coop"}
    for scheme, row in rows.items():
        assert row.combination == "1x2"
        assert (row.victim, row.interferer, row.rep) == (1, "2", 0)
        expected = threshold_at_outage(result.curves[scheme]["outage"], 0.10)
        assert row.thr_at_10pct_db == pytest.approx(expected, rel=1e-12)
    assert rows["coop"].gain_at_10pct_db == pytest.approx(
        rows["coop"].thr_at_10pct_db - rows["single"].thr_at_10pct_db, abs=1e-12)
    assert rows["single"].gain_at_10pct_db == rows["coop"].gain_at_10pct_db


def test_summary_nan_when_grid_misses_the_distribution():
    config = base_config(channels=flat_source(), interferer_subjects=(),
                         thresholds_db=np.linspace(46.0, 50.0, 9))
    result = run(config)
    for row in result.summary:
        assert math.isnan(row.thr_at_10pct_db)
        assert math.isnan(row.gain_at_10pct_db)


def test_run_window_bounds_are_checked():
    with pytest.raises(ConfigError, match="cover"):
        run(base_config(epochs=300))
    with pytest.raises(ConfigError, match="cover"):
        run(base_config(start_index=190))
    with pytest.raises(ConfigError, match="finite"):
        run(base_config(wbans=(make_wban(1, sensor_power=-math.inf), make_wban(2))))


# ------------------------------------------------------------------ csv parity

def test_csv_round_trip_reproduces_synthetic_run(tmp_path):
    config = base_config()
    seed = derive_seed(config.master_seed, "channels")
    for k, link in enumerate(required_source_links(config)):
        save_trace(config.channels.trace(link, seed), tmp_path / f"t{k}.csv")
    from_csv = run(replace(config, channels=CsvChannelSource(tmp_path)))
    from_synth = run(config)
    for scheme in ("single", "coop"):
        np.testing.assert_array_equal(from_csv.series[0][scheme].values_db,
                                      from_synth.series[0][scheme].values_db)


# ----------------------------------------------------------------------- sweep

def test_sweep_fixed_start_repetitions_are_degenerate():
    config = base_config(repetitions=3, start_index=0)
    result = sweep(config)
    assert len(result.runs) == 3
    assert len(result.rows) == 6
    assert {agg.scheme for agg in result.aggregates} == {"single", "coop"}
    for agg in result.aggregates:
        assert agg.std_thr_at_10pct_db == 0.0
        assert agg.std_gain_at_10pct_db == 0.0
        rep0 = [r for r in result.rows if r.scheme == agg.scheme][0]
        assert agg.mean_thr_at_10pct_db == rep0.thr_at_10pct_db


def test_sweep_matrix_and_worker_equivalence():
    config = base_config(sweep_victims=(1, 2), sweep_interferers=(1, 2),
                         repetitions=2)
    serial = sweep(config)
    threaded = sweep(config, workers=4)
    assert {r.combination for r in serial.rows} == {"1x2", "2x1"}
    assert len(serial.rows) == 8
    assert serial.rows == threaded.rows
    assert serial.aggregates == threaded.aggregates


def test_sweep_start_indices_drive_repetitions():
    same = sweep(base_config(repetitions=2, start_indices=(7, 7)))
    assert same.rows[0].thr_at_10pct_db == same.rows[2].thr_at_10pct_db
    varied = sweep(base_config(repetitions=2, start_indices=(0, 80)))
    assert varied.rows[0].thr_at_10pct_db != varied.rows[2].thr_at_10pct_db
    with pytest.raises(ConfigError, match="start_indices"):
        sweep(base_config(repetitions=3, start_indices=(0, 1)))


def test_sweep_random_starts_stay_in_bounds_and_vary():
    result = sweep(base_config(epochs=50, repetitions=6, master_seed=2))
    starts = [r.start_index for r in result.runs]
    assert all(0 <= s <= 150 for s in starts)
    assert len(set(starts)) > 1


def test_sweep_rejects_an_empty_matrix():
    with pytest.raises(ConfigError, match="empty combination"):
        sweep(base_config(interferer_subjects=()))
