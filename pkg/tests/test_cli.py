from pathlib import Path

import numpy as np
import pytest

from wbansim.channel import LinkId, fspl_db, load_trace
from wbansim.cli import main, trace_filename
from wbansim.metrics import read_curve_csv

CONFIG = """
wbans:
  - subject: 1
    hub: {location: C}
    relays: [{location: LH}, {location: RH}]
    sensors: [{location: HD}]
  - subject: 2
    hub: {location: C}
    relays: [{location: LH}, {location: RH}]
    sensors: [{location: HD}]
victim: 1
interferers: [2]
epochs: 60
seed: 5
repetitions: 2
mac: {n_coexisting: 2, slot_len_ms: 60.0}
channels:
  synthetic:
    duration_ms: 24000.0
    on_body: {mean_gain_db: -55.0, shadow_sigma_db: 6.0, coherence_time_ms: 240.0}
    inter_body: {mean_gain_db: -70.0, shadow_sigma_db: 6.0, coherence_time_ms: 500.0}
"""

RUN_FILES = {"outage_single.csv", "outage_coop.csv",
             "lcr_single.csv", "lcr_coop.csv", "summary.csv"}


def write_config(tmp_path, text=CONFIG, name="config.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def tree_bytes(root):
    root = Path(root)
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*.csv"))}


# ------------------------------------------------------------------- simulate

def test_simulate_writes_run_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["simulate", "--config", write_config(tmp_path), "--out", str(out)])
    assert rc == 0
    assert {p.name for p in out.iterdir()} == RUN_FILES
    curve, scheme, subject = read_curve_csv(out / "outage_coop.csv")
    assert (curve.kind, scheme, subject) == ("outage", "coop", "1")
    assert "gain@10%" in capsys.readouterr().out


def test_simulate_is_byte_deterministic(tmp_path):
    config = write_config(tmp_path)
    for name in ("a", "b"):
        assert main(["simulate", "--config", config, "--out",
                     str(tmp_path / name), "--quiet"]) == 0
    assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")


def test_seed_flag_overrides_config(tmp_path):
    config = write_config(tmp_path)
    main(["simulate", "--config", config, "--out", str(tmp_path / "a"), "--quiet"])
    main(["simulate", "--config", config, "--out", str(tmp_path / "b"),
          "--seed", "99", "--quiet"])
    assert tree_bytes(tmp_path / "a") != tree_bytes(tmp_path / "b")


def test_simulate_reports_config_errors(tmp_path, capsys):
    broken = CONFIG.replace("mac: {n_coexisting: 2, slot_len_ms: 60.0}",
                            "mac: {n_coexisting: 2}")
    rc = main(["simulate", "--config", write_config(tmp_path, broken),
               "--out", str(tmp_path / "out")])
    assert rc == 1
    err = capsys.readouterr().err
    assert "config error" in err and "mac" in err and "slot_len_ms" in err


def test_simulate_reports_runtime_errors(tmp_path, capsys):
    (tmp_path / "traces").mkdir()
    csv_config = CONFIG.replace("""channels:
  synthetic:
    duration_ms: 24000.0
    on_body: {mean_gain_db: -55.0, shadow_sigma_db: 6.0, coherence_time_ms: 240.0}
    inter_body: {mean_gain_db: -70.0, shadow_sigma_db: 6.0, coherence_time_ms: 500.0}
""", """channels: {source: csv, csv_dir: traces}
""")
    rc = main(["simulate", "--config", write_config(tmp_path, csv_config),
               "--out", str(tmp_path / "out"), "--quiet"])
    assert rc == 2
    assert "no channel trace" in capsys.readouterr().err


def test_invalid_shadow_params_fail_at_config_time(tmp_path, capsys):
    broken = CONFIG.replace("shadow_sigma_db: 6.0, coherence_time_ms: 500.0",
                            "shadow_sigma_db: 6.0, coherence_time_ms: 0.0")
    rc = main(["gen-traces", "--config", write_config(tmp_path, broken),
               "--out", str(tmp_path / "traces")])
    assert rc == 1
    assert "channels.synthetic" in capsys.readouterr().err


# ----------------------------------------------------------------- gen-traces

def test_gen_traces_writes_all_source_links(tmp_path):
    out = tmp_path / "traces"
    rc = main(["gen-traces", "--config", write_config(tmp_path),
               "--out", str(out), "--quiet"])
    assert rc == 0
    expected = {trace_filename(LinkId.parse(text)) for text in (
        "1:HD->1:C", "1:HD->1:LH", "1:HD->1:RH", "1:LH->1:C", "1:RH->1:C",
        "1:LH->1:RH", "2:LH->1:LH")}
    assert {p.name for p in out.iterdir()} == expected
    again = tmp_path / "again"
    main(["gen-traces", "--config", write_config(tmp_path), "--out",
          str(again), "--quiet"])
    assert tree_bytes(out) == tree_bytes(again)


def test_gen_traces_zero_sigma_gives_constant_columns(tmp_path):
    flat = CONFIG.replace("shadow_sigma_db: 6.0", "shadow_sigma_db: 0.0")
    out = tmp_path / "traces"
    main(["gen-traces", "--config", write_config(tmp_path, flat), "--out",
          str(out), "--quiet"])
    trace = load_trace(out / trace_filename(LinkId.parse("1:HD->1:C")))
    np.testing.assert_array_equal(trace.samples, np.full(200, -55.0))


def test_gen_traces_requires_synthetic_source(tmp_path, capsys):
    (tmp_path / "traces").mkdir()
    csv_config = CONFIG.replace("""channels:
  synthetic:
    duration_ms: 24000.0
    on_body: {mean_gain_db: -55.0, shadow_sigma_db: 6.0, coherence_time_ms: 240.0}
    inter_body: {mean_gain_db: -70.0, shadow_sigma_db: 6.0, coherence_time_ms: 500.0}
""", """channels: {source: csv, csv_dir: traces}
""")
    rc = main(["gen-traces", "--config", write_config(tmp_path, csv_config),
               "--out", str(tmp_path / "out")])
    assert rc == 1
    assert "synthetic" in capsys.readouterr().err


def test_generated_traces_reproduce_the_synthetic_run(tmp_path):
    config = write_config(tmp_path)
    traces = tmp_path / "traces"
    main(["gen-traces", "--config", config, "--out", str(traces), "--quiet"])
    csv_config = write_config(tmp_path, CONFIG.replace("""channels:
  synthetic:
    duration_ms: 24000.0
    on_body: {mean_gain_db: -55.0, shadow_sigma_db: 6.0, coherence_time_ms: 240.0}
    inter_body: {mean_gain_db: -70.0, shadow_sigma_db: 6.0, coherence_time_ms: 500.0}
""", """channels: {source: csv, csv_dir: traces}
"""), name="csv_config.yaml")
    main(["simulate", "--config", config, "--out", str(tmp_path / "synth"), "--quiet"])
    main(["simulate", "--config", csv_config, "--out", str(tmp_path / "csv"), "--quiet"])
    assert tree_bytes(tmp_path / "synth") == tree_bytes(tmp_path / "csv")


# -------------------------------------------------------------- overlay-traces

def test_overlay_traces_builds_interference_channel(tmp_path):
    from wbansim.channel import ChannelTrace, save_trace
    base = ChannelTrace(LinkId.parse("2:LH->1:LH"), 120.0,
                        np.array([-72.0, -73.0]))
    donor = ChannelTrace(LinkId.parse("1:LH->1:C"), 120.0,
                         np.array([-50.0, -51.0]))
    save_trace(base, tmp_path / "base.csv")
    save_trace(donor, tmp_path / "donor.csv")
    out_file = tmp_path / "out.csv"
    rc = main(["overlay-traces", "--part1", str(tmp_path / "base.csv"),
               "--shadowing-from", str(tmp_path / "donor.csv"),
               "--distance-m", "0.4", "--link", "2:LH->1:C",
               "--out-file", str(out_file), "--quiet"])
    assert rc == 0
    result = load_trace(out_file)
    assert str(result.link) == "2:LH->1:C"
    loss = fspl_db(0.4, 2.36e9)
    np.testing.assert_allclose(result.samples,
                               [-122.0 + loss, -124.0 + loss], rtol=1e-12)


def test_overlay_traces_rejects_period_mismatch(tmp_path, capsys):
    from wbansim.channel import ChannelTrace, save_trace
    save_trace(ChannelTrace(LinkId.parse("2:LH->1:LH"), 120.0, np.array([-72.0])),
               tmp_path / "base.csv")
    save_trace(ChannelTrace(LinkId.parse("1:LH->1:C"), 60.0, np.array([-50.0])),
               tmp_path / "donor.csv")
    rc = main(["overlay-traces", "--part1", str(tmp_path / "base.csv"),
               "--shadowing-from", str(tmp_path / "donor.csv"),
               "--distance-m", "0.4", "--out-file", str(tmp_path / "out.csv"),
               "--quiet"])
    assert rc == 2
    assert "sample periods" in capsys.readouterr().err


# -------------------------------------------------------------------- metrics

FIXTURE_SERIES = "time_ms,sinr_db\n0.0,10.0\n120.0,2.0\n240.0,10.0\n360.0,2.0\n480.0,10.0\n"


def test_metrics_fixture_series(tmp_path):
    series_path = tmp_path / "series.csv"
    series_path.write_text(FIXTURE_SERIES)
    out = tmp_path / "out"
    rc = main(["metrics", "--series", str(series_path), "--out", str(out),
               "--thresholds", "0:10:5", "--quiet"])
    assert rc == 0
    lcr, scheme, subject = read_curve_csv(out / "lcr.csv")
    assert (scheme, subject) == ("series", "-")
    np.testing.assert_allclose(lcr.thresholds_db, [0.0, 5.0, 10.0])
    np.testing.assert_allclose(lcr.values, [0.0, 2.0 / 0.24, 2.0 / 0.24], rtol=1e-12)
    outage, _, _ = read_curve_csv(out / "outage.csv")
    np.testing.assert_allclose(outage.values, [0.0, 0.4, 0.4])


def test_metrics_constant_series_has_zero_lcr(tmp_path):
    series_path = tmp_path / "series.csv"
    series_path.write_text("time_ms,sinr_db\n0.0,7.0\n120.0,7.0\n240.0,7.0\n")
    rc = main(["metrics", "--series", str(series_path), "--out",
               str(tmp_path / "out"), "--quiet"])
    assert rc == 0
    lcr, _, _ = read_curve_csv(tmp_path / "out" / "lcr.csv")
    np.testing.assert_array_equal(lcr.values, 0.0)


@pytest.mark.parametrize("content,lineno", [
    ("", 1),
    ("time_ms,sinr_db\n0.0,10.0\n120.0,???\n", 3),
])
def test_metrics_rejects_malformed_input(tmp_path, capsys, content, lineno):
    series_path = tmp_path / "series.csv"
    series_path.write_text(content)
    rc = main(["metrics", "--series", str(series_path), "--out",
               str(tmp_path / "out"), "--quiet"])
    assert rc == 1
    assert f"series.csv:{lineno}" in capsys.readouterr().err


# ---------------------------------------------------------------------- sweep

def test_sweep_outputs_and_determinism(tmp_path):
    config = write_config(tmp_path)
    for name in ("a", "b"):
        rc = main(["sweep", "--config", config, "--out", str(tmp_path / name),
                   "--quiet"])
        assert rc == 0
    out = tmp_path / "a"
    assert (out / "summary.csv").exists()
    assert (out / "aggregate.csv").exists()
    for rep in (0, 1):
        rep_dir = out / "runs" / "1x2" / f"rep{rep}"
        assert {p.name for p in rep_dir.iterdir()} == RUN_FILES - {"summary.csv"}
    assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")


def test_sweep_threads_do_not_change_results(tmp_path):
    config = write_config(tmp_path, CONFIG + """
sweep:
  victims: [1, 2]
  interferers: [1, 2]
""")
    main(["sweep", "--config", config, "--out", str(tmp_path / "serial"), "--quiet"])
    main(["sweep", "--config", config, "--out", str(tmp_path / "threaded"),
          "--threads", "4", "--quiet"])
    assert tree_bytes(tmp_path / "serial") == tree_bytes(tmp_path / "threaded")
    summary = (tmp_path / "serial" / "summary.csv").read_text().splitlines()
    assert len(summary) == 1 + 2 * 2 * 2  # pairs x reps x schemes
