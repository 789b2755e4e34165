"""Command line front end.

Subcommands:
    simulate        one run, write curve CSVs and a summary CSV
    sweep           combination matrix with repetitions, write summaries
    gen-traces      write the synthetic source traces a config implies
    overlay-traces  build an interference trace from a base and a donor
    metrics         outage and LCR curves from a stored SINR series

Exit codes: 0 on success, 1 for configuration or input errors, 2 for
runtime failures. Outputs are pure functions of the inputs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import engine, metrics
from .channel import LinkId, TraceError, extract_shadowing, load_trace, overlay, save_trace
from .config import load_config
from .engine import ConfigError
from .metrics import MetricsError


def trace_filename(link: LinkId) -> str:
    return (f"{link.tx_subject}_{link.tx_location}__"
            f"{link.rx_subject}_{link.rx_location}.csv")


def _write_run_outputs(result: engine.RunResult, out_dir: Path, quiet: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for scheme in ("single", "coop"):
        for kind in ("outage", "lcr"):
            path = out_dir / f"{kind}_{scheme}.csv"
            metrics.write_curve_csv(result.curves[scheme][kind], path, scheme,
                                    result.victim_subject)
    engine.write_summary_csv(result.summary, out_dir / "summary.csv")
    if not quiet:
        for row in result.summary:
            print(f"{row.scheme}: thr@1%={row.thr_at_1pct_db:.2f} dB  "
                  f"thr@10%={row.thr_at_10pct_db:.2f} dB  "
                  f"gain@10%={row.gain_at_10pct_db:.2f} dB  "
                  f"lcr@ref={row.lcr_at_ref_hz:.3f} Hz")
        print(f"wrote {out_dir}")


def _cmd_simulate(args) -> int:
    config = load_config(args.config, args.seed)
    result = engine.run(config)
    _write_run_outputs(result, Path(args.out), args.quiet)
    return 0


def _cmd_sweep(args) -> int:
    config = load_config(args.config, args.seed)
    result = engine.sweep(config, workers=args.threads)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for run_result in result.runs:
        run_dir = (out_dir / "runs" / run_result.summary[0].combination
                   / f"rep{run_result.rep}")
        run_dir.mkdir(parents=True, exist_ok=True)
        for scheme in ("single", "coop"):
            for kind in ("outage", "lcr"):
                metrics.write_curve_csv(run_result.curves[scheme][kind],
                                        run_dir / f"{kind}_{scheme}.csv",
                                        scheme, run_result.victim_subject)
    engine.write_summary_csv(result.rows, out_dir / "summary.csv")
    engine.write_aggregate_csv(result.aggregates, out_dir / "aggregate.csv")
    if not args.quiet:
        for agg in result.aggregates:
            print(f"{agg.combination} {agg.scheme}: "
                  f"thr@10%={agg.mean_thr_at_10pct_db:.2f}"
                  f"±{agg.std_thr_at_10pct_db:.2f} dB  "
                  f"gain@10%={agg.mean_gain_at_10pct_db:.2f} dB")
        print(f"wrote {out_dir}")
    return 0


def _cmd_gen_traces(args) -> int:
    config = load_config(args.config, args.seed)
    if not isinstance(config.channels, engine.SyntheticChannelSource):
        raise ConfigError("channels: gen-traces needs a synthetic channel source")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    from .seeding import derive_seed
    seed = derive_seed(config.master_seed, "channels")
    links = engine.required_source_links(config)
    for link in links:
        save_trace(config.channels.trace(link, seed), out_dir / trace_filename(link))
    if not args.quiet:
        print(f"wrote {len(links)} traces to {out_dir}")
    return 0


def _cmd_overlay_traces(args) -> int:
    base = load_trace(args.part1)
    donor = load_trace(args.shadowing_from)
    shadowing = extract_shadowing(donor, args.distance_m, args.frequency_hz)
    out_link = LinkId.parse(args.link) if args.link else base.link
    result = overlay(base, shadowing, out_link)
    save_trace(result, args.out_file)
    if not args.quiet:
        print(f"wrote {result.n_samples} samples for {result.link} to {args.out_file}")
    return 0


def _parse_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"thresholds: expected 'start:stop:step', got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"thresholds: expected numbers in {text!r}") from None
    if step <= 0 or stop <= start:
        raise ConfigError("thresholds: need start < stop and a positive step")
    count = round((stop - start) / step)
    if abs(start + count * step - stop) > 1e-9:
        raise ConfigError(f"thresholds: step {step} does not divide [{start}, {stop}]")
    return np.linspace(start, stop, count + 1)


def _cmd_metrics(args) -> int:
    try:
        series = metrics.read_series_csv(args.series)
    except MetricsError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    grid = _parse_grid(args.thresholds) if args.thresholds else None
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outage = metrics.outage_curve(series, grid)
    lcr = metrics.lcr_curve(series, grid)
    metrics.write_curve_csv(outage, out_dir / "outage.csv", "series", "-")
    metrics.write_curve_csv(lcr, out_dir / "lcr.csv", "series", "-")
    if not args.quiet:
        print(f"wrote {out_dir / 'outage.csv'} and {out_dir / 'lcr.csv'}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wbansim",
        description="Coexistence simulator for body area networks with "
                    "opportunistic relaying")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="experiment YAML file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config master seed")
        p.add_argument("--quiet", action="store_true", help="suppress console output")

    p = sub.add_parser("simulate", help="run one experiment")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="run the combination matrix with repetitions")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads across combinations")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("gen-traces", help="write the synthetic source traces")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_gen_traces)

    p = sub.add_parser("overlay-traces",
                       help="overlay extracted shadowing onto a base trace")
    common(p, config=False)
    p.add_argument("--part1", required=True, help="base trace CSV")
    p.add_argument("--shadowing-from", required=True,
                   help="trace CSV donating the shadowing")
    p.add_argument("--distance-m", type=float, required=True,
                   help="donor link distance for path loss removal")
    p.add_argument("--frequency-hz", type=float, default=2.36e9,
                   help="carrier frequency (default 2.36 GHz)")
    p.add_argument("--link", default=None, help="output link label, like 2:LH->1:C")
    p.add_argument("--out-file", required=True, help="output trace CSV")
    p.set_defaults(func=_cmd_overlay_traces)

    p = sub.add_parser("metrics", help="curves from a stored SINR series")
    common(p, config=False)
    p.add_argument("--series", required=True, help="series CSV (time_ms,sinr_db)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--thresholds", default=None,
                   help="threshold grid as start:stop:step in dB")
    p.set_defaults(func=_cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (TraceError, MetricsError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
