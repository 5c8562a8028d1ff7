"""Command-line driver: ``dca run`` and ``dca generate``."""

from __future__ import annotations

import argparse
import io
import logging
import sys
import warnings
from pathlib import Path

from .core import WeightMatrix
from .errors import ConfigError, DCAError
from .ingest import (
    parse_antigen_stream,
    parse_mapping,
    parse_signal_stream,
    write_presentation_log,
    write_report,
)
from .population import Mode, PopulationConfig, ThresholdDistribution, run
from .scenario import ScenarioSpec, generate_scenario
from .scoring import DEFAULT_MCAV_THRESHOLD

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INTERNAL = 3


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = text.split(":")
        return float(a), float(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A:B, got {text!r}") from None


def _window(text: str) -> tuple[int, int] | None:
    if text.lower() == "none":
        return None
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START:END or 'none', got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dca", description="Dendritic Cell Algorithm anomaly detection")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="score antigen types from signal and antigen streams")
    r.add_argument("--signals", required=True, type=Path)
    r.add_argument("--antigen", required=True, type=Path)
    r.add_argument("--mapping", required=True, type=Path)
    r.add_argument("--out", required=True, type=Path, help="MCAV report path")
    r.add_argument("--log", type=Path, help="optional presentation log path")
    r.add_argument("--cells", type=int, default=100)
    r.add_argument("--w1", type=float, default=2.0)
    r.add_argument("--w2", type=float, default=2.0)
    r.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.DETERMINISTIC.value)
    r.add_argument("--seed", type=int)
    r.add_argument("--threshold-dist", choices=[d.value for d in ThresholdDistribution],
                   default=ThresholdDistribution.UNIFORM.value)
    r.add_argument("--threshold-range", type=_pair, metavar="LO:HI",
                   help="uniform bounds (default: 0.5x..1.5x the calibration median csm)")
    r.add_argument("--threshold-gaussian", type=_pair, metavar="MEAN:STD",
                   help="gaussian parameters (default: median, median/4)")
    r.add_argument("--threshold-value", type=float, help="threshold for the fixed distribution")
    r.add_argument("--calibration-steps", type=int,
                   help="signal prefix used for the median rule (default: whole stream)")
    r.add_argument("--mcav-threshold", type=float, default=DEFAULT_MCAV_THRESHOLD)
    r.add_argument("--segment-size", type=int, default=0)
    r.add_argument("--antigen-per-update", type=int, default=1)
    r.add_argument("--antigen-capacity", type=int, help="per-cell antigen store cap (default: none)")

    g = sub.add_parser("generate", help="write a synthetic port-scan scenario")
    g.add_argument("--out-dir", required=True, type=Path)
    g.add_argument("--steps", type=int, default=1000)
    g.add_argument("--scan-window", type=_window, default=(400, 600), metavar="START:END")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--normal-types", type=int, default=3)
    g.add_argument("--normal-rate", type=float, default=1.0)
    g.add_argument("--scan-rate", type=float, default=3.0)
    g.add_argument("--scan-baseline-rate", type=float, default=0.02)
    g.add_argument("--bystander", action="store_true",
                   help="make the first normal type as active as the scan inside the window")
    g.add_argument("--root-login", action="store_true",
                   help="raise the inflammation signal during the scan")
    return parser


def _config_from(args) -> PopulationConfig:
    lo = hi = mean = std = None
    if args.threshold_range is not None:
        lo, hi = args.threshold_range
    if args.threshold_gaussian is not None:
        mean, std = args.threshold_gaussian
    return PopulationConfig(
        n_cells=args.cells,
        threshold_distribution=ThresholdDistribution(args.threshold_dist),
        threshold_low=lo,
        threshold_high=hi,
        threshold_mean=mean,
        threshold_std=std,
        threshold_value=args.threshold_value,
        mode=Mode(args.mode),
        rng_seed=args.seed,
        antigen_per_update=args.antigen_per_update,
        antigen_capacity=args.antigen_capacity,
        calibration_steps=args.calibration_steps,
    )


def _print_config(args, config: PopulationConfig, thresholds) -> None:
    err = sys.stderr
    print("# resolved configuration", file=err)
    for key in ("signals", "antigen", "mapping", "out", "log"):
        print(f"#   {key}={getattr(args, key)}", file=err)
    print(f"#   w1={args.w1} w2={args.w2}", file=err)
    for key, value in vars(config).items():
        if isinstance(value, (Mode, ThresholdDistribution)):
            value = value.value
        print(f"#   {key}={value}", file=err)
    print(f"#   thresholds: min={min(thresholds)!r} max={max(thresholds)!r}", file=err)
    print(f"#   mcav_threshold={args.mcav_threshold} segment_size={args.segment_size}", file=err)


def cmd_run(args) -> int:
    stage = "configuration"
    try:
        weights = WeightMatrix(args.w1, args.w2)
        config = _config_from(args)
        config.validate()
        stage = "ingestion"
        mapping = parse_mapping(args.mapping)
        signals = parse_signal_stream(args.signals, mapping)
        antigen = parse_antigen_stream(args.antigen)
        stage = "run"
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = run(signals, antigen, weights, config,
                         mcav_threshold=args.mcav_threshold, segment_size=args.segment_size)
        for w in caught:
            print(f"dca run: warning: {w.message}", file=sys.stderr)
    except DCAError as exc:
        print(f"dca run: {stage} failed: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AssertionError as exc:
        print(f"dca run: internal invariant violated during {stage}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL

    _print_config(args, result.config, result.thresholds)
    report = io.StringIO()
    write_report(report, result.reports, result.segments)
    try:
        args.out.write_text(report.getvalue(), encoding="utf-8")
        if args.log is not None:
            log = io.StringIO()
            write_presentation_log(log, result.presentations)
            args.log.write_text(log.getvalue(), encoding="utf-8")
    except OSError as exc:
        print(f"dca run: output failed: {exc}", file=sys.stderr)
        return EXIT_USAGE

    d = result.diagnostics
    print(f"# cells={d.cells} steps={d.steps} presentations={d.presentations} "
          f"(empty={d.empty_presentations}) antigen: ingested={d.antigen_ingested} "
          f"presented={d.antigen_presented} unpresented={d.unpresented} "
          f"(held={d.antigen_held} queued={d.antigen_queued}) dropped={d.antigen_dropped}",
          file=sys.stderr)
    return EXIT_OK


def cmd_generate(args) -> int:
    normal = tuple((f"pid-{1001 + i}", args.normal_rate) for i in range(args.normal_types))
    spec = ScenarioSpec(
        duration_steps=args.steps,
        normal_types=normal,
        scan_rate=args.scan_rate,
        scan_baseline_rate=args.scan_baseline_rate,
        scan_window=args.scan_window,
        bystander=args.bystander,
        root_login_during_scan=args.root_login,
    )
    try:
        scenario = generate_scenario(spec, seed=args.seed)
        paths = scenario.write(args.out_dir)
    except ConfigError as exc:
        print(f"dca generate: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"dca generate: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for kind, path in paths.items():
        print(f"{kind}: {path}", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_generate(args)


if __name__ == "__main__":
    sys.exit(main())
