import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from prometheus_client import start_http_server

from app.config import APP_ENV, APP_VERSION, LOG_LEVEL, METRICS_PORT, OUTAGE_WORKERS, SENTRY_DSN
from sweep.config import load_config
from sweep.runner import point_rows, rows_to_csv, run_sweep, run_validation, validation_csv

logger = logging.getLogger("worker.run")


def _init_observability() -> None:
    if SENTRY_DSN:
        try:
            import sentry_sdk
            sentry_sdk.init(dsn=SENTRY_DSN, environment=APP_ENV, release=APP_VERSION, traces_sample_rate=0.0)
            logger.info("[Worker] Sentry error reporting enabled")
        except Exception as e:
            logger.warning(f"[Worker] Sentry init failed: {e}")
    if METRICS_PORT:
        try:
            start_http_server(METRICS_PORT, addr="127.0.0.1")
            logger.info(f"[Worker] Prometheus metrics server started on 127.0.0.1:{METRICS_PORT}")
        except Exception as e:
            logger.warning(f"[Worker] Failed to start Prometheus metrics server: {e}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relay-outage",
        description="Outage probability of two-way fixed-gain AF relaying with beamforming, correlation and interference",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("sweep", "evaluate the configured grid and write a CSV"),
        ("validate", "compare closed forms against Monte Carlo on the configured grid"),
        ("user-outage", "user outage at the config's base point"),
        ("system-outage", "system outage at the config's base point"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="scenario config file (key = value)")
        p.add_argument("--out", help="output CSV path (required for sweep)")
        p.add_argument("--trials", type=int, help="Monte Carlo trials per point")
        p.add_argument("--seed", type=int, help="Monte Carlo seed")
        p.add_argument("--max-series-terms", type=int, dest="max_series_terms", help="system-outage series truncation")
        p.add_argument("--workers", type=int, default=OUTAGE_WORKERS, help="process pool size for grid points")
        p.add_argument("--corrupt-gain", type=float, default=1.0, dest="corrupt_gain", help=argparse.SUPPRESS)
    return parser


def _run(args: argparse.Namespace) -> int:
    overrides = {"trials": args.trials, "seed": args.seed, "max_series_terms": args.max_series_terms}
    config = load_config(args.config, overrides)
    if args.workers < 1:
        raise ValueError(f"--workers must be >= 1, got {args.workers}")

    if args.command == "sweep":
        if not args.out:
            raise ValueError("sweep needs --out")
        run_sweep(config, Path(args.out), workers=args.workers, gain_factor=args.corrupt_gain)
        return 0

    if args.command == "validate":
        table = run_validation(config, workers=args.workers, gain_factor=args.corrupt_gain)
        text = validation_csv(table)
        sys.stdout.write(text)
        if args.out:
            Path(args.out).write_text(text)
        failures = sum(1 for v in table if v.status == "FAIL")
        print(f"[VALIDATE] {len(table) - failures}/{len(table)} comparisons within tolerance", file=sys.stderr)
        return 1 if failures else 0

    if args.command == "user-outage":
        methods = [m for m in config.methods if m != "system"] or ["exact"]
    else:
        methods = ["system"] + (["mc"] if "mc" in config.methods else [])
    text = rows_to_csv(point_rows(config, methods, gain_factor=args.corrupt_gain))
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s %(message)s")
    args = build_parser().parse_args(argv)
    _init_observability()
    try:
        return _run(args)
    except (ValueError, OverflowError, RuntimeError) as e:
        logger.error(f"[Worker] {args.command} failed: {e.__class__.__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
