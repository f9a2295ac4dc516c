"""Command-line entry point: ``demand-backcast <subcommand> [options]``.

Exit codes: 0 success, 1 configuration or usage error, 2 data error,
3 numerical failure (divergence or a failed gradient check).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import RunConfig, build_config
from .errors import BackcastError, ConfigError, DataError, NumericalError

log = logging.getLogger("demand_backcast")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
SUBCOMMANDS = ("ingest", "synth", "train", "backcast", "evaluate", "report", "gradcheck")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; usage problems here are exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON or TOML run configuration")
    common.add_argument("--seed", type=int, help="seed for every stochastic step")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (dotted, repeatable)")
    common.add_argument("--out", type=Path, help="output directory")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--quiet", "-q", action="store_true", help="only log errors")
    verbosity.add_argument("-v", "--verbose", action="count", default=0, help="more logging")

    parser = _Parser(prog="demand-backcast", description="Back-forecast hourly electricity demand from temperature.")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(SUBCOMMANDS) + "}", parser_class=_Parser)
    sub.required = True
    helps = {
        "ingest": "parse and join the input CSVs, write the joined series and gap index",
        "synth": "generate a synthetic scenario (config file is the scenario JSON)",
        "train": "fit the configured models and save artifacts",
        "backcast": "train, back-forecast the historical span, evaluate and report",
        "evaluate": "score saved models on the hold-out partition",
        "report": "back-forecast and report with saved models",
        "gradcheck": "finite-difference check of the LSTM gradients",
    }
    subs = {name: sub.add_parser(name, parents=[common], help=h) for name, h in helps.items()}
    subs["gradcheck"].add_argument("--tolerance", type=float, default=1e-4)
    subs["synth"].add_argument("--temperature-unit", choices=("Kelvin", "Celsius"), default="Kelvin")
    for name in ("evaluate", "report"):
        subs[name].add_argument("--models", type=Path, help="model artifact directory (default OUT/models)")
    return parser


def _setup_logging(args) -> None:
    level = logging.ERROR if args.quiet else (logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _config(args) -> RunConfig:
    return build_config(args.config, args.overrides, args.seed, args.out)


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_ingest(args) -> int:
    from .ingest import write_gap_index, write_joined_csv
    from .pipeline import load_series

    cfg = _config(args)
    series = load_series(cfg)
    out = _outdir(cfg)
    write_joined_csv(series, out / "joined.csv")
    write_gap_index(series, out / "gaps.json")
    log.info("joined %d hours, %d gaps", len(series), len(series.gaps()))
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synth import SynthScenario, generate, write_scenario_csvs

    scenario = SynthScenario.from_json(args.config) if args.config else SynthScenario()
    result = generate(scenario, args.seed or 0)
    out = Path(args.out or "synth")
    write_scenario_csvs(result, out, args.temperature_unit)
    log.info("wrote %d synthetic hours to %s", len(result.series), out)
    return EXIT_OK


def cmd_train(args) -> int:
    from .pipeline import fit_models, prepare, save_models

    cfg = _config(args)
    prep = prepare(cfg)
    models, traces = fit_models(prep, cfg)
    out = _outdir(cfg)
    save_models(models, out / "models")
    if traces:
        (out / "traces").mkdir(exist_ok=True)
        for key, trace in traces.items():
            trace.to_csv(out / "traces" / (key.replace("/", "_") + ".csv"))
    return EXIT_OK


def cmd_backcast(args) -> int:
    from .pipeline import run_backcast
    from .report import emit_report

    cfg = _config(args)
    result = run_backcast(cfg)
    emit_report(result, _outdir(cfg), figures=cfg.figures)
    return EXIT_OK


def _saved(args, cfg):
    from .pipeline import load_models, prepare

    models = load_models(args.models or Path(cfg.output_dir) / "models")
    return prepare(cfg), models


def cmd_evaluate(args) -> int:
    from .pipeline import evaluate_holdout
    from .report import _write_csv

    cfg = _config(args)
    prep, models = _saved(args, cfg)
    holdout, metrics, _ = evaluate_holdout(models, prep, cfg)
    out = _outdir(cfg)
    _write_csv(holdout, out / "holdout_predictions.csv")
    doc = {k: v.to_dict() for k, v in metrics.items()}
    (out / "metrics.json").write_text(json.dumps({"metrics": doc}, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_report(args) -> int:
    from .pipeline import BackcastResult, backcast_predictions, evaluate_holdout
    from .report import emit_report

    cfg = _config(args)
    prep, models = _saved(args, cfg)
    holdout, metrics, clamped_hold = evaluate_holdout(models, prep, cfg)
    preds, clamped = backcast_predictions(models, prep, cfg)
    clamped.update({f"{k}/holdout": n for k, n in clamped_hold.items()})
    result = BackcastResult(preds, holdout, metrics, models, {}, clamped, prep.dropped, cfg)
    emit_report(result, _outdir(cfg), figures=cfg.figures)
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    from .neural import grad_check

    report = grad_check(seed=args.seed or 0, tolerance=args.tolerance)
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_NUMERIC


COMMANDS = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "train": cmd_train,
    "backcast": cmd_backcast,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
    "gradcheck": cmd_gradcheck,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _setup_logging(args)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        log.error("input not found: %s", exc.filename or exc)
        return EXIT_DATA
    except DataError as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except BackcastError as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
