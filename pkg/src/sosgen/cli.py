"""Command-line entry point.

Subcommands: generate | corrupt | beamform | evaluate | sweep | report.
Configuration comes from a JSON document validated against the published
schema before any work starts; the SOSGEN_LOG environment variable sets
the log level.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import logging
import os
import sys
from pathlib import Path

import jsonschema

from . import pipeline

log = logging.getLogger("sosgen")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


class ConfigError(ValueError):
    pass


def load_schema() -> dict:
    text = importlib.resources.files("sosgen").joinpath("config_schema.json").read_text()
    return json.loads(text)


def load_config(path, overrides: dict | None = None) -> dict:
    try:
        config = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if overrides:
        config.update({k: v for k, v in overrides.items() if v is not None})
    try:
        jsonschema.validate(config, load_schema())
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config violates schema: {exc.message}") from exc
    return config


def fresh_dir(path) -> Path:
    """Outputs go to fresh paths: an existing non-empty directory is an error."""
    out = Path(path)
    if out.exists() and any(out.iterdir()):
        raise ConfigError(f"output directory {out} exists and is not empty")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_error_report(out_dir, message):
    try:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        report = Path(out_dir) / "error_report.json"
        report.write_text(json.dumps({"error": message}, indent=2))
    except OSError:
        pass


def cmd_generate(args) -> int:
    config = load_config(
        args.config,
        {"seed_base": args.seed, "scale": args.scale, "workers": args.workers},
    )
    workers = config.pop("workers", args.workers or 1)
    out = fresh_dir(args.out)
    manifest, errors = pipeline.run_generate(config, out, workers=workers)
    log.info("wrote %d samples to %s", len(manifest.samples), out)
    return EXIT_RUNTIME if errors else EXIT_OK


def cmd_corrupt(args) -> int:
    config = json.loads(Path(args.config).read_text())
    unknown = set(config) - {"corruption", "preprocess", "preproc"}
    if unknown:
        raise ConfigError(f"unknown corrupt-config keys: {sorted(unknown)}")
    out = fresh_dir(args.out)
    pipeline.run_corrupt(args.dataset, config, out)
    return EXIT_OK


def cmd_beamform(args) -> int:
    out = fresh_dir(args.out)
    written = pipeline.run_beamform(args.dataset, out, assumed_sos=args.sos)
    log.info("wrote %d b-mode images", len(written))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    out = fresh_dir(args.out)
    summary = pipeline.run_evaluate(args.gt, args.pred, out)
    log.info("evaluated %d samples", summary["n_samples"])
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = load_config(args.config, {"workers": args.workers})
    if "sweep" not in config:
        raise ConfigError("sweep command requires a 'sweep' section in the config")
    workers = config.pop("workers", args.workers or 1)
    out = fresh_dir(args.out)
    cases = pipeline.run_sweep(config, out, workers=workers)
    failed = sum(c["n_errors"] for c in cases)
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_report(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pipeline.run_report(args.eval, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sosgen",
        description="Plane-wave ultrasound SoS data factory and evaluation harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("generate", help="generate phantoms and simulate RF data")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override seed_base")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--scale", choices=["full", "paper", "desk2", "desk4", "desk8"])
    add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("corrupt", help="corrupt a raw dataset and re-preprocess")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", required=True)
    add_common(p)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("beamform", help="delay-and-sum reference images")
    p.add_argument("--dataset", required=True)
    p.add_argument("--sos", type=float, default=1540.0)
    add_common(p)
    p.set_defaults(func=cmd_beamform)

    p = sub.add_parser("evaluate", help="metrics of predictions against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="parameter sweep producing per-case datasets")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, default=None)
    add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="aggregate an evaluation CSV")
    p.add_argument("--eval", required=True)
    add_common(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("SOSGEN_LOG", "INFO").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except Exception as exc:
        log.error("%s", exc)
        if getattr(args, "out", None):
            _write_error_report(args.out, str(exc))
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
