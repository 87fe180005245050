"""Command-line entry point.

    gdpcast fetch|fit|forecast|plot|report --config PATH [--key value ...]

Any config key can be overridden with ``--key value`` (or ``--key=value``).
Exit codes: 0 success, 2 input error, 3 numerical or model failure,
4 network or remote-schema failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import pipeline
from .errors import InputError, ModelError, NetworkError, NumericalError

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_NETWORK = 0, 2, 3, 4

COMMANDS = {
    "fetch": "write the input CSV from the endpoint (or the bundled fixture when offline)",
    "fit": "fit Holt-Winters, SARIMA and the DLM on the training window",
    "forecast": "forecast the held-out window and score it",
    "plot": "write SVG charts from the fit and forecast outputs",
    "report": "print plain-text tables assembled from the CSV outputs",
}


def parse_overrides(extra: list) -> dict:
    """Turn ``['--horizon', '8', '--seed=3']`` into ``{'horizon': '8', 'seed': '3'}``."""
    out = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or len(tok) < 3:
            raise InputError(f"unexpected argument {tok!r}; overrides look like --key value")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise InputError(f"missing value for --{key}")
            value = extra[i + 1]
            i += 2
        out[key.replace("-", "_")] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gdpcast", description="Quarterly GDP forecasting with Holt-Winters, SARIMA "
        "and a Bayesian dynamic linear model.",
        epilog="Config keys: " + ", ".join(f.name for f in
                                           pipeline.fields(pipeline.RunConfig)))
    ap.add_argument("command", choices=list(COMMANDS),
                    help="; ".join(f"{k}: {v}" for k, v in COMMANDS.items()))
    ap.add_argument("--config", help="flat 'key = value' config file")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return ap


def run(command: str, cfg: pipeline.RunConfig) -> None:
    if command == "fetch":
        path = pipeline.run_fetch(cfg)
        print(f"wrote {path}")
    elif command == "fit":
        pipeline.run_fit(cfg)
        print(f"fit outputs in {cfg.out}")
    elif command == "forecast":
        pipeline.run_forecast(cfg)
        print(f"forecast outputs in {cfg.out}")
    elif command == "plot":
        for p in pipeline.run_plot(cfg):
            print(f"wrote {p}")
    else:
        print(pipeline.run_report(cfg), end="")


def main(argv=None) -> int:
    ap = build_parser()
    args, extra = ap.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = pipeline.load_config(args.config, parse_overrides(extra))
        run(args.command, cfg)
    except NetworkError as exc:
        print(f"gdpcast {args.command}: network error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except InputError as exc:
        print(f"gdpcast {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, ModelError) as exc:
        print(f"gdpcast {args.command}: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
