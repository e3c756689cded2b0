"""Command line entry point: price, reproduce and validate.

    python -m src.cli price --config basket.json --methods lba,mc
    python -m src.cli reproduce --table 1 --format markdown
    python -m src.cli reproduce --table 3 --variant lambda1 --methods lba
    python -m src.cli validate --config basket.json

Reports go to stdout, JSON logs to stderr.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from src.errors import (
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    EXIT_OK,
    ConfigError,
    ConfigIssue,
    InvalidModelError,
    PricingError,
)
from src.harness.report import emit_report
from src.harness.runner import price_rows, reproduce_table
from src.harness.schema import ExperimentConfig, build_spec, parse_config
from src.harness.tables import table_definition
from src.model.market_model import validate_basket
from src.observability.logging import logger


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="basket-lba", description="Basket call pricing under local-vol jump-diffusions")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    sub = parser.add_subparsers(dest="command", required=True)

    price = sub.add_parser("price", help="price one experiment config")
    price.add_argument("--config", required=True, type=Path)
    price.add_argument("--strike", type=float)
    price.add_argument("--maturity", type=float)
    price.add_argument("--methods", help="comma separated subset of lba,lb,ub,pea,mc,aea,cv")
    price.add_argument("--seed", type=int)
    price.add_argument("--paths", type=int)
    price.add_argument("--format", choices=("csv", "markdown"))
    price.add_argument("--paper-literal-a0", action="store_true", help="use (K - lambda T) in a0(k)")
    price.add_argument("--literal-sigma-c", action="store_true", help="sigma_c^2 = (sum w)(sum C)")

    reproduce = sub.add_parser("reproduce", help="recompute a benchmark table")
    reproduce.add_argument("--table", required=True, type=int, choices=(1, 2, 3, 4))
    reproduce.add_argument("--paths", type=int)
    reproduce.add_argument("--seed", type=int)
    reproduce.add_argument("--methods", help="comma separated subset of the table's methods")
    reproduce.add_argument("--variant", help="rerun with changed data: sigma_half (1), paper_compat (2), lambda0 or lambda1 (3)")
    reproduce.add_argument("--format", choices=("csv", "markdown"), default="csv")

    validate = sub.add_parser("validate", help="check a config and its model invariants")
    validate.add_argument("--config", required=True, type=Path)
    return parser


def _methods(value: Optional[str]) -> Optional[List[str]]:
    return [m.strip() for m in value.split(",") if m.strip()] if value else None


def _load(path: Path) -> ExperimentConfig:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError([ConfigIssue(path=str(path), message=f"cannot read file: {e.strerror}")]) from e
    return parse_config(text)


def _apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    payload = config.model_dump()
    if args.strike is not None:
        payload["strike"] = args.strike
        payload["moneyness"] = None
    if args.maturity is not None:
        payload["maturity"] = args.maturity
    if args.methods:
        payload["methods"] = _methods(args.methods)
    if args.seed is not None:
        payload["mc"]["seed"] = args.seed
    if args.paths is not None:
        payload["mc"]["paths"] = args.paths
    if args.format:
        payload["output_format"] = args.format
    if args.paper_literal_a0:
        payload["paper_literal_a0"] = True
    if args.literal_sigma_c:
        payload["sigma_c_mode"] = "paper_literal"
    return parse_config(json.dumps(payload))


def _cmd_price(args: argparse.Namespace) -> int:
    config = _apply_overrides(_load(args.config), args)
    rows = price_rows(config)
    sys.stdout.write(emit_report(rows, config.output_format))
    return EXIT_NUMERICAL if any(row.error for row in rows) else EXIT_OK


def _cmd_reproduce(args: argparse.Namespace) -> int:
    try:
        table_definition(args.table, args.variant)
    except KeyError as e:
        raise ConfigError([ConfigIssue(path="--variant", message=str(e.args[0]))]) from e
    report = reproduce_table(
        args.table, paths=args.paths, seed=args.seed, methods=_methods(args.methods), variant=args.variant
    )
    sys.stdout.write(emit_report(report.rows, args.format))
    return EXIT_NUMERICAL if any(row.error for row in report.rows) else EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    config = _load(args.config)
    report = validate_basket(build_spec(config))
    if not report.ok:
        for violation in report.violations:
            sys.stdout.write(f"invalid: {violation}\n")
        return EXIT_CONFIG
    sys.stdout.write(f"ok: {len(config.assets)} assets, methods {','.join(config.methods)}\n")
    return EXIT_OK


_COMMANDS = {"price": _cmd_price, "reproduce": _cmd_reproduce, "validate": _cmd_validate}


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = _build_parser().parse_args(argv)
    if args.log_level:
        logger.set_level(args.log_level)

    try:
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error("Invalid config", error=str(e), error_type=type(e).__name__)
        for issue in e.issues:
            sys.stderr.write(f"config error: {issue}\n")
        return EXIT_CONFIG
    except InvalidModelError as e:
        logger.error("Invalid model", error=str(e), error_type=type(e).__name__)
        sys.stderr.write(f"model error: {e}\n")
        return EXIT_CONFIG
    except PricingError as e:
        logger.error("Numerical failure", error=str(e), error_type=type(e).__name__)
        sys.stderr.write(f"numerical error: {e}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
