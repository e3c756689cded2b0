"""Run pricing methods over a config and reproduce the benchmark tables."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

from src.config import get_settings
from src.errors import PricingError
from src.harness.report import ComparisonRow, average_relative_errors
from src.harness.schema import ExperimentConfig, build_spec
from src.harness.tables import table_definition
from src.model.market_model import BasketSpec
from src.observability.logging import logger
from src.pricing.aea_pide import PideGridConfig, price_aea
from src.pricing.closed_form import (
    attach_implied_vol,
    price_first_order_cv,
    price_lb_exact,
    price_pea,
    price_upper_bound,
)
from src.pricing.expansion import QuadratureConfig
from src.pricing.lba_pricer import PoissonTruncation, price_lba
from src.pricing.mc_engine import McConfig, price_mc
from src.pricing.results import PricingResult


@dataclass(frozen=True)
class _RunContext:
    spec: BasketSpec
    T: float
    truncation: PoissonTruncation
    quadrature: QuadratureConfig
    mc: McConfig
    pide: PideGridConfig
    paper_literal_a0: bool
    sigma_c_mode: str


def _context(config: ExperimentConfig) -> _RunContext:
    spec = build_spec(config).checked()
    return _RunContext(
        spec=spec,
        T=config.maturity,
        truncation=PoissonTruncation(config.truncation),
        quadrature=QuadratureConfig(order=config.quadrature.order, panels=config.quadrature.panels),
        mc=McConfig(
            n_paths=config.mc.paths,
            n_steps=config.mc.steps_per_year,
            seed=config.mc.seed,
            use_control_variate=config.mc.control_variate,
            antithetic=config.mc.antithetic,
            block_size=config.mc.block_size,
            threads=get_settings().threads,
        ),
        pide=PideGridConfig(
            n_strikes=config.pide.strikes,
            steps_per_year=config.pide.steps_per_year,
            advection=config.pide.advection,
        ),
        paper_literal_a0=config.paper_literal_a0,
        sigma_c_mode=config.sigma_c_mode,
    )


_METHODS: Dict[str, Callable[[_RunContext, float], PricingResult]] = {
    "lba": lambda c, K: price_lba(c.spec, c.T, K, c.truncation, c.quadrature, c.paper_literal_a0),
    "lb": lambda c, K: price_lb_exact(c.spec, c.T, K, c.truncation),
    "ub": lambda c, K: price_upper_bound(c.spec, c.T, K, c.truncation),
    "pea": lambda c, K: price_pea(c.spec, c.T, K, c.truncation),
    "mc": lambda c, K: price_mc(c.spec, c.T, K, c.mc, c.quadrature).to_result(K, c.T),
    "aea": lambda c, K: price_aea(c.spec, c.T, K, c.pide, c.sigma_c_mode),
    "cv": lambda c, K: price_first_order_cv(c.spec, c.T, K, c.quadrature, c.truncation),
}


def run_price(config: ExperimentConfig) -> List[PricingResult]:
    """Price every (strike, method) pair of a config.

    A failing method yields a result with `error` set; the other methods
    still run.

    Raises:
        InvalidModelError: the basket violates a model invariant
    """
    context = _context(config)
    results = []
    for K in config.strikes():
        for method in config.methods:
            try:
                result = _METHODS[method](context, K)
            except PricingError as e:
                logger.error(
                    "Pricing method failed",
                    config=config.id,
                    method=method,
                    strike=K,
                    error=str(e),
                    error_type=type(e).__name__,
                )
                result = PricingResult(method=method, price=None, strike=K, maturity=config.maturity, error=str(e))
            results.append(attach_implied_vol(result, context.spec.basket_spot))
    return results


def comparison_rows(
    label: str,
    results: Sequence[PricingResult],
    published: Optional[Dict[str, float]] = None,
) -> List[ComparisonRow]:
    """One ComparisonRow per result, relative errors against the run's MC price.

    Without an engine MC price the published MC value is the reference.
    """
    published = published or {}
    mc = next((r.price for r in results if r.method == "mc" and r.ok), published.get("mc"))
    rows = []
    for r in results:
        rel_err = None
        if r.ok and r.method != "mc" and mc:
            rel_err = abs(r.price - mc) / mc
        rows.append(ComparisonRow(
            config=label,
            method=r.method,
            price=r.price,
            stderr=r.stderr,
            iv=r.implied_vol,
            rel_err=rel_err,
            paper=published.get(r.method),
            error=r.error,
        ))
    return rows


def price_rows(config: ExperimentConfig) -> List[ComparisonRow]:
    """run_price flattened to report rows, one label per strike."""
    results = run_price(config)
    rows = []
    for K in config.strikes():
        at_strike = [r for r in results if r.strike == K]
        label = config.id if len(config.strikes()) == 1 else f"{config.id} K={K:g}"
        rows.extend(comparison_rows(label, at_strike))
    return rows


@dataclass(frozen=True)
class TableReport:
    table_id: int
    rows: List[ComparisonRow]
    variant: Optional[str] = None
    averages: Dict[str, float] = field(default_factory=dict)
    published_averages: Dict[str, float] = field(default_factory=dict)


def reproduce_table(
    table_id: int,
    paths: Optional[int] = None,
    seed: Optional[int] = None,
    methods: Optional[Sequence[str]] = None,
    variant: Optional[str] = None,
) -> TableReport:
    """Recompute one benchmark table next to its published values."""
    definition = table_definition(table_id, variant)
    overrides = {}
    if methods is not None:
        overrides["methods"] = list(methods)
    mc_overrides = {k: v for k, v in (("paths", paths), ("seed", seed)) if v is not None}

    configs = []
    for row in definition.rows:
        config = row.config.model_copy(update=overrides)
        if mc_overrides:
            config = config.model_copy(update={"mc": config.mc.model_copy(update=mc_overrides)})
        configs.append(config)

    logger.info("Reproducing table", table=table_id, variant=variant, rows=len(configs), methods=list(configs[0].methods))
    with ThreadPoolExecutor(max_workers=get_settings().threads) as pool:
        results = list(pool.map(run_price, configs))

    rows: List[ComparisonRow] = []
    for row, row_results in zip(definition.rows, results):
        rows.extend(comparison_rows(row.label, row_results, row.published))
    averages = average_relative_errors(rows)
    logger.info("Table reproduced", table=table_id, averages=averages)
    return TableReport(
        table_id=table_id,
        rows=rows,
        variant=variant,
        averages=averages,
        published_averages=dict(definition.published_average),
    )
