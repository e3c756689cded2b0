"""Built-in benchmark tables: configurations and published reference prices.

Every table uses four assets with S_i(0) = 100, w_i = 0.25 and a flat
Brownian correlation. Reference values are the published prices (MC with
its standard error and the approximations) rounded to cents.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from src.harness.schema import ExperimentConfig

N_ASSETS = 4
SPOT = 100.0
WEIGHT = 0.25


@dataclass(frozen=True)
class TableRow:
    label: str
    config: ExperimentConfig
    published: Dict[str, float] = field(default_factory=dict)
    published_stderr: Optional[float] = None


@dataclass(frozen=True)
class TableDefinition:
    table_id: int
    title: str
    methods: Sequence[str]
    rows: List[TableRow]
    published_average: Dict[str, float]


def _config(
    label: str,
    jump_sizes: Sequence[float],
    vol: dict,
    correlation: float,
    intensity: float,
    maturity: float,
    methods: Sequence[str],
    truncation: str,
    moneyness: Optional[List[float]] = None,
) -> ExperimentConfig:
    payload = {
        "id": label,
        "assets": [{"initial_price": SPOT, "jump_size": h, "vol": dict(vol)} for h in jump_sizes],
        "weights": [WEIGHT] * N_ASSETS,
        "correlation": correlation,
        "intensity": intensity,
        "maturity": maturity,
        "methods": list(methods),
        "truncation": truncation,
    }
    if moneyness is None:
        payload["strike"] = SPOT
    else:
        payload["moneyness"] = moneyness
    return ExperimentConfig.model_validate(payload)


# (intensity, log jump eta, maturity): mc, pea, aea, lba
_TABLE1 = [
    (0.3, -0.25, 1, 7.35, 7.35, 7.35, 7.37),
    (0.3, -0.25, 3, 12.93, 12.92, 12.85, 12.86),
    (0.3, -0.125, 1, 6.08, 6.08, 6.07, 6.09),
    (0.3, -0.125, 3, 10.57, 10.56, 10.49, 10.57),
    (0.3, -0.0625, 1, 5.66, 5.66, 5.65, 5.67),
    (0.3, -0.0625, 3, 9.83, 9.82, 9.74, 9.86),
    (1.0, -0.25, 1, 10.78, 10.77, 10.78, 10.82),
    (1.0, -0.25, 3, 18.64, 18.63, 18.57, 18.91),
    (1.0, -0.125, 1, 7.28, 7.28, 7.28, 7.31),
    (1.0, -0.125, 3, 12.65, 12.64, 12.58, 12.68),
    (1.0, -0.0625, 1, 6.02, 6.02, 6.01, 6.03),
    (1.0, -0.0625, 3, 10.45, 10.43, 10.37, 10.47),
]

# maturity, moneyness %: mc, mc stderr, lba
_TABLE2 = [
    (0.5, 70, 32.31, 0.01, 32.83),
    (0.5, 90, 19.06, 0.02, 19.60),
    (0.5, 100, 14.26, 0.03, 14.68),
    (0.5, 110, 10.57, 0.01, 10.80),
    (0.5, 130, 5.63, 0.01, 5.57),
    (2.0, 70, 37.11, 0.07, 36.57),
    (2.0, 90, 29.88, 0.10, 28.99),
    (2.0, 100, 27.02, 0.07, 25.76),
    (2.0, 110, 24.53, 0.08, 22.85),
    (2.0, 130, 20.44, 0.09, 17.87),
]

# maturity, alpha, beta: mc, mc stderr, aea, lba
_TABLE3 = [
    (1, 0.2, 1.0, 7.35, 0.01, 7.35, 7.37),
    (1, 0.5, 1.0, 14.71, 0.01, 14.42, 14.87),
    (1, 0.2, 0.8, 5.31, 0.01, 5.33, 5.31),
    (1, 0.5, 0.8, 7.33, 0.01, 7.33, 7.34),
    (1, 0.2, 0.5, 5.09, 0.01, 5.09, 5.08),
    (1, 0.5, 0.5, 5.11, 0.01, 5.12, 5.11),
    (3, 0.2, 1.0, 12.93, 0.01, 12.85, 12.86),
    (3, 0.5, 1.0, 25.69, 0.04, 24.14, 26.16),
    (3, 0.2, 0.8, 9.61, 0.01, 9.64, 9.63),
    (3, 0.5, 0.8, 12.86, 0.01, 12.86, 12.81),
    (3, 0.2, 0.5, 8.96, 0.01, 8.98, 8.91),
    (3, 0.5, 0.5, 9.18, 0.01, 9.21, 9.18),
]

# maturity, alpha, beta: mc, mc stderr, lba
_TABLE4 = [
    (1, 0.2, 1.0, 5.53, 0.01, 5.52),
    (1, 0.5, 1.0, 13.87, 0.01, 13.95),
    (1, 0.2, 0.8, 2.22, 0.01, 2.22),
    (1, 0.5, 0.8, 5.50, 0.01, 5.49),
    (1, 0.2, 0.5, 0.63, 0.01, 0.63),
    (1, 0.5, 0.5, 1.42, 0.01, 1.42),
    (3, 0.2, 1.0, 9.68, 0.02, 9.66),
    (3, 0.5, 1.0, 24.42, 0.06, 24.84),
    (3, 0.2, 0.8, 3.95, 0.01, 3.94),
    (3, 0.5, 0.8, 9.57, 0.02, 9.59),
    (3, 0.2, 0.5, 1.37, 0.01, 1.37),
    (3, 0.5, 0.5, 2.59, 0.01, 2.59),
]


def _cev(alpha: float, beta: float) -> dict:
    if beta == 1.0:
        return {"model": "black_scholes", "sigma": alpha}
    return {"model": "cev", "alpha": alpha, "beta": beta}


def _table1(variant: Optional[str] = None) -> TableDefinition:
    methods = ("mc", "pea", "aea", "lba")
    sigma = 0.5 if variant == "sigma_half" else 0.2
    rows = []
    for lam, eta, T, mc, pea, aea, lba in _TABLE1:
        label = f"lam={lam:g} eta={eta:g} T={T:g}"
        h = math.exp(eta) - 1.0
        config = _config(label, [h] * N_ASSETS, _cev(sigma, 1.0), 0.3, lam, T, methods, "paper_compat")
        if variant == "sigma_half":
            # only the average errors are published for this run
            rows.append(TableRow(label, config))
        else:
            rows.append(TableRow(label, config, {"mc": mc, "pea": pea, "aea": aea, "lba": lba}, 0.01))
    if variant == "sigma_half":
        return TableDefinition(1, "Black-Scholes 50% vols, common jump size", methods, rows, {"pea": 0.6, "aea": 4.0, "lba": 1.7})
    return TableDefinition(1, "Black-Scholes vols, common jump size", methods, rows, {"pea": 0.1, "aea": 0.4, "lba": 0.4})


def _table2(variant: Optional[str] = None) -> TableDefinition:
    methods = ("mc", "lba")
    truncation = "paper_compat" if variant == "paper_compat" else "adaptive"
    rows = []
    for T, moneyness, mc, stderr, lba in _TABLE2:
        label = f"T={T:g} K/S={moneyness}%"
        config = _config(
            label, [0.0, 0.1, 0.3, -0.5], _cev(0.5, 1.0), 0.9, 4.0, T, methods, truncation,
            moneyness=[float(moneyness)],
        )
        rows.append(TableRow(label, config, {"mc": mc, "lba": lba}, stderr))
    return TableDefinition(2, "High intensity, heterogeneous jumps, moneyness sweep", methods, rows, {"lba": 3.9})


def _table3(variant: Optional[str] = None) -> TableDefinition:
    methods = ("mc", "aea", "lba")
    h = math.exp(-0.25) - 1.0
    intensity = {None: 0.3, "lambda0": 0.0, "lambda1": 1.0}[variant]
    rows = []
    for T, alpha, beta, mc, stderr, aea, lba in _TABLE3:
        label = f"T={T:g} alpha={alpha:g} beta={beta:g}"
        config = _config(label, [h] * N_ASSETS, _cev(alpha, beta), 0.3, intensity, T, methods, "paper_compat")
        if variant is None:
            rows.append(TableRow(label, config, {"mc": mc, "aea": aea, "lba": lba}, stderr))
        else:
            rows.append(TableRow(label, config))
    if variant is None:
        return TableDefinition(3, "CEV vols, common jump size", methods, rows, {"aea": 0.7, "lba": 0.4})
    return TableDefinition(3, f"CEV vols, common jump size, lambda={intensity:g}", methods, rows, {})


def _table4(variant: Optional[str] = None) -> TableDefinition:
    methods = ("mc", "lba")
    rows = []
    for T, alpha, beta, mc, stderr, lba in _TABLE4:
        label = f"T={T:g} alpha={alpha:g} beta={beta:g}"
        config = _config(label, [0.0, 0.3, -0.3, 0.0], _cev(alpha, beta), 0.3, 0.3, T, methods, "paper_compat")
        rows.append(TableRow(label, config, {"mc": mc, "lba": lba}, stderr))
    return TableDefinition(4, "CEV vols, heterogeneous jumps", methods, rows, {"lba": 0.3})


_BUILDERS = {1: _table1, 2: _table2, 3: _table3, 4: _table4}

VARIANTS: Dict[int, Tuple[str, ...]] = {
    1: ("sigma_half",),
    2: ("paper_compat",),
    3: ("lambda0", "lambda1"),
    4: (),
}


def table_definition(table_id: int, variant: Optional[str] = None) -> TableDefinition:
    """Rows of one benchmark table, optionally a rerun with changed data.

    Variants: table 1 "sigma_half" (50% vols), table 2 "paper_compat"
    (k = 0..9 instead of adaptive truncation), table 3 "lambda0" and
    "lambda1" (other jump intensities).
    """
    if table_id not in _BUILDERS:
        raise KeyError(f"unknown table {table_id}; choose from {sorted(_BUILDERS)}")
    if variant is not None and variant not in VARIANTS[table_id]:
        raise KeyError(f"table {table_id} has no variant {variant!r}; choose from {list(VARIANTS[table_id])}")
    return _BUILDERS[table_id](variant)
