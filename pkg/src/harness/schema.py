"""JSON experiment configuration: schema, parsing with line positions, model building."""

import json
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.errors import ConfigError, ConfigIssue
from src.model.market_model import BasketSpec, JumpDiffusionAsset
from src.model.volatility import CEV, BlackScholes, LocalVolatility, TabulatedVolatility

SCHEMA_VERSION = 1

Method = Literal["lba", "lb", "ub", "pea", "mc", "aea", "cv"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class BlackScholesVol(_Strict):
    model: Literal["black_scholes"] = "black_scholes"
    sigma: float = Field(ge=0)

    def build(self) -> LocalVolatility:
        return BlackScholes(self.sigma)


class CevVol(_Strict):
    model: Literal["cev"] = "cev"
    alpha: float = Field(ge=0)
    beta: float = Field(gt=0, le=1)

    def build(self) -> LocalVolatility:
        return CEV(alpha=self.alpha, beta=self.beta)


BaseVol = Annotated[Union[BlackScholesVol, CevVol], Field(discriminator="model")]


class TabulatedVol(_Strict):
    model: Literal["tabulated"] = "tabulated"
    base: BaseVol
    times: List[float] = Field(min_length=1)
    levels: List[float] = Field(min_length=1)

    def build(self) -> LocalVolatility:
        return TabulatedVolatility(self.base.build(), tuple(self.times), tuple(self.levels))


VolConfig = Annotated[Union[BlackScholesVol, CevVol, TabulatedVol], Field(discriminator="model")]


class AssetConfig(_Strict):
    initial_price: float = Field(gt=0)
    jump_size: float = Field(ge=-1)
    vol: VolConfig


class McSettings(_Strict):
    paths: int = Field(default=100_000, ge=2)
    steps_per_year: int = Field(default=200, ge=1)
    seed: int = 42
    antithetic: bool = False
    control_variate: bool = True
    block_size: int = Field(default=4096, ge=2)


class PideSettings(_Strict):
    strikes: int = Field(default=400, ge=10)
    steps_per_year: int = Field(default=400, ge=1)
    advection: Literal["central", "hybrid"] = "central"


class QuadratureSettings(_Strict):
    order: int = Field(default=8, ge=1)
    panels: int = Field(default=8, ge=1)


class ExperimentConfig(_Strict):
    """One basket, one maturity, one or more strikes, a list of methods."""

    schema_version: Literal[1] = SCHEMA_VERSION
    id: str = "experiment"
    assets: List[AssetConfig] = Field(min_length=1)
    weights: List[float]
    correlation: Union[float, List[List[float]]]
    intensity: float = Field(ge=0)
    maturity: float = Field(gt=0)
    strike: Optional[float] = Field(default=None, ge=0)
    moneyness: Optional[List[float]] = None
    methods: List[Method] = Field(default_factory=lambda: ["lba"], min_length=1)
    truncation: Literal["paper_compat", "adaptive"] = "adaptive"
    mc: McSettings = Field(default_factory=McSettings)
    pide: PideSettings = Field(default_factory=PideSettings)
    quadrature: QuadratureSettings = Field(default_factory=QuadratureSettings)
    paper_literal_a0: bool = False
    sigma_c_mode: Literal["weighted", "paper_literal"] = "weighted"
    output_format: Literal["csv", "markdown"] = "csv"

    @model_validator(mode="after")
    def _check_shapes(self) -> "ExperimentConfig":
        n = len(self.assets)
        if len(self.weights) != n:
            raise ValueError(f"weights: expected {n} entries, got {len(self.weights)}")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights: must be nonnegative")
        if isinstance(self.correlation, list):
            if len(self.correlation) != n or any(len(row) != n for row in self.correlation):
                raise ValueError(f"correlation: expected a {n}x{n} matrix")
        if self.strike is not None and self.moneyness is not None:
            raise ValueError("give either strike or moneyness, not both")
        if self.moneyness is not None and (not self.moneyness or any(m <= 0 for m in self.moneyness)):
            raise ValueError("moneyness: needs positive percentages")
        if "aea" in self.methods:
            sizes = {asset.jump_size for asset in self.assets}
            if len(sizes) > 1:
                raise ValueError("method aea needs the same jump size for every asset")
        return self

    @property
    def basket_spot(self) -> float:
        return float(sum(w * a.initial_price for w, a in zip(self.weights, self.assets)))

    def strikes(self) -> List[float]:
        """Strikes to price; moneyness is K / S(0) in percent, default at the money."""
        if self.moneyness is not None:
            return [m / 100.0 * self.basket_spot for m in self.moneyness]
        if self.strike is not None:
            return [self.strike]
        return [self.basket_spot]


def _line_of(text: str, loc) -> Optional[int]:
    """Best-effort line of the deepest named key in loc."""
    for part in reversed([p for p in loc if isinstance(p, str)]):
        idx = text.find(f'"{part}"')
        if idx >= 0:
            return text.count("\n", 0, idx) + 1
    return None


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment config.

    Raises:
        ConfigError: malformed JSON or schema violations, with line numbers
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError([ConfigIssue(path="$", message=f"{e.msg} (column {e.colno})", line=e.lineno)]) from e

    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        issues = []
        for err in e.errors():
            loc = err.get("loc", ())
            path = ".".join(str(p) for p in loc) or "$"
            message = err.get("msg", "invalid")
            if err.get("type") == "missing":
                message = f"missing field '{loc[-1]}'" if loc else "missing field"
            line = _line_of(text, loc) if err.get("type") != "missing" else _line_of(text, loc[:-1])
            issues.append(ConfigIssue(path=path, message=message, line=line))
        raise ConfigError(issues) from e


def to_json(config: ExperimentConfig) -> str:
    return config.model_dump_json(indent=2)


def build_spec(config: ExperimentConfig) -> BasketSpec:
    """BasketSpec of a config; model invariants are checked by the caller."""
    assets = tuple(
        JumpDiffusionAsset(initial_price=a.initial_price, jump_size=a.jump_size, vol=a.vol.build())
        for a in config.assets
    )
    return BasketSpec(
        assets=assets,
        weights=np.array(config.weights, dtype=float),
        correlation=np.array(config.correlation, dtype=float),
        intensity=config.intensity,
    )
