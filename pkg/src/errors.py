"""Exception hierarchy shared by the pricers, the harness and the CLI."""

from dataclasses import dataclass
from typing import List, Optional

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class PricingError(Exception):
    """Root of every error raised by the engine."""


class InvalidModelError(PricingError, ValueError):
    """Model inputs violate an invariant (see validate_basket)."""


class DegenerateVolatilityError(PricingError):
    """The Gaussian conditioning variable has (numerically) zero variance."""


class UnsupportedModelError(PricingError):
    """The requested method does not cover this model (e.g. non lognormal vols)."""


class QuadratureError(PricingError):
    """A quadrature did not reach its tolerance."""


class DecompositionError(PricingError):
    """Correlation matrix has no Cholesky factor, even after jitter."""


class GridInstabilityError(PricingError):
    """The PIDE solution blew up between two time layers."""


class ArbitrageBoundsError(PricingError, ValueError):
    """Price outside the Black-Scholes no-arbitrage interval."""


@dataclass(frozen=True)
class ConfigIssue:
    path: str
    message: str
    line: Optional[int] = None

    def __str__(self) -> str:
        where = f"line {self.line}: " if self.line is not None else ""
        return f"{where}{self.path}: {self.message}"


class ConfigError(PricingError):
    """Experiment config failed to parse or validate."""

    def __init__(self, issues: List[ConfigIssue]):
        self.issues = list(issues)
        super().__init__("; ".join(str(issue) for issue in self.issues))
