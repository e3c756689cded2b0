"""Result records returned by every pricer."""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional


@dataclass(frozen=True)
class PricingResult:
    """One price from one method.

    stderr is only set for Monte Carlo; error is set instead of price when a
    method failed inside a batch run.
    """

    method: str
    price: Optional[float]
    strike: float
    maturity: float
    stderr: Optional[float] = None
    implied_vol: Optional[float] = None
    error: Optional[str] = None
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.error is None and self.price is not None

    def with_implied_vol(self, implied_vol: Optional[float]) -> "PricingResult":
        return PricingResult(
            method=self.method,
            price=self.price,
            strike=self.strike,
            maturity=self.maturity,
            stderr=self.stderr,
            implied_vol=implied_vol,
            error=self.error,
            details=dict(self.details),
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimate; plain_* are the figures without the control variate."""

    price: float
    stderr: float
    n_paths: int
    cv_beta: Optional[float] = None
    plain_price: Optional[float] = None
    plain_stderr: Optional[float] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def to_result(self, strike: float, maturity: float) -> PricingResult:
        details = dict(self.details)
        details.update(
            n_paths=self.n_paths,
            cv_beta=self.cv_beta,
            plain_price=self.plain_price,
            plain_stderr=self.plain_stderr,
        )
        return PricingResult(
            method="mc",
            price=self.price,
            strike=strike,
            maturity=maturity,
            stderr=self.stderr,
            details=details,
        )
