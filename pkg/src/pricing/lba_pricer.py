"""Lower bound approximation: a Poisson mixture of E[(c x^2 + a1 x + a0)^+]."""

import math
from dataclasses import dataclass
from typing import List, Literal, Tuple

import numpy as np
from scipy import special, stats

from src.model.market_model import BasketSpec
from src.observability.logging import logger
from src.pricing.expansion import (
    QuadratureConfig,
    expansion_coefficients,
    lba_quadratic,
)
from src.pricing.results import PricingResult
from src.pricing.special import norm_cdf, norm_pdf

PAPER_COMPAT_TERMS = 10
ADAPTIVE_TAIL = 1e-12
TAIL_WARNING = 1e-6


def _interval(c: float, a1: float, a0: float, lo: float, hi: float) -> float:
    """int_lo^hi (c x^2 + a1 x + a0) phi(x) dx; lo/hi may be infinite."""
    cdf = float(norm_cdf(hi) - norm_cdf(lo))
    pdf_lo = float(norm_pdf(lo))
    pdf_hi = float(norm_pdf(hi))
    x_pdf_lo = 0.0 if np.isinf(lo) else lo * pdf_lo
    x_pdf_hi = 0.0 if np.isinf(hi) else hi * pdf_hi
    return c * (cdf - (x_pdf_hi - x_pdf_lo)) + a1 * (pdf_lo - pdf_hi) + a0 * cdf


def positive_part_quadratic_expectation(c: float, a1: float, a0: float) -> float:
    """E[(c x^2 + a1 x + a0)^+] for x ~ N(0, 1), in closed form."""
    if abs(c) < 1e-14 * (1.0 + abs(a0) + abs(a1)):
        if a1 == 0.0:
            return max(a0, 0.0)
        root = -a0 / a1
        if a1 > 0:
            return _interval(0.0, a1, a0, root, np.inf)
        return _interval(0.0, a1, a0, -np.inf, root)

    disc = a1 * a1 - 4.0 * c * a0
    if disc <= 0.0:
        return c + a0 if c > 0 else 0.0

    sign = 1.0 if a1 >= 0 else -1.0
    q = -0.5 * (a1 + sign * math.sqrt(disc))
    r1, r2 = sorted((q / c, a0 / q))
    inner = _interval(c, a1, a0, r1, r2)
    if c > 0:
        return max((c + a0) - inner, 0.0)
    return max(inner, 0.0)


def poisson_pmf(lam: float, T: float, k: int) -> float:
    """exp(-lam T) (lam T)^k / k!, evaluated in log space."""
    mean = lam * T
    if mean < 0 or k < 0:
        raise ValueError("poisson_pmf needs lam*T >= 0 and k >= 0")
    if mean == 0.0:
        return 1.0 if k == 0 else 0.0
    return float(np.exp(-mean + k * np.log(mean) - special.gammaln(k + 1)))


@dataclass(frozen=True)
class PoissonTruncation:
    """Which jump counts k enter the mixture.

    paper_compat keeps k = 0..9; adaptive keeps terms until the tail mass
    drops below 1e-12.
    """

    mode: Literal["paper_compat", "adaptive"] = "adaptive"

    def resolve(self, lam: float, T: float) -> Tuple[int, float]:
        """Return (k_max, tail mass beyond k_max)."""
        mean = lam * T
        if mean == 0.0:
            return 0, 0.0
        if self.mode == "paper_compat":
            k_max = PAPER_COMPAT_TERMS - 1
        else:
            cap = int(math.ceil(mean + 12.0 * math.sqrt(mean + 1.0) + 20.0))
            k_max = 0
            while k_max < cap and stats.poisson.sf(k_max, mean) >= ADAPTIVE_TAIL:
                k_max += 1
        return k_max, float(stats.poisson.sf(k_max, mean))

    def terms(self, lam: float, T: float) -> List[Tuple[int, float]]:
        k_max, _ = self.resolve(lam, T)
        return [(k, poisson_pmf(lam, T, k)) for k in range(k_max + 1)]


def price_lba(
    spec: BasketSpec,
    T: float,
    K: float,
    truncation: PoissonTruncation = PoissonTruncation(),
    quadrature: QuadratureConfig = QuadratureConfig(),
    paper_literal_a0: bool = False,
) -> PricingResult:
    """Lower bound approximation of E[(S(T) - K)^+].

    Raises:
        DegenerateVolatilityError: the Gaussian driver has no variance
    """
    if T <= 0:
        raise ValueError(f"maturity must be > 0, got {T}")
    if K < 0:
        raise ValueError(f"strike must be >= 0, got {K}")

    coeffs = expansion_coefficients(spec, T, quadrature)
    k_max, tail = truncation.resolve(spec.intensity, T)
    if truncation.mode == "paper_compat" and tail > TAIL_WARNING:
        logger.warning(
            "Poisson truncation leaves tail mass",
            tail_mass=tail,
            k_max=k_max,
            intensity_times_maturity=spec.intensity * T,
        )

    slices = [
        p * positive_part_quadratic_expectation(q.c, q.a1, q.a0)
        for p, q in (
            (poisson_pmf(spec.intensity, T, k), lba_quadratic(coeffs, spec, T, K, k, paper_literal_a0))
            for k in range(k_max + 1)
        )
    ]
    price = math.fsum(slices)

    logger.info(
        "LBA price computed",
        price=price,
        strike=K,
        maturity=T,
        k_max=k_max,
        tail_mass=tail,
        truncation=truncation.mode,
        integrals=coeffs.integrals.method,
    )
    return PricingResult(
        method="lba",
        price=price,
        strike=K,
        maturity=T,
        details={
            "v2": coeffs.v2,
            "c": coeffs.c,
            "k_max": k_max,
            "tail_mass": tail,
            "truncation": truncation.mode,
            "paper_literal_a0": paper_literal_a0,
        },
    )
