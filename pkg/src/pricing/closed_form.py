"""Black-Scholes vols with jumps: exact conditional bounds, PEA and the BS toolkit.

With sigma_i(t, S) = sigma_hat_i * S every weighted asset price is

    w_i S_i(T) = a_i exp(sigma_hat_i W_i(T)) (1 + h_i)^N(T),

so conditioning on N(T) = k and the Gaussian projection y of
sum_i a_i sigma_hat_i W_i(T) gives closed-form conditional moments.
"""

import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import integrate, optimize

from src.errors import ArbitrageBoundsError, QuadratureError, UnsupportedModelError
from src.model.market_model import BasketSpec
from src.observability.logging import logger
from src.pricing.expansion import QuadratureConfig, expansion_coefficients
from src.pricing.lba_pricer import PoissonTruncation
from src.pricing.results import PricingResult
from src.pricing.special import norm_cdf, norm_pdf

ROOT_BRACKET_LIMIT = 40.0
PEA_WEIGHTS = (1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0)
PEA_NODES = (-math.sqrt(3.0), 0.0, math.sqrt(3.0))


@dataclass(frozen=True)
class JumpLognormalParams:
    """a_i, R_i, sigma_b, m and c_const for one set of (surviving) assets.

    Entries of defaulted assets keep their index with a_i = 0 in the
    survivor parameters.
    """

    a: np.ndarray
    sigma: np.ndarray
    growth: np.ndarray
    correlation: np.ndarray
    maturity: float
    strike: float
    R: np.ndarray
    sigma_b: float
    m: float
    c_const: float
    partition: Optional["DefaultablePartition"] = None

    def for_count(self, k: int) -> "JumpLognormalParams":
        """Parameters of the slice N(T) = k."""
        if k == 0 or self.partition is None:
            return self
        return self.partition.survivors

    def threshold(self, k: int) -> float:
        """d_k such that c_const + m k + sigma_b y >= K for y >= d_k."""
        p = self.for_count(k)
        mk = 0.0 if k == 0 else p.m * k
        gap = self.strike - p.c_const - mk
        if p.sigma_b == 0.0:
            return -np.inf if gap <= 0 else np.inf
        return gap / p.sigma_b

    def scaled(self, k: int) -> np.ndarray:
        """a_i (1 + h_i)^k for the slice N(T) = k."""
        p = self.for_count(k)
        return p.a * np.power(p.growth, k)


@dataclass(frozen=True)
class DefaultablePartition:
    """Assets with h_i = -1 and the parameters of the survivors."""

    defaulted: Tuple[int, ...]
    survivors: JumpLognormalParams


def _lognormal_sigmas(spec: BasketSpec) -> np.ndarray:
    sigmas = []
    for i, asset in enumerate(spec.assets):
        sigma_hat = asset.vol.lognormal_sigma()
        if sigma_hat is None:
            raise UnsupportedModelError(
                f"asset {i}: closed-form pricing needs Black-Scholes volatility, got {asset.vol!r}"
            )
        sigmas.append(sigma_hat)
    return np.array(sigmas, dtype=float)


def _assemble(a, sigma, growth, rho, T, K) -> JumpLognormalParams:
    cov = rho * np.outer(sigma, sigma) * T
    sigma_b2 = float(a @ cov @ a)
    sigma_b = math.sqrt(max(sigma_b2, 0.0))
    R = (cov @ a) / sigma_b if sigma_b > 0 else np.zeros_like(a)
    alive = a > 0
    if np.any(alive & (growth <= 0)):
        m = -np.inf
    else:
        m = float(np.sum(a[alive] * np.log(growth[alive])))
    return JumpLognormalParams(
        a=a, sigma=sigma, growth=growth, correlation=rho, maturity=T, strike=K,
        R=R, sigma_b=sigma_b, m=m, c_const=float(np.sum(a)),
    )


def defaultable_partition(params: JumpLognormalParams) -> Optional[DefaultablePartition]:
    """Survivor parameters for k >= 1 slices, or None when no asset can default."""
    defaulted = tuple(int(i) for i in np.flatnonzero(params.growth <= 0))
    if not defaulted:
        return None
    a = params.a.copy()
    a[list(defaulted)] = 0.0
    survivors = _assemble(a, params.sigma, params.growth, params.correlation, params.maturity, params.strike)
    return DefaultablePartition(defaulted=defaulted, survivors=survivors)


def terminal_price_params(spec: BasketSpec, T: float, K: float) -> JumpLognormalParams:
    """Closed-form quantities of the basket at T.

    Raises:
        UnsupportedModelError: some asset does not have Black-Scholes volatility
    """
    sigma = _lognormal_sigmas(spec)
    h = spec.jump_sizes
    a = spec.weights * spec.spots * np.exp((-0.5 * sigma ** 2 - h * spec.intensity) * T)
    params = _assemble(a, sigma, 1.0 + h, spec.correlation, T, K)
    partition = defaultable_partition(params)
    if partition is not None:
        params = replace(params, partition=partition)
        logger.debug("Defaultable assets partitioned", defaulted=list(partition.defaulted))
    return params


def conditional_expectation(params: JumpLognormalParams, k: int, y):
    """E[S(T) | N(T) = k, y] = sum_i a_i (1+h_i)^k exp((sigma_i^2 T - R_i^2)/2 + R_i y)."""
    p = params.for_count(k)
    y = np.asarray(y, dtype=float)
    coef = params.scaled(k) * np.exp(0.5 * (p.sigma ** 2 * p.maturity - p.R ** 2))
    return np.sum(coef[:, None] * np.exp(np.outer(p.R, y.reshape(-1))), axis=0).reshape(y.shape)


def _gaussian_moments(params: JumpLognormalParams, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """(A_i, R_i) with E[w_i S_i(T) e^{...} ; y in [l,u]] = A_i (Phi(u-R_i) - Phi(l-R_i))."""
    p = params.for_count(k)
    return params.scaled(k) * np.exp(0.5 * p.sigma ** 2 * p.maturity), p.R


def _piece(A: np.ndarray, R: np.ndarray, offset: float, lo: float, hi: float) -> float:
    """int_lo^hi (sum_i A_i e^{R_i y - R_i^2/2} + offset) phi(y) dy."""
    if hi <= lo:
        return 0.0
    mass = float(norm_cdf(hi) - norm_cdf(lo))
    return float(np.sum(A * (norm_cdf(hi - R) - norm_cdf(lo - R)))) + offset * mass


def _bracket_root(f: Callable[[float], float]) -> float:
    """Root of an increasing f, clamped to [-40, 40]."""
    hi = 1.0
    while f(hi) < 0 and hi < ROOT_BRACKET_LIMIT:
        hi = min(2.0 * hi, ROOT_BRACKET_LIMIT)
    if f(hi) < 0:
        return ROOT_BRACKET_LIMIT
    lo = -1.0
    while f(lo) > 0 and lo > -ROOT_BRACKET_LIMIT:
        lo = max(2.0 * lo, -ROOT_BRACKET_LIMIT)
    if f(lo) > 0:
        return -np.inf
    return optimize.brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def _call_on_region(params: JumpLognormalParams, k: int, strike: float, lo: float, hi: float) -> float:
    """int_lo^hi (E[S(T) | k, y] - strike)^+ phi(y) dy."""
    if hi <= lo:
        return 0.0
    A, R = _gaussian_moments(params, k)
    mean = lambda y: float(conditional_expectation(params, k, y))

    if params.for_count(k).sigma_b == 0.0 or np.all(R == 0.0):
        return max(float(np.sum(A)) - strike, 0.0) * float(norm_cdf(hi) - norm_cdf(lo))

    if np.all(R >= 0.0):
        root = _bracket_root(lambda y: mean(y) - strike)
        return _piece(A, R, -strike, max(root, lo), hi)

    # non-monotone conditional mean: numerical quadrature between sign changes
    grid = np.linspace(max(lo, -10.0), min(hi, 10.0), 2001)
    if grid[0] >= grid[-1]:
        return 0.0
    values = conditional_expectation(params, k, grid) - strike
    edges = [lo]
    for left, right, fl, fr in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if fl * fr < 0:
            edges.append(optimize.brentq(lambda y: mean(y) - strike, left, right, xtol=1e-14))
    edges.append(hi)
    total = 0.0
    for left, right in zip(edges[:-1], edges[1:]):
        trial = 0.5 * (left + right) if np.isfinite(left) and np.isfinite(right) else (
            right - 1.0 if np.isfinite(right) else left + 1.0
        )
        if not np.isfinite(trial):
            trial = 0.0
        if mean(trial) <= strike:
            continue
        value, abserr = integrate.quad(
            lambda y: (mean(y) - strike) * float(norm_pdf(y)), left, right, epsabs=1e-12, epsrel=1e-10, limit=200
        )
        if abserr > 1e-8 * max(1.0, abs(value)):
            raise QuadratureError(f"conditional-mean quadrature error {abserr:.2e} on [{left}, {right}]")
        total += value
    return total


def _conditional_variance_mass(params: JumpLognormalParams, k: int, d: float) -> float:
    """int_{-inf}^d var(S(T) | k, y) phi(y) dy."""
    if d == -np.inf:
        return 0.0
    p = params.for_count(k)
    scaled = params.scaled(k)
    T = p.maturity
    s2 = p.sigma ** 2 * T
    cross = p.correlation * np.outer(p.sigma, p.sigma) * T
    rr = np.outer(p.R, p.R)
    weight = np.outer(scaled, scaled) * np.exp(0.5 * (s2[:, None] + s2[None, :]) + rr)
    region = norm_cdf(d - p.R[:, None] - p.R[None, :])
    return max(float(np.sum(weight * np.expm1(cross - rr) * region)), 0.0)


def _slices(params: JumpLognormalParams, spec: BasketSpec, T: float, truncation: PoissonTruncation) -> List[Tuple[int, float, float]]:
    return [(k, p, params.threshold(k)) for k, p in truncation.terms(spec.intensity, T)]


def _check_inputs(T: float, K: float) -> None:
    if T <= 0:
        raise ValueError(f"maturity must be > 0, got {T}")
    if K < 0:
        raise ValueError(f"strike must be >= 0, got {K}")


def price_lb_exact(
    spec: BasketSpec, T: float, K: float, truncation: PoissonTruncation = PoissonTruncation()
) -> PricingResult:
    """Conditioning lower bound E[(E[S(T) | N(T), y] - K)^+]."""
    _check_inputs(T, K)
    params = terminal_price_params(spec, T, K)
    price = math.fsum(
        p * _call_on_region(params, k, K, -np.inf, np.inf) for k, p, _ in _slices(params, spec, T, truncation)
    )
    logger.info("Exact lower bound computed", price=price, strike=K, maturity=T, truncation=truncation.mode)
    return PricingResult(method="lb", price=price, strike=K, maturity=T, details={"sigma_b": params.sigma_b})


def _variance_terms(params, spec, T, truncation) -> Tuple[float, float]:
    """(E[var(S|Lambda) 1{y < d}], P(y < d))."""
    variance, mass = [], []
    for k, p, d in _slices(params, spec, T, truncation):
        variance.append(p * _conditional_variance_mass(params, k, d))
        mass.append(p * float(norm_cdf(d)))
    return math.fsum(variance), math.fsum(mass)


def price_upper_bound(
    spec: BasketSpec, T: float, K: float, truncation: PoissonTruncation = PoissonTruncation()
) -> PricingResult:
    """Lower bound plus half the Cauchy-Schwarz bound on the conditional spread."""
    lower = price_lb_exact(spec, T, K, truncation)
    params = terminal_price_params(spec, T, K)
    variance, mass = _variance_terms(params, spec, T, truncation)
    gap = 0.5 * math.sqrt(variance) * math.sqrt(mass)
    price = lower.price + gap
    logger.info("Upper bound computed", price=price, lower=lower.price, gap=gap, strike=K, maturity=T)
    return PricingResult(
        method="ub", price=price, strike=K, maturity=T,
        details={"lower_bound": lower.price, "gap": gap},
    )


def price_pea(
    spec: BasketSpec, T: float, K: float, truncation: PoissonTruncation = PoissonTruncation()
) -> PricingResult:
    """Exact price where the linear bound exceeds K, three-point correction elsewhere.

    epsilon_0^2 is the conditional variance averaged over the region y < d_k.
    """
    _check_inputs(T, K)
    params = terminal_price_params(spec, T, K)
    variance, mass = _variance_terms(params, spec, T, truncation)
    eps0 = math.sqrt(variance / mass) if mass > 0 else 0.0

    exact, corrected = [], []
    for k, p, d in _slices(params, spec, T, truncation):
        A, R = _gaussian_moments(params, k)
        exact.append(p * _piece(A, R, -K, d, np.inf))
        corrected.append(p * math.fsum(
            q * _call_on_region(params, k, K - node * eps0, -np.inf, d)
            for q, node in zip(PEA_WEIGHTS, PEA_NODES)
        ))
    price = math.fsum(exact) + math.fsum(corrected)
    logger.info("PEA price computed", price=price, eps0=eps0, strike=K, maturity=T)
    return PricingResult(
        method="pea", price=price, strike=K, maturity=T,
        details={"eps0": eps0, "exact_part": math.fsum(exact)},
    )


def first_order_mixture(spec: BasketSpec, T: float, truncation: PoissonTruncation) -> List[Tuple[float, float]]:
    """(p_k, mu_k) of the first-order basket S(0) + S^(1)(T) given N(T) = k."""
    jump_scale = float(np.sum(spec.weights * spec.jump_sizes * spec.spots))
    return [
        (p, spec.basket_spot + (k - spec.intensity * T) * jump_scale)
        for k, p in truncation.terms(spec.intensity, T)
    ]


def price_first_order_cv(
    spec: BasketSpec,
    T: float,
    K: float,
    quadrature: QuadratureConfig = QuadratureConfig(),
    truncation: PoissonTruncation = PoissonTruncation(),
) -> PricingResult:
    """Bachelier mixture E[(S(0) + S^(1)(T) - K)^+], the control variate's mean."""
    _check_inputs(T, K)
    v = expansion_coefficients(spec, T, quadrature).v
    terms = []
    for p, mu in first_order_mixture(spec, T, truncation):
        d = (mu - K) / v
        terms.append(p * ((mu - K) * float(norm_cdf(d)) + v * float(norm_pdf(d))))
    price = math.fsum(terms)
    logger.debug("First-order price computed", price=price, v=v, strike=K, maturity=T)
    return PricingResult(method="cv", price=price, strike=K, maturity=T, details={"v": v})


def bs_call(S: float, K: float, T: float, sigma: float) -> float:
    """Zero-rate Black-Scholes call."""
    if sigma <= 0 or T <= 0 or K <= 0:
        return max(S - K, 0.0)
    vol = sigma * math.sqrt(T)
    d1 = (math.log(S / K) + 0.5 * vol * vol) / vol
    return float(S * norm_cdf(d1) - K * norm_cdf(d1 - vol))


def implied_vol(price: float, S: float, K: float, T: float) -> float:
    """Black-Scholes implied volatility of a zero-rate call.

    Raises:
        ArbitrageBoundsError: price outside ((S-K)^+, S) or beyond vol 5
    """
    lower, upper = max(S - K, 0.0), S
    if not (lower < price < upper):
        raise ArbitrageBoundsError(f"price {price} outside no-arbitrage bounds ({lower}, {upper})")
    objective = lambda sigma: bs_call(S, K, T, sigma) - price
    lo, hi = 1e-6, 5.0
    if objective(lo) > 0 or objective(hi) < 0:
        raise ArbitrageBoundsError(f"implied volatility of {price} outside [{lo}, {hi}]")
    return float(optimize.brentq(objective, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200))


def attach_implied_vol(result: PricingResult, spot: float) -> PricingResult:
    """Result with implied_vol filled in when the price admits one."""
    if not result.ok:
        return result
    try:
        return result.with_implied_vol(implied_vol(result.price, spot, result.strike, result.maturity))
    except ArbitrageBoundsError:
        return result
