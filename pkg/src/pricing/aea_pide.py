"""Asymptotic expansion approximation: a forward PIDE in (maturity, strike).

    C_T = lam h K C_K + 1/2 sigma(T,K)^2 C_KK + lam (1+h) (C(T, K/(1+h)) - C(T, K))

with sigma(T,K)^2 ~ a(T) + b(T)(K - S(0)). Local terms are stepped fully
implicitly, the shifted-strike term explicitly.
"""

import math
from dataclasses import dataclass
from typing import Callable, Literal, Optional, Union

import numpy as np
from scipy import linalg

from src.config import get_settings
from src.errors import DegenerateVolatilityError, GridInstabilityError, UnsupportedModelError
from src.model.market_model import BasketSpec, sigma_profiles
from src.observability.logging import logger
from src.pricing.expansion import profile_integrals
from src.pricing.results import PricingResult

GROWTH_LIMIT = 10.0
MONOTONICITY_TOL = 1e-8

SigmaCMode = Literal["weighted", "paper_literal"]
Advection = Literal["central", "hybrid"]


@dataclass(frozen=True)
class LocalVarianceApprox:
    """sigma(T, K)^2 ~ a + b (K - spot) and the quantities it is built from."""

    a: float
    b: float
    spot: float
    p: Optional[np.ndarray] = None
    q: Optional[np.ndarray] = None
    C: Optional[np.ndarray] = None
    sigma_c2: Optional[float] = None

    def variance(self, strikes: np.ndarray) -> np.ndarray:
        """Linearized local variance, floored at zero."""
        return np.maximum(self.a + self.b * (np.asarray(strikes, dtype=float) - self.spot), 0.0)


ApproxSource = Union[LocalVarianceApprox, Callable[[float], LocalVarianceApprox]]


@dataclass(frozen=True)
class PideGridConfig:
    n_strikes: int = 400
    steps_per_year: int = 400
    kmax_multiple: float = 5.0
    # hybrid upwinds where |lam h K| dK > sigma^2(K)
    advection: Advection = "central"

    def __post_init__(self):
        if self.n_strikes < 10:
            raise ValueError(f"n_strikes must be >= 10, got {self.n_strikes}")
        if self.steps_per_year < 1:
            raise ValueError(f"steps_per_year must be >= 1, got {self.steps_per_year}")
        if self.advection not in ("central", "hybrid"):
            raise ValueError(f"unknown advection scheme: {self.advection}")

    @classmethod
    def from_settings(cls) -> "PideGridConfig":
        settings = get_settings()
        return cls(n_strikes=settings.pide_strikes, steps_per_year=settings.pide_steps_per_year)

    def time_steps(self, T: float, lam: float, h: float) -> int:
        return max(
            int(math.ceil(self.steps_per_year * T - 1e-9)),
            int(math.ceil(2.0 * lam * (1.0 + abs(h)) * T - 1e-9)),
            1,
        )


@dataclass(frozen=True)
class PideSolution:
    strikes: np.ndarray
    surface: np.ndarray
    times: np.ndarray
    strike: float
    price: float
    floored_nodes: int
    monotonicity_violations: int

    @property
    def final_layer(self) -> np.ndarray:
        return self.surface[-1]


def _common_jump_size(spec: BasketSpec) -> float:
    h = spec.jump_sizes
    if not np.allclose(h, h[0], rtol=0.0, atol=1e-14):
        raise UnsupportedModelError(f"the PIDE needs one jump size for every asset, got {h.tolist()}")
    return float(h[0])


def local_variance_coefficients(spec: BasketSpec, T: float, sigma_c_mode: SigmaCMode = "weighted") -> LocalVarianceApprox:
    """a(T), b(T) of the linearized basket local variance.

    sigma_c_mode="paper_literal" uses (sum_i w_i)(sum_j C_j) for sigma_c^2.

    Raises:
        UnsupportedModelError: assets have different jump sizes
        DegenerateVolatilityError: sigma_c^2 is not positive
    """
    _common_jump_size(spec)
    w = spec.weights
    rho = spec.correlation
    p = sigma_profiles(spec, 0, T)
    q = sigma_profiles(spec, 1, T)
    C = profile_integrals(spec, T).i0

    if sigma_c_mode == "paper_literal":
        sigma_c2 = float(np.sum(w) * np.sum(C))
    else:
        sigma_c2 = float(w @ C)
    if sigma_c2 <= 0.0:
        raise DegenerateVolatilityError(f"sigma_c^2 = {sigma_c2:.3e}; b(T) is undefined")

    wp = w * p
    a = float(wp @ rho @ wp)
    pair = np.outer(w, w) * rho * (np.outer(q * C, p) + np.outer(p, q * C))
    b = float(np.sum(pair)) / sigma_c2
    return LocalVarianceApprox(a=a, b=b, spot=spec.basket_spot, p=p, q=q, C=C, sigma_c2=sigma_c2)


def _implicit_matrix(strikes, variance, drift, decay, dk, dtau, advection="central"):
    """Banded form of I - dtau * L with Dirichlet rows at both ends."""
    diff = 0.5 * variance / dk ** 2
    if advection == "central":
        central = np.ones(strikes.size, dtype=bool)
    else:
        central = np.abs(drift) * dk <= variance
    lower = np.where(central, diff - 0.5 * drift / dk, diff + np.maximum(-drift, 0.0) / dk)
    upper = np.where(central, diff + 0.5 * drift / dk, diff + np.maximum(drift, 0.0) / dk)
    diag = -(lower + upper) - decay

    n = strikes.size
    ab = np.zeros((3, n))
    ab[1] = 1.0 - dtau * diag
    ab[0, 2:] = -dtau * upper[1:-1]
    ab[2, :-2] = -dtau * lower[1:-1]
    ab[1, 0] = ab[1, -1] = 1.0
    return ab


def solve_pide(
    spec: BasketSpec,
    T: float,
    approx: ApproxSource,
    grid_cfg: PideGridConfig = PideGridConfig(),
    strike: Optional[float] = None,
) -> PideSolution:
    """March the PIDE from C(0, K) = (S(0) - K)^+ to maturity T.

    `approx` is a fixed LocalVarianceApprox or a callable tau -> approx that
    is evaluated at every new time layer.

    Raises:
        UnsupportedModelError: assets have different jump sizes
        GridInstabilityError: the max-norm grew more than 10x in one step
    """
    if T <= 0:
        raise ValueError(f"maturity must be > 0, got {T}")
    h = _common_jump_size(spec)
    lam = spec.intensity
    spot = spec.basket_spot
    strike = spot if strike is None else float(strike)

    strikes = np.linspace(0.0, grid_cfg.kmax_multiple * spot, grid_cfg.n_strikes)
    dk = strikes[1] - strikes[0]
    n_steps = grid_cfg.time_steps(T, lam, h)
    dtau = T / n_steps
    times = np.linspace(0.0, T, n_steps + 1)

    growth = 1.0 + h
    jump_rate = lam * growth
    drift = lam * h * strikes
    shifted = strikes / growth if growth > 0 else None

    layer = np.maximum(spot - strikes, 0.0)
    surface = np.empty((n_steps + 1, strikes.size))
    surface[0] = layer
    floored = 0
    violations = 0
    fixed = approx if isinstance(approx, LocalVarianceApprox) else None
    ab = None

    for step in range(1, n_steps + 1):
        current = fixed if fixed is not None else approx(times[step])
        if ab is None or fixed is None:
            raw = current.a + current.b * (strikes - current.spot)
            floored = max(floored, int(np.count_nonzero(raw < 0.0)))
            ab = _implicit_matrix(
                strikes, np.maximum(raw, 0.0), drift, jump_rate, dk, dtau, grid_cfg.advection
            )

        rhs = layer.copy()
        if shifted is not None and jump_rate > 0.0:
            rhs += dtau * jump_rate * np.interp(shifted, strikes, layer, right=0.0)
        rhs[0] = spot
        rhs[-1] = 0.0
        new_layer = linalg.solve_banded((1, 1), ab, rhs)

        before = float(np.max(np.abs(layer)))
        after = float(np.max(np.abs(new_layer)))
        if not np.all(np.isfinite(new_layer)) or after > GROWTH_LIMIT * max(before, 1e-300):
            logger.error("PIDE grid unstable", step=step, norm_before=before, norm_after=after, dtau=dtau, dk=dk)
            raise GridInstabilityError(
                f"max-norm grew from {before:.3e} to {after:.3e} at step {step} (dtau={dtau:.3e}, dK={dk:.3e})"
            )
        rising = int(np.count_nonzero(np.diff(new_layer) > MONOTONICITY_TOL))
        violations += rising

        layer = new_layer
        surface[step] = layer

    if floored:
        logger.warning("Local variance floored at zero", nodes=floored, n_strikes=strikes.size)
    if violations:
        logger.warning("PIDE solution not monotone in strike", violations=violations)

    price = float(np.interp(strike, strikes, layer))
    return PideSolution(
        strikes=strikes,
        surface=surface,
        times=times,
        strike=strike,
        price=price,
        floored_nodes=floored,
        monotonicity_violations=violations,
    )


def price_aea(
    spec: BasketSpec,
    T: float,
    K: float,
    grid_cfg: PideGridConfig = PideGridConfig(),
    sigma_c_mode: SigmaCMode = "weighted",
) -> PricingResult:
    """AEA price: PIDE with the linearized local variance."""
    if K < 0:
        raise ValueError(f"strike must be >= 0, got {K}")
    if spec.time_independent:
        approx: ApproxSource = local_variance_coefficients(spec, T, sigma_c_mode)
    else:
        approx = lambda tau: local_variance_coefficients(spec, tau, sigma_c_mode)
    solution = solve_pide(spec, T, approx, grid_cfg, strike=K)
    logger.info(
        "AEA price computed",
        price=solution.price,
        strike=K,
        maturity=T,
        n_strikes=grid_cfg.n_strikes,
        n_steps=solution.times.size - 1,
        floored_nodes=solution.floored_nodes,
    )
    details = {
        "n_strikes": grid_cfg.n_strikes,
        "n_steps": solution.times.size - 1,
        "floored_nodes": solution.floored_nodes,
        "sigma_c_mode": sigma_c_mode,
        "advection": grid_cfg.advection,
    }
    if isinstance(approx, LocalVarianceApprox):
        details.update(a=approx.a, b=approx.b)
    return PricingResult(method="aea", price=solution.price, strike=K, maturity=T, details=details)
