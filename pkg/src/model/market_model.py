"""Basket definition, input validation and the sigma profiles used by the expansion."""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from src.errors import DecompositionError, InvalidModelError
from src.model.volatility import LocalVolatility
from src.observability.logging import logger

CORRELATION_JITTER = 1e-10


@dataclass(frozen=True)
class JumpDiffusionAsset:
    """One basket constituent: dS = sigma(t,S) dW + h S(t-) dM."""

    initial_price: float
    jump_size: float
    vol: LocalVolatility


@dataclass(frozen=True)
class BasketSpec:
    """Assets, nonnegative weights, Brownian correlation and the common jump intensity.

    The correlation diagonal is forced to 1. Construction never rejects
    inputs; call validate_basket (or BasketSpec.checked) for that.
    """

    assets: Tuple[JumpDiffusionAsset, ...]
    weights: np.ndarray
    correlation: np.ndarray
    intensity: float

    def __post_init__(self):
        assets = tuple(self.assets)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        rho = np.array(self.correlation, dtype=float)
        if rho.ndim == 0:
            rho = np.full((len(assets), len(assets)), float(rho))
        if rho.ndim == 2 and rho.shape[0] == rho.shape[1] and rho.shape[0] > 0:
            diagonal = np.diag(rho)
            if not np.allclose(diagonal, 1.0):
                logger.warning(
                    "Correlation diagonal forced to 1",
                    diagonal=[float(x) for x in diagonal]
                )
            np.fill_diagonal(rho, 1.0)
        weights.setflags(write=False)
        rho.setflags(write=False)
        object.__setattr__(self, "assets", assets)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "correlation", rho)
        object.__setattr__(self, "intensity", float(self.intensity))

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    @property
    def spots(self) -> np.ndarray:
        return np.array([asset.initial_price for asset in self.assets], dtype=float)

    @property
    def jump_sizes(self) -> np.ndarray:
        return np.array([asset.jump_size for asset in self.assets], dtype=float)

    @property
    def basket_spot(self) -> float:
        """S(0) = sum_i w_i S_i(0)."""
        return float(self.weights @ self.spots)

    @property
    def time_independent(self) -> bool:
        return all(asset.vol.time_independent for asset in self.assets)

    def checked(self) -> "BasketSpec":
        """Return self, or raise InvalidModelError listing every violation."""
        report = validate_basket(self)
        if not report.ok:
            raise InvalidModelError("; ".join(report.violations))
        return self

    @classmethod
    def homogeneous(
        cls,
        n: int,
        spot: float,
        jump_sizes: Sequence[float],
        vol: LocalVolatility,
        weight: float,
        correlation: float,
        intensity: float,
    ) -> "BasketSpec":
        """n identical diffusions with per-asset jump sizes and flat correlation."""
        if len(jump_sizes) != n:
            raise InvalidModelError(f"expected {n} jump sizes, got {len(jump_sizes)}")
        assets = tuple(JumpDiffusionAsset(spot, float(h), vol) for h in jump_sizes)
        return cls(assets, np.full(n, weight), correlation, intensity)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: List[str] = field(default_factory=list)
    cholesky: Optional[np.ndarray] = None


def cholesky_lower(rho: np.ndarray) -> np.ndarray:
    """Lower factor L with L @ L.T = rho.

    Matrices that are indefinite only by rounding (smallest eigenvalue in
    (-1e-10, 0]) get CORRELATION_JITTER on the diagonal.
    """
    rho = np.asarray(rho, dtype=float)
    try:
        return linalg.cholesky(rho, lower=True)
    except np.linalg.LinAlgError:
        pass
    smallest = float(np.min(np.linalg.eigvalsh(rho)))
    if smallest <= -CORRELATION_JITTER:
        raise DecompositionError(
            f"correlation matrix is not positive semidefinite (smallest eigenvalue {smallest:.3e})"
        )
    try:
        factor = linalg.cholesky(rho + CORRELATION_JITTER * np.eye(rho.shape[0]), lower=True)
    except np.linalg.LinAlgError as e:
        raise DecompositionError(f"Cholesky failed after jitter: {e}") from e
    logger.debug("Cholesky needed diagonal jitter", jitter=CORRELATION_JITTER, smallest=smallest)
    return factor


def validate_basket(spec: BasketSpec) -> ValidationReport:
    """Check every model invariant; violations are returned, never raised."""
    violations: List[str] = []
    n = spec.n_assets
    if n == 0:
        return ValidationReport(ok=False, violations=["basket has no assets"])

    for i, asset in enumerate(spec.assets):
        if not np.isfinite(asset.initial_price) or asset.initial_price <= 0:
            violations.append(f"asset {i}: initial price must be > 0")
        if asset.jump_size < -1:
            violations.append(f"asset {i}: jump size below -1")
        violations.extend(f"asset {i}: {issue}" for issue in asset.vol.violations())

    if spec.weights.shape != (n,):
        violations.append(f"expected {n} weights, got {spec.weights.size}")
    elif np.any(spec.weights < 0):
        violations.append("weights must be nonnegative")
    elif spec.basket_spot <= 0:
        violations.append("basket spot must be > 0")

    if not np.isfinite(spec.intensity) or spec.intensity < 0:
        violations.append("jump intensity must be >= 0")

    factor = None
    rho = spec.correlation
    if rho.shape != (n, n):
        violations.append(f"correlation must be {n}x{n}, got shape {rho.shape}")
    elif np.any(np.abs(rho) > 1.0):
        violations.append("correlation out of [-1,1]")
    elif not np.allclose(rho, rho.T, atol=1e-12):
        violations.append("correlation not symmetric")
    else:
        try:
            factor = cholesky_lower(rho)
        except DecompositionError as e:
            violations.append(str(e))

    return ValidationReport(ok=not violations, violations=violations, cholesky=factor)


def _check_index(spec: BasketSpec, i: int) -> None:
    if not 0 <= i < spec.n_assets:
        raise IndexError(f"asset index {i} out of range for a basket of {spec.n_assets}")


def sigma0(spec: BasketSpec, i: int, t) -> np.ndarray:
    """sigma_i(t, S_i(0))."""
    _check_index(spec, i)
    asset = spec.assets[i]
    return asset.vol.value(t, asset.initial_price)


def sigma1(spec: BasketSpec, i: int, t) -> np.ndarray:
    """d sigma_i / dS at (t, S_i(0))."""
    _check_index(spec, i)
    asset = spec.assets[i]
    return asset.vol.slope(t, asset.initial_price)


def sigma_profiles(spec: BasketSpec, order: int, t) -> np.ndarray:
    """sigma_i^(order)(t) for every asset, shape (n,) + shape(t)."""
    fn = sigma0 if order == 0 else sigma1
    return np.stack([np.broadcast_to(fn(spec, i, t), np.shape(t)) for i in range(spec.n_assets)])


def tilde_sigma_profiles(spec: BasketSpec, order: int, t) -> np.ndarray:
    """tilde sigma_i^(order)(t) = sigma_i^(order)(t) sum_j w_j sigma_j^(0)(t) rho_ij, all i."""
    if order not in (0, 1):
        raise ValueError(f"order must be 0 or 1, got {order}")
    s0 = sigma_profiles(spec, 0, t)
    sk = s0 if order == 0 else sigma_profiles(spec, 1, t)
    weighted = spec.weights[:, None] * s0.reshape(spec.n_assets, -1)
    cross = (spec.correlation @ weighted).reshape(s0.shape)
    return sk * cross


def tilde_sigma(spec: BasketSpec, i: int, order: int, t) -> np.ndarray:
    """Weighted cross-volatility of asset i, see tilde_sigma_profiles."""
    _check_index(spec, i)
    return tilde_sigma_profiles(spec, order, t)[i]
