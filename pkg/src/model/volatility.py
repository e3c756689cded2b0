"""Local volatility functions sigma(t, S) and their S-derivatives.

Values are in price units per sqrt(time): BlackScholes(0.2) at S=100 is 20.
All variants accept numpy arrays for t and S and broadcast them.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np


class LocalVolatility(ABC):
    """sigma(t, S) >= 0 together with d sigma / dS."""

    time_independent: bool = True

    @abstractmethod
    def value(self, t, s):
        """sigma(t, S); S <= 0 is clamped to sigma(t, 0+)."""

    @abstractmethod
    def slope(self, t, s):
        """d sigma / dS at (t, S), S > 0."""

    def lognormal_sigma(self) -> Optional[float]:
        """sigma_hat when sigma(t, S) = sigma_hat * S, otherwise None."""
        return None

    def breakpoints(self, horizon: float) -> Tuple[float, ...]:
        """Times in (0, horizon) where sigma is not smooth in t."""
        return ()

    def violations(self) -> List[str]:
        """Parameter invariants this volatility breaks (empty when valid)."""
        return []


@dataclass(frozen=True)
class CEV(LocalVolatility):
    """Constant elasticity of variance: sigma(t, S) = alpha * S**beta."""

    alpha: float
    beta: float

    def value(self, t, s):
        s = np.maximum(np.asarray(s, dtype=float), 0.0)
        t = np.asarray(t, dtype=float)
        return self.alpha * np.power(s, self.beta) + 0.0 * t

    def slope(self, t, s):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        if self.beta == 1.0:
            return self.alpha + 0.0 * s + 0.0 * t
        return self.alpha * self.beta * np.power(s, self.beta - 1.0) + 0.0 * t

    def lognormal_sigma(self) -> Optional[float]:
        return float(self.alpha) if self.beta == 1.0 else None

    def violations(self) -> List[str]:
        issues = []
        if not np.isfinite(self.alpha) or self.alpha < 0:
            issues.append(f"CEV alpha must be >= 0, got {self.alpha}")
        if not (0.0 < self.beta <= 1.0):
            issues.append(f"CEV beta must be in (0, 1], got {self.beta}")
        return issues


class BlackScholes(CEV):
    """sigma(t, S) = sigma_hat * S, i.e. CEV with beta = 1."""

    def __init__(self, sigma: float):
        super().__init__(alpha=sigma, beta=1.0)

    @property
    def sigma(self) -> float:
        return self.alpha

    def __repr__(self) -> str:
        return f"BlackScholes(sigma={self.alpha})"


@dataclass(frozen=True)
class TabulatedVolatility(LocalVolatility):
    """sigma(t, S) = level(t) * base(t, S), level piecewise linear in t.

    Levels are held flat outside the table.
    """

    base: LocalVolatility
    times: Tuple[float, ...]
    levels: Tuple[float, ...]
    time_independent: bool = field(default=False, init=False)

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(x) for x in self.times))
        object.__setattr__(self, "levels", tuple(float(x) for x in self.levels))

    def level(self, t):
        return np.interp(np.asarray(t, dtype=float), self.times, self.levels)

    def value(self, t, s):
        return self.level(t) * self.base.value(t, s)

    def slope(self, t, s):
        return self.level(t) * self.base.slope(t, s)

    def breakpoints(self, horizon: float) -> Tuple[float, ...]:
        inner = [x for x in self.times if 0.0 < x < horizon]
        return tuple(sorted(set(inner) | set(self.base.breakpoints(horizon))))

    def violations(self) -> List[str]:
        issues = list(self.base.violations())
        if len(self.times) == 0 or len(self.times) != len(self.levels):
            issues.append("tabulated volatility needs matching, non-empty times and levels")
        elif any(b <= a for a, b in zip(self.times, self.times[1:])):
            issues.append("tabulated volatility times must be strictly increasing")
        if any(level < 0 for level in self.levels):
            issues.append("tabulated volatility levels must be >= 0")
        return issues
