"""Second-order asymptotic expansion of the basket around its initial value.

Conditional on N(T) = k and Delta(T) = v * x the expansion S^A(T) is a
quadratic in x. This module computes the time integrals of the weighted
cross-volatility profiles and the coefficients of that quadratic.
"""

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from src.errors import DegenerateVolatilityError, QuadratureError
from src.model.market_model import BasketSpec, tilde_sigma_profiles
from src.observability.logging import logger

DEGENERATE_VARIANCE_TOL = 1e-12


@dataclass(frozen=True)
class QuadratureConfig:
    """Composite Gauss-Legendre rule: `panels` panels of `order` nodes each.

    The panel count is doubled once to check the result against rel_tol.
    """

    order: int = 8
    panels: int = 8
    rel_tol: float = 1e-9
    force_quadrature: bool = False

    def __post_init__(self):
        if self.order < 1 or self.panels < 1:
            raise ValueError("quadrature order and panels must be >= 1")

    @property
    def nodes(self) -> int:
        return self.order * self.panels


@dataclass(frozen=True)
class ProfileIntegrals:
    """Per-asset integrals, arrays of length n.

    i0 = int tsigma0, i1 = int (T-t) tsigma0, i2 = int t tsigma1,
    i3 = int (int_0^t tsigma0) tsigma1.
    """

    i0: np.ndarray
    i1: np.ndarray
    i2: np.ndarray
    i3: np.ndarray
    maturity: float
    method: str
    nodes: int = 0


@dataclass(frozen=True)
class ExpansionCoefficients:
    v2: float
    c: float
    integrals: ProfileIntegrals

    @property
    def v(self) -> float:
        return float(np.sqrt(self.v2))

    @property
    def maturity(self) -> float:
        return self.integrals.maturity


@dataclass(frozen=True)
class QuadraticPayoff:
    """c * x**2 + a1 * x + a0 for jump count k."""

    k: int
    c: float
    a1: float
    a0: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.c * x * x + self.a1 * x + self.a0


@dataclass(frozen=True)
class ConditionalTerms:
    """Per-asset contributions to E[S_i^A(T) | N(T)=k, Delta(T)=v x].

    Every entry of `terms` has shape (n, 3): the constant, x and x**2
    coefficients of one building block, before weighting by w_i.
    """

    k: int
    terms: Dict[str, np.ndarray] = field(default_factory=dict)

    def weighted(self, weights: np.ndarray) -> np.ndarray:
        """(constant, x, x**2) of the basket mean, summed over every block."""
        total = sum(self.terms.values())
        return np.asarray(weights) @ total

    def second_order(self, weights: np.ndarray) -> np.ndarray:
        names = ("A1", "A2", "A3", "B1", "B2", "B3", "C1", "C2", "C3")
        return np.asarray(weights) @ sum(self.terms[name] for name in names)


def _panel_edges(spec: BasketSpec, T: float, panels: int) -> np.ndarray:
    edges = set(np.linspace(0.0, T, panels + 1).tolist())
    for asset in spec.assets:
        edges.update(asset.vol.breakpoints(T))
    edges = np.array(sorted(edges))
    keep = np.concatenate(([True], np.diff(edges) > 1e-14 * T))
    edges = edges[keep]
    edges[-1] = T
    return edges


def _integrate(spec: BasketSpec, T: float, order: int, panels: int) -> Tuple[np.ndarray, ...]:
    x, wq = leggauss(order)
    edges = _panel_edges(spec, T, panels)
    a = edges[:-1, None]
    b = edges[1:, None]
    half = 0.5 * (b - a)
    t = 0.5 * (a + b) + half * x
    w = half * wq

    s0 = tilde_sigma_profiles(spec, 0, t)
    s1 = tilde_sigma_profiles(spec, 1, t)
    i0 = (s0 * w).sum(axis=(1, 2))
    i1 = (s0 * (T - t) * w).sum(axis=(1, 2))
    i2 = (s1 * t * w).sum(axis=(1, 2))

    # cumulative int_0^t tsigma0: whole panels before a_p plus a rule on [a_p, t]
    panel_integrals = (s0 * w).sum(axis=2)
    before = np.cumsum(panel_integrals, axis=1) - panel_integrals
    inner_half = 0.5 * (t - a)
    inner_t = a[..., None] + inner_half[..., None] * (x + 1.0)
    inner_w = inner_half[..., None] * wq
    inner = (tilde_sigma_profiles(spec, 0, inner_t) * inner_w).sum(axis=-1)
    running = before[..., None] + inner
    i3 = (running * s1 * w).sum(axis=(1, 2))
    return i0, i1, i2, i3, t.size


def profile_integrals(spec: BasketSpec, T: float, cfg: QuadratureConfig = QuadratureConfig()) -> ProfileIntegrals:
    """Time integrals of the tilde-sigma profiles for every asset.

    Time-independent vols use closed forms unless cfg.force_quadrature is set.

    Raises:
        QuadratureError: doubling the panels moved a result by more than rel_tol
    """
    if T <= 0:
        raise ValueError(f"maturity must be > 0, got {T}")

    if spec.time_independent and not cfg.force_quadrature:
        ts0 = tilde_sigma_profiles(spec, 0, 0.0)
        ts1 = tilde_sigma_profiles(spec, 1, 0.0)
        return ProfileIntegrals(
            i0=ts0 * T,
            i1=ts0 * T * T / 2.0,
            i2=ts1 * T * T / 2.0,
            i3=ts0 * ts1 * T * T / 2.0,
            maturity=T,
            method="closed_form",
        )

    coarse = _integrate(spec, T, cfg.order, cfg.panels)
    fine = _integrate(spec, T, cfg.order, 2 * cfg.panels)
    for name, lo, hi in zip(("i0", "i1", "i2", "i3"), coarse[:4], fine[:4]):
        scale = np.maximum(np.abs(hi), 1e-12 * (np.max(np.abs(hi)) + 1e-300))
        worst = float(np.max(np.abs(hi - lo) / scale))
        if worst > cfg.rel_tol:
            logger.error("Profile quadrature did not converge", integral=name, rel_change=worst)
            raise QuadratureError(
                f"{name}: doubling the panels changed the result by {worst:.3e} (tol {cfg.rel_tol:.1e})"
            )

    return ProfileIntegrals(
        i0=fine[0], i1=fine[1], i2=fine[2], i3=fine[3],
        maturity=T, method="gauss_legendre", nodes=fine[4],
    )


def expansion_coefficients(
    spec: BasketSpec, T: float, cfg: QuadratureConfig = QuadratureConfig()
) -> ExpansionCoefficients:
    """v^2 = sum w_i I0_i and c = sum w_i I3_i / v^2.

    Raises:
        DegenerateVolatilityError: v^2 <= 1e-12 * S(0)^2
    """
    integrals = profile_integrals(spec, T, cfg)
    v2 = float(spec.weights @ integrals.i0)
    if v2 <= DEGENERATE_VARIANCE_TOL * spec.basket_spot ** 2:
        raise DegenerateVolatilityError(
            f"variance of the Gaussian driver is {v2:.3e}, basket spot {spec.basket_spot}"
        )
    c = float(spec.weights @ integrals.i3) / v2
    return ExpansionCoefficients(v2=v2, c=c, integrals=integrals)


def lba_quadratic(
    coeffs: ExpansionCoefficients,
    spec: BasketSpec,
    T: float,
    K: float,
    k: int,
    paper_literal_a0: bool = False,
) -> QuadraticPayoff:
    """Coefficients of E[S^A(T) | N(T)=k, Delta(T)=v x] - K as a quadratic in x.

    With paper_literal_a0 the first jump term of a0 uses (K - lambda T) in
    place of (k - lambda T); for comparison runs only.
    """
    if k < 0:
        raise ValueError(f"jump count must be >= 0, got {k}")
    ints = coeffs.integrals
    w = spec.weights
    h = spec.jump_sizes
    s0 = spec.spots
    lam = spec.intensity
    v = coeffs.v

    a1 = v + float(np.sum(w * h * (k / T - lam) * (ints.i1 + s0 * ints.i2))) / v
    drift_count = (K if paper_literal_a0 else k) - lam * T
    a0 = (
        spec.basket_spot
        + drift_count * float(np.sum(w * h * s0))
        + 0.5 * float(np.sum(w * s0 * h * h)) * ((k - lam * T) ** 2 - k)
        - coeffs.c
        - K
    )
    return QuadraticPayoff(k=k, c=coeffs.c, a1=a1, a0=a0)


def conditional_terms(coeffs: ExpansionCoefficients, spec: BasketSpec, T: float, k: int) -> ConditionalTerms:
    """Building blocks of the conditional expansion, one (n, 3) array each.

    "zeroth" is S_i(0), "first" the first-order term; A*, B*, C* are the
    second-order pieces coming from the jump-jump, diffusion-jump and
    diffusion-diffusion products.
    """
    ints = coeffs.integrals
    h = spec.jump_sizes
    s0 = spec.spots
    lam = spec.intensity
    v = coeffs.v
    zero = np.zeros_like(s0)

    def block(const=zero, lin=zero, quad=zero):
        return np.column_stack([const + zero, lin + zero, quad + zero])

    rate = k / T
    terms = {
        "zeroth": block(const=s0),
        "first": block(const=h * s0 * (k - lam * T), lin=ints.i0 / v),
        "A1": block(const=0.5 * s0 * (lam * h * T) ** 2),
        "A2": block(lin=-lam * h * ints.i1 / v),
        "A3": block(const=-0.5 * lam * s0 * h * h * k * T),
        "B1": block(lin=-lam * h * s0 * ints.i2 / v),
        "B2": block(const=-ints.i3 / coeffs.v2, quad=ints.i3 / coeffs.v2),
        "B3": block(lin=h * s0 * rate * ints.i2 / v),
        "C1": block(const=-0.5 * s0 * lam * h * h * T * k),
        "C2": block(lin=h * rate * ints.i1 / v),
        "C3": block(const=0.5 * h * h * s0 * (k * k - k)),
    }
    return ConditionalTerms(k=k, terms=terms)
