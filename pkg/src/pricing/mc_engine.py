"""Monte Carlo benchmark for the basket call, with the first-order control variate.

Paths are simulated in fixed-size blocks, each with its own child of
SeedSequence(seed), so results do not depend on the number of threads.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from src.config import get_settings
from src.errors import DegenerateVolatilityError
from src.model.market_model import BasketSpec, cholesky_lower, sigma_profiles
from src.observability.logging import logger
from src.pricing.closed_form import price_first_order_cv
from src.pricing.expansion import QuadratureConfig, expansion_coefficients
from src.pricing.results import McEstimate


@dataclass(frozen=True)
class McConfig:
    """Simulation settings; n_steps is per unit of time."""

    n_paths: int = 100_000
    n_steps: int = 200
    seed: int = 42
    use_control_variate: bool = True
    antithetic: bool = False
    block_size: int = 4096
    threads: Optional[int] = None

    def __post_init__(self):
        if self.n_paths < 2:
            raise ValueError(f"n_paths must be >= 2, got {self.n_paths}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.block_size < 2:
            raise ValueError(f"block_size must be >= 2, got {self.block_size}")
        if self.antithetic and (self.n_paths % 2 or self.block_size % 2):
            raise ValueError("antithetic sampling needs an even n_paths and block_size")

    @classmethod
    def from_settings(cls, **overrides) -> "McConfig":
        settings = get_settings()
        values = dict(
            n_paths=settings.mc_paths,
            n_steps=settings.mc_steps_per_year,
            seed=settings.mc_seed,
            block_size=settings.mc_block_size,
            threads=settings.threads,
        )
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def steps_for(self, T: float) -> int:
        return max(1, int(math.ceil(self.n_steps * T - 1e-9)))

    def blocks(self) -> List[int]:
        full, rest = divmod(self.n_paths, self.block_size)
        return [self.block_size] * full + ([rest] if rest else [])

    def worker_count(self) -> int:
        return self.threads or get_settings().threads


@dataclass(frozen=True)
class MonteCarloSample:
    """Per-path terminal basket, its first-order linearization and jump count.

    With antithetic sampling, paths 2j and 2j+1 are a mirrored pair.
    """

    terminal: np.ndarray
    linearized: np.ndarray
    jump_counts: np.ndarray
    antithetic: bool = False

    @property
    def n_paths(self) -> int:
        return int(self.terminal.size)

    def units(self, values: np.ndarray) -> np.ndarray:
        """Independent sampling units: pair means under antithetic sampling."""
        return values.reshape(-1, 2).mean(axis=1) if self.antithetic else values


def _run_blocks(cfg: McConfig, worker: Callable[[int, np.random.Generator], Tuple[np.ndarray, ...]]):
    sizes = cfg.blocks()
    children = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    with ThreadPoolExecutor(max_workers=cfg.worker_count()) as pool:
        parts = list(pool.map(lambda j: worker(sizes[j], np.random.default_rng(children[j])), range(len(sizes))))
    return [np.concatenate(column) for column in zip(*parts)]


class _PathStepper:
    """Euler stepping of the asset vector with exact jump times inside a step."""

    def __init__(self, spec: BasketSpec, T: float, n_steps: int):
        self.spec = spec
        self.dt = T / n_steps
        self.n_steps = n_steps
        self.factor = cholesky_lower(spec.correlation)
        self.h = spec.jump_sizes
        self.lam = spec.intensity
        self.spots = spec.spots
        self.jump_scale = spec.weights * self.h * self.spots

    def _sigma(self, t: float, s: np.ndarray) -> np.ndarray:
        out = np.empty_like(s)
        for j, asset in enumerate(self.spec.assets):
            out[:, j] = asset.vol.value(t, np.maximum(s[:, j], 0.0))
        return out

    def _diffuse(self, s, lin, t, ds, z):
        """One Euler step from time t (scalar or per row) over ds with standard normals z."""
        dw = np.sqrt(ds)[:, None] * (z @ self.factor.T)
        t_rows = np.broadcast_to(np.asarray(t, dtype=float), ds.shape)
        s = s + self._sigma(t_rows, s) * dw - self.lam * self.h * s * ds[:, None]
        profile = sigma_profiles(self.spec, 0, t_rows) * self.spec.weights[:, None]
        lin = lin + np.sum(dw * profile.T, axis=1)
        return np.maximum(s, 0.0), lin

    def simulate(self, n: int, rng: np.random.Generator, antithetic: bool):
        base = n // 2 if antithetic else n
        rows = lambda idx: np.concatenate([idx, idx + base]) if antithetic else idx
        mirror = lambda z: np.concatenate([z, -z]) if antithetic else z

        d = self.spec.n_assets
        s = np.tile(self.spots, (n, 1))
        lin = np.zeros(n)
        counts = np.zeros(base, dtype=np.int64)
        for step in range(self.n_steps):
            t = step * self.dt
            jumps = rng.poisson(self.lam * self.dt, size=base) if self.lam > 0 else np.zeros(base, dtype=np.int64)
            counts += jumps

            quiet = rows(np.flatnonzero(jumps == 0))
            if quiet.size:
                z = mirror(rng.standard_normal((quiet.size // (2 if antithetic else 1), d)))
                s[quiet], lin[quiet] = self._diffuse(s[quiet], lin[quiet], t, np.full(quiet.size, self.dt), z)

            for count in np.unique(jumps[jumps > 0]):
                group = np.flatnonzero(jumps == count)
                times = np.sort(rng.uniform(0.0, self.dt, size=(group.size, count)), axis=1)
                edges = np.column_stack([np.zeros(group.size), times, np.full(group.size, self.dt)])
                idx = rows(group)
                copies = 2 if antithetic else 1
                for seg in range(count + 1):
                    ds = np.concatenate([edges[:, seg + 1] - edges[:, seg]] * copies)
                    start = t + np.concatenate([edges[:, seg]] * copies)
                    z = mirror(rng.standard_normal((group.size, d)))
                    s[idx], lin[idx] = self._diffuse(s[idx], lin[idx], start, ds, z)
                    if seg < count:
                        s[idx] = np.maximum(s[idx] * (1.0 + self.h), 0.0)

        all_counts = np.concatenate([counts, counts]) if antithetic else counts
        basket = s @ self.spec.weights
        linearized = (
            self.spec.basket_spot + lin
            + float(np.sum(self.jump_scale)) * (all_counts - self.lam * self.dt * self.n_steps)
        )
        if antithetic:
            order = np.column_stack([np.arange(base), np.arange(base) + base]).reshape(-1)
            basket, linearized, all_counts = basket[order], linearized[order], all_counts[order]
        return basket, linearized, all_counts


def simulate_terminal_basket(spec: BasketSpec, T: float, cfg: McConfig) -> MonteCarloSample:
    """Simulate (S(T), S(0) + S^(1)(T), N(T)) for cfg.n_paths paths."""
    if T <= 0:
        raise ValueError(f"maturity must be > 0, got {T}")
    stepper = _PathStepper(spec, T, cfg.steps_for(T))
    terminal, linearized, counts = _run_blocks(
        cfg, lambda n, rng: stepper.simulate(n, rng, cfg.antithetic)
    )
    return MonteCarloSample(terminal=terminal, linearized=linearized, jump_counts=counts, antithetic=cfg.antithetic)


def _standard_error(values: np.ndarray) -> float:
    return float(np.std(values, ddof=1) / np.sqrt(values.size))


def price_mc(
    spec: BasketSpec,
    T: float,
    K: float,
    cfg: McConfig = McConfig(),
    quadrature: QuadratureConfig = QuadratureConfig(),
) -> McEstimate:
    """Monte Carlo price of (S(T) - K)^+.

    The control variate is (S(0) + S^(1)(T) - K)^+ with its exact mean; it is
    switched off when the Gaussian driver is degenerate.
    """
    sample = simulate_terminal_basket(spec, T, cfg)
    payoff = sample.units(np.maximum(sample.terminal - K, 0.0))
    plain_price = float(np.mean(payoff))
    plain_stderr = _standard_error(payoff)

    price, stderr, beta = plain_price, plain_stderr, None
    if cfg.use_control_variate:
        try:
            control_mean = price_first_order_cv(spec, T, K, quadrature).price
        except DegenerateVolatilityError as e:
            logger.warning("Control variate disabled", error=str(e), error_type=type(e).__name__)
            control_mean = None
        if control_mean is not None:
            control = sample.units(np.maximum(sample.linearized - K, 0.0))
            var_control = float(np.var(control, ddof=1))
            if var_control > 0.0:
                beta = float(np.cov(payoff, control, ddof=1)[0, 1] / var_control)
                adjusted = payoff - beta * (control - control_mean)
                price = float(np.mean(adjusted))
                stderr = _standard_error(adjusted)
            else:
                logger.warning("Control variate disabled", reason="control has zero variance")

    logger.info(
        "Monte Carlo price computed",
        price=price,
        stderr=stderr,
        plain_stderr=plain_stderr,
        cv_beta=beta,
        n_paths=cfg.n_paths,
        steps=cfg.steps_for(T),
        seed=cfg.seed,
        antithetic=cfg.antithetic,
    )
    return McEstimate(
        price=price,
        stderr=stderr,
        n_paths=cfg.n_paths,
        cv_beta=beta,
        plain_price=plain_price,
        plain_stderr=plain_stderr,
        details={"steps": cfg.steps_for(T), "seed": cfg.seed, "antithetic": cfg.antithetic},
    )


@dataclass(frozen=True)
class ConditionalSample:
    """(x, S^A(T)) pairs simulated given N(T) = k, with Delta(T) = v x."""

    k: int
    x: np.ndarray
    expansion: np.ndarray


def simulate_expansion_conditional(spec: BasketSpec, T: float, k: int, cfg: McConfig) -> ConditionalSample:
    """Simulate S^A(T) = S(0) + S^(1)(T) + S^(2)(T)/2 given exactly k jumps.

    The k jump times are uniform order statistics on [0, T]; the Gaussian
    parts are accumulated on the Euler grid and read off at jump times by
    linear interpolation.
    """
    if k < 0:
        raise ValueError(f"jump count must be >= 0, got {k}")
    n_steps = cfg.steps_for(T)
    grid = np.linspace(0.0, T, n_steps + 1)
    dt = T / n_steps
    v = expansion_coefficients(spec, T).v
    factor = cholesky_lower(spec.correlation)
    sig0 = sigma_profiles(spec, 0, grid[:-1]).T
    sig1 = sigma_profiles(spec, 1, grid[:-1]).T
    h = spec.jump_sizes
    s0 = spec.spots
    lam = spec.intensity
    w = spec.weights

    def block(n: int, rng: np.random.Generator):
        dw = np.sqrt(dt) * rng.standard_normal((n, n_steps, spec.n_assets)) @ factor.T
        gauss = np.concatenate([np.zeros((n, 1, spec.n_assets)), np.cumsum(sig0 * dw, axis=1)], axis=1)
        taus = np.sort(rng.uniform(0.0, T, size=(n, k)), axis=1)

        # N(t_j) on the grid (left points), counting jumps at or before t_j
        count_left = (taus[:, None, :] <= grid[None, :-1, None]).sum(axis=2)
        first = gauss[:, :-1, :] + (h * s0)[None, None, :] * (count_left[..., None] - lam * grid[None, :-1, None])
        first_T = gauss[:, -1, :] + h * s0 * (k - lam * T)

        ito = np.sum(sig1 * first * dw, axis=1)
        gauss_area = np.sum(0.5 * (gauss[:, :-1, :] + gauss[:, 1:, :]) * dt, axis=1)
        jump_area = (h * s0)[None, :] * ((T - taus).sum(axis=1)[:, None] - lam * T * T / 2.0)
        drift = -2.0 * lam * h * (gauss_area + jump_area)

        cell = np.clip(np.searchsorted(grid, taus, side="right") - 1, 0, n_steps - 1)[..., None]
        frac = (taus[..., None] - grid[cell]) / dt
        left = np.take_along_axis(gauss, cell, axis=1)
        right = np.take_along_axis(gauss, cell + 1, axis=1)
        at_jumps = left + frac * (right - left)
        before = np.arange(k)[None, :, None]
        pre_jump = at_jumps + (h * s0)[None, None, :] * (before - lam * taus[..., None])
        jump_part = 2.0 * h * pre_jump.sum(axis=1)

        second = drift + 2.0 * ito + jump_part
        basket = spec.basket_spot + first_T @ w + 0.5 * (second @ w)
        return (gauss[:, -1, :] @ w) / v, basket

    x, basket = _run_blocks(cfg, block)
    logger.debug("Conditional expansion sample simulated", k=k, n_paths=cfg.n_paths, steps=n_steps)
    return ConditionalSample(k=k, x=x, expansion=basket)
