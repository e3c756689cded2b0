"""Shared baskets for the pricing tests."""

import math

import pytest

from src.model.market_model import BasketSpec
from src.model.volatility import CEV, BlackScholes

TABLE_H = math.exp(-0.25) - 1.0


def make_basket(jump_sizes=(0.0, 0.0, 0.0, 0.0), vol=None, correlation=0.3, intensity=0.3, spot=100.0):
    """Four-asset equally weighted basket, Black-Scholes 20% unless vol is given."""
    n = len(jump_sizes)
    return BasketSpec.homogeneous(
        n=n,
        spot=spot,
        jump_sizes=list(jump_sizes),
        vol=vol if vol is not None else BlackScholes(0.2),
        weight=1.0 / n,
        correlation=correlation,
        intensity=intensity,
    )


@pytest.fixture
def basket_factory():
    return make_basket


@pytest.fixture
def base_spec():
    """No jumps in the prices, sigma = 0.2, rho = 0.3."""
    return make_basket()


@pytest.fixture
def table1_spec():
    """lambda = 0.3, common jump size e^{-0.25} - 1."""
    return make_basket(jump_sizes=[TABLE_H] * 4)


@pytest.fixture
def cev_spec():
    """CEV(0.2, 0.8) with the common jump size."""
    return make_basket(jump_sizes=[TABLE_H] * 4, vol=CEV(alpha=0.2, beta=0.8))


@pytest.fixture
def heterogeneous_spec():
    """CEV(0.2, 0.5) with jump sizes (0, 0.3, -0.3, 0)."""
    return make_basket(jump_sizes=[0.0, 0.3, -0.3, 0.0], vol=CEV(alpha=0.2, beta=0.5))
