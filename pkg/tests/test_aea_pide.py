"""Linearized local variance and the forward PIDE."""

import math

import numpy as np
import pytest

from src.errors import DegenerateVolatilityError, UnsupportedModelError
from src.harness.schema import build_spec
from src.harness.tables import table_definition
from src.model.volatility import CEV, BlackScholes, TabulatedVolatility
from src.pricing.aea_pide import (
    LocalVarianceApprox,
    PideGridConfig,
    local_variance_coefficients,
    price_aea,
    solve_pide,
)
from src.pricing.special import norm_pdf
from tests.conftest import TABLE_H, make_basket

TABLE1_ROWS = table_definition(1).rows
TABLE3_ROWS = table_definition(3).rows


def _published_tolerance(value):
    return max(0.01, 0.01 * value)


def test_coefficients_of_base_basket(base_spec):
    approx = local_variance_coefficients(base_spec, 1.0)
    assert approx.a == pytest.approx(190.0)
    assert approx.b == pytest.approx(3.8)
    assert approx.sigma_c2 == pytest.approx(190.0)


def test_literal_sigma_c_mode(base_spec):
    approx = local_variance_coefficients(base_spec, 1.0, sigma_c_mode="paper_literal")
    assert approx.sigma_c2 == pytest.approx(760.0)
    assert approx.b == pytest.approx(0.95)


def test_single_asset_coefficients():
    sigma = 0.3
    spec = make_basket(jump_sizes=[0.0], vol=BlackScholes(sigma))
    approx = local_variance_coefficients(spec, 2.0)
    assert approx.a == pytest.approx((sigma * 100.0) ** 2)
    assert approx.b == pytest.approx(2.0 * sigma ** 2 * 100.0)


def test_unequal_jump_sizes_are_unsupported(heterogeneous_spec):
    with pytest.raises(UnsupportedModelError):
        local_variance_coefficients(heterogeneous_spec, 1.0)
    with pytest.raises(UnsupportedModelError):
        price_aea(heterogeneous_spec, 1.0, 100.0)


def test_zero_volatility_is_degenerate():
    with pytest.raises(DegenerateVolatilityError):
        local_variance_coefficients(make_basket(vol=BlackScholes(0.0)), 1.0)


def test_grid_time_steps():
    grid = PideGridConfig(steps_per_year=400)
    assert grid.time_steps(1.0, 0.3, -0.2) == 400
    assert grid.time_steps(2.0, 500.0, 1.0) == 4000
    with pytest.raises(ValueError):
        PideGridConfig(n_strikes=5)
    with pytest.raises(ValueError):
        PideGridConfig(advection="upwind")


def test_bachelier_limit():
    spec = make_basket(intensity=0.0)
    approx = LocalVarianceApprox(a=190.0, b=0.0, spot=100.0)
    solution = solve_pide(spec, 1.0, approx, PideGridConfig(n_strikes=800, steps_per_year=800), strike=100.0)
    expected = math.sqrt(190.0) * float(norm_pdf(0.0))
    assert solution.price == pytest.approx(expected, rel=1e-3)
    assert solution.monotonicity_violations == 0


def test_initial_layer_and_boundaries(base_spec):
    approx = local_variance_coefficients(base_spec, 1.0)
    solution = solve_pide(base_spec, 0.5, approx, PideGridConfig(n_strikes=100, steps_per_year=50))
    assert np.allclose(solution.surface[0], np.maximum(100.0 - solution.strikes, 0.0))
    assert solution.final_layer[0] == pytest.approx(100.0)
    assert solution.final_layer[-1] == pytest.approx(0.0, abs=1e-12)
    assert solution.strikes[-1] == pytest.approx(500.0)


def test_table_one_first_row(table1_spec):
    result = price_aea(table1_spec, 1.0, 100.0)
    assert result.method == "aea"
    assert result.price == pytest.approx(7.35, rel=0.01)


def test_price_is_decreasing_in_strike(table1_spec):
    approx = local_variance_coefficients(table1_spec, 1.0)
    solution = solve_pide(table1_spec, 1.0, approx, PideGridConfig(n_strikes=200, steps_per_year=200))
    assert np.all(np.diff(solution.final_layer) <= 1e-8)


def test_negative_variance_is_floored():
    spec = make_basket(intensity=0.0)
    approx = LocalVarianceApprox(a=10.0, b=-1.0, spot=100.0)
    solution = solve_pide(spec, 0.1, approx, PideGridConfig(n_strikes=100, steps_per_year=100))
    assert solution.floored_nodes > 0
    assert np.all(np.isfinite(solution.final_layer))


def test_time_dependent_path_matches_constant_levels(table1_spec):
    flat = TabulatedVolatility(BlackScholes(0.2), (0.0, 1.0), (1.0, 1.0))
    spec = make_basket(jump_sizes=list(table1_spec.jump_sizes), vol=flat)
    grid = PideGridConfig(n_strikes=100, steps_per_year=100)
    dynamic = price_aea(spec, 1.0, 100.0, grid).price
    static = price_aea(table1_spec, 1.0, 100.0, grid).price
    assert dynamic == pytest.approx(static, rel=1e-8)


@pytest.mark.slow
def test_grid_refinement_converges(table1_spec):
    prices = [
        price_aea(table1_spec, 1.0, 100.0, PideGridConfig(n_strikes=n, steps_per_year=n)).price
        for n in (200, 400, 800)
    ]
    assert abs(prices[2] - prices[1]) < 0.6 * abs(prices[1] - prices[0])


@pytest.mark.parametrize("row", TABLE1_ROWS, ids=[row.label for row in TABLE1_ROWS])
def test_table_one_aea_column(row):
    spec = build_spec(row.config)
    result = price_aea(spec, row.config.maturity, 100.0)
    published = row.published["aea"]
    assert result.price == pytest.approx(published, abs=_published_tolerance(published))


@pytest.mark.parametrize("row", TABLE3_ROWS, ids=[row.label for row in TABLE3_ROWS])
def test_table_three_aea_column(row):
    spec = build_spec(row.config)
    result = price_aea(spec, row.config.maturity, 100.0)
    published = row.published["aea"]
    assert result.price == pytest.approx(published, abs=_published_tolerance(published))
    assert result.details["advection"] == "central"


def test_hybrid_advection_smears_low_vol_cev():
    # drift dominates sigma^2 here, so upwinding adds diffusion and lifts the ATM price
    spec = make_basket(jump_sizes=[TABLE_H] * 4, vol=CEV(alpha=0.2, beta=0.5))
    central = price_aea(spec, 3.0, 100.0).price
    hybrid = price_aea(spec, 3.0, 100.0, PideGridConfig(advection="hybrid")).price
    assert central == pytest.approx(8.98, abs=0.09)
    assert hybrid > central + 0.05
