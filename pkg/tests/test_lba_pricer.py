"""Closed-form quadratic expectation, Poisson weights and LBA prices."""

import math
from unittest import mock

import numpy as np
import pytest
from scipy import integrate, stats

from src.errors import DegenerateVolatilityError
from src.model.volatility import BlackScholes, CEV
from src.pricing import lba_pricer
from src.pricing.expansion import expansion_coefficients, lba_quadratic
from src.pricing.lba_pricer import (
    PoissonTruncation,
    poisson_pmf,
    positive_part_quadratic_expectation,
    price_lba,
)
from tests.conftest import TABLE_H, make_basket


def _quad_oracle(c, a1, a0):
    f = lambda x: max(c * x * x + a1 * x + a0, 0.0) * stats.norm.pdf(x)
    roots = sorted(r.real for r in np.roots([c, a1, a0]) if abs(r.imag) < 1e-12)
    edges = [-np.inf] + sorted(set(roots) | {-12.0, 12.0}) + [np.inf]
    return sum(
        integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        for lo, hi in zip(edges[:-1], edges[1:])
    )


@pytest.mark.parametrize(
    "c, a1, a0, expected",
    [
        (0.0, 1.0, 0.0, 1.0 / math.sqrt(2.0 * math.pi)),
        (1.0, 0.0, 0.0, 1.0),
        (0.0, 0.0, 5.0, 5.0),
        (0.0, 0.0, -5.0, 0.0),
        (-1.0, 0.0, -1.0, 0.0),
        (1.0, 0.0, 1.0, 2.0),
    ],
)
def test_quadratic_expectation_examples(c, a1, a0, expected):
    assert positive_part_quadratic_expectation(c, a1, a0) == pytest.approx(expected, abs=1e-14)


def test_quadratic_expectation_against_quadrature():
    rng = np.random.default_rng(2024)
    for c, a1, a0 in rng.uniform(-10.0, 10.0, size=(1000, 3)):
        assert positive_part_quadratic_expectation(c, a1, a0) == pytest.approx(
            _quad_oracle(c, a1, a0), abs=1e-9
        )


def test_quadratic_expectation_is_nonnegative_and_dominates_mean():
    rng = np.random.default_rng(5)
    for c, a1, a0 in rng.uniform(-3.0, 3.0, size=(200, 3)):
        value = positive_part_quadratic_expectation(c, a1, a0)
        assert value >= 0.0
        assert value >= c + a0 - 1e-12


def test_poisson_pmf_examples():
    assert poisson_pmf(0.0, 1.0, 0) == 1.0
    assert poisson_pmf(0.0, 1.0, 3) == 0.0
    assert poisson_pmf(0.3, 1.0, 0) == pytest.approx(math.exp(-0.3), rel=1e-15)
    assert poisson_pmf(4.0, 2.0, 40) == pytest.approx(stats.poisson.pmf(40, 8.0), rel=1e-12)
    with pytest.raises(ValueError):
        poisson_pmf(0.3, 1.0, -1)


def test_truncation_modes():
    assert PoissonTruncation("paper_compat").resolve(0.3, 1.0)[0] == 9
    k_max, tail = PoissonTruncation("adaptive").resolve(4.0, 2.0)
    assert k_max > 9
    assert tail < 1e-12
    assert PoissonTruncation().resolve(0.0, 1.0) == (0, 0.0)
    weights = PoissonTruncation().terms(0.3, 3.0)
    assert math.fsum(p for _, p in weights) == pytest.approx(1.0, abs=1e-12)


def test_lba_table_one_first_row(table1_spec):
    result = price_lba(table1_spec, 1.0, 100.0, PoissonTruncation("paper_compat"))
    assert result.method == "lba"
    assert result.price == pytest.approx(7.37, abs=0.005)
    assert result.details["k_max"] == 9


@pytest.mark.parametrize(
    "jump_sizes, vol, T, expected",
    [
        ([TABLE_H] * 4, CEV(alpha=0.2, beta=0.8), 1.0, 5.31),
        ([0.0, 0.3, -0.3, 0.0], CEV(alpha=0.2, beta=0.5), 1.0, 0.63),
        ([0.0, 0.3, -0.3, 0.0], CEV(alpha=0.5, beta=0.5), 3.0, 2.59),
    ],
)
def test_lba_cev_benchmarks(jump_sizes, vol, T, expected):
    spec = make_basket(jump_sizes=jump_sizes, vol=vol)
    price = price_lba(spec, T, 100.0, PoissonTruncation("paper_compat")).price
    assert price == pytest.approx(expected, abs=0.01)


def test_lba_without_jump_sizes_is_one_quadratic(base_spec):
    v = math.sqrt(190.0)
    expected = positive_part_quadratic_expectation(0.95, v, -0.95)
    assert price_lba(base_spec, 1.0, 100.0).price == pytest.approx(expected, rel=1e-9)


def test_lba_is_decreasing_and_convex_in_strike(table1_spec):
    strikes = np.linspace(50.0, 150.0, 21)
    prices = np.array([price_lba(table1_spec, 1.0, K).price for K in strikes])
    assert np.all(np.diff(prices) <= 1e-12)
    assert np.all(np.diff(prices, 2) >= -1e-10)


def test_lba_dominates_mixture_of_means(table1_spec):
    coeffs = expansion_coefficients(table1_spec, 1.0)
    truncation = PoissonTruncation()
    floor = math.fsum(
        p * max(q.c + q.a0, 0.0)
        for k, p in truncation.terms(0.3, 1.0)
        for q in [lba_quadratic(coeffs, table1_spec, 1.0, 100.0, k)]
    )
    assert price_lba(table1_spec, 1.0, 100.0, truncation).price >= floor


@pytest.mark.parametrize("T", [1.0, 3.0])
def test_truncation_modes_agree_for_small_intensity(table1_spec, T):
    compat = price_lba(table1_spec, T, 100.0, PoissonTruncation("paper_compat")).price
    adaptive = price_lba(table1_spec, T, 100.0, PoissonTruncation("adaptive")).price
    assert abs(compat - adaptive) < 1e-6


def test_short_truncation_warns_about_tail():
    spec = make_basket(jump_sizes=[0.0, 0.1, 0.3, -0.5], vol=BlackScholes(0.5), correlation=0.9, intensity=4.0)
    with mock.patch.object(lba_pricer.logger, "warning") as warning:
        result = price_lba(spec, 2.0, 100.0, PoissonTruncation("paper_compat"))
    assert result.details["tail_mass"] > 1e-6
    warning.assert_called_once()


def test_lba_rejects_degenerate_driver_and_bad_inputs(base_spec):
    with pytest.raises(DegenerateVolatilityError):
        price_lba(make_basket(vol=BlackScholes(0.0)), 1.0, 100.0)
    with pytest.raises(ValueError):
        price_lba(base_spec, 0.0, 100.0)
    with pytest.raises(ValueError):
        price_lba(base_spec, 1.0, -1.0)
