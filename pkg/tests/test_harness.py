"""Experiment configs, batch runs, reports and the benchmark tables."""

import json

import pytest
from pydantic import ValidationError

from src.errors import ConfigError, InvalidModelError
from src.harness.report import ComparisonRow, COLUMNS, emit_report, parse_report_csv
from src.harness.runner import comparison_rows, price_rows, reproduce_table, run_price
from src.harness.schema import ExperimentConfig, build_spec, parse_config, to_json
from src.harness.tables import table_definition
from src.pricing.results import PricingResult


def _payload(**overrides):
    payload = {
        "id": "base",
        "assets": [
            {"initial_price": 100.0, "jump_size": -0.2, "vol": {"model": "black_scholes", "sigma": 0.2}}
            for _ in range(4)
        ],
        "weights": [0.25] * 4,
        "correlation": 0.3,
        "intensity": 0.3,
        "maturity": 1.0,
    }
    payload.update(overrides)
    return payload


def _text(**overrides):
    return json.dumps(_payload(**overrides), indent=2)


def test_minimal_config_defaults():
    config = parse_config(_text())
    assert config.methods == ["lba"]
    assert config.truncation == "adaptive"
    assert config.mc.paths == 100_000
    assert config.strikes() == [100.0]
    spec = build_spec(config)
    assert spec.n_assets == 4
    assert spec.correlation.shape == (4, 4)


def test_moneyness_is_percent_of_spot():
    config = parse_config(_text(moneyness=[90.0, 110.0]))
    assert config.strikes() == pytest.approx([90.0, 110.0])


def test_round_trip_through_json():
    config = parse_config(_text(methods=["lba", "mc"], strike=95.0))
    assert parse_config(to_json(config)) == config


def test_missing_weights_is_reported():
    payload = _payload()
    del payload["weights"]
    with pytest.raises(ConfigError) as excinfo:
        parse_config(json.dumps(payload))
    messages = [issue.message for issue in excinfo.value.issues]
    assert "missing field 'weights'" in messages


def test_aea_with_unequal_jump_sizes_is_rejected():
    payload = _payload(methods=["aea"])
    payload["assets"][1]["jump_size"] = 0.3
    with pytest.raises(ConfigError) as excinfo:
        parse_config(json.dumps(payload))
    assert "aea" in str(excinfo.value)


def test_unknown_key_is_rejected():
    with pytest.raises(ConfigError):
        parse_config(_text(lamda=0.3))


def test_schema_errors_carry_line_numbers():
    payload = _payload()
    payload["assets"] = [{"initial_price": 100.0, "jump_size": 0.0, "vol": {"model": "black_scholes", "sigma": -1.0}}]
    payload["weights"] = [1.0]
    text = json.dumps(payload, indent=2)
    expected_line = text[: text.index('"sigma"')].count("\n") + 1
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text)
    assert excinfo.value.issues[0].line == expected_line


def test_malformed_json_is_a_config_error():
    with pytest.raises(ConfigError) as excinfo:
        parse_config('{\n  "id": "x",\n  "assets": [\n}')
    assert excinfo.value.issues[0].line == 4


def test_both_strike_and_moneyness_are_rejected():
    with pytest.raises(ConfigError):
        parse_config(_text(strike=100.0, moneyness=[100.0]))


def test_run_price_orders_bounds():
    results = run_price(parse_config(_text(methods=["lb", "ub"])))
    lower, upper = results
    assert (lower.method, upper.method) == ("lb", "ub")
    assert lower.price <= upper.price
    assert lower.implied_vol is not None


def test_failing_method_does_not_stop_the_batch():
    payload = _payload(methods=["lb", "lba"])
    for asset in payload["assets"]:
        asset["vol"] = {"model": "cev", "alpha": 0.2, "beta": 0.8}
    lb, lba = run_price(parse_config(json.dumps(payload)))
    assert not lb.ok and "Black-Scholes" in lb.error
    assert lba.ok and lba.price > 0.0


def test_invalid_model_raises():
    with pytest.raises(InvalidModelError):
        run_price(parse_config(_text(correlation=1.5)))


def test_price_rows_label_each_strike():
    rows = price_rows(parse_config(_text(moneyness=[90.0, 110.0])))
    assert [row.config for row in rows] == ["base K=90", "base K=110"]


def test_comparison_rows_use_engine_mc_as_reference():
    results = [
        PricingResult(method="mc", price=10.0, strike=100.0, maturity=1.0, stderr=0.01),
        PricingResult(method="lba", price=10.5, strike=100.0, maturity=1.0),
    ]
    mc, lba = comparison_rows("row", results, {"mc": 9.0, "lba": 10.4})
    assert mc.rel_err is None
    assert lba.rel_err == pytest.approx(0.05)
    assert lba.paper == 10.4


def test_comparison_rows_fall_back_to_published_mc():
    results = [PricingResult(method="lba", price=9.9, strike=100.0, maturity=1.0)]
    (lba,) = comparison_rows("row", results, {"mc": 9.0})
    assert lba.rel_err == pytest.approx(0.1)


def test_empty_report_is_header_only():
    assert emit_report([]) == ",".join(COLUMNS) + "\r\n"


def test_report_round_trip():
    rows = [
        ComparisonRow(config="lam=0.3 eta=-0.25 T=1", method="mc", price=7.3512, stderr=0.0101),
        ComparisonRow(config="lam=0.3 eta=-0.25 T=1", method="lba", price=7.37, iv=0.185, rel_err=0.0026, paper=7.37),
        ComparisonRow(config="lam=0.3 eta=-0.25 T=1", method="lb", error="asset 0: needs Black-Scholes, got CEV"),
    ]
    text = emit_report(rows)
    assert text.count("\r\n") == 4
    assert parse_report_csv(text) == rows


def test_markdown_report_has_average_row():
    rows = [
        ComparisonRow(config="a", method="mc", price=10.0, stderr=0.01),
        ComparisonRow(config="a", method="lba", price=10.2, rel_err=0.02),
        ComparisonRow(config="b", method="lba", price=None, error="failed"),
    ]
    text = emit_report(rows, "markdown")
    assert "| config | mc | lba |" in text
    assert "| avg rel err % |  | 2.0 |" in text
    assert "n/a (failed)" in text
    with pytest.raises(ValueError):
        emit_report(rows, "html")


def test_table_definitions():
    sizes = {table_id: len(table_definition(table_id).rows) for table_id in (1, 2, 3, 4)}
    assert sizes == {1: 12, 2: 10, 3: 12, 4: 12}
    assert table_definition(2).rows[0].config.truncation == "adaptive"
    assert table_definition(1).rows[0].config.truncation == "paper_compat"
    assert table_definition(2).rows[0].config.strikes() == pytest.approx([70.0])
    with pytest.raises(KeyError):
        table_definition(5)
    with pytest.raises(KeyError):
        table_definition(4, "sigma_half")


@pytest.mark.parametrize("table_id", [1, 3, 4])
def test_reproduced_lba_matches_published_values(table_id):
    report = reproduce_table(table_id, methods=["lba"])
    assert len(report.rows) == 12
    for row in report.rows:
        assert row.price == pytest.approx(row.paper, abs=0.01), row.config
        assert row.rel_err is not None
    assert set(report.averages) == {"lba"}


def test_reproduce_is_deterministic():
    first = reproduce_table(4, paths=2000, seed=5, methods=["mc", "lba"])
    second = reproduce_table(4, paths=2000, seed=5, methods=["mc", "lba"])
    assert emit_report(first.rows) == emit_report(second.rows)
    assert all(row.stderr is not None for row in first.rows if row.method == "mc")


def test_config_model_is_strict():
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate(_payload(methods=["unknown"]))


def test_table_variants_change_the_data():
    sigma_half = table_definition(1, "sigma_half")
    assert all(row.config.assets[0].vol.sigma == 0.5 for row in sigma_half.rows)
    assert all(row.published == {} for row in sigma_half.rows)
    assert sigma_half.published_average == {"pea": 0.6, "aea": 4.0, "lba": 1.7}
    assert {row.config.intensity for row in table_definition(3, "lambda0").rows} == {0.0}
    assert {row.config.intensity for row in table_definition(3, "lambda1").rows} == {1.0}
    assert table_definition(2, "paper_compat").rows[0].config.truncation == "paper_compat"


@pytest.mark.parametrize("table_id, variant", [(1, "sigma_half"), (3, "lambda0"), (3, "lambda1")])
def test_reproduce_variant_runs_every_row(table_id, variant):
    report = reproduce_table(table_id, methods=["lba"], variant=variant)
    assert report.variant == variant
    assert len(report.rows) == 12
    assert all(row.price is not None and row.price > 0.0 for row in report.rows)
    assert all(row.paper is None and row.rel_err is None for row in report.rows)


# computed LBA column of the high-intensity table; the long-maturity rows do
# not match the published column under either truncation
TABLE2_LBA = {
    None: {
        "T=0.5 K/S=70%": (32.867, 0.005),
        "T=0.5 K/S=90%": (19.597, 0.005),
        "T=0.5 K/S=100%": (14.668, 0.005),
        "T=0.5 K/S=110%": (10.775, 0.005),
        "T=0.5 K/S=130%": (5.528, 0.005),
        "T=2 K/S=70%": (48.82, 0.01),
        "T=2 K/S=90%": (38.99, 0.01),
        "T=2 K/S=100%": (34.79, 0.01),
        "T=2 K/S=110%": (30.99, 0.01),
        "T=2 K/S=130%": (24.44, 0.01),
    },
    "paper_compat": {
        "T=2 K/S=70%": (34.01, 0.01),
        "T=2 K/S=90%": (27.13, 0.01),
        "T=2 K/S=100%": (24.19, 0.01),
        "T=2 K/S=110%": (21.52, 0.01),
        "T=2 K/S=130%": (16.94, 0.01),
    },
}


@pytest.mark.parametrize("variant", [None, "paper_compat"])
def test_table_two_lba_column(variant):
    report = reproduce_table(2, methods=["lba"], variant=variant)
    prices = {row.config: row.price for row in report.rows}
    for label, (expected, tol) in TABLE2_LBA[variant].items():
        assert prices[label] == pytest.approx(expected, abs=tol), label


def test_table_two_error_grows_with_maturity():
    report = reproduce_table(2, methods=["lba"])
    short = [row.rel_err for row in report.rows if row.config.startswith("T=0.5")]
    long = [row.rel_err for row in report.rows if row.config.startswith("T=2")]
    assert sum(long) / len(long) > sum(short) / len(short)
    assert max(short) < 0.05
