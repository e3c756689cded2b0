"""Comparison rows and their CSV / markdown rendering."""

import csv
import io
from dataclasses import dataclass, fields
from typing import Dict, List, Literal, Optional, Sequence

COLUMNS = ("config", "method", "price", "stderr", "iv", "rel_err", "paper", "error")

ReportFormat = Literal["csv", "markdown"]


@dataclass(frozen=True)
class ComparisonRow:
    """One method on one configuration.

    rel_err is |price - MC| / MC; iv is only set when the price is inside
    the Black-Scholes no-arbitrage bounds.
    """

    config: str
    method: str
    price: Optional[float] = None
    stderr: Optional[float] = None
    iv: Optional[float] = None
    rel_err: Optional[float] = None
    paper: Optional[float] = None
    error: Optional[str] = None


def _cell(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def _csv(rows: Sequence[ComparisonRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([
            row.config, row.method, _cell(row.price), _cell(row.stderr),
            _cell(row.iv), _cell(row.rel_err), _cell(row.paper), row.error or "",
        ])
    return buffer.getvalue()


def average_relative_errors(rows: Sequence[ComparisonRow]) -> Dict[str, float]:
    """Mean relative error per method, in percent."""
    grouped: Dict[str, List[float]] = {}
    for row in rows:
        if row.rel_err is not None:
            grouped.setdefault(row.method, []).append(row.rel_err)
    return {method: 100.0 * sum(values) / len(values) for method, values in grouped.items()}


def _markdown(rows: Sequence[ComparisonRow]) -> str:
    methods: List[str] = []
    configs: List[str] = []
    cells: Dict[tuple, ComparisonRow] = {}
    for row in rows:
        if row.method not in methods:
            methods.append(row.method)
        if row.config not in configs:
            configs.append(row.config)
        cells[(row.config, row.method)] = row

    lines = [
        "| config | " + " | ".join(methods) + " |",
        "|---|" + "---|" * len(methods),
    ]
    for config in configs:
        rendered = []
        for method in methods:
            row = cells.get((config, method))
            if row is None:
                rendered.append("")
            elif row.price is None:
                rendered.append(f"n/a ({row.error})" if row.error else "n/a")
            else:
                text = f"{row.price:.2f}"
                if row.stderr is not None:
                    text += f" ({row.stderr:.2f})"
                if row.iv is not None:
                    text += f" [{100.0 * row.iv:.1f}]"
                if row.paper is not None:
                    text += f" / {row.paper:.2f}"
                rendered.append(text)
        lines.append(f"| {config} | " + " | ".join(rendered) + " |")

    averages = average_relative_errors(rows)
    if averages:
        lines.append(
            "| avg rel err % | "
            + " | ".join(f"{averages[m]:.1f}" if m in averages else "" for m in methods)
            + " |"
        )
    return "\n".join(lines) + "\n"


def emit_report(rows: Sequence[ComparisonRow], fmt: ReportFormat = "csv") -> str:
    """Render rows as RFC 4180 CSV or a markdown table (price (stderr) [IV %] / published)."""
    if fmt == "csv":
        return _csv(rows)
    if fmt == "markdown":
        return _markdown(rows)
    raise ValueError(f"unknown report format: {fmt}")


def parse_report_csv(text: str) -> List[ComparisonRow]:
    """Read back a CSV produced by emit_report."""
    reader = csv.DictReader(io.StringIO(text, newline=""))
    numeric = {f.name for f in fields(ComparisonRow)} - {"config", "method", "error"}
    rows = []
    for record in reader:
        values = {key: (float(record[key]) if record[key] else None) for key in numeric}
        rows.append(ComparisonRow(
            config=record["config"], method=record["method"], error=record.get("error") or None, **values
        ))
    return rows
