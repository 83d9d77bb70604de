# vidscore/reports.py
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from . import __version__
from .bon import BonReport
from .config import RunConfig
from .constants import DIMENSION_TITLES, DIMENSIONS, Dimension, DimensionScope, ReportFormat
from .core import file_digest, payload_digest
from .jsonl import atomic_writer
from .metrics import AgreementReport, PointScoreReport, PreferenceReport


@dataclass
class Table:
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)

    def add(self, *cells: Any) -> None:
        self.rows.append(list(cells))


def fmt_cell(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def render_table(table: Table) -> str:
    cells = [table.columns] + [[fmt_cell(v) for v in row] for row in table.rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(table.columns))]
    lines = []
    for n, row in enumerate(cells):
        lines.append("  ".join(c.rjust(w) if n else c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render_csv(table: Table) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow(["" if v is None else v for v in row])
    return buf.getvalue()


# -------------------------
# Provenance
# -------------------------
def provenance(cfg: Optional[RunConfig], inputs: Mapping[str, str | Path]) -> dict[str, Any]:
    """Config snapshot and input digests; deterministic, no timestamps, no secrets."""
    snapshot = cfg.snapshot() if cfg is not None else {}
    return {
        "version": __version__,
        "config": snapshot,
        "config_digest": payload_digest(snapshot),
        "inputs": {
            name: {"path": str(path), "sha256": file_digest(path)}
            for name, path in sorted(inputs.items())
        },
    }


def render_report(
    name: str,
    results: Mapping[str, Any],
    table: Table,
    fmt: ReportFormat | str,
    prov: Mapping[str, Any],
) -> str:
    fmt = ReportFormat(fmt)
    if fmt is ReportFormat.JSON:
        doc = {"report": name, "provenance": prov, "results": results}
        return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if fmt is ReportFormat.CSV:
        return render_csv(table)
    header = f"# {name}  config={prov.get('config_digest', '')[:12]}"
    for key, meta in (prov.get("inputs") or {}).items():
        header += f"  {key}={meta['sha256'][:12]}"
    return header + "\n" + render_table(table)


def write_report(text: str, out: Optional[str | Path]) -> None:
    if out is None:
        return
    with atomic_writer(out) as f:
        f.write(text)


# -------------------------
# Report layouts
# -------------------------
_AVG = "Avg"


def point_score_table(report: PointScoreReport, label: str = "judge") -> Table:
    """One row, Accuracy / Relaxed / PLCC per dimension then averaged."""
    columns = ["model"]
    row: list[Any] = [label]
    for dim in DIMENSIONS:
        title = DIMENSION_TITLES[dim]
        columns += [f"{title} Acc", f"{title} Relaxed", f"{title} PLCC"]
        m = report.dims.get(dim)
        row += [None, None, None] if m is None else [m.accuracy, m.relaxed_accuracy, m.plcc]
    columns += [f"{_AVG} Acc", f"{_AVG} Relaxed", f"{_AVG} PLCC"]
    row += [report.avg_accuracy, report.avg_relaxed_accuracy, report.avg_plcc]
    return Table(columns, [row])


_SCOPE_TITLES = {
    DimensionScope.VQ: DIMENSION_TITLES[Dimension.VISUAL_QUALITY],
    DimensionScope.TA: DIMENSION_TITLES[Dimension.TEXT_ALIGNMENT],
    DimensionScope.PC: DIMENSION_TITLES[Dimension.PHYSICAL_CONSISTENCY],
    DimensionScope.OVERALL: "Overall",
}


def preference_table(report: PreferenceReport) -> Table:
    table = Table(["scope", "n w/ ties", "acc w/ ties", "n w/o ties", "acc w/o ties", "gt ties", "skipped"])
    for scope, res in report.scopes.items():
        table.add(
            _SCOPE_TITLES[scope],
            res.n_with_ties,
            res.accuracy_with_ties,
            res.n_without_ties,
            res.accuracy_without_ties,
            res.gt_ties,
            res.skipped,
        )
    return table


def agreement_table(reports: Mapping[Dimension, AgreementReport]) -> Table:
    table = Table(["dimension", "relaxed match", "alpha", "items"])
    for dim in DIMENSIONS:
        r = reports.get(dim)
        if r is not None:
            table.add(DIMENSION_TITLES[dim], r.relaxed_match, r.alpha, r.n)
    return table


def bon_table(report: BonReport) -> Table:
    columns = ["group", "sets"]
    for m in report.metrics:
        columns += [f"{m} Random", f"{m} BoN"]
    columns += ["Average Random", "Average BoN"]
    table = Table(columns)
    for row in report.rows:
        cells: list[Any] = [row.group, row.n_sets]
        for m in report.metrics:
            cells += [row.random[m], row.bon[m]]
        cells += [row.random_avg, row.bon_avg]
        table.add(*cells)
    return table


def key_value_table(values: Mapping[str, Any], key: str = "key", value: str = "value") -> Table:
    return Table([key, value], [[k, v] for k, v in values.items()])


def rows_table(columns: Sequence[str], rows: Sequence[Mapping[str, Any]]) -> Table:
    return Table(list(columns), [[r.get(c) for c in columns] for r in rows])
