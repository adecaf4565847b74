"""Report emitters: CSV, Markdown and plot data, plus multi-run comparison."""

from __future__ import annotations

import csv
import io
from collections.abc import Mapping, Sequence
from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from ..core.errors import EmptyInputError, SchemaError
from ..sim.models import EncounterResult
from .safety import standard_error
from .slicing import Facet, SliceKey, SliceReport, parse_facet, slice_aggregate

REPORT_COLUMNS = (
    "n",
    "nmac_count",
    "nmac_freq",
    "nmac_se",
    "alert_steps",
    "total_steps",
    "alert_freq",
    "alert_se",
    "precision",
    "recall",
    "map",
)


class SimulationSummary(BaseModel):
    """Overall and per-facet safety metrics of one batch."""

    master_seed: int = 0
    perception: str = ""
    n_failures: int = Field(0, ge=0)
    overall: SliceReport
    facets: dict[Facet, list[SliceReport]] = Field(default_factory=dict)

    model_config = ConfigDict(frozen=True)


def summarize_results(
    results: Sequence[EncounterResult],
    facets: Sequence[str | Facet] = (),
    master_seed: int = 0,
    perception: str = "",
    n_failures: int = 0,
) -> SimulationSummary:
    """NMAC and alert frequencies overall and per requested facet.

    Raises:
        EmptyInputError: If there are no results
    """
    if not results:
        msg = "No encounter results to summarize"
        raise EmptyInputError(msg)
    overall = slice_aggregate(results, Facet.ALL)[0]
    by_facet = {parse_facet(f): slice_aggregate(results, f) for f in facets}
    by_facet.pop(Facet.ALL, None)
    return SimulationSummary(
        master_seed=master_seed,
        perception=perception,
        n_failures=n_failures,
        overall=overall,
        facets=by_facet,
    )


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def reports_to_csv(reports: Sequence[SliceReport]) -> str:
    """One row per slice key."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["facet", "value", *REPORT_COLUMNS])
    for report in reports:
        row = report.model_dump()
        cells = [_cell(row[c]) for c in REPORT_COLUMNS]
        writer.writerow([report.key.facet.value, report.key.value, *cells])
    return buffer.getvalue()


def _used_columns(reports: Sequence[SliceReport]) -> list[str]:
    dumped = [r.model_dump() for r in reports]
    return [
        c
        for c in REPORT_COLUMNS
        if c == "n" or any(row[c] is not None for row in dumped)
    ]


def reports_to_markdown(reports: Sequence[SliceReport]) -> str:
    """Markdown table showing only the metrics present in ``reports``."""
    columns = _used_columns(reports)
    lines = [
        "| " + " | ".join(["Facet", "Value", *columns]) + " |",
        "|" + "|".join(["---"] * (len(columns) + 2)) + "|",
    ]
    for report in reports:
        row = report.model_dump()
        cells = [report.key.facet.value, report.key.value]
        cells += [_cell(row[c]) for c in columns]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def reports_to_plot_data(reports: Sequence[SliceReport]) -> dict[str, Any]:
    """Facet -> {"labels": [...], "series": {metric: [...]}} for any plotting tool."""
    data: dict[str, Any] = {}
    for report in reports:
        facet = data.setdefault(report.key.facet.value, {"labels": [], "series": {}})
        facet["labels"].append(report.key.value)
        row = report.model_dump()
        for column in _used_columns(reports):
            facet["series"].setdefault(column, []).append(row[column])
    return data


class ComparisonRow(BaseModel):
    """One slice key across several runs."""

    key: SliceKey
    columns: dict[str, dict[str, float | int | None]]

    model_config = ConfigDict(frozen=True)


def _recomputed(report: SliceReport) -> dict[str, float | int | None]:
    row: dict[str, float | int | None] = {"n": report.n}
    if report.nmac_count is not None and report.n:
        p = report.nmac_count / report.n
        row.update(nmac_freq=p, nmac_se=standard_error(p, report.n))
    if report.alert_steps is not None and report.total_steps:
        p = report.alert_steps / report.total_steps
        row.update(alert_freq=p, alert_se=standard_error(p, report.total_steps))
    return row


def compare_summaries(
    summaries: Mapping[str, SimulationSummary]
) -> list[ComparisonRow]:
    """Side-by-side rows keyed by slice, frequencies recomputed from counts.

    Raises:
        EmptyInputError: If no summaries are given
        SchemaError: If the summaries were sliced along different facets
    """
    if not summaries:
        msg = "At least one summary is required"
        raise EmptyInputError(msg)
    labels = list(summaries)
    facet_sets = {label: set(s.facets) for label, s in summaries.items()}
    reference = facet_sets[labels[0]]
    for label in labels[1:]:
        if facet_sets[label] != reference:
            found = sorted(f.value for f in facet_sets[label])
            expected = sorted(f.value for f in reference)
            msg = f"Summary {label!r} has facets {found}, expected {expected}"
            raise SchemaError(msg, field="facets")
    rows = [
        ComparisonRow(
            key=summaries[labels[0]].overall.key,
            columns={label: _recomputed(s.overall) for label, s in summaries.items()},
        )
    ]
    for facet in sorted(reference, key=lambda f: list(Facet).index(f)):
        per_label = {
            label: {r.key.value: r for r in s.facets[facet]}
            for label, s in summaries.items()
        }
        for report in summaries[labels[0]].facets[facet]:
            rows.append(
                ComparisonRow(
                    key=report.key,
                    columns={
                        label: _recomputed(per_label[label][report.key.value])
                        if report.key.value in per_label[label]
                        else {"n": 0}
                        for label in labels
                    },
                )
            )
    return rows


_COMPARISON_METRICS = ("n", "nmac_freq", "nmac_se", "alert_freq", "alert_se")


def _comparison_cells(row: ComparisonRow, labels: Sequence[str]) -> list[str]:
    return [
        _cell(row.columns[label].get(metric))
        for label in labels
        for metric in _COMPARISON_METRICS
    ]


def comparison_to_markdown(rows: Sequence[ComparisonRow]) -> str:
    labels = list(rows[0].columns) if rows else []
    header = ["Facet", "Value"]
    header += [f"{label} {m}" for label in labels for m in _COMPARISON_METRICS]
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join(["---"] * len(header)) + "|",
    ]
    for row in rows:
        cells = [row.key.facet.value, row.key.value, *_comparison_cells(row, labels)]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def comparison_to_csv(rows: Sequence[ComparisonRow]) -> str:
    labels = list(rows[0].columns) if rows else []
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    header = ["facet", "value"]
    header += [f"{label}:{m}" for label in labels for m in _COMPARISON_METRICS]
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [row.key.facet.value, row.key.value, *_comparison_cells(row, labels)]
        )
    return buffer.getvalue()
