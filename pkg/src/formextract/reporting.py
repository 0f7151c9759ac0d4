"""Render accuracy tables, the scenario-by-format heatmap, and results.json."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Literal, Mapping
from xml.sax.saxutils import escape

from .corpus import scenario_sort_key, variant_sort_key
from .errors import StorageError
from .evaluation import AccuracyTable, ScoreMatrix, aggregate_by, heatmap_grid, overall_accuracy
from .extraction.providers import atomic_write_text

RESULTS_VERSION = 1
REPORT_FILES = ("results.json", "by_scenario.md", "by_scenario.csv", "by_format.md", "by_format.csv", "heatmap.svg")

# linear ramp from the 0.0 color to the 1.0 color
LOW_RGB = (247, 251, 255)
HIGH_RGB = (8, 48, 107)


def round_half_up(value: Fraction | float, places: int = 2) -> str:
    x = Fraction(value)
    scale = 10**places
    n = math.floor(x * scale + Fraction(1, 2))
    sign = "-" if n < 0 else ""
    whole, frac = divmod(abs(n), scale)
    return f"{sign}{whole}.{frac:0{places}d}" if places else f"{sign}{whole}"


def _rows(table: AccuracyTable) -> list[list[str]]:
    rows = []
    for k in table.fields:
        rows.append([k, *(round_half_up(table.cell(k, g)) for g in table.groups), round_half_up(table.field_average(k))])
    return rows


def render_table(table: AccuracyTable, format: Literal["markdown", "csv"] = "markdown") -> str:
    """Field rows in schema order, then an Average row; every number is a rounded exact mean."""
    header = ["Field", *table.groups, "Average"]
    average = ["Average", *(round_half_up(table.group_average(g)) for g in table.groups), round_half_up(table.overall)]
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(header)
        writer.writerows(_rows(table))
        writer.writerow(average)
        return buf.getvalue()
    if format != "markdown":
        raise ValueError(f"unknown table format {format!r}")

    def line(cells: list[str]) -> str:
        return "| " + " | ".join(c.replace("|", "\\|") for c in cells) + " |"

    out = [line(header), "|" + "|".join([" --- "] + [" ---: "] * (len(header) - 1)) + "|"]
    out += [line(r) for r in _rows(table)]
    out.append(line([f"**{c}**" for c in average]))
    return "\n".join(out) + "\n"


def parse_table_csv(text: str) -> dict[tuple[str, str], float]:
    reader = list(csv.reader(io.StringIO(text)))
    header = reader[0]
    return {(row[0], header[j]): float(row[j]) for row in reader[1:] for j in range(1, len(header))}


def scale_color(value: Fraction | float) -> str:
    t = min(max(float(value), 0.0), 1.0)
    rgb = (round(lo + (hi - lo) * t) for lo, hi in zip(LOW_RGB, HIGH_RGB))
    return "#" + "".join(f"{c:02x}" for c in rgb)


def render_heatmap(grid: Mapping[tuple[str, str], Fraction | float], title: str = "Accuracy by scenario and format") -> str:
    if not grid:
        raise ValueError("heatmap grid is empty")
    scenarios = sorted({s for s, _ in grid}, key=scenario_sort_key)
    variants = sorted({v for _, v in grid}, key=variant_sort_key)
    cw, ch, left, top = 90, 44, 70, 60
    width = left + cw * len(variants) + 20
    height = top + ch * len(scenarios) + 20
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="13">',
        f'<text x="{width / 2:g}" y="20" text-anchor="middle" font-size="15">{escape(title)}</text>',
    ]
    for j, v in enumerate(variants):
        out.append(f'<text class="col-label" x="{left + cw * j + cw / 2:g}" y="{top - 10}" text-anchor="middle">{escape(v)}</text>')
    for i, s in enumerate(scenarios):
        y = top + ch * i
        out.append(f'<text class="row-label" x="{left - 10}" y="{y + ch / 2 + 5:g}" text-anchor="end">{escape(s)}</text>')
        for j, v in enumerate(variants):
            x = left + cw * j
            value = grid.get((s, v))
            if value is None:
                out.append(f'<rect class="cell empty" x="{x}" y="{y}" width="{cw}" height="{ch}" fill="#dddddd" stroke="#ffffff"/>')
                out.append(f'<text x="{x + cw / 2:g}" y="{y + ch / 2 + 5:g}" text-anchor="middle" fill="#666666">n/a</text>')
                continue
            ink = "#ffffff" if float(value) > 0.5 else "#000000"
            out.append(
                f'<rect class="cell" data-scenario="{escape(s)}" data-variant="{escape(v)}" x="{x}" y="{y}" '
                f'width="{cw}" height="{ch}" fill="{scale_color(value)}" stroke="#ffffff"/>'
            )
            out.append(f'<text x="{x + cw / 2:g}" y="{y + ch / 2 + 5:g}" text-anchor="middle" fill="{ink}">{round_half_up(value)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class RunReport:
    matrix: ScoreMatrix
    run_meta: Mapping[str, Any] = field(default_factory=dict)

    @property
    def by_scenario(self) -> AccuracyTable:
        return aggregate_by(self.matrix, "scenario")

    @property
    def by_format(self) -> AccuracyTable:
        return aggregate_by(self.matrix, "variant")

    @property
    def heatmap(self) -> dict[tuple[str, str], Fraction]:
        return heatmap_grid(self.matrix)

    @property
    def failed_samples(self) -> list[str]:
        return sorted({f"{r.scenario}/{r.variant}" for r in self.matrix.records if r.error is not None})

    def to_dict(self) -> dict[str, Any]:
        overall = overall_accuracy(self.matrix)
        return {
            "version": RESULTS_VERSION,
            "run_meta": dict(self.run_meta),
            "fields": list(self.matrix.keys),
            "summary": {
                "samples": len(self.matrix.samples),
                "overall": {"value": float(overall), "exact": f"{overall.numerator}/{overall.denominator}"},
                "failed_samples": self.failed_samples,
            },
            "tables": {"by_scenario": self.by_scenario.to_dict(), "by_format": self.by_format.to_dict()},
            "heatmap": [
                {"scenario": s, "variant": v, "value": float(x), "exact": f"{x.numerator}/{x.denominator}"}
                for (s, v), x in sorted(
                    self.heatmap.items(), key=lambda kv: (scenario_sort_key(kv[0][0]), variant_sort_key(kv[0][1]))
                )
            ],
            "per_sample": self.matrix.to_records(),
        }


def report_from_results(data: Mapping[str, Any]) -> RunReport:
    """Rebuild a report from a results.json document's per-sample records."""
    return RunReport(ScoreMatrix.from_records(data["fields"], data["per_sample"]), data.get("run_meta", {}))


def export_report(report: RunReport, directory: str | os.PathLike[str]) -> list[Path]:
    """Write the six report files; each is written to a temp file and renamed into place."""
    out = Path(directory)
    by_scenario, by_format = report.by_scenario, report.by_format
    contents = {
        "results.json": json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n",
        "by_scenario.md": render_table(by_scenario, "markdown"),
        "by_scenario.csv": render_table(by_scenario, "csv"),
        "by_format.md": render_table(by_format, "markdown"),
        "by_format.csv": render_table(by_format, "csv"),
        "heatmap.svg": render_heatmap(report.heatmap),
    }
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name in REPORT_FILES:
            path = out / name
            atomic_write_text(path, contents[name])
            written.append(path)
    except OSError as exc:
        raise StorageError(f"cannot write report to {out}: {exc}") from exc
    return written
