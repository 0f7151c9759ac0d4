"""Exact-match scoring against gold labels and accuracy aggregation.

All means are kept as :class:`fractions.Fraction`; rounding belongs to the
reporting layer.
"""

from __future__ import annotations

import random
import string
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Literal, Mapping

from .corpus import Manifest, scenario_sort_key, variant_sort_key
from .errors import CoverageError, FormExtractError
from .extraction.parsing import FieldValues
from .schema import ExtractionSchema

Axis = Literal["scenario", "variant"]


def normalize(value: str) -> str:
    return value.strip().casefold()


def match_field(gold: str, predicted: str) -> bool:
    """Exact match, forgiving only letter case and outer whitespace."""
    return normalize(gold) == normalize(predicted)


@dataclass(frozen=True)
class ScoreRecord:
    scenario: str
    variant: str
    field: str
    gold: str
    predicted: str | None
    correct: bool
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        out = {
            "scenario": self.scenario,
            "variant": self.variant,
            "field": self.field,
            "gold": self.gold,
            "predicted": self.predicted,
            "correct": self.correct,
        }
        if self.error is not None:
            out["error"] = self.error
        return out

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ScoreRecord:
        return cls(d["scenario"], d["variant"], d["field"], d["gold"], d["predicted"], bool(d["correct"]), d.get("error"))


@dataclass(frozen=True)
class ScoreMatrix:
    keys: tuple[str, ...]
    records: tuple[ScoreRecord, ...]
    scenarios: tuple[str, ...] = field(init=False)
    variants: tuple[str, ...] = field(init=False)

    def __post_init__(self) -> None:
        order = {k: i for i, k in enumerate(self.keys)}
        by_sample: dict[tuple[str, str], set[str]] = defaultdict(set)
        for r in self.records:
            if r.field not in order:
                raise CoverageError(f"record for unknown field {r.field!r}")
            cell = by_sample[(r.scenario, r.variant)]
            if r.field in cell:
                raise CoverageError(f"duplicate record {r.scenario}/{r.variant}/{r.field}")
            cell.add(r.field)
        for (s, v), fields in by_sample.items():
            if len(fields) != len(self.keys):
                missing = [k for k in self.keys if k not in fields]
                raise CoverageError(f"sample {s}/{v} lacks scores for: {', '.join(missing)}")
        records = sorted(
            self.records, key=lambda r: (scenario_sort_key(r.scenario), variant_sort_key(r.variant), order[r.field])
        )
        object.__setattr__(self, "keys", tuple(self.keys))
        object.__setattr__(self, "records", tuple(records))
        object.__setattr__(
            self, "scenarios", tuple(sorted({s for s, _ in by_sample}, key=scenario_sort_key))
        )
        object.__setattr__(self, "variants", tuple(sorted({v for _, v in by_sample}, key=variant_sort_key)))

    @property
    def entries(self) -> dict[tuple[str, str, str], bool]:
        return {(r.scenario, r.variant, r.field): r.correct for r in self.records}

    @property
    def samples(self) -> list[tuple[str, str]]:
        seen: dict[tuple[str, str], None] = {}
        for r in self.records:
            seen.setdefault((r.scenario, r.variant), None)
        return list(seen)

    def __len__(self) -> int:
        return len(self.records)

    def to_records(self) -> list[dict[str, Any]]:
        return [r.to_dict() for r in self.records]

    @classmethod
    def from_records(cls, keys: Iterable[str], rows: Iterable[Mapping[str, Any]]) -> ScoreMatrix:
        return cls(tuple(keys), tuple(ScoreRecord.from_dict(r) for r in rows))


def matrix_from_correctness(keys: Iterable[str], cells: Mapping[tuple[str, str], Iterable[bool]]) -> ScoreMatrix:
    """Build a matrix straight from booleans; ``cells[(scenario, variant)]`` follows ``keys`` order."""
    keys = tuple(keys)
    records = []
    for (s, v), flags in cells.items():
        flags = list(flags)
        if len(flags) != len(keys):
            raise CoverageError(f"sample {s}/{v}: expected {len(keys)} flags, got {len(flags)}")
        for k, ok in zip(keys, flags):
            records.append(ScoreRecord(s, v, k, "", None, bool(ok)))
    return ScoreMatrix(keys, tuple(records))


def score_run(
    manifest: Manifest,
    predictions: Mapping[str, FieldValues | Mapping[str, str]],
    failures: Mapping[str, Any] | None = None,
) -> ScoreMatrix:
    """Compare each sample's prediction with its gold labels, field by field.

    Samples listed in ``failures`` score as incorrect on every field and
    carry the failure message.
    """
    failures = failures or {}
    schema: ExtractionSchema = manifest.schema
    records = []
    for sample in manifest.samples:
        if sample.id in failures:
            msg = str(failures[sample.id]) or type(failures[sample.id]).__name__
            for k in schema.keys:
                records.append(ScoreRecord(sample.scenario, sample.variant, k, sample.gold[k], None, False, msg))
            continue
        if sample.id not in predictions:
            raise CoverageError(f"no prediction for sample {sample.id}")
        pred = predictions[sample.id]
        values = pred.values if isinstance(pred, FieldValues) else pred
        missing = [k for k in schema.keys if k not in values]
        extra = [k for k in values if k not in set(schema.keys)]
        if missing or extra:
            raise CoverageError(
                f"prediction for {sample.id} does not match the schema"
                + (f"; missing: {', '.join(missing)}" if missing else "")
                + (f"; unknown: {', '.join(extra)}" if extra else "")
            )
        for k in schema.keys:
            gold, predicted = sample.gold[k], values[k]
            records.append(
                ScoreRecord(sample.scenario, sample.variant, k, gold, predicted, match_field(gold, predicted))
            )
    return ScoreMatrix(schema.keys, tuple(records))


def _mean(values: Iterable[Fraction | int | bool]) -> Fraction:
    values = list(values)
    if not values:
        raise FormExtractError("mean of an empty group")
    if all(isinstance(v, int) for v in values):
        return Fraction(sum(values), len(values))
    return sum(values, Fraction(0)) / len(values)


@dataclass(frozen=True)
class AccuracyTable:
    axis: str
    fields: tuple[str, ...]
    groups: tuple[str, ...]
    cells: Mapping[tuple[str, str], Fraction]

    def cell(self, key: str, group: str) -> Fraction:
        return self.cells[(key, group)]

    def field_average(self, key: str) -> Fraction:
        return _mean(self.cells[(key, g)] for g in self.groups)

    def group_average(self, group: str) -> Fraction:
        return _mean(self.cells[(k, group)] for k in self.fields)

    @property
    def overall(self) -> Fraction:
        return _mean(self.field_average(k) for k in self.fields)

    def to_dict(self) -> dict[str, Any]:
        def num(x: Fraction) -> dict[str, Any]:
            return {"value": float(x), "exact": f"{x.numerator}/{x.denominator}"}

        return {
            "axis": self.axis,
            "groups": list(self.groups),
            "rows": [
                {
                    "field": k,
                    "cells": {g: num(self.cells[(k, g)]) for g in self.groups},
                    "average": num(self.field_average(k)),
                }
                for k in self.fields
            ],
            "average": {
                "cells": {g: num(self.group_average(g)) for g in self.groups},
                "average": num(self.overall),
            },
        }


def aggregate_by(matrix: ScoreMatrix, axis: Axis, groups: Iterable[str] | None = None) -> AccuracyTable:
    if not matrix.records:
        raise FormExtractError("cannot aggregate an empty score matrix")
    if axis not in ("scenario", "variant"):
        raise ValueError(f"axis must be 'scenario' or 'variant', not {axis!r}")
    groups = tuple(groups) if groups is not None else (matrix.scenarios if axis == "scenario" else matrix.variants)
    buckets: dict[tuple[str, str], list[bool]] = defaultdict(list)
    for r in matrix.records:
        buckets[(r.field, getattr(r, axis))].append(r.correct)
    cells = {}
    for g in groups:
        for k in matrix.keys:
            if not buckets.get((k, g)):
                raise FormExtractError(f"group {g!r} has no samples")
            cells[(k, g)] = _mean(buckets[(k, g)])
    return AccuracyTable(axis, matrix.keys, groups, cells)


def heatmap_grid(matrix: ScoreMatrix) -> dict[tuple[str, str], Fraction]:
    """Per-sample accuracy over all fields, keyed by (scenario, variant)."""
    buckets: dict[tuple[str, str], list[bool]] = defaultdict(list)
    for r in matrix.records:
        buckets[(r.scenario, r.variant)].append(r.correct)
    return {sv: _mean(flags) for sv, flags in buckets.items()}


def overall_accuracy(matrix: ScoreMatrix) -> Fraction:
    return _mean(r.correct for r in matrix.records)


_COMMON_NAMES = ("Jane", "Wayne", "Donaldson", "Sampath", "Robert", "Michelle", "Allen", "Edwards", "Smith")


def _perturb(value: str, rng: random.Random) -> str:
    style = rng.randrange(3)
    digits = [i for i, c in enumerate(value) if c.isdigit()]
    if style == 0 and digits:
        i = rng.choice(digits)
        return value[:i] + rng.choice([d for d in string.digits if d != value[i]]) + value[i + 1:]
    if style == 1 and len(value) > 1:
        i = rng.randrange(len(value))
        return value[:i] + value[i + 1:]
    return rng.choice(_COMMON_NAMES)


def corrupt(value: str, rng: random.Random) -> str:
    """A plausible misreading of ``value`` that never matches it."""
    for _ in range(20):
        out = _perturb(value, rng)
        if not match_field(value, out):
            return out
    return value + "?"


def synth_predictions(manifest: Manifest, error_rate: float, seed: int) -> dict[str, FieldValues]:
    """Gold labels with each field independently misread with probability ``error_rate``."""
    if not 0.0 <= error_rate <= 1.0:
        raise ValueError("error_rate must lie in [0, 1]")
    rng = random.Random(seed)
    out = {}
    for sample in manifest.samples:
        values = {}
        for k in manifest.schema.keys:
            gold = sample.gold[k]
            values[k] = corrupt(gold, rng) if rng.random() < error_rate else gold
        out[sample.id] = FieldValues(values)
    return out


__all__ = [
    "AccuracyTable",
    "ScoreMatrix",
    "ScoreRecord",
    "aggregate_by",
    "corrupt",
    "heatmap_grid",
    "match_field",
    "matrix_from_correctness",
    "normalize",
    "overall_accuracy",
    "score_run",
    "synth_predictions",
]
