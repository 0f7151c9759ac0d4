"""Field schemas: which keys an extraction run must return and how to describe them."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Iterator

from .errors import SchemaError

MISSING = "-"
KEY_PATTERN = re.compile(r"[a-z][a-z0-9_]*")

# format hints made only of these characters are read as shape templates
_SHAPE_HINT = re.compile(r"[A-Za-z0-9 \-]+")


@dataclass(frozen=True)
class FieldSpec:
    key: str
    description: str
    format_hint: str | None = None
    allowed_values: frozenset[str] | None = None

    def __post_init__(self) -> None:
        if not self.key:
            raise SchemaError("field key must be non-empty")
        if not KEY_PATTERN.fullmatch(self.key):
            raise SchemaError(f"field key {self.key!r} is not lowercase snake_case")
        if self.allowed_values is not None:
            if not isinstance(self.allowed_values, frozenset):
                object.__setattr__(self, "allowed_values", frozenset(self.allowed_values))
            if not self.allowed_values:
                raise SchemaError(f"field {self.key!r}: allowed_values must not be empty")

    @property
    def is_yes_no(self) -> bool:
        return self.allowed_values == frozenset({"yes", "no"})

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"key": self.key, "description": self.description}
        if self.format_hint is not None:
            out["format_hint"] = self.format_hint
        if self.allowed_values is not None:
            out["allowed_values"] = sorted(self.allowed_values)
        return out


@dataclass(frozen=True)
class ExtractionSchema:
    fields: tuple[FieldSpec, ...]
    name: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "fields", tuple(self.fields))
        if not self.fields:
            raise SchemaError("schema must declare at least one field")
        seen: set[str] = set()
        for spec in self.fields:
            if spec.key in seen:
                raise SchemaError(f"duplicate field key {spec.key!r}")
            seen.add(spec.key)

    @property
    def keys(self) -> tuple[str, ...]:
        return tuple(spec.key for spec in self.fields)

    def __len__(self) -> int:
        return len(self.fields)

    def __iter__(self) -> Iterator[FieldSpec]:
        return iter(self.fields)

    def __getitem__(self, key: str) -> FieldSpec:
        for spec in self.fields:
            if spec.key == key:
                return spec
        raise KeyError(key)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        if self.name is not None:
            out["name"] = self.name
        out["fields"] = [spec.to_dict() for spec in self.fields]
        return out


def schema_from_dict(data: Any) -> ExtractionSchema:
    if not isinstance(data, dict) or not isinstance(data.get("fields"), list):
        raise SchemaError('schema document must be an object with a "fields" array')
    specs = []
    for i, item in enumerate(data["fields"]):
        if not isinstance(item, dict):
            raise SchemaError(f"fields[{i}] is not an object")
        unknown = set(item) - {"key", "description", "format_hint", "allowed_values"}
        if unknown:
            raise SchemaError(f"fields[{i}] has unknown attribute(s): {', '.join(sorted(unknown))}")
        key, description = item.get("key"), item.get("description")
        if not isinstance(key, str) or not isinstance(description, str):
            raise SchemaError(f"fields[{i}] needs string 'key' and 'description'")
        hint = item.get("format_hint")
        if hint is not None and not isinstance(hint, str):
            raise SchemaError(f"fields[{i}].format_hint must be a string")
        allowed = item.get("allowed_values")
        if allowed is not None:
            if not isinstance(allowed, list) or not all(isinstance(v, str) for v in allowed):
                raise SchemaError(f"fields[{i}].allowed_values must be an array of strings")
            allowed = frozenset(allowed)
        specs.append(FieldSpec(key, description, hint, allowed))
    name = data.get("name")
    return ExtractionSchema(tuple(specs), name=name if isinstance(name, str) else None)


def load_schema(document: str) -> ExtractionSchema:
    """Parse a JSON schema document, keeping the declared field order."""
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"schema document is not valid JSON: {exc}") from exc
    return schema_from_dict(data)


def dump_schema(schema: ExtractionSchema) -> str:
    return json.dumps(schema.to_dict(), indent=2, ensure_ascii=False) + "\n"


def default_lease_schema() -> ExtractionSchema:
    """The 14 first-page fields of the Ontario Standard Form of Lease."""
    text = resources.files("formextract").joinpath("data/lease_schema.json").read_text(encoding="utf-8")
    return load_schema(text)


@dataclass(frozen=True)
class Verdict:
    ok: bool
    reason: str | None = None


OK = Verdict(True)


def _hint_regex(hint: str) -> re.Pattern[str] | None:
    if not _SHAPE_HINT.fullmatch(hint) or not any(c.isdigit() for c in hint):
        return None
    parts = []
    for c in hint:
        if c.isdigit():
            parts.append(r"\d")
        elif c.isalpha():
            parts.append("[A-Za-z]")
        else:
            parts.append(re.escape(c))
    return re.compile("".join(parts))


def validate_value(spec: FieldSpec, value: str) -> Verdict:
    """Advisory check of a returned value against the field's declared format.

    Never rejects or rewrites anything: scoring always uses the raw text.
    """
    if value == MISSING:
        return OK
    text = value.strip()
    if spec.allowed_values is not None:
        if text.casefold() not in {v.casefold() for v in spec.allowed_values}:
            return Verdict(False, "not in allowed values")
        return OK
    if spec.format_hint is not None:
        pattern = _hint_regex(spec.format_hint)
        if pattern is not None and not pattern.fullmatch(text):
            return Verdict(False, f"does not resemble format {spec.format_hint!r}")
    return OK
