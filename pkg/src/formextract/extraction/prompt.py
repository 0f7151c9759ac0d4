from __future__ import annotations

import hashlib

from ..schema import ExtractionSchema, FieldSpec

INSTRUCTION = (
    "Analyze the provided image. Extract the values exactly as they appear, and return them "
    'in the json format specified below. If the value is missing, set that element to the string "-".'
)


def _field_line(spec: FieldSpec) -> str:
    text = spec.description
    if spec.format_hint is not None:
        text = f"{text}, {spec.format_hint}"
    elif spec.allowed_values is not None:
        text = f"{text}, {' or '.join(sorted(spec.allowed_values))}"
    return f"'{spec.key}': '{text}'"


def build_system_prompt(schema: ExtractionSchema) -> str:
    """Instruction line followed by one ``'key': 'description'`` line per field."""
    return "\n".join([INSTRUCTION, *(_field_line(spec) for spec in schema)])


def prompt_digest(system_text: str) -> str:
    return hashlib.sha256(system_text.encode("utf-8")).hexdigest()
