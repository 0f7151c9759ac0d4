"""Turn a model's free-text answer into a complete key -> text map."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Mapping

from ..errors import MissingKeysError, ParseError
from ..schema import ExtractionSchema

logger = logging.getLogger(__name__)

_decoder = json.JSONDecoder()


@dataclass(frozen=True)
class RawResponse:
    text: str
    provider_meta: Mapping[str, Any] = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class FieldValues:
    values: Mapping[str, str]
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __getitem__(self, key: str) -> str:
        return self.values[key]

    def __len__(self) -> int:
        return len(self.values)

    def to_json(self) -> str:
        return json.dumps(dict(self.values), ensure_ascii=False)


def find_json_object(text: str) -> dict[str, Any]:
    """Return the first decodable JSON object embedded in ``text``.

    Surrounding prose and code fences are skipped; braces inside JSON strings
    are handled by the decoder itself.
    """
    start = text.find("{")
    if start < 0:
        raise ParseError("no JSON object found in response")
    first_error: json.JSONDecodeError | None = None
    while start >= 0:
        try:
            obj, _ = _decoder.raw_decode(text, start)
        except json.JSONDecodeError as exc:
            first_error = first_error or exc
        else:
            if isinstance(obj, dict):
                return obj
        start = text.find("{", start + 1)
    raise ParseError(f"malformed JSON object in response: {first_error}")


def _as_text(value: Any, yes_no: bool) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        if yes_no:
            return "yes" if value else "no"
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return json.dumps(value)
    return json.dumps(value, ensure_ascii=False)


def parse_response(raw: RawResponse | str, schema: ExtractionSchema) -> FieldValues:
    text = raw.text if isinstance(raw, RawResponse) else raw
    obj = find_json_object(text)
    missing = [k for k in schema.keys if k not in obj]
    if missing:
        raise MissingKeysError(missing)
    warnings = []
    extra = [k for k in obj if k not in set(schema.keys)]
    if extra:
        msg = f"dropped {len(extra)} key(s) not in schema: {', '.join(extra)}"
        logger.warning(msg)
        warnings.append(msg)
    values = {spec.key: _as_text(obj[spec.key], spec.is_yes_no) for spec in schema}
    return FieldValues(values, tuple(warnings))
