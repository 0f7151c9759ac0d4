from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from ..corpus import ImagePayload, Manifest, Sample, encode_image
from ..errors import FormExtractError
from ..schema import ExtractionSchema, validate_value
from .parsing import FieldValues, RawResponse, parse_response
from .prompt import build_system_prompt
from .providers import ExtractionRequest, ModelConfig, Provider

logger = logging.getLogger(__name__)


def extract(
    image: ImagePayload,
    schema: ExtractionSchema,
    provider: Provider,
    config: ModelConfig | None = None,
    *,
    scenario: str | None = None,
    variant: str | None = None,
) -> tuple[FieldValues, RawResponse]:
    request = ExtractionRequest(build_system_prompt(schema), image, config or ModelConfig(), scenario, variant)
    raw = provider.execute(request)
    values = parse_response(raw, schema)
    notes = []
    for spec in schema:
        verdict = validate_value(spec, values[spec.key])
        if not verdict.ok:
            notes.append(f"{spec.key}: {verdict.reason}")
            logger.info("%s/%s %s: %s", scenario, variant, spec.key, verdict.reason)
    if notes:
        values = replace(values, warnings=values.warnings + tuple(notes))
    return values, raw


@dataclass
class BatchResult:
    predictions: dict[str, FieldValues]
    raw: dict[str, RawResponse]
    failures: dict[str, FormExtractError]


def _extract_sample(sample: Sample, schema: ExtractionSchema, provider: Provider, config: ModelConfig):
    payload = encode_image(sample.image, sample.rotation)
    return extract(payload, schema, provider, config, scenario=sample.scenario, variant=sample.variant)


def extract_batch(manifest: Manifest, provider: Provider, config: ModelConfig | None = None) -> BatchResult:
    """Run every sample through the provider, at most ``max_concurrent_requests`` at a time.

    A failing sample is recorded in ``failures`` and does not stop the batch.
    """
    config = config or ModelConfig()
    result = BatchResult({}, {}, {})
    with ThreadPoolExecutor(max_workers=config.max_concurrent_requests) as pool:
        futures = {
            s.id: pool.submit(_extract_sample, s, manifest.schema, provider, config) for s in manifest.samples
        }
        for sid, fut in futures.items():
            try:
                values, raw = fut.result()
            except FormExtractError as exc:
                logger.warning("sample %s failed: %s", sid, exc)
                result.failures[sid] = exc
            else:
                result.predictions[sid] = values
                result.raw[sid] = raw
    return result
