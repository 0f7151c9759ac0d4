"""Schema-driven field extraction from form images, with an exact-match evaluation harness."""

from .corpus import ImagePayload, Manifest, Sample, encode_image, load_manifest
from .evaluation import (
    AccuracyTable,
    ScoreMatrix,
    aggregate_by,
    heatmap_grid,
    match_field,
    normalize,
    score_run,
    synth_predictions,
)
from .extraction import FieldValues, ModelConfig, RawResponse, build_system_prompt, parse_response
from .schema import ExtractionSchema, FieldSpec, default_lease_schema, load_schema, validate_value

__version__ = "0.1.0"
