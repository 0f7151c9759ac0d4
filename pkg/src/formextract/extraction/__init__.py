from .parsing import FieldValues, RawResponse, find_json_object, parse_response
from .pipeline import BatchResult, extract, extract_batch
from .prompt import INSTRUCTION, build_system_prompt, prompt_digest
from .providers import (
    API_KEY_ENV,
    ExtractionRequest,
    HttpProvider,
    ModelConfig,
    Provider,
    RecordingProvider,
    ReplayProvider,
    build_payload,
    fixture_key,
    http_provider,
    record_mode,
    replay_provider,
)

__all__ = [
    "API_KEY_ENV",
    "BatchResult",
    "ExtractionRequest",
    "FieldValues",
    "HttpProvider",
    "INSTRUCTION",
    "ModelConfig",
    "Provider",
    "RawResponse",
    "RecordingProvider",
    "ReplayProvider",
    "build_payload",
    "build_system_prompt",
    "extract",
    "extract_batch",
    "find_json_object",
    "fixture_key",
    "http_provider",
    "parse_response",
    "prompt_digest",
    "record_mode",
    "replay_provider",
]
