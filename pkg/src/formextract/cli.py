"""Command-line entry point.

Exit codes: 0 success, 1 configuration, 2 I/O, 3 provider, 4 parse, 5 coverage.
The API credential is read from the environment variable named by ``API_KEY_ENV``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

from .corpus import Manifest, encode_image, load_manifest
from .errors import ConfigError, CoverageError, FormExtractError, ManifestError, StorageError
from .evaluation import score_run
from .extraction import (
    API_KEY_ENV,
    ModelConfig,
    Provider,
    extract,
    extract_batch,
    http_provider,
    record_mode,
    replay_provider,
)
from .extraction.parsing import FieldValues
from .reporting import RunReport, export_report, render_table
from .schema import default_lease_schema, load_schema

logger = logging.getLogger("formextract")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_PROVIDER, EXIT_PARSE, EXIT_COVERAGE = range(6)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _model_config(args: argparse.Namespace) -> ModelConfig:
    overrides: dict[str, Any] = {}
    for attr, name in [
        ("model", "model_name"),
        ("temperature", "temperature"),
        ("endpoint", "endpoint_url"),
        ("timeout", "request_timeout"),
        ("retries", "max_retries"),
        ("concurrency", "max_concurrent_requests"),
    ]:
        value = getattr(args, attr, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "json_mode", False):
        overrides["json_mode"] = True
    return ModelConfig(**overrides)


def _live_provider(config: ModelConfig) -> Provider:
    credential = os.environ.get(API_KEY_ENV, "")
    if not credential:
        raise ConfigError(f"live provider needs an API key in the {API_KEY_ENV} environment variable")
    return http_provider(config, credential)


def make_provider(kind: str, config: ModelConfig, fixtures: str | None) -> Provider:
    if kind in ("replay", "record") and not fixtures:
        raise ConfigError(f"--provider {kind} requires --fixtures")
    if kind == "replay":
        return replay_provider(fixtures)
    if kind == "live":
        return _live_provider(config)
    if kind == "record":
        return record_mode(_live_provider(config), fixtures)
    raise ConfigError(f"unknown provider {kind!r}")


def _close(provider: Provider) -> None:
    inner = getattr(provider, "inner", provider)
    close = getattr(inner, "close", None)
    if close is not None:
        close()


def _load_nonempty_manifest(path: str) -> Manifest:
    manifest = load_manifest(path)
    if not manifest.samples:
        raise ManifestError(f"manifest {path} has no samples")
    return manifest


def _run_meta(args: argparse.Namespace, provider_name: str, config: ModelConfig | None, started: str) -> dict[str, Any]:
    meta: dict[str, Any] = {"command": args.command, "provider": provider_name}
    if config is not None:
        meta["model_config"] = config.to_dict()
    if getattr(args, "fixtures", None):
        meta["fixtures"] = str(args.fixtures)
    meta["timestamps"] = {"started": started, "finished": _now()}
    return meta


def cmd_extract(args: argparse.Namespace) -> int:
    if args.schema:
        try:
            text = Path(args.schema).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read schema {args.schema}: {exc}") from exc
        schema = load_schema(text)
    else:
        schema = default_lease_schema()
    config = _model_config(args)
    payload = encode_image(args.image, args.rotation)
    scenario = args.scenario or Path(args.image).stem
    provider = make_provider(args.provider, config, args.fixtures)
    try:
        values, _ = extract(payload, schema, provider, config, scenario=scenario, variant=args.variant)
    finally:
        _close(provider)
    print(json.dumps(dict(values.values), indent=2, ensure_ascii=False))
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    started = _now()
    manifest = _load_nonempty_manifest(args.manifest)
    config = _model_config(args)
    provider = make_provider(args.provider, config, args.fixtures)
    try:
        batch = extract_batch(manifest, provider, config)
    finally:
        _close(provider)
    matrix = score_run(manifest, batch.predictions, batch.failures)
    report = RunReport(matrix, _run_meta(args, provider.name, config, started))
    export_report(report, args.out)
    _summarize(report, args.out)
    return EXIT_OK


def _read_predictions(path: str) -> tuple[dict[str, FieldValues], dict[str, str]]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise StorageError(f"cannot read predictions {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"predictions file {path} is not valid JSON: {exc}") from exc
    entries = data.get("predictions") if isinstance(data, dict) else None
    if not isinstance(entries, list):
        raise ConfigError('predictions file must be an object with a "predictions" array')
    predictions: dict[str, FieldValues] = {}
    failures: dict[str, str] = {}
    for i, e in enumerate(entries):
        try:
            sid = f"{e['scenario']}/{e['variant']}"
        except (KeyError, TypeError):
            raise ConfigError(f"predictions[{i}] needs 'scenario' and 'variant'") from None
        if "error" in e:
            failures[sid] = str(e["error"])
            continue
        values = e.get("values")
        if not isinstance(values, dict) or not all(isinstance(v, str) for v in values.values()):
            raise ConfigError(f"predictions[{i}] ({sid}) needs a 'values' object of strings")
        predictions[sid] = FieldValues(values)
    return predictions, failures


def cmd_score(args: argparse.Namespace) -> int:
    started = _now()
    manifest = _load_nonempty_manifest(args.manifest)
    predictions, failures = _read_predictions(args.predictions)
    known = set(manifest.by_id())
    unknown = sorted(set(predictions) - known)
    if unknown:
        raise CoverageError(f"predictions for samples not in the manifest: {', '.join(unknown)}")
    matrix = score_run(manifest, predictions, failures)
    report = RunReport(matrix, _run_meta(args, "predictions-file", None, started))
    export_report(report, args.out)
    _summarize(report, args.out)
    return EXIT_OK


def cmd_record(args: argparse.Namespace) -> int:
    manifest = _load_nonempty_manifest(args.manifest)
    config = _model_config(args)
    provider = record_mode(_live_provider(config), args.fixtures)
    try:
        batch = extract_batch(manifest, provider, config)
    finally:
        _close(provider)
    print(f"recorded {len(batch.raw)} fixture(s) into {args.fixtures}; {len(batch.failures)} sample(s) failed")
    for sid, exc in sorted(batch.failures.items()):
        print(f"  {sid}: {type(exc).__name__}: {exc}", file=sys.stderr)
    if batch.failures:
        return max(exc.exit_code for exc in batch.failures.values())
    return EXIT_OK


def _summarize(report: RunReport, out: str) -> None:
    print(render_table(report.by_scenario), end="")
    failed = report.failed_samples
    if failed:
        print(f"{len(failed)} sample(s) failed: {', '.join(failed)}")
    print(f"report written to {out}")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", help="model name (default gpt-4o-2024-08-06)")
    p.add_argument("--temperature", type=float)
    p.add_argument("--endpoint", help="chat-completions URL")
    p.add_argument("--timeout", type=float, help="per-request timeout in seconds")
    p.add_argument("--retries", type=int, help="retries for transient failures")
    p.add_argument("--concurrency", type=int, help="max requests in flight (default 4)")
    p.add_argument("--json-mode", action="store_true", help="ask the provider for a JSON-only response")


def _add_provider_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--provider", choices=["live", "replay", "record"], default="replay")
    p.add_argument("--fixtures", help="fixture store directory (replay/record)")
    _add_model_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="formextract", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract fields from one image and print them as JSON")
    p.add_argument("--image", required=True)
    p.add_argument("--schema", help="schema JSON file (default: built-in lease schema)")
    p.add_argument("--rotation", type=int, default=0, choices=[0, 90, 180, 270], help="clockwise degrees")
    p.add_argument("--scenario", help="fixture key scenario (default: image file stem)")
    p.add_argument("--variant", default="single", help="fixture key variant")
    _add_provider_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("evaluate", help="extract every manifest sample, score, and write a report")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    _add_provider_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("score", help="score a predictions file against manifest gold labels")
    p.add_argument("--manifest", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("record", help="query the live provider and store replay fixtures")
    p.add_argument("--manifest", required=True)
    p.add_argument("--fixtures", required=True)
    _add_model_flags(p)
    p.set_defaults(func=cmd_record)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FormExtractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
