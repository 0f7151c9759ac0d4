"""Experiment corpus: form images, their scenario/variant identity, and gold labels."""

from __future__ import annotations

import base64
import io
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from PIL import Image, UnidentifiedImageError

from .errors import ImageError, ManifestError, SchemaError, StorageError
from .schema import ExtractionSchema, default_lease_schema, schema_from_dict, load_schema

# Conventional capture formats, easiest first. Other names are accepted as-is.
VARIANTS = ("typed_hd", "neat_hd", "neat_sd", "sloppy_hd", "sloppy_sd")
ROTATIONS = (0, 90, 180, 270)

_MEDIA_TYPES = {"PNG": "image/png", "JPEG": "image/jpeg"}


@dataclass(frozen=True)
class Sample:
    scenario: str
    variant: str
    image: Path
    gold: Mapping[str, str]
    rotation: int = 0

    def __post_init__(self) -> None:
        if not self.scenario or not self.variant:
            raise ManifestError("sample scenario and variant must be non-empty")
        if self.rotation not in ROTATIONS:
            raise ManifestError(f"sample {self.id}: rotation must be one of {ROTATIONS}, got {self.rotation!r}")
        object.__setattr__(self, "image", Path(self.image))
        object.__setattr__(self, "gold", dict(self.gold))

    @property
    def id(self) -> str:
        return f"{self.scenario}/{self.variant}"

    @property
    def sort_key(self) -> tuple:
        return (scenario_sort_key(self.scenario), variant_sort_key(self.variant))


def scenario_sort_key(name: str) -> tuple:
    # "S2" before "S10"
    m = re.fullmatch(r"(.*?)(\d+)", name)
    if m:
        return (m.group(1), int(m.group(2)), name)
    return (name, -1, name)


def variant_sort_key(name: str) -> tuple:
    if name in VARIANTS:
        return (0, VARIANTS.index(name), name)
    return (1, 0, name)


@dataclass(frozen=True)
class Manifest:
    schema: ExtractionSchema
    samples: tuple[Sample, ...]
    schema_ref: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))
        keys = set(self.schema.keys)
        seen: set[str] = set()
        for sample in self.samples:
            if sample.id in seen:
                raise ManifestError(f"duplicate sample (scenario, variant): {sample.id}")
            seen.add(sample.id)
            missing = [k for k in self.schema.keys if k not in sample.gold]
            if missing:
                raise ManifestError(f"sample {sample.id}: gold is missing key(s): {', '.join(missing)}")
            unknown = sorted(set(sample.gold) - keys)
            if unknown:
                raise ManifestError(f"sample {sample.id}: gold has unknown key(s): {', '.join(unknown)}")
            bad = [k for k, v in sample.gold.items() if not isinstance(v, str)]
            if bad:
                raise ManifestError(f"sample {sample.id}: gold values must be text: {', '.join(bad)}")

    def __len__(self) -> int:
        return len(self.samples)

    def by_id(self) -> dict[str, Sample]:
        return {s.id: s for s in self.samples}

    @property
    def scenarios(self) -> tuple[str, ...]:
        return tuple(sorted({s.scenario for s in self.samples}, key=scenario_sort_key))

    @property
    def variants(self) -> tuple[str, ...]:
        return tuple(sorted({s.variant for s in self.samples}, key=variant_sort_key))


def _resolve_schema(ref: Any, base: Path) -> tuple[ExtractionSchema, str | None]:
    if ref is None or ref == "default":
        return default_lease_schema(), None
    if isinstance(ref, dict):
        return schema_from_dict(ref), None
    if isinstance(ref, str):
        path = base / ref
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ManifestError(f"cannot read schema {path}: {exc}") from exc
        return load_schema(text), ref
    raise ManifestError('"schema" must be a path, an inline schema object, or "default"')


def manifest_from_dict(data: Any, base: Path, check_images: bool = True) -> Manifest:
    if not isinstance(data, dict) or not isinstance(data.get("samples", None), list):
        raise ManifestError('manifest must be an object with a "samples" array')
    try:
        schema, ref = _resolve_schema(data.get("schema"), base)
    except SchemaError as exc:
        raise ManifestError(f"manifest schema: {exc}") from exc
    samples = []
    for i, item in enumerate(data["samples"]):
        if not isinstance(item, dict):
            raise ManifestError(f"samples[{i}] is not an object")
        try:
            scenario, variant, image = item["scenario"], item["variant"], item["image"]
            gold = item["gold"]
        except KeyError as exc:
            raise ManifestError(f"samples[{i}] is missing {exc.args[0]!r}") from None
        if not isinstance(gold, dict):
            raise ManifestError(f"samples[{i}].gold must be an object")
        rotation = item.get("rotation", 0)
        path = (base / image).resolve()
        if check_images and not path.is_file():
            raise ManifestError(f"samples[{i}] ({scenario}/{variant}): image file not found: {path}")
        samples.append(Sample(str(scenario), str(variant), path, gold, rotation))
    return Manifest(schema, tuple(samples), schema_ref=ref)


def load_manifest(path: str | os.PathLike[str], check_images: bool = True) -> Manifest:
    """Load and validate a manifest; relative paths resolve against its directory."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc}") from exc
    return manifest_from_dict(data, path.parent, check_images=check_images)


def manifest_to_dict(manifest: Manifest, base: Path | None = None) -> dict[str, Any]:
    def rel(p: Path) -> str:
        if base is None:
            return str(p)
        return os.path.relpath(p, base)

    return {
        "schema": manifest.schema_ref if manifest.schema_ref is not None else manifest.schema.to_dict(),
        "samples": [
            {
                "scenario": s.scenario,
                "variant": s.variant,
                "image": rel(s.image),
                "rotation": s.rotation,
                "gold": dict(s.gold),
            }
            for s in manifest.samples
        ],
    }


def dump_manifest(manifest: Manifest, path: str | os.PathLike[str]) -> None:
    path = Path(path)
    data = manifest_to_dict(manifest, path.parent.resolve())
    path.write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class ImagePayload:
    media_type: str
    data_b64: str

    def __post_init__(self) -> None:
        if not self.data_b64:
            raise ImageError("image payload is empty")

    @property
    def data_url(self) -> str:
        return f"data:{self.media_type};base64,{self.data_b64}"

    def decode(self) -> bytes:
        return base64.b64decode(self.data_b64)


_TRANSPOSE = {
    90: Image.Transpose.ROTATE_270,  # PIL's ROTATE_* turn counter-clockwise
    180: Image.Transpose.ROTATE_180,
    270: Image.Transpose.ROTATE_90,
}


def encode_image(image_ref: str | os.PathLike[str], rotation: int = 0) -> ImagePayload:
    """Base64-encode an image, turning it clockwise by ``rotation`` degrees first.

    With rotation 0 the file bytes are sent untouched. Otherwise the pixels are
    re-encoded in the source format: PNG losslessly, JPEG at maximum quality.
    """
    if rotation not in ROTATIONS:
        raise ImageError(f"rotation must be one of {ROTATIONS}, got {rotation!r}")
    path = Path(image_ref)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise StorageError(f"cannot read image {path}: {exc}") from exc
    if not raw:
        raise ImageError(f"image {path} is empty")
    try:
        with Image.open(io.BytesIO(raw)) as img:
            fmt = img.format
            if fmt not in _MEDIA_TYPES:
                raise ImageError(f"unsupported image format {fmt!r} for {path}; expected PNG or JPEG")
            if rotation == 0:
                img.verify()
                return ImagePayload(_MEDIA_TYPES[fmt], base64.b64encode(raw).decode("ascii"))
            rotated = img.transpose(_TRANSPOSE[rotation])
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageError(f"cannot decode image {path}: {exc}") from exc
    buf = io.BytesIO()
    if fmt == "PNG":
        rotated.save(buf, format="PNG")
    else:
        rotated.save(buf, format="JPEG", quality=100, subsampling=0)
    return ImagePayload(_MEDIA_TYPES[fmt], base64.b64encode(buf.getvalue()).decode("ascii"))


def image_size(payload: ImagePayload) -> tuple[int, int]:
    with Image.open(io.BytesIO(payload.decode())) as img:
        return img.size

