import io
import json

import pytest
from PIL import Image

from formextract.corpus import (
    VARIANTS,
    Manifest,
    Sample,
    dump_manifest,
    encode_image,
    image_size,
    load_manifest,
)
from formextract.errors import ImageError, ManifestError, StorageError

from helpers import gold_for, write_corpus, write_png


def test_load_full_corpus(tmp_path):
    manifest = load_manifest(write_corpus(tmp_path))
    assert len(manifest) == 15
    assert manifest.scenarios == ("S1", "S2", "S3")
    assert manifest.variants == VARIANTS


def test_empty_manifest_is_valid(tmp_path):
    path = tmp_path / "m.json"
    path.write_text('{"schema": "default", "samples": []}')
    assert len(load_manifest(path)) == 0


def _rewrite(path, mutate):
    data = json.loads(path.read_text())
    mutate(data)
    path.write_text(json.dumps(data))


def test_missing_gold_key(tmp_path):
    path = write_corpus(tmp_path)
    _rewrite(path, lambda d: d["samples"][0]["gold"].pop("rental_unit_province"))
    with pytest.raises(ManifestError, match="rental_unit_province"):
        load_manifest(path)


def test_unknown_gold_key(tmp_path):
    path = write_corpus(tmp_path)
    _rewrite(path, lambda d: d["samples"][0]["gold"].update(bogus="1"))
    with pytest.raises(ManifestError, match="bogus"):
        load_manifest(path)


def test_duplicate_sample(tmp_path):
    path = write_corpus(tmp_path)
    _rewrite(path, lambda d: d["samples"].append(d["samples"][0]))
    with pytest.raises(ManifestError, match="duplicate"):
        load_manifest(path)


def test_missing_image(tmp_path):
    path = write_corpus(tmp_path)
    (tmp_path / "images" / "S2_neat_sd.png").unlink()
    with pytest.raises(ManifestError, match="S2_neat_sd.png"):
        load_manifest(path)


def test_bad_rotation(tmp_path):
    path = write_corpus(tmp_path)
    _rewrite(path, lambda d: d["samples"][0].update(rotation=45))
    with pytest.raises(ManifestError, match="rotation"):
        load_manifest(path)


def test_schema_by_path_and_inline(tmp_path, lease_schema):
    path = write_corpus(tmp_path)
    (tmp_path / "schema.json").write_text(json.dumps(lease_schema.to_dict()))
    _rewrite(path, lambda d: d.update(schema="schema.json"))
    by_path = load_manifest(path)
    assert by_path.schema == lease_schema
    _rewrite(path, lambda d: d.update(schema=lease_schema.to_dict()))
    assert load_manifest(path) == by_path


def test_manifest_round_trip(tmp_path):
    first = load_manifest(write_corpus(tmp_path, order=list(range(14, -1, -1))))
    out = tmp_path / "sub" / "copy.json"
    out.parent.mkdir()
    dump_manifest(first, out)
    assert load_manifest(out) == first


def test_gold_must_be_complete_in_memory(tmp_path, lease_schema):
    gold = gold_for("S1")
    gold.pop("landlord_last_name")
    with pytest.raises(ManifestError, match="landlord_last_name"):
        Manifest(lease_schema, (Sample("S1", "typed_hd", tmp_path / "x.png", gold),))


class TestEncodeImage:
    def test_rotation_zero_is_byte_identical(self, tmp_path):
        path = tmp_path / "form.jpg"
        Image.new("RGB", (30, 50), (10, 200, 30)).save(path, format="JPEG", quality=70)
        payload = encode_image(path, 0)
        assert payload.media_type == "image/jpeg"
        assert payload.decode() == path.read_bytes()

    @pytest.mark.parametrize("fmt, media", [("PNG", "image/png"), ("JPEG", "image/jpeg")])
    def test_quarter_turn_swaps_dimensions(self, tmp_path, fmt, media):
        path = tmp_path / f"form.{fmt.lower()}"
        Image.new("RGB", (30, 50), (200, 200, 200)).save(path, format=fmt)
        payload = encode_image(path, 90)
        assert payload.media_type == media
        assert image_size(payload) == (50, 30)
        assert image_size(encode_image(path, 180)) == (30, 50)
        assert image_size(encode_image(path, 270)) == (50, 30)

    def test_rotation_is_clockwise_and_lossless_for_png(self, tmp_path):
        path = write_png(tmp_path / "a.png", size=(4, 2))  # red marker at top-left
        rotated = Image.open(io.BytesIO(encode_image(path, 90).decode()))
        assert rotated.size == (2, 4)
        assert rotated.getpixel((1, 0)) == (255, 0, 0)  # top-left goes to top-right
        assert rotated.getpixel((0, 0)) == (255, 255, 255)

    def test_four_quarter_turns_restore_dimensions(self, tmp_path):
        path = write_png(tmp_path / "a.png", size=(7, 3))
        current = path
        for i in range(4):
            payload = encode_image(current, 90)
            current = tmp_path / f"step{i}.png"
            current.write_bytes(payload.decode())
        assert Image.open(current).size == (7, 3)
        assert Image.open(current).tobytes() == Image.open(path).tobytes()

    def test_missing_file(self, tmp_path):
        with pytest.raises(StorageError):
            encode_image(tmp_path / "nope.png", 0)

    def test_not_an_image(self, tmp_path):
        path = tmp_path / "x.png"
        path.write_text("hello")
        with pytest.raises(ImageError):
            encode_image(path, 0)

    def test_unsupported_format(self, tmp_path):
        path = tmp_path / "x.bmp"
        Image.new("RGB", (3, 3)).save(path, format="BMP")
        with pytest.raises(ImageError, match="unsupported"):
            encode_image(path, 0)

    def test_data_url(self, tmp_path):
        payload = encode_image(write_png(tmp_path / "a.png"), 0)
        assert payload.data_url.startswith("data:image/png;base64,")
