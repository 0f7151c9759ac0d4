"""Shared builders for the test-suite: synthetic corpora and the published accuracy tables."""

from __future__ import annotations

import json
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from PIL import Image

from formextract.corpus import VARIANTS
from formextract.schema import default_lease_schema

LEASE_KEYS = default_lease_schema().keys

# One gold record per scenario, in lease-schema key order.
SCENARIO_GOLD = {
    "S1": ["Robert", "Edwards", "Michelle", "Allen", "-", "-", "4", "1201", "Beverly Street", "Toronto", "ON", "M5T 1A1", "1", "no"],
    "S2": ["Amy", "Liu", "Russell", "Moran", "Caleb", "Joon", "-", "138", "New York Street", "London", "ON", "N6A 3K7", "2", "yes"],
    "S3": ["Jame", "Wane", "-", "Douglasson", "Ishan", "Farmer", "12", "12004", "Hutchinson", "Hamilton", "ON", "-", "-", "-"],
}

TABLE_1 = """\
landlord_first_name 1.00 1.00 0.40 0.80
landlord_last_name 1.00 0.40 0.20 0.53
tenant_1_first_name 1.00 0.80 0.20 0.67
tenant_1_last_name 0.80 0.40 0.40 0.53
tenant_2_first_name 1.00 1.00 0.80 0.93
tenant_2_last_name 1.00 0.40 0.40 0.60
rental_unit_unit 0.80 1.00 1.00 0.93
rental_unit_street_number 0.40 0.20 0.20 0.27
rental_unit_street_name 1.00 1.00 0.80 0.93
rental_unit_city_town 1.00 1.00 1.00 1.00
rental_unit_province 1.00 1.00 1.00 1.00
rental_unit_postal_code 0.40 0.40 1.00 0.60
rental_number_vehicle_spaces 1.00 1.00 0.80 0.93
rental_unit_condominium 1.00 0.40 0.00 0.47
Average 0.89 0.71 0.59 0.73
"""

# columns in VARIANTS order: typed_hd, neat_hd, neat_sd, sloppy_hd, sloppy_sd
TABLE_2 = """\
landlord_first_name 1.00 0.67 1.00 0.67 0.67 0.80
landlord_last_name 1.00 0.67 0.33 0.33 0.33 0.53
tenant_1_first_name 1.00 0.67 0.67 0.67 0.33 0.67
tenant_1_last_name 1.00 0.33 0.67 0.00 0.67 0.53
tenant_2_first_name 1.00 1.00 0.67 1.00 1.00 0.93
tenant_2_last_name 1.00 0.67 0.33 0.67 0.33 0.60
rental_unit_unit 1.00 1.00 1.00 1.00 0.67 0.93
rental_unit_street_number 1.00 0.33 0.00 0.00 0.00 0.27
rental_unit_street_name 1.00 1.00 1.00 1.00 0.67 0.93
rental_unit_city_town 1.00 1.00 1.00 1.00 1.00 1.00
rental_unit_province 1.00 1.00 1.00 1.00 1.00 1.00
rental_unit_postal_code 1.00 0.33 0.67 0.67 0.33 0.60
rental_number_vehicle_spaces 1.00 1.00 1.00 0.67 1.00 0.93
rental_unit_condominium 0.67 0.67 0.33 0.33 0.33 0.47
Average 0.98 0.74 0.69 0.64 0.60 0.73
"""


def parse_printed(text: str) -> tuple[dict[str, list[str]], list[str]]:
    rows = {}
    for line in text.splitlines():
        name, *cells = line.split()
        rows[name] = cells
    average = rows.pop("Average")
    return rows, average


def _two_places(k: int, n: int) -> str:
    return str((Decimal(k) / Decimal(n)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def realize_counts(text: str, n: int) -> dict[str, list[int]]:
    """Recover each printed cell as k/n by enumerating k = 0..n and keeping the unique k that prints the same."""
    rows, _ = parse_printed(text)
    counts = {}
    for key, cells in rows.items():
        ks = []
        for printed in cells[:-1]:
            hits = [k for k in range(n + 1) if _two_places(k, n) == printed]
            assert len(hits) == 1, (key, printed, hits)
            ks.append(hits[0])
        counts[key] = ks
    return counts


def table1_correctness() -> dict[tuple[str, str], list[bool]]:
    """Boolean cells whose per-scenario means equal the first table: k of 5 variants correct."""
    counts = realize_counts(TABLE_1, 5)
    cells = {}
    for si, scenario in enumerate(["S1", "S2", "S3"]):
        for vi, variant in enumerate(VARIANTS):
            cells[(scenario, variant)] = [vi < counts[k][si] for k in LEASE_KEYS]
    return cells


def table2_correctness() -> dict[tuple[str, str], list[bool]]:
    """Boolean cells whose per-format means equal the second table: k of 3 scenarios correct."""
    counts = realize_counts(TABLE_2, 3)
    cells = {}
    for si, scenario in enumerate(["S1", "S2", "S3"]):
        for vi, variant in enumerate(VARIANTS):
            cells[(scenario, variant)] = [si < counts[k][vi] for k in LEASE_KEYS]
    return cells


def write_png(path: Path, size: tuple[int, int] = (24, 32), color=(255, 255, 255)) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    img = Image.new("RGB", size, color)
    img.putpixel((0, 0), (255, 0, 0))
    img.save(path, format="PNG")
    return path


def gold_for(scenario: str) -> dict[str, str]:
    base = SCENARIO_GOLD.get(scenario)
    if base is None:
        n = int("".join(c for c in scenario if c.isdigit()) or 0)
        base = SCENARIO_GOLD[["S1", "S2", "S3"][n % 3]]
    return dict(zip(LEASE_KEYS, base))


def write_corpus(root: Path, scenarios=("S1", "S2", "S3"), variants=VARIANTS, order=None) -> Path:
    """Write a manifest plus placeholder images; returns the manifest path."""
    samples = []
    for s in scenarios:
        for v in variants:
            image = f"images/{s}_{v}.png"
            if not (root / image).exists():
                write_png(root / image)
            samples.append({"scenario": s, "variant": v, "image": image, "rotation": 0, "gold": gold_for(s)})
    if order is not None:
        samples = [samples[i] for i in order]
    path = root / "manifest.json"
    path.write_text(json.dumps({"schema": "default", "samples": samples}, indent=2), encoding="utf-8")
    return path


def predictions_from_correctness(cells, manifest_path: Path) -> dict:
    """Predictions file that reproduces ``cells``: gold text when correct, a visibly wrong value otherwise."""
    data = json.loads(manifest_path.read_text(encoding="utf-8"))
    out = []
    for sample in data["samples"]:
        flags = cells[(sample["scenario"], sample["variant"])]
        values = {k: (sample["gold"][k] if ok else sample["gold"][k] + " X") for k, ok in zip(LEASE_KEYS, flags)}
        out.append({"scenario": sample["scenario"], "variant": sample["variant"], "values": values})
    return {"predictions": out}


def joint_correctness() -> dict[tuple[str, str], list[bool]]:
    """One boolean matrix matching both tables at once.

    Per field this is a 3x5 0/1 matrix with the first table's counts as row
    sums and the second's as column sums; each row takes the columns with the
    largest remaining demand (Ryser's construction).
    """
    rows, cols = realize_counts(TABLE_1, 5), realize_counts(TABLE_2, 3)
    scenarios = ["S1", "S2", "S3"]
    cells = {(s, v): [] for s in scenarios for v in VARIANTS}
    for key in LEASE_KEYS:
        remaining = list(cols[key])
        grid = [[False] * len(VARIANTS) for _ in scenarios]
        for si in sorted(range(3), key=lambda i: -rows[key][i]):
            picks = sorted(range(len(VARIANTS)), key=lambda j: (-remaining[j], j))[: rows[key][si]]
            for j in picks:
                if remaining[j] <= 0:
                    raise ValueError(f"no joint realization for {key}")
                remaining[j] -= 1
                grid[si][j] = True
        if any(remaining):
            raise ValueError(f"no joint realization for {key}")
        for si, s in enumerate(scenarios):
            for vi, v in enumerate(VARIANTS):
                cells[(s, v)].append(grid[si][vi])
    return cells
