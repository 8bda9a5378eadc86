"""Capture real API payloads as fixtures for the frontend test suite.

Builds two datasets (a geographic browse collection and the engineered
language-share collection), configures the browse and pie views, and saves
selected endpoint responses under frontend/tests/fixtures/.
"""

from __future__ import annotations

import random
from pathlib import Path

from fastapi.testclient import TestClient

from facetbrowse.augment import builtin_gazetteer
from facetbrowse.geo import builtin_geo_tree
from facetbrowse.server import create_app
from facetbrowse.store import DatasetStore
from facetbrowse.testing import khrushchev_csv

FIXTURES = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"

PLACES = [
    "Pyongyang", "North Korea", "Beijing", "China", "Moscow", "Soviet Union",
    "Warsaw", "Poland", "Havana", "Cuba", "East Berlin", "Bonn", "Hanoi",
    "Washington, DC", "Prague", "Budapest",
]
SUBJECTS = [
    "Korean War—Armistice", "China—Foreign relations",
    "Nuclear weapons—Testing", "Cuban Missile Crisis—Naval blockade",
    "Berlin—Occupation", "Vietnam War—Negotiations",
    "Korean War—China—Intervention",
]


def browse_csv() -> bytes:
    import csv
    import io

    rng = random.Random(1991)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["Record Id", "Title", "Location", "Date", "Subjects"])
    for i in range(400):
        place = rng.choice(PLACES)
        date = f"{rng.randint(1948, 1979)}{rng.randint(1, 12):02d}{rng.randint(1, 28):02d}"
        writer.writerow(
            [110000 + i, f"Cable {i} from {place}", place, date, rng.choice(SUBJECTS)]
        )
    return buf.getvalue().encode()


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    store = DatasetStore(None, gazetteer=builtin_gazetteer(), geo_tree=builtin_geo_tree())
    client = TestClient(create_app(store))

    resp = client.post(
        "/datasets?id=archive&id_column=Record%20Id",
        content=browse_csv(),
        headers={"Content-Type": "text/csv"},
    )
    assert resp.status_code == 201, resp.text
    resp = client.post(
        "/datasets/archive/augment",
        json={
            "steps": [
                {"kind": "normalize_date", "source_fields": ["Date"], "target_field": "Date"},
                {"kind": "split_heading", "source_fields": ["Subjects"], "target_field": "Subjects"},
            ]
        },
    )
    assert resp.status_code == 200, resp.text
    resp = client.post(
        "/datasets/archive/views",
        json={
            "view_id": "browse",
            "kind": "geo",
            "facet_field": "Location",
            "widgets": [
                {"kind": "filter_list", "field": "Date"},
                {"kind": "filter_list", "field": "Subjects"},
            ],
        },
    )
    assert resp.status_code == 201, resp.text

    resp = client.post(
        "/datasets?id=languages&id_column=Record%20Id",
        content=khrushchev_csv(),
        headers={"Content-Type": "text/csv"},
    )
    assert resp.status_code == 201, resp.text
    resp = client.post(
        "/datasets/languages/views",
        json={
            "view_id": "langpie",
            "kind": "pie",
            "facet_field": "Language",
            "widgets": [
                {"kind": "search_box"},
                {"kind": "filter_list", "field": "Language"},
                {"kind": "logo", "url": "/ui/logo.png"},
            ],
        },
    )
    assert resp.status_code == 201, resp.text

    captures = {
        "browse_embed.json": "/views/browse/embed",
        "browse_query_empty.json": "/views/browse/query",
        "browse_query_east_asia.json": "/views/browse/query?f.Location=East%20Asia",
        "pie_embed.json": "/views/langpie/embed",
        "pie_query_khrushchev.json": "/views/langpie/query?q=Khrushchev",
    }
    for filename, url in captures.items():
        resp = client.get(url)
        assert resp.status_code == 200, (url, resp.text)
        (FIXTURES / filename).write_bytes(resp.content)
        print(f"wrote {filename} ({len(resp.content)} bytes)")


if __name__ == "__main__":
    main()
