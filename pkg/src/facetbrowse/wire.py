"""Wire formats: URL-encoded filter state, JSON payloads, and exports.

The entire filter state lives in URL query parameters (repeatable
``f.<field>=<key>`` plus ``q=<text>``), so any exploration state is a
shareable, bookmarkable link. Encoding is canonical (sorted fields and keys,
full percent-encoding) and ``decode(encode(s)) == s`` for every valid state.
"""

from __future__ import annotations

import csv
import io
import json
from decimal import Decimal
from typing import Iterable
from urllib.parse import quote, unquote

from .engine import FacetIndex, FilterState, filtered_ids
from .errors import FacetBrowseError
from .schema import DatasetSnapshot, FieldType
from .views import GeoNodeCount, ViewBucket, ViewResult

__all__ = [
    "encode_state",
    "decode_state",
    "state_json",
    "state_from_json",
    "view_result_json",
    "api_error_json",
    "export_csv",
    "export_json",
    "ID_COLUMN",
]

ID_COLUMN = "record_id"


def encode_state(state: FilterState) -> str:
    """Canonical query-string form of a filter state (no leading '?')."""
    parts = []
    for field_name in sorted(state.selections):
        for key in sorted(state.selections[field_name]):
            parts.append(f"f.{quote(field_name, safe='')}={quote(key, safe='')}")
    if state.text_query is not None:
        parts.append(f"q={quote(state.text_query, safe='')}")
    return "&".join(parts)


def decode_state(pairs: "Iterable[tuple[str, str]]") -> FilterState:
    """Rebuild a filter state from decoded query parameters.

    Accepts any iterable of (name, value) pairs (e.g. parse_qsl output or a
    framework's multi-dict items); parameters other than ``f.*`` and ``q``
    are ignored so view parameters can share the URL.
    """
    selections: dict[str, set[str]] = {}
    text = None
    for name, value in pairs:
        if name == "q":
            text = value
        elif name.startswith("f."):
            selections.setdefault(name[2:], set()).add(value)
    return FilterState(
        selections={f: frozenset(keys) for f, keys in selections.items()},
        text_query=text,
    )


def decode_state_string(query: str) -> FilterState:
    pairs = []
    for piece in query.lstrip("?").split("&"):
        if not piece:
            continue
        name, _, value = piece.partition("=")
        pairs.append((unquote(name), unquote(value)))
    return decode_state(pairs)


def state_json(state: FilterState) -> dict:
    return {
        "selections": {f: sorted(keys) for f, keys in sorted(state.selections.items())},
        "text_query": state.text_query,
    }


def state_from_json(obj: dict) -> FilterState:
    return FilterState(
        selections={
            f: frozenset(keys) for f, keys in (obj.get("selections") or {}).items()
        },
        text_query=obj.get("text_query"),
    )


def _bucket_json(bucket: ViewBucket) -> dict:
    out: dict = {"label": bucket.label, "count": bucket.count}
    if bucket.percentage is not None:
        out["percentage"] = bucket.percentage
    if bucket.weight is not None:
        weight = bucket.weight
        out["weight"] = float(weight) if isinstance(weight, Decimal) else weight
    return out


def _node_json(node: GeoNodeCount) -> dict:
    return {
        "name": node.name,
        "level": node.level,
        "count": node.count,
        "children": [_node_json(c) for c in node.children],
    }


def view_result_json(result: ViewResult) -> dict:
    out: dict = {
        "kind": result.kind.value,
        "total": result.total,
        "version": result.version,
        "state": state_json(result.state),
        "buckets": [_bucket_json(b) for b in result.buckets],
    }
    if result.kind.value == "geo":
        out["nodes"] = [_node_json(n) for n in result.nodes]
    if result.kind.value == "table":
        out["rows"] = [dict(r) for r in result.rows]
        out["offset"] = result.offset
        out["limit"] = result.limit
    if result.kind.value == "weighted_hist":
        out["missing_weights"] = result.missing_weights
    return out


def api_error_json(exc: FacetBrowseError) -> dict:
    out = {"code": exc.code, "message": exc.message}
    if exc.locator:
        out["locator"] = exc.locator
    return out


def _display_cell(value) -> str:
    return "" if value.is_missing else value.display()


def export_csv(
    snapshot: DatasetSnapshot,
    index: FacetIndex | None = None,
    state: FilterState | None = None,
) -> bytes:
    """Serialize (filtered) records as CSV; round-trips through re-import.

    The first column carries the record id so a re-import (with
    ``id_column="record_id"``) reproduces the same ids; all fields are
    exported, disabled ones included, as their canonical display strings.
    """
    ids = None
    if state is not None and index is not None and not state.is_empty:
        ids = filtered_ids(index, state)
    field_names = [f.name for f in snapshot.schema]
    id_column = ID_COLUMN
    while id_column in field_names:
        id_column = "_" + id_column
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow([id_column, *field_names])
    for record in sorted(snapshot.records, key=lambda r: r.record_id):
        if ids is not None and record.record_id not in ids:
            continue
        writer.writerow(
            [record.record_id, *(_display_cell(record.get(n)) for n in field_names)]
        )
    return buf.getvalue().encode("utf-8")


def _export_value(value) -> object:
    if value.is_missing:
        return None
    if value.kind is FieldType.LIST:
        return list(value.items)
    if value.kind is FieldType.LOCATION:
        lat, lon = value.payload
        return {"lat": lat, "lon": lon}
    return value.display()


def export_json(
    snapshot: DatasetSnapshot,
    index: FacetIndex | None = None,
    state: FilterState | None = None,
) -> bytes:
    """Serialize (filtered) records as a JSON document."""
    ids = None
    if state is not None and index is not None and not state.is_empty:
        ids = filtered_ids(index, state)
    records = []
    for record in sorted(snapshot.records, key=lambda r: r.record_id):
        if ids is not None and record.record_id not in ids:
            continue
        records.append(
            {
                "record_id": record.record_id,
                "values": {
                    name: _export_value(record.get(name))
                    for name in (f.name for f in snapshot.schema)
                    if not record.get(name).is_missing
                },
            }
        )
    doc = {
        "dataset_id": snapshot.dataset_id,
        "version": snapshot.version,
        "total": len(records),
        "records": records,
    }
    return json.dumps(doc, ensure_ascii=False, indent=2).encode("utf-8")
