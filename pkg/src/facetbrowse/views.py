"""Visualization builders: every view is data computed from (snapshot, state).

Each view renders under the empty filter (describing the whole collection)
and under any filter state (browsing), so the same functions back first
paint and every coupled update. Views that describe the result set's
composition (pie, weighted histogram, table, timeline) apply the full state;
views that offer further choices within their own facet (top-K, tag cloud,
geographic hierarchy) exclude that facet's own selections, the same contract
as filter-list widgets.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from enum import Enum

from .engine import (
    NO_VALUE,
    UNDATED,
    UNLOCATED,
    FacetIndex,
    FilterState,
    build_index,
    composition_counts,
    facet_counts,
    filtered_ids,
)
from .errors import FacetBrowseError
from .geo import GeoNode, GeoTree, MalformedTree
from .schema import DatasetSnapshot, FieldType

__all__ = [
    "ViewKind",
    "WidgetKind",
    "Widget",
    "ViewConfig",
    "ViewBucket",
    "GeoNodeCount",
    "ViewResult",
    "apportion_percentages",
    "pie_view",
    "timeline_view",
    "geo_view",
    "top_k_view",
    "tag_cloud_view",
    "weighted_hist_view",
    "table_view",
    "build_view",
]


class ViewKind(Enum):
    PIE = "pie"
    TIMELINE = "timeline"
    GEO = "geo"
    TOP_K = "top_k"
    TAG_CLOUD = "tag_cloud"
    TABLE = "table"
    WEIGHTED_HIST = "weighted_hist"


class WidgetKind(Enum):
    SEARCH_BOX = "search_box"
    FILTER_LIST = "filter_list"
    TAG_CLOUD = "tag_cloud"
    LOGO = "logo"


@dataclass(frozen=True)
class Widget:
    kind: WidgetKind
    field: str | None = None
    url: str | None = None

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.field is not None:
            out["field"] = self.field
        if self.url is not None:
            out["url"] = self.url
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Widget":
        return cls(
            kind=WidgetKind(obj["kind"]),
            field=obj.get("field"),
            url=obj.get("url"),
        )


@dataclass(frozen=True)
class ViewConfig:
    """A named, configured visualization over exactly one dataset."""

    view_id: str
    kind: ViewKind
    dataset_id: str
    facet_field: str | None = None
    k: int = 5
    weight_field: str | None = None
    columns: tuple[str, ...] | None = None
    widgets: tuple[Widget, ...] = ()

    def to_json(self) -> dict:
        out: dict = {
            "view_id": self.view_id,
            "kind": self.kind.value,
            "dataset_id": self.dataset_id,
            "k": self.k,
            "widgets": [w.to_json() for w in self.widgets],
        }
        if self.facet_field is not None:
            out["facet_field"] = self.facet_field
        if self.weight_field is not None:
            out["weight_field"] = self.weight_field
        if self.columns is not None:
            out["columns"] = list(self.columns)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ViewConfig":
        return cls(
            view_id=obj["view_id"],
            kind=ViewKind(obj["kind"]),
            dataset_id=obj["dataset_id"],
            facet_field=obj.get("facet_field"),
            k=int(obj.get("k", 5)),
            weight_field=obj.get("weight_field"),
            columns=tuple(obj["columns"]) if obj.get("columns") else None,
            widgets=tuple(Widget.from_json(w) for w in obj.get("widgets", ())),
        )


@dataclass(frozen=True)
class ViewBucket:
    label: str
    count: int
    percentage: float | None = None
    weight: "Decimal | float | None" = None


@dataclass(frozen=True)
class GeoNodeCount:
    name: str
    level: str
    count: int
    children: tuple["GeoNodeCount", ...] = ()


@dataclass(frozen=True)
class ViewResult:
    """Aggregation output plus the (version, state) it was generated against."""

    kind: ViewKind
    total: int
    version: int
    state: FilterState
    buckets: tuple[ViewBucket, ...] = ()
    nodes: tuple[GeoNodeCount, ...] = ()
    rows: tuple[dict, ...] = ()
    missing_weights: int = 0
    offset: int | None = None
    limit: int | None = None


def apportion_percentages(counts: "list[int]") -> "list[float]":
    """One-decimal percentages by largest-remainder apportionment.

    The returned values sum to exactly 100.0 (in tenths) whenever the counts
    sum is positive; naive rounding can miss. Ties in remainder go to the
    earlier bucket, so the caller's ordering makes the result deterministic.
    """
    base = sum(counts)
    if base <= 0:
        return [0.0 for _ in counts]
    tenths = [count * 1000 // base for count in counts]
    remainders = [count * 1000 % base for count in counts]
    leftover = 1000 - sum(tenths)
    for i in sorted(range(len(counts)), key=lambda i: (-remainders[i], i)):
        if leftover <= 0:
            break
        tenths[i] += 1
        leftover -= 1
    return [t / 10 for t in tenths]


def _ensure_index(snapshot: DatasetSnapshot, index: FacetIndex | None) -> FacetIndex:
    return index if index is not None else build_index(snapshot)


def pie_view(
    snapshot: DatasetSnapshot,
    state: FilterState,
    facet_field: str,
    index: FacetIndex | None = None,
) -> ViewResult:
    """Share of the filtered result set per facet value, as exact slices.

    The full state applies, including this facet's own selections: a pie
    shows what the result set is made of. Multi-valued facets use value
    occurrences as the percentage base, so slices always describe the
    buckets actually drawn.
    """
    index = _ensure_index(snapshot, index)
    ids = filtered_ids(index, state)
    buckets = composition_counts(index, ids, facet_field)
    percentages = apportion_percentages([c for _, c in buckets])
    return ViewResult(
        kind=ViewKind.PIE,
        total=len(ids),
        version=snapshot.version,
        state=state,
        buckets=tuple(
            ViewBucket(label=label, count=count, percentage=pct)
            for (label, count), pct in zip(buckets, percentages)
        ),
    )


def timeline_view(
    snapshot: DatasetSnapshot,
    state: FilterState,
    date_field: str,
    index: FacetIndex | None = None,
) -> ViewResult:
    """Documents per calendar year over the filtered set.

    Years span min..max of the filtered records with zero-count years kept
    for a contiguous axis; records without a usable date go to a trailing
    "(undated)" bucket.
    """
    index = _ensure_index(snapshot, index)
    fi = index.field(date_field)
    if fi.ftype is not FieldType.DATETIME:
        raise FacetBrowseError(
            f"timeline requires a date/time field, {date_field!r} is {fi.ftype.value}",
            locator=date_field,
        )
    ids = filtered_ids(index, state)
    year_counts = {
        year: n for year, members in fi.years.items() if (n := len(members & ids))
    }
    buckets: list[ViewBucket] = []
    if year_counts:
        lo, hi = min(year_counts), max(year_counts)
        buckets = [
            ViewBucket(label=str(y), count=year_counts.get(y, 0))
            for y in range(lo, hi + 1)
        ]
    undated = len((fi.no_value | fi.buckets.get(UNDATED, set())) & ids)
    if undated:
        buckets.append(ViewBucket(label=UNDATED, count=undated))
    return ViewResult(
        kind=ViewKind.TIMELINE,
        total=len(ids),
        version=snapshot.version,
        state=state,
        buckets=tuple(buckets),
    )


def _node_counts(
    node: GeoNode, fi_buckets: "dict[str, set[str]]", ids: frozenset[str]
) -> GeoNodeCount:
    members = fi_buckets.get(node.name, set())
    return GeoNodeCount(
        name=node.name,
        level=node.level.value,
        count=len(members & ids),
        children=tuple(_node_counts(c, fi_buckets, ids) for c in node.children),
    )


def geo_view(
    snapshot: DatasetSnapshot,
    state: FilterState,
    location_field: str,
    tree: GeoTree,
    index: FacetIndex | None = None,
) -> ViewResult:
    """Record counts per hierarchy node (a node covers its whole subtree).

    Counts use the state with this facet's own selection removed, the same
    rule as filter widgets, so sibling regions stay comparable while one is
    selected. A record located in two countries of one region still counts
    once for the region. Unresolvable values appear under "(unlocated)" and
    missing ones under "(no value)".
    """
    if index is None:
        index = build_index(snapshot, geo_fields={location_field: tree})
    fi = index.field(location_field)
    if not fi.geo:
        raise MalformedTree(
            f"field {location_field!r} was not indexed against a geographic tree",
            locator=location_field,
        )
    reduced = state.without_field(location_field)
    ids = filtered_ids(index, reduced)
    nodes = tuple(_node_counts(root, fi.buckets, ids) for root in tree.roots)
    buckets = []
    for special in (UNLOCATED, NO_VALUE):
        members = fi.buckets.get(special, set()) if special != NO_VALUE else fi.no_value
        n = len(members & ids)
        if n:
            buckets.append(ViewBucket(label=special, count=n))
    return ViewResult(
        kind=ViewKind.GEO,
        total=len(ids),
        version=snapshot.version,
        state=state,
        nodes=nodes,
        buckets=tuple(buckets),
    )


def top_k_view(
    snapshot: DatasetSnapshot,
    state: FilterState,
    facet_field: str,
    k: int = 5,
    index: FacetIndex | None = None,
) -> ViewResult:
    """The first k facet buckets (count descending, key ascending)."""
    if k < 1:
        raise FacetBrowseError(f"k must be >= 1, got {k}")
    index = _ensure_index(snapshot, index)
    counts = facet_counts(index, state, facet_field)
    total = len(filtered_ids(index, state))
    return ViewResult(
        kind=ViewKind.TOP_K,
        total=total,
        version=snapshot.version,
        state=state,
        buckets=tuple(
            ViewBucket(label=label, count=count)
            for label, count in counts.buckets[:k]
        ),
    )


def tag_cloud_view(
    snapshot: DatasetSnapshot,
    state: FilterState,
    facet_field: str,
    index: FacetIndex | None = None,
) -> ViewResult:
    """Every non-empty bucket with a display weight of count / max-count."""
    index = _ensure_index(snapshot, index)
    counts = facet_counts(index, state, facet_field)
    present = [(label, n) for label, n in counts.buckets if n > 0]
    max_count = max((n for _, n in present), default=0)
    total = len(filtered_ids(index, state))
    return ViewResult(
        kind=ViewKind.TAG_CLOUD,
        total=total,
        version=snapshot.version,
        state=state,
        buckets=tuple(
            ViewBucket(label=label, count=n, weight=n / max_count)
            for label, n in present
        ),
    )


def weighted_hist_view(
    snapshot: DatasetSnapshot,
    state: FilterState,
    facet_field: str,
    weight_field: str,
    index: FacetIndex | None = None,
) -> ViewResult:
    """Buckets weighted by summing a numeric field over matching records.

    Reports both the record count and the weight sum per bucket, so a facet
    value backed by few records but much material is visible as such.
    Records missing the weight contribute 0 and are tallied in
    ``missing_weights``.
    """
    index = _ensure_index(snapshot, index)
    ids = filtered_ids(index, state)
    spec = snapshot.field_spec(weight_field)
    if spec is None:
        raise FacetBrowseError(f"unknown weight field {weight_field!r}", locator=weight_field)
    if spec.ftype is not FieldType.NUMBER:
        raise FacetBrowseError(
            f"weight field {weight_field!r} must be a number field",
            locator=weight_field,
        )
    weights: dict[str, Decimal] = {}
    missing = 0
    for record in snapshot.records:
        if record.record_id not in ids:
            continue
        value = record.get(weight_field)
        if value.kind is FieldType.NUMBER:
            weights[record.record_id] = value.payload  # type: ignore[assignment]
        else:
            weights[record.record_id] = Decimal(0)
            missing += 1
    fi = index.field(facet_field)
    buckets = []
    for label, count in composition_counts(index, ids, facet_field):
        members = fi.no_value if label == NO_VALUE else fi.lookup(label)
        weight = sum((weights[rid] for rid in members & ids), Decimal(0))
        buckets.append(ViewBucket(label=label, count=count, weight=weight))
    return ViewResult(
        kind=ViewKind.WEIGHTED_HIST,
        total=len(ids),
        version=snapshot.version,
        state=state,
        buckets=tuple(buckets),
        missing_weights=missing,
    )


MAX_PAGE_LIMIT = 500


def table_view(
    snapshot: DatasetSnapshot,
    state: FilterState,
    columns: "tuple[str, ...] | None" = None,
    offset: int = 0,
    limit: int = 50,
    index: FacetIndex | None = None,
) -> ViewResult:
    """Filtered records ordered by record id, projected to columns, paged."""
    index = _ensure_index(snapshot, index)
    if limit < 1 or limit > MAX_PAGE_LIMIT:
        raise FacetBrowseError(f"limit must be in 1..{MAX_PAGE_LIMIT}, got {limit}")
    if offset < 0:
        raise FacetBrowseError(f"offset must be >= 0, got {offset}")
    if columns is None:
        columns = tuple(f.name for f in snapshot.schema if f.enabled)
    for col in columns:
        index.field(col)  # enabled fields only; raises UnknownFacetField
    ids = filtered_ids(index, state)
    ordered = sorted(ids)
    by_id = {r.record_id: r for r in snapshot.records}
    rows = []
    for rid in ordered[offset : offset + limit]:
        record = by_id[rid]
        cells: dict[str, object] = {}
        for col in columns:
            value = record.get(col)
            if value.is_missing:
                cells[col] = None
            elif value.kind is FieldType.LIST:
                cells[col] = list(value.items)
            else:
                cells[col] = value.display()
        rows.append({"record_id": rid, "cells": cells})
    return ViewResult(
        kind=ViewKind.TABLE,
        total=len(ids),
        version=snapshot.version,
        state=state,
        rows=tuple(rows),
        offset=offset,
        limit=limit,
    )


def build_view(
    config: ViewConfig,
    snapshot: DatasetSnapshot,
    state: FilterState,
    index: FacetIndex | None = None,
    geo_tree: GeoTree | None = None,
    offset: int = 0,
    limit: int = 50,
) -> ViewResult:
    """Dispatch a ViewConfig to the matching view function."""
    if config.kind is ViewKind.PIE:
        return pie_view(snapshot, state, _required_field(config), index)
    if config.kind is ViewKind.TIMELINE:
        return timeline_view(snapshot, state, _required_field(config), index)
    if config.kind is ViewKind.GEO:
        if geo_tree is None:
            raise MalformedTree("geographic view requires a configured geo tree")
        return geo_view(snapshot, state, _required_field(config), geo_tree, index)
    if config.kind is ViewKind.TOP_K:
        return top_k_view(snapshot, state, _required_field(config), config.k, index)
    if config.kind is ViewKind.TAG_CLOUD:
        return tag_cloud_view(snapshot, state, _required_field(config), index)
    if config.kind is ViewKind.WEIGHTED_HIST:
        if config.weight_field is None:
            raise FacetBrowseError("weighted histogram requires weight_field")
        return weighted_hist_view(
            snapshot, state, _required_field(config), config.weight_field, index
        )
    return table_view(snapshot, state, config.columns, offset, limit, index)


def _required_field(config: ViewConfig) -> str:
    if config.facet_field is None:
        raise FacetBrowseError(f"view {config.view_id!r} requires facet_field")
    return config.facet_field
