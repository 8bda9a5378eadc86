"""Inverted facet indexes and tightly coupled query evaluation.

The index maps every enabled field's bucket keys to record-id sets, plus a
whole-token text index over TEXT and LIST fields. Queries combine facet
selections (disjunction within a facet, conjunction across facets) with an
AND of text tokens, and every aggregation is answered against the live
filter state so displays update together.

Bucket keys by field type: TEXT/URL/LIST use the value strings, NUMBER the
canonical decimal form, LOCATION the canonical "lat,lon" string, and
DATETIME the calendar year (timeline selections are by year). Fields bound
to a geographic tree bucket by node name, with each record indexed under its
node and all ancestors so selecting a node selects its subtree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import FacetBrowseError
from .geo import GeoTree
from .schema import DatasetSnapshot, FieldType, Value

__all__ = [
    "NO_VALUE",
    "UNLOCATED",
    "UNDATED",
    "FilterState",
    "FacetCounts",
    "FieldIndex",
    "FacetIndex",
    "UnknownFacetField",
    "build_index",
    "filtered_ids",
    "facet_counts",
    "zero_result_guard",
]

NO_VALUE = "(no value)"
UNLOCATED = "(unlocated)"
UNDATED = "(undated)"


class UnknownFacetField(FacetBrowseError):
    code = "UnknownFacetField"


_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Case-folded whole tokens: split on any non-alphanumeric run."""
    return [t.casefold() for t in _TOKEN.findall(text)]


@dataclass(frozen=True)
class FilterState:
    """The active query: per-facet selected keys plus free-text terms.

    The empty state selects every record. States are plain values; use
    :meth:`with_selection` / :meth:`toggled` to derive new ones.
    """

    selections: "dict[str, frozenset[str]]" = field(default_factory=dict)
    text_query: str | None = None

    def __post_init__(self) -> None:
        clean = {
            f: frozenset(keys) for f, keys in self.selections.items() if keys
        }
        object.__setattr__(self, "selections", clean)
        if self.text_query is not None and not self.text_query.strip():
            object.__setattr__(self, "text_query", None)

    @property
    def is_empty(self) -> bool:
        return not self.selections and self.text_query is None

    def without_field(self, field_name: str) -> "FilterState":
        if field_name not in self.selections:
            return self
        reduced = {f: k for f, k in self.selections.items() if f != field_name}
        return FilterState(selections=reduced, text_query=self.text_query)

    def with_selection(self, field_name: str, key: str) -> "FilterState":
        sel = dict(self.selections)
        sel[field_name] = sel.get(field_name, frozenset()) | {key}
        return FilterState(selections=sel, text_query=self.text_query)

    def without_selection(self, field_name: str, key: str) -> "FilterState":
        sel = dict(self.selections)
        if field_name in sel:
            sel[field_name] = sel[field_name] - {key}
        return FilterState(selections=sel, text_query=self.text_query)

    def toggled(self, field_name: str, key: str) -> "FilterState":
        if key in self.selections.get(field_name, frozenset()):
            return self.without_selection(field_name, key)
        return self.with_selection(field_name, key)

    def is_selected(self, field_name: str, key: str) -> bool:
        return key in self.selections.get(field_name, frozenset())


@dataclass(frozen=True)
class FacetCounts:
    """Bucket counts for one facet under the (reduced) filter state.

    Buckets are ordered count descending, then key ascending by code point;
    the "(no value)" bucket appears only when its count is positive.
    """

    field_name: str
    buckets: tuple[tuple[str, int], ...]


class FieldIndex:
    """Bucket map for one enabled field."""

    __slots__ = ("name", "ftype", "fold_case", "geo", "buckets", "labels", "no_value", "years")

    def __init__(self, name: str, ftype: FieldType, fold_case: bool, geo: bool):
        self.name = name
        self.ftype = ftype
        self.fold_case = fold_case
        self.geo = geo
        self.buckets: dict[str, set[str]] = {}
        # internal key -> display label (differs only for fold_case fields)
        self.labels: dict[str, str] = {}
        self.no_value: set[str] = set()
        # calendar-year buckets for DATETIME fields
        self.years: dict[int, set[str]] = {}

    def internal_key(self, external: str) -> str:
        return external.casefold() if self.fold_case else external

    def add(self, key: str, record_id: str) -> None:
        internal = self.internal_key(key)
        self.buckets.setdefault(internal, set()).add(record_id)
        label = self.labels.get(internal)
        if label is None or key < label:
            self.labels[internal] = key

    def lookup(self, external_key: str) -> "set[str] | frozenset[str]":
        if external_key == NO_VALUE:
            return self.no_value
        return self.buckets.get(self.internal_key(external_key), frozenset())


class FacetIndex:
    """Immutable-after-build index over one snapshot version."""

    def __init__(self, dataset_id: str, version: int):
        self.dataset_id = dataset_id
        self.version = version
        self.all_ids: frozenset[str] = frozenset()
        self.fields: dict[str, FieldIndex] = {}
        self.text: dict[str, set[str]] = {}

    def field(self, name: str) -> FieldIndex:
        fi = self.fields.get(name)
        if fi is None:
            raise UnknownFacetField(f"field {name!r} is not indexed", locator=name)
        return fi


def _index_datetime(fi: FieldIndex, value: Value, rid: str) -> None:
    if value.kind is FieldType.DATETIME:
        year = value.payload.year  # type: ignore[union-attr]
        fi.years.setdefault(year, set()).add(rid)
        fi.add(str(year), rid)
    else:
        # unconverted leftovers (non-destructive augmentation) are undated
        fi.add(UNDATED, rid)


def _index_geo(fi: FieldIndex, tree: GeoTree, value: Value, rid: str) -> None:
    for key in value.bucket_keys():
        node = tree.resolve(key)
        if node is None:
            fi.add(UNLOCATED, rid)
        else:
            fi.add(node.name, rid)
            for ancestor in node.ancestors():
                fi.add(ancestor.name, rid)


def build_index(
    snapshot: DatasetSnapshot,
    geo_fields: "dict[str, GeoTree] | None" = None,
) -> FacetIndex:
    """Build the facet and text indexes for a snapshot.

    Disabled fields are skipped. ``geo_fields`` binds field names to a
    GeoTree; those fields bucket by hierarchy node name instead of raw value.
    Rebuilds are full: snapshots are immutable and desk-scale.
    """
    geo_fields = geo_fields or {}
    index = FacetIndex(snapshot.dataset_id, snapshot.version)
    index.all_ids = frozenset(r.record_id for r in snapshot.records)

    enabled = [f for f in snapshot.schema if f.enabled]
    for spec in enabled:
        tree = geo_fields.get(spec.name)
        fi = FieldIndex(spec.name, spec.ftype, spec.fold_case, tree is not None)
        index.fields[spec.name] = fi
        for record in snapshot.records:
            value = record.get(spec.name)
            if value.is_missing:
                fi.no_value.add(record.record_id)
            elif tree is not None:
                _index_geo(fi, tree, value, record.record_id)
            elif spec.ftype is FieldType.DATETIME:
                _index_datetime(fi, value, record.record_id)
            else:
                for key in value.bucket_keys():
                    fi.add(key, record.record_id)

    text_fields = [
        f.name
        for f in enabled
        if f.ftype in (FieldType.TEXT, FieldType.LIST)
    ]
    for record in snapshot.records:
        tokens: set[str] = set()
        for name in text_fields:
            value = record.get(name)
            if value.kind is FieldType.TEXT:
                tokens.update(tokenize(value.payload))  # type: ignore[arg-type]
            elif value.kind is FieldType.LIST:
                for item in value.items:
                    tokens.update(tokenize(item))
        for token in tokens:
            index.text.setdefault(token, set()).add(record.record_id)

    return index


def filtered_ids(index: FacetIndex, state: FilterState) -> frozenset[str]:
    """Record ids matching the state.

    Disjunction within a facet's selected keys, conjunction across facets;
    text tokens are ANDed, each matching by whole-token equality. Selected
    keys with no bucket contribute an empty clause (not an error) so the UI
    can show zero-count selections.
    """
    result: "set[str] | frozenset[str]" = index.all_ids
    for field_name, keys in sorted(state.selections.items()):
        fi = index.field(field_name)
        clause: set[str] = set()
        for key in keys:
            clause |= fi.lookup(key)
        result = result & clause
        if not result:
            return frozenset()
    if state.text_query is not None:
        for token in tokenize(state.text_query):
            result = result & index.text.get(token, set())
            if not result:
                return frozenset()
    return frozenset(result)


def _ordered(buckets: "list[tuple[str, int]]") -> "tuple[tuple[str, int], ...]":
    return tuple(sorted(buckets, key=lambda b: (-b[1], b[0])))


def facet_counts(
    index: FacetIndex, state: FilterState, facet_field: str
) -> FacetCounts:
    """Counts for every bucket of a facet under the tight-coupling contract.

    The facet's own selections are removed before filtering so alternatives
    within the active facet stay visible; all other facets and the text
    query apply in full. Zero-count buckets are kept (the UI greys them out
    rather than hiding them).
    """
    fi = index.field(facet_field)
    ids = filtered_ids(index, state.without_field(facet_field))
    buckets = [
        (fi.labels[internal], len(members & ids))
        for internal, members in fi.buckets.items()
    ]
    no_value_count = len(fi.no_value & ids)
    if no_value_count:
        buckets.append((NO_VALUE, no_value_count))
    return FacetCounts(field_name=facet_field, buckets=_ordered(buckets))


def composition_counts(
    index: FacetIndex, ids: frozenset[str], facet_field: str
) -> "tuple[tuple[str, int], ...]":
    """Bucket counts of a facet over an already-filtered record set.

    Unlike :func:`facet_counts` this applies no exclusion and drops empty
    buckets: it describes the composition of a result set (pie slices,
    weighted histograms), not the remaining filter choices.
    """
    fi = index.field(facet_field)
    buckets = [
        (fi.labels[internal], n)
        for internal, members in fi.buckets.items()
        if (n := len(members & ids))
    ]
    n_missing = len(fi.no_value & ids)
    if n_missing:
        buckets.append((NO_VALUE, n_missing))
    return _ordered(buckets)


def zero_result_guard(
    index: FacetIndex, state: FilterState, candidate: "tuple[str, str]"
) -> int:
    """Projected result size if the candidate (field, key) were toggled.

    The UI uses these projections to grey out selections that would produce
    an empty result, instead of letting users discover null sets the hard
    way.
    """
    field_name, key = candidate
    index.field(field_name)  # raises UnknownFacetField for unknown fields
    return len(filtered_ids(index, state.toggled(field_name, key)))
