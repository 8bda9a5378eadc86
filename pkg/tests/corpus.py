"""Random snapshot corpus and brute-force oracles for equivalence tests.

The oracles implement the documented query semantics directly over record
lists (linear scans, no inverted index), so the engine under test and the
oracle share no code path beyond the data model.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from decimal import Decimal

from facetbrowse.engine import NO_VALUE, UNDATED, UNLOCATED, FilterState
from facetbrowse.geo import GeoTree
from facetbrowse.schema import DatasetSnapshot, FieldSpec, FieldType, Record, Value

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)

# vocabulary for facet values: distinct-looking words so token search is
# exercised across fields
_WORDS = [
    "alpha", "Beta", "gamma", "delta", "EPSILON", "zeta", "eta", "theta",
]


@dataclass
class Corpus:
    """One random snapshot plus the metadata the tests need to drive it."""

    snapshot: DatasetSnapshot
    facet_fields: list[str]
    date_field: str
    weight_field: str
    place_field: str
    tree: GeoTree


def small_tree(tmp_factory=None) -> GeoTree:
    from facetbrowse.geo import GeoLevel, GeoNode

    def node(name, level, parent=None, aliases=()):
        n = GeoNode(name=name, level=level, parent=parent, aliases=tuple(aliases))
        if parent is not None:
            parent.children.append(n)
        return n

    east = node("East Asia", GeoLevel.REGION)
    nk = node("North Korea", GeoLevel.COUNTRY, east, ["DPRK"])
    node("Pyongyang", GeoLevel.CITY, nk)
    china = node("China", GeoLevel.COUNTRY, east, ["PRC"])
    node("Beijing", GeoLevel.CITY, china, ["Peking"])
    europe = node("Europe", GeoLevel.REGION)
    ussr = node("Soviet Union", GeoLevel.COUNTRY, europe, ["USSR"])
    node("Moscow", GeoLevel.CITY, ussr)
    poland = node("Poland", GeoLevel.COUNTRY, europe)
    node("Warsaw", GeoLevel.CITY, poland)
    return GeoTree([east, europe])


_PLACES = [
    "Pyongyang", "DPRK", "North Korea", "Beijing", "Peking", "China",
    "East Asia", "Moscow", "USSR", "Warsaw", "Poland", "Europe",
    "Atlantis", "Nowhere City",  # unresolvable
]


def random_corpus(rng: random.Random, n_records: int) -> Corpus:
    n_facets = rng.randint(1, 6)
    facet_fields = [f"F{i + 1}" for i in range(n_facets)]
    # up to 20% of the facet fields are multi-valued lists
    n_multi = min(n_facets, int(round(n_facets * 0.2))) if n_facets > 1 else 0
    multi = set(rng.sample(facet_fields, n_multi)) if n_multi else set()
    if rng.random() < 0.5 and n_facets >= 2:
        multi.add(facet_fields[-1])
    fold = {f for f in facet_fields if rng.random() < 0.2}
    vocab = {
        f: rng.sample(_WORDS, rng.randint(2, 8)) for f in facet_fields
    }

    tree = small_tree()
    date_field, weight_field, place_field = "Date", "Feet", "Location"
    schema = [
        FieldSpec(
            name=f,
            ftype=FieldType.LIST if f in multi else FieldType.TEXT,
            multivalued=f in multi,
            fold_case=f in fold,
        )
        for f in facet_fields
    ]
    schema.append(FieldSpec(name=date_field, ftype=FieldType.DATETIME))
    schema.append(FieldSpec(name=weight_field, ftype=FieldType.NUMBER))
    schema.append(FieldSpec(name=place_field, ftype=FieldType.TEXT))

    records = []
    for i in range(1, n_records + 1):
        values: dict[str, Value] = {}
        for f in facet_fields:
            if rng.random() < 0.15:
                continue  # missing
            if f in multi:
                k = rng.randint(1, 3)
                values[f] = Value.list_(tuple(rng.choice(vocab[f]) for _ in range(k)))
            else:
                values[f] = Value.text(rng.choice(vocab[f]))
        roll = rng.random()
        if roll < 0.7:
            year = rng.randint(1945, 1991)
            month = rng.randint(1, 12)
            values[date_field] = Value.datetime_(
                datetime(year, month, 1, tzinfo=timezone.utc)
            )
        elif roll < 0.8:
            values[date_field] = Value.text("circa unknown")  # unparsed leftover
        if rng.random() < 0.85:
            values[weight_field] = Value.number(
                Decimal(rng.randint(0, 400)) / Decimal(4)
            )
        if rng.random() < 0.8:
            values[place_field] = Value.text(rng.choice(_PLACES))
        records.append(Record(record_id=f"r{i}", values=values))

    snapshot = DatasetSnapshot(
        dataset_id="corpus",
        version=1,
        schema=tuple(schema),
        records=tuple(records),
    )
    return Corpus(
        snapshot=snapshot,
        facet_fields=facet_fields,
        date_field=date_field,
        weight_field=weight_field,
        place_field=place_field,
        tree=tree,
    )


def random_state(rng: random.Random, corpus: Corpus) -> FilterState:
    selections: dict[str, frozenset[str]] = {}
    candidates = list(corpus.facet_fields)
    for f in rng.sample(candidates, rng.randint(0, min(3, len(candidates)))):
        spec = corpus.snapshot.field_spec(f)
        keys = set()
        for _ in range(rng.randint(1, 3)):
            roll = rng.random()
            if roll < 0.1:
                keys.add(NO_VALUE)
            elif roll < 0.18:
                keys.add("zz-absent")  # unknown bucket key: empty clause
            else:
                word = rng.choice(_WORDS)
                keys.add(word.casefold() if spec.fold_case and rng.random() < 0.5 else word)
        selections[f] = frozenset(keys)
    if rng.random() < 0.35:
        node = rng.choice(
            ["East Asia", "North Korea", "Pyongyang", "Europe", "Soviet Union",
             "China", UNLOCATED, NO_VALUE]
        )
        selections[corpus.place_field] = frozenset({node})
    if rng.random() < 0.3:
        year = str(rng.randint(1944, 1992))
        selections[corpus.date_field] = frozenset({year})
    text = None
    if rng.random() < 0.3:
        text = rng.choice(_WORDS + ["alpha beta", "Korea", "missingword"])
    return FilterState(selections=selections, text_query=text)


# ---------------------------------------------------------------------------
# Brute-force oracles: linear scans over the record tuples


def _tokens_of(record: Record, snapshot: DatasetSnapshot) -> set[str]:
    tokens: set[str] = set()
    for spec in snapshot.schema:
        if not spec.enabled or spec.ftype not in (FieldType.TEXT, FieldType.LIST):
            continue
        value = record.get(spec.name)
        if value.kind is FieldType.TEXT:
            tokens.update(t.casefold() for t in _TOKEN.findall(value.payload))
        elif value.kind is FieldType.LIST:
            for item in value.items:
                tokens.update(t.casefold() for t in _TOKEN.findall(item))
    return tokens


def oracle_field_keys(
    record: Record,
    spec: FieldSpec,
    tree: GeoTree | None = None,
) -> set[str]:
    """The bucket keys this record belongs to for one field, by the book."""
    value = record.get(spec.name)
    if value.is_missing:
        return {NO_VALUE}
    if tree is not None:
        keys: set[str] = set()
        raw = value.items if value.kind is FieldType.LIST else (value.display(),)
        for item in raw:
            node = tree.resolve(item)
            if node is None:
                keys.add(UNLOCATED)
            else:
                keys.add(node.name)
                keys.update(a.name for a in node.ancestors())
        return keys
    if spec.ftype is FieldType.DATETIME:
        if value.kind is FieldType.DATETIME:
            return {str(value.payload.year)}
        return {UNDATED}
    if value.kind is FieldType.LIST:
        return set(value.items)
    return {value.display()}


class Oracle:
    """Predicate-scan query evaluation over one snapshot.

    Per-record bucket keys and labels are precomputed by direct value
    inspection; filtering and counting are plain loops over records.
    """

    def __init__(self, corpus: Corpus, geo_bound: bool = True):
        self.corpus = corpus
        snapshot = corpus.snapshot
        self.specs = {f.name: f for f in snapshot.schema if f.enabled}
        self.geo_bound = geo_bound
        # field -> record id -> internal bucket keys
        self.keys: dict[str, dict[str, set[str]]] = {}
        # field -> internal key -> display label (min verbatim form seen)
        self.labels: dict[str, dict[str, str]] = {}
        for name, spec in self.specs.items():
            tree = corpus.tree if (geo_bound and name == corpus.place_field) else None
            per_record: dict[str, set[str]] = {}
            labels: dict[str, str] = {}
            for r in snapshot.records:
                verbatim = oracle_field_keys(r, spec, tree)
                internals = set()
                for key in verbatim:
                    internal = (
                        key.casefold()
                        if spec.fold_case and key != NO_VALUE
                        else key
                    )
                    internals.add(internal)
                    label = labels.get(internal)
                    if label is None or key < label:
                        labels[internal] = key
                per_record[r.record_id] = internals
            self.keys[name] = per_record
            self.labels[name] = labels
        self.tokens = {
            r.record_id: _tokens_of(r, snapshot) for r in snapshot.records
        }
        self.records = {r.record_id: r for r in snapshot.records}

    def _fold_selection(self, field: str, keys: frozenset[str]) -> set[str]:
        spec = self.specs[field]
        if spec.fold_case:
            return {k if k == NO_VALUE else k.casefold() for k in keys}
        return set(keys)

    def filtered(self, state: FilterState) -> set[str]:
        out = set()
        query_tokens = None
        if state.text_query is not None:
            query_tokens = {t.casefold() for t in _TOKEN.findall(state.text_query)}
        folded = {
            f: self._fold_selection(f, keys) for f, keys in state.selections.items()
        }
        for rid in self.records:
            ok = True
            for field, keys in folded.items():
                if not (self.keys[field][rid] & keys):
                    ok = False
                    break
            if ok and query_tokens is not None:
                if not query_tokens <= self.tokens[rid]:
                    ok = False
            if ok:
                out.add(rid)
        return out

    def field_counts(self, ids: set[str], field: str) -> dict[str, int]:
        """Counts per display label over an id set."""
        counts: dict[str, int] = {}
        per_record = self.keys[field]
        for rid in ids:
            for internal in per_record[rid]:
                counts[internal] = counts.get(internal, 0) + 1
        labels = self.labels[field]
        return {labels[i]: n for i, n in counts.items()}

    def ordered_counts(self, ids: set[str], field: str) -> list[tuple[str, int]]:
        counts = self.field_counts(ids, field)
        return sorted(counts.items(), key=lambda b: (-b[1], b[0]))
