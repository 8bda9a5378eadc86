"""Field augmentations: the refinement steps applied between ingest and views.

Augmentations are pure functions over snapshots. Unparseable or unresolved
values are preserved untouched with a warning rather than nulled, so
refinement never destroys source data. Pipelines are recorded on the dataset
and replayed on refresh.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import FacetBrowseError
from .schema import (
    MISSING,
    DatasetSnapshot,
    FieldSpec,
    FieldType,
    ImpossibleDate,
    Record,
    UnparseableDate,
    Value,
    parse_flexible_datetime,
)

__all__ = [
    "StepKind",
    "AugmentationStep",
    "Gazetteer",
    "PipelineReport",
    "UnknownField",
    "TypeConflict",
    "Unresolved",
    "normalize_date",
    "geocode",
    "split_list",
    "split_heading",
    "merge_fields",
    "replace_values",
    "apply_pipeline",
    "load_gazetteer",
    "builtin_gazetteer",
    "DEFAULT_SPLIT_PATTERNS",
]


class UnknownField(FacetBrowseError):
    code = "UnknownField"


class TypeConflict(FacetBrowseError):
    code = "TypeConflict"


class Unresolved(FacetBrowseError):
    code = "Unresolved"


class StepKind(Enum):
    NORMALIZE_DATE = "normalize_date"
    GEOCODE = "geocode"
    SPLIT_LIST = "split_list"
    SPLIT_HEADING = "split_heading"
    MERGE_FIELDS = "merge_fields"
    REPLACE_VALUES = "replace_values"


@dataclass(frozen=True)
class AugmentationStep:
    """One pipeline step: kind, source field(s), target field, parameters.

    The target may equal a source (in-place rewrite) or name a new field. A
    step may consume a field created by a prior step.
    """

    kind: StepKind
    source_fields: tuple[str, ...]
    target_field: str
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "source_fields": list(self.source_fields),
            "target_field": self.target_field,
            "params": dict(self.params),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AugmentationStep":
        return cls(
            kind=StepKind(obj["kind"]),
            source_fields=tuple(obj.get("source_fields", ())),
            target_field=obj["target_field"],
            params=dict(obj.get("params", {})),
        )


@dataclass
class PipelineReport:
    """Per-step change counts and per-record warnings from one pipeline run."""

    steps: list[dict] = field(default_factory=list)
    warnings: list[tuple[str, str]] = field(default_factory=list)

    def warn(self, locator: str, message: str) -> None:
        self.warnings.append((locator, message))


# ---------------------------------------------------------------------------
# Gazetteer


_WS = re.compile(r"\s+")


def _normalize_place(name: str) -> str:
    return _WS.sub(" ", name.strip()).casefold()


class Gazetteer:
    """Lookup table from place-name aliases to coordinates.

    Alias matching is case-insensitive after whitespace normalization;
    aliases must be unique across entries. Zip codes are ordinary aliases.
    """

    def __init__(self, entries: "list[tuple[list[str], float, float]]" = ()):  # type: ignore[assignment]
        self._table: dict[str, tuple[float, float]] = {}
        for aliases, lat, lon in entries:
            self.add(aliases, lat, lon)

    def add(self, aliases: "list[str]", lat: float, lon: float) -> None:
        coords = (round(float(lat), 5), round(float(lon), 5))
        for alias in aliases:
            key = _normalize_place(alias)
            if not key:
                continue
            if key in self._table and self._table[key] != coords:
                raise ValueError(f"alias {alias!r} already maps to other coordinates")
            self._table[key] = coords

    def lookup(self, place: str) -> tuple[float, float] | None:
        return self._table.get(_normalize_place(place))

    def __len__(self) -> int:
        return len(self._table)


def load_gazetteer(path: Path) -> Gazetteer:
    """Load a tab-separated gazetteer: ``alias1|alias2|...<TAB>lat<TAB>lon``.

    Blank lines and lines starting with ``#`` are skipped.
    """
    g = Gazetteer()
    for line_no, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise FacetBrowseError(
                f"gazetteer line {line_no} must have 3 tab-separated columns"
            )
        aliases = [a for a in parts[0].split("|") if a.strip()]
        try:
            lat, lon = float(parts[1]), float(parts[2])
        except ValueError:
            raise FacetBrowseError(
                f"gazetteer line {line_no}: coordinates not numeric"
            ) from None
        g.add(aliases, lat, lon)
    return g


def builtin_gazetteer() -> Gazetteer:
    """The starter gazetteer bundled with the package."""
    ref = resources.files("facetbrowse").joinpath("data/gazetteer.tsv")
    with resources.as_file(ref) as path:
        return load_gazetteer(path)


# ---------------------------------------------------------------------------
# Single-value operations


def normalize_date(raw: str) -> Value:
    """Normalize a raw date string to a DATETIME value.

    Accepts YYYYMMDD, YYYYMM, YYYY, YYYY-MM-DD, and ISO-8601 instants;
    under-specified components pad to the first day/month. Output serializes
    with the canonical "+00:00" offset ("+0000" inputs are canonicalized).
    """
    return Value.datetime_(parse_flexible_datetime(raw))


def geocode(place: str, gazetteer: Gazetteer) -> Value:
    """Resolve a place name to a LOCATION value via exact alias match."""
    coords = gazetteer.lookup(place)
    if coords is None:
        raise Unresolved(f"place not in gazetteer: {place!r}")
    return Value.location(*coords)


# Preset split patterns: the dash family (em dash or double hyphen), then
# semicolon, then comma. The first family present in the input wins.
DEFAULT_SPLIT_PATTERNS: tuple[str, ...] = ("—|--", ";", ",")


def split_list(raw: str, patterns: "tuple[str, ...]" = DEFAULT_SPLIT_PATTERNS) -> Value:
    """Split text into a LIST value on the first matching preset pattern.

    Each pattern is a regex; patterns are tried in order and the first one
    that occurs anywhere in the input is used to split. Segments are trimmed
    and empty segments dropped; input without any delimiter yields a
    one-element list. Total: never fails.
    """
    if not patterns:
        raise ValueError("pattern list must be non-empty")
    for pattern in patterns:
        if re.search(pattern, raw):
            segments = [s.strip() for s in re.split(pattern, raw)]
            return Value.list_(tuple(s for s in segments if s))
    stripped = raw.strip()
    return Value.list_((stripped,) if stripped else ())


_HEADING_SPLIT = re.compile(r"—|--")


def split_heading(heading: str) -> Value:
    """Decompose a pre-coordinated subject heading into component tags.

    Splits on em dash or double hyphen; segments are trimmed and emitted
    verbatim. Facet aggregation over the resulting field is case-insensitive
    (the target field is marked fold_case), so differently cased tags group
    together.
    """
    segments = [s.strip() for s in _HEADING_SPLIT.split(heading)]
    return Value.list_(tuple(s for s in segments if s))


def merge_fields(values: "list[Value]", separator: str) -> Value:
    """Concatenate the display forms of non-missing values, in order."""
    parts = [v.display() for v in values if not v.is_missing]
    if not parts:
        return MISSING
    return Value.text(separator.join(parts))


def replace_values(value: Value, mapping: "dict[str, str]") -> tuple[Value, list[str]]:
    """Whole-value exact-match replacement.

    TEXT and URL values are matched as a whole; LIST members individually.
    Returns the (possibly unchanged) value plus the matched mapping keys.
    """
    if value.kind in (FieldType.TEXT, FieldType.URL):
        raw = value.payload
        if raw in mapping:
            return Value(value.kind, mapping[raw]), [raw]
        return value, []
    if value.kind is FieldType.LIST:
        hits = []
        items = []
        for item in value.items:
            if item in mapping:
                hits.append(item)
                items.append(mapping[item])
            else:
                items.append(item)
        if not hits:
            return value, []
        return Value.list_(tuple(items)), hits
    return value, []


# ---------------------------------------------------------------------------
# Pipeline application


def _require_fields(schema_by_name: dict, names: tuple[str, ...], kind: StepKind) -> None:
    for name in names:
        if name not in schema_by_name:
            raise UnknownField(
                f"{kind.value} references unknown field {name!r}", locator=name
            )


_SPLITTABLE = (FieldType.TEXT, FieldType.LIST)


def _check_types(step: AugmentationStep, schema_by_name: dict) -> None:
    kinds = {name: schema_by_name[name].ftype for name in step.source_fields}
    if step.kind is StepKind.NORMALIZE_DATE:
        bad = [n for n, k in kinds.items() if k not in (FieldType.TEXT, FieldType.DATETIME)]
    elif step.kind is StepKind.GEOCODE:
        bad = [n for n, k in kinds.items() if k not in (FieldType.TEXT, FieldType.LOCATION)]
    elif step.kind in (StepKind.SPLIT_LIST, StepKind.SPLIT_HEADING):
        bad = [n for n, k in kinds.items() if k not in _SPLITTABLE]
    elif step.kind is StepKind.REPLACE_VALUES:
        bad = [n for n, k in kinds.items() if k not in (FieldType.TEXT, FieldType.URL, FieldType.LIST)]
    else:
        bad = []
    if bad:
        raise TypeConflict(
            f"{step.kind.value} cannot apply to field(s) {', '.join(repr(b) for b in bad)}",
            locator=bad[0],
        )


def _transform_single(
    step: AugmentationStep,
    value: Value,
    gazetteer: Gazetteer | None,
    record_id: str,
    report: PipelineReport,
) -> tuple[Value, bool]:
    """Apply a single-source step to one value; returns (value, changed)."""
    if value.is_missing:
        return value, False
    if step.kind is StepKind.NORMALIZE_DATE:
        if value.kind is FieldType.DATETIME:
            return value, False  # already normalized
        try:
            return normalize_date(value.display()), True
        except (UnparseableDate, ImpossibleDate) as exc:
            report.warn(record_id, f"{step.target_field}: {exc.message}")
            return value, False
    if step.kind is StepKind.GEOCODE:
        if value.kind is FieldType.LOCATION:
            return value, False
        if gazetteer is None:
            raise FacetBrowseError("geocode step requires a gazetteer")
        try:
            return geocode(value.display(), gazetteer), True
        except Unresolved as exc:
            report.warn(record_id, f"{step.target_field}: {exc.message}")
            return value, False
    if step.kind is StepKind.SPLIT_LIST:
        patterns = tuple(step.params.get("patterns", DEFAULT_SPLIT_PATTERNS))
        return _resplit(value, lambda s: split_list(s, patterns))
    if step.kind is StepKind.SPLIT_HEADING:
        return _resplit(value, split_heading)
    if step.kind is StepKind.REPLACE_VALUES:
        mapping = dict(step.params.get("mapping", {}))
        new_value, hits = replace_values(value, mapping)
        if hits:
            counts = report.steps[-1].setdefault("replacements", {})
            for hit in hits:
                counts[hit] = counts.get(hit, 0) + 1
        return new_value, bool(hits)
    raise AssertionError(f"unhandled step kind {step.kind}")


def _resplit(value: Value, splitter) -> tuple[Value, bool]:
    """Split a TEXT value, or re-split every member of a LIST value."""
    if value.kind is FieldType.LIST:
        items: list[str] = []
        for item in value.items:
            items.extend(splitter(item).items)
        new = Value.list_(tuple(items))
        return new, new != value
    return splitter(value.display()), True


_TARGET_TYPE = {
    StepKind.NORMALIZE_DATE: FieldType.DATETIME,
    StepKind.GEOCODE: FieldType.LOCATION,
    StepKind.SPLIT_LIST: FieldType.LIST,
    StepKind.SPLIT_HEADING: FieldType.LIST,
    StepKind.MERGE_FIELDS: FieldType.TEXT,
    StepKind.REPLACE_VALUES: None,  # keeps the source type
}


def apply_pipeline(
    snapshot: DatasetSnapshot,
    steps: "list[AugmentationStep]",
    gazetteer: Gazetteer | None = None,
) -> tuple[DatasetSnapshot, PipelineReport]:
    """Apply steps in order, producing the next snapshot version.

    Record count and ids never change. Target fields take the type their
    step produces (DATETIME / LOCATION / LIST / TEXT); values a step cannot
    convert stay untouched and are reported as warnings.
    """
    report = PipelineReport()
    schema = list(snapshot.schema)
    by_name = {f.name: f for f in schema}
    rows: list[dict[str, Value]] = [dict(r.values) for r in snapshot.records]
    ids = [r.record_id for r in snapshot.records]

    for step in steps:
        if not step.source_fields:
            raise UnknownField(f"{step.kind.value} step names no source fields")
        if step.kind is StepKind.MERGE_FIELDS and len(step.source_fields) < 2:
            raise FacetBrowseError("merge_fields requires at least two source fields")
        _require_fields(by_name, step.source_fields, step.kind)
        _check_types(step, by_name)
        report.steps.append(
            {"kind": step.kind.value, "target": step.target_field, "changed": 0}
        )
        step_entry = report.steps[-1]

        if step.kind is StepKind.MERGE_FIELDS:
            separator = str(step.params.get("separator", " "))
            for rid, row in zip(ids, rows):
                merged = merge_fields(
                    [row.get(n, MISSING) for n in step.source_fields], separator
                )
                if merged.is_missing:
                    row.pop(step.target_field, None)
                else:
                    row[step.target_field] = merged
                    step_entry["changed"] += 1
        else:
            source = step.source_fields[0]
            for rid, row in zip(ids, rows):
                value = row.get(source, MISSING)
                new_value, changed = _transform_single(
                    step, value, gazetteer, rid, report
                )
                if value.is_missing and source != step.target_field:
                    row.pop(step.target_field, None)
                elif new_value is not value or source != step.target_field:
                    row[step.target_field] = new_value
                if changed:
                    step_entry["changed"] += 1

        target_type = _TARGET_TYPE[step.kind]
        if target_type is None:
            target_type = by_name[step.source_fields[0]].ftype
        existing = by_name.get(step.target_field)
        spec = FieldSpec(
            name=step.target_field,
            ftype=target_type,
            enabled=existing.enabled if existing else True,
            multivalued=target_type is FieldType.LIST,
            fold_case=(
                step.kind is StepKind.SPLIT_HEADING
                or bool(existing and existing.fold_case)
            ),
        )
        if existing is None:
            schema.append(spec)
        else:
            schema[schema.index(existing)] = spec
        by_name[step.target_field] = spec

    records = tuple(
        Record(record_id=rid, values=row) for rid, row in zip(ids, rows)
    )
    new_snapshot = DatasetSnapshot(
        dataset_id=snapshot.dataset_id,
        version=snapshot.version + 1,
        schema=tuple(schema),
        records=records,
        source=snapshot.source,
    )
    return new_snapshot, report
