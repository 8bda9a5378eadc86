"""Records, field types, typed values, and dataset snapshots.

A dataset is a schema (list of :class:`FieldSpec`) plus records holding typed
:class:`Value` objects. Snapshots are immutable: every ingest, augmentation,
schema change, or refresh publishes a new snapshot with ``version + 1``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from decimal import Decimal, InvalidOperation
from enum import Enum
from urllib.parse import urlparse

from .errors import FacetBrowseError

__all__ = [
    "FieldType",
    "Value",
    "MISSING",
    "FieldSpec",
    "Record",
    "DatasetSnapshot",
    "SnapshotDiff",
    "CoercionError",
    "MismatchedDataset",
    "UnparseableDate",
    "ImpossibleDate",
    "coerce",
    "parse_flexible_datetime",
    "snapshot_diff",
]


class FieldType(Enum):
    """Declared type of a field: the five assignable types plus LIST.

    LIST (of text) is produced only by splitting augmentations or by
    multi-valued ingest (e.g. repeated harvest elements).
    """

    TEXT = "text"
    NUMBER = "number"
    DATETIME = "datetime"
    LOCATION = "location"
    URL = "url"
    LIST = "list"


class CoercionError(FacetBrowseError):
    code = "CoercionError"


class MismatchedDataset(FacetBrowseError):
    code = "MismatchedDataset"


class UnparseableDate(FacetBrowseError):
    code = "UnparseableDate"


class ImpossibleDate(FacetBrowseError):
    code = "ImpossibleDate"


UTC = timezone.utc


def _canonical_decimal(d: Decimal) -> str:
    """Canonical string form of a decimal: no exponent, no trailing zeros."""
    return format(d.normalize(), "f")


def _canonical_coord(x: float) -> str:
    return f"{x:.5f}".rstrip("0").rstrip(".") if "." in f"{x:.5f}" else f"{x:.5f}"


@dataclass(frozen=True)
class Value:
    """A typed field value: a tagged union over the field types.

    ``payload`` holds, per kind:

    * TEXT / URL: the string
    * NUMBER: a :class:`decimal.Decimal`
    * DATETIME: a timezone-aware UTC :class:`datetime.datetime`
    * LOCATION: a ``(lat, lon)`` tuple, degrees rounded to 5 decimals
    * LIST: a tuple of strings
    * MISSING (kind ``None``): ``None``

    Use the class-method constructors; they enforce the per-kind invariants.
    """

    kind: FieldType | None
    payload: object = None

    @classmethod
    def text(cls, s: str) -> "Value":
        return cls(FieldType.TEXT, s)

    @classmethod
    def number(cls, d: Decimal | int | str) -> "Value":
        if not isinstance(d, Decimal):
            d = Decimal(str(d))
        if not d.is_finite():
            raise ValueError("number values must be finite")
        return cls(FieldType.NUMBER, d)

    @classmethod
    def datetime_(cls, dt: datetime) -> "Value":
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=UTC)
        return cls(FieldType.DATETIME, dt.astimezone(UTC))

    @classmethod
    def location(cls, lat: float, lon: float) -> "Value":
        lat, lon = round(float(lat), 5), round(float(lon), 5)
        if not -90.0 <= lat <= 90.0:
            raise ValueError(f"latitude {lat} out of range [-90, 90]")
        if not -180.0 <= lon <= 180.0:
            raise ValueError(f"longitude {lon} out of range [-180, 180]")
        return cls(FieldType.LOCATION, (lat, lon))

    @classmethod
    def url(cls, s: str) -> "Value":
        return cls(FieldType.URL, s)

    @classmethod
    def list_(cls, items: "list[str] | tuple[str, ...]") -> "Value":
        return cls(FieldType.LIST, tuple(items))

    @property
    def is_missing(self) -> bool:
        return self.kind is None

    @property
    def items(self) -> tuple[str, ...]:
        """Member strings of a LIST value (empty tuple otherwise)."""
        if self.kind is FieldType.LIST:
            return self.payload  # type: ignore[return-value]
        return ()

    def display(self) -> str:
        """Canonical display string; the bucket key for single values."""
        if self.kind is None:
            return ""
        if self.kind in (FieldType.TEXT, FieldType.URL):
            return self.payload  # type: ignore[return-value]
        if self.kind is FieldType.NUMBER:
            return _canonical_decimal(self.payload)  # type: ignore[arg-type]
        if self.kind is FieldType.DATETIME:
            return self.payload.isoformat()  # type: ignore[union-attr]
        if self.kind is FieldType.LOCATION:
            lat, lon = self.payload  # type: ignore[misc]
            return f"{_canonical_coord(lat)},{_canonical_coord(lon)}"
        return "; ".join(self.items)

    def bucket_keys(self) -> tuple[str, ...]:
        """Keys this value contributes to a facet (one per LIST member)."""
        if self.kind is None:
            return ()
        if self.kind is FieldType.LIST:
            return self.items
        return (self.display(),)


MISSING = Value(None, None)


@dataclass(frozen=True)
class FieldSpec:
    """Per-field schema entry.

    Field names are verbatim, case-sensitive headers. Disabled fields stay in
    storage but are excluded from indexing and views. ``fold_case`` marks a
    field (set by the heading-split augmentation) whose facet buckets compare
    case-insensitively.
    """

    name: str
    ftype: FieldType = FieldType.TEXT
    enabled: bool = True
    multivalued: bool = False
    fold_case: bool = False


@dataclass(frozen=True)
class Record:
    """One collection item: an id plus a field-name -> Value map.

    Absent field names read as MISSING; multiplicity is carried by LIST
    values, so each field holds exactly one Value.
    """

    record_id: str
    values: "dict[str, Value]" = field(default_factory=dict)

    def get(self, field_name: str) -> Value:
        return self.values.get(field_name, MISSING)


@dataclass(frozen=True)
class DatasetSnapshot:
    """Immutable, versioned set of records plus schema and provenance.

    ``source`` is a provenance descriptor (file upload, inline document, or
    harvest endpoint) used by refresh. Versions are a strictly increasing
    chain per dataset; record ids are unique within a snapshot.
    """

    dataset_id: str
    version: int
    schema: tuple[FieldSpec, ...]
    records: tuple[Record, ...]
    source: "dict[str, object]" = field(default_factory=dict)

    def __post_init__(self) -> None:
        names = [f.name for f in self.schema]
        if len(names) != len(set(names)):
            raise ValueError("duplicate field names in schema")
        known = set(names)
        seen: set[str] = set()
        for r in self.records:
            if r.record_id in seen:
                raise ValueError(f"duplicate record_id {r.record_id!r} in snapshot")
            seen.add(r.record_id)
            for field_name in r.values:
                if field_name not in known:
                    raise ValueError(
                        f"record {r.record_id!r} names field {field_name!r} "
                        "absent from the schema"
                    )

    def field_spec(self, name: str) -> FieldSpec | None:
        for f in self.schema:
            if f.name == name:
                return f
        return None

    def record_ids(self) -> set[str]:
        return {r.record_id for r in self.records}

    def with_(self, **kwargs) -> "DatasetSnapshot":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class SnapshotDiff:
    """Partition of record ids changed between two snapshot versions."""

    added: frozenset[str]
    removed: frozenset[str]
    modified: frozenset[str]

    @property
    def is_empty(self) -> bool:
        return not (self.added or self.removed or self.modified)


# Accepted compact date shapes, tried in order.
_YMD = re.compile(r"^(\d{4})(\d{2})(\d{2})$")
_YM = re.compile(r"^(\d{4})(\d{2})$")
_Y = re.compile(r"^(\d{4})$")
_ISO_DATE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")
_ISO_INSTANT = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})[T ](\d{2}):(\d{2}):(\d{2})(?:\.(\d{1,6}))?"
    r"(Z|[+-]\d{2}:?\d{2})?$"
)


def _make_date(year: int, month: int, day: int, raw: str) -> datetime:
    if not 1 <= month <= 12:
        raise ImpossibleDate(f"month {month} out of range in {raw!r}")
    try:
        return datetime(year, month, day, tzinfo=UTC)
    except ValueError:
        raise ImpossibleDate(f"no such calendar date: {raw!r}") from None


def _parse_offset(tz: str | None) -> timezone:
    if tz is None or tz == "Z":
        return UTC
    sign = 1 if tz[0] == "+" else -1
    digits = tz[1:].replace(":", "")
    hours, minutes = int(digits[:2]), int(digits[2:])
    from datetime import timedelta

    return timezone(sign * timedelta(hours=hours, minutes=minutes))


def parse_flexible_datetime(raw: str) -> datetime:
    """Parse the accepted date grammar into a UTC instant.

    Accepts YYYYMMDD, YYYYMM, YYYY, YYYY-MM-DD, and ISO-8601 instants
    (offset ``+00:00``, ``+0000``, or ``Z``; other offsets are converted to
    UTC). Under-specified components pad to the first month/day. Raises
    UnparseableDate for unrecognized shapes, ImpossibleDate for shapes whose
    components are not a real calendar date.
    """
    s = raw.strip()
    m = _ISO_INSTANT.match(s)
    if m:
        y, mo, d, hh, mm, ss = (int(m.group(i)) for i in range(1, 7))
        micro = int((m.group(7) or "0").ljust(6, "0"))
        if not 1 <= mo <= 12:
            raise ImpossibleDate(f"month {mo} out of range in {raw!r}")
        try:
            dt = datetime(y, mo, d, hh, mm, ss, micro, tzinfo=_parse_offset(m.group(8)))
        except ValueError:
            raise ImpossibleDate(f"no such instant: {raw!r}") from None
        return dt.astimezone(UTC)
    m = _ISO_DATE.match(s)
    if m:
        return _make_date(int(m.group(1)), int(m.group(2)), int(m.group(3)), raw)
    m = _YMD.match(s)
    if m:
        return _make_date(int(m.group(1)), int(m.group(2)), int(m.group(3)), raw)
    m = _YM.match(s)
    if m:
        return _make_date(int(m.group(1)), int(m.group(2)), 1, raw)
    m = _Y.match(s)
    if m:
        return _make_date(int(m.group(1)), 1, 1, raw)
    raise UnparseableDate(f"unrecognized date shape: {raw!r}")


def _parse_location(raw: str, field_name: str) -> Value:
    parts = raw.split(",")
    if len(parts) != 2:
        raise CoercionError(
            f"location must be 'lat,lon', got {raw!r}", locator=field_name
        )
    try:
        lat, lon = float(parts[0]), float(parts[1])
    except ValueError:
        raise CoercionError(
            f"location coordinates not numeric: {raw!r}", locator=field_name
        ) from None
    try:
        return Value.location(lat, lon)
    except ValueError as exc:
        raise CoercionError(str(exc), locator=field_name) from None


def coerce(raw: str, ftype: FieldType, field_name: str = "") -> Value:
    """Coerce a raw string to a typed Value.

    Empty or all-whitespace input maps to MISSING for every type, so views
    get a single "(no value)" bucket. TEXT never fails; the other types raise
    CoercionError (carrying the field name and raw string) on unparseable
    input.
    """
    if raw is None or not raw.strip():
        return MISSING
    if ftype is FieldType.TEXT:
        return Value.text(raw)
    if ftype is FieldType.NUMBER:
        try:
            d = Decimal(raw.strip())
        except InvalidOperation:
            raise CoercionError(
                f"not a number: {raw!r}", locator=field_name
            ) from None
        if not d.is_finite():
            raise CoercionError(f"not a finite number: {raw!r}", locator=field_name)
        return Value(FieldType.NUMBER, d)
    if ftype is FieldType.DATETIME:
        try:
            return Value.datetime_(parse_flexible_datetime(raw))
        except (UnparseableDate, ImpossibleDate) as exc:
            raise CoercionError(
                f"not a date/time: {raw!r} ({exc.message})", locator=field_name
            ) from None
    if ftype is FieldType.LOCATION:
        return _parse_location(raw.strip(), field_name)
    if ftype is FieldType.URL:
        parsed = urlparse(raw.strip())
        if parsed.scheme not in ("http", "https", "ftp") or not parsed.netloc:
            raise CoercionError(
                f"not an absolute URL: {raw!r}", locator=field_name
            )
        return Value.url(raw.strip())
    # LIST: a raw string becomes a one-element list
    return Value.list_((raw,))


def snapshot_diff(a: DatasetSnapshot, b: DatasetSnapshot) -> SnapshotDiff:
    """Summarize record-id changes from snapshot ``a`` to ``b``.

    The three sets are pairwise disjoint; identical snapshots yield three
    empty sets. Raises MismatchedDataset when the snapshots belong to
    different datasets.
    """
    if a.dataset_id != b.dataset_id:
        raise MismatchedDataset(
            f"cannot diff datasets {a.dataset_id!r} and {b.dataset_id!r}"
        )
    a_recs = {r.record_id: r for r in a.records}
    b_recs = {r.record_id: r for r in b.records}
    added = frozenset(b_recs.keys() - a_recs.keys())
    removed = frozenset(a_recs.keys() - b_recs.keys())
    modified = frozenset(
        rid
        for rid in a_recs.keys() & b_recs.keys()
        if a_recs[rid].values != b_recs[rid].values
    )
    return SnapshotDiff(added=added, removed=removed, modified=modified)
