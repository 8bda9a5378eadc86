"""Parsers that turn uploaded bytes into dataset snapshots.

Two import paths live here: RFC 4180 delimited text (CSV and friends) and
the record-list document (a JSON array of flat key -> scalar objects).
Harvesting lives in :mod:`facetbrowse.oai`; all paths produce a
:class:`~facetbrowse.schema.DatasetSnapshot` plus an :class:`ImportReport`.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .errors import FacetBrowseError
from .schema import MISSING, DatasetSnapshot, FieldSpec, FieldType, Record, Value

__all__ = [
    "DelimitedOptions",
    "ImportReport",
    "EmptyInput",
    "DuplicateId",
    "MalformedDocument",
    "NonScalarValue",
    "parse_delimited",
    "parse_record_list",
]


class EmptyInput(FacetBrowseError):
    code = "EmptyInput"


class DuplicateId(FacetBrowseError):
    code = "DuplicateId"


class MalformedDocument(FacetBrowseError):
    code = "MalformedDocument"


class NonScalarValue(FacetBrowseError):
    code = "NonScalarValue"


@dataclass
class ImportReport:
    """Outcome of one import: ``rows_read == records_created + rows_skipped``."""

    rows_read: int = 0
    records_created: int = 0
    rows_skipped: int = 0
    warnings: list[tuple[str, str]] = field(default_factory=list)

    def warn(self, locator: str, message: str) -> None:
        self.warnings.append((locator, message))

    def check(self) -> None:
        assert self.rows_read == self.records_created + self.rows_skipped, (
            f"report arithmetic broken: {self.rows_read} != "
            f"{self.records_created} + {self.rows_skipped}"
        )


@dataclass(frozen=True)
class DelimitedOptions:
    delimiter: str = ","
    header_row: bool = True
    id_column: str | None = None


def _decode_utf8(data: bytes) -> str:
    """Decode UTF-8, tolerating a byte-order mark."""
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise MalformedDocument(f"input is not valid UTF-8: {exc}") from None


def _dedupe_headers(headers: list[str], report: ImportReport) -> list[str]:
    """Suffix duplicate header names with _2, _3, ... and warn."""
    seen: dict[str, int] = {}
    out: list[str] = []
    for h in headers:
        if h in seen:
            seen[h] += 1
            renamed = f"{h}_{seen[h]}"
            while renamed in seen:
                seen[h] += 1
                renamed = f"{h}_{seen[h]}"
            report.warn(f"column {h!r}", f"duplicate header renamed to {renamed!r}")
            seen[renamed] = 1
            out.append(renamed)
        else:
            seen[h] = 1
            out.append(h)
    return out


def parse_delimited(
    data: bytes,
    options: DelimitedOptions | None = None,
    dataset_id: str = "dataset",
    version: int = 1,
    source: dict | None = None,
) -> tuple[DatasetSnapshot, ImportReport]:
    """Parse delimited text into a snapshot; one record per data row.

    Header names become field names verbatim (all fields start as TEXT).
    Without a header row, fields are named "Column 1", "Column 2", ....
    Record ids come from ``id_column`` when given, otherwise "r1", "r2", ...
    in row order. Rows with a mismatched cell count are skipped with a
    warning; empty cells read as missing.
    """
    opts = options or DelimitedOptions()
    text = _decode_utf8(data)
    if not text.strip():
        raise EmptyInput("no rows in delimited input")

    reader = csv.reader(io.StringIO(text, newline=""), delimiter=opts.delimiter)
    report = ImportReport()
    rows = iter(reader)

    if opts.header_row:
        try:
            headers = next(rows)
        except StopIteration:
            raise EmptyInput("no header row in delimited input") from None
        headers = _dedupe_headers([h.strip() for h in headers], report)
    else:
        headers = []

    if opts.id_column is not None and opts.id_column not in headers:
        raise FacetBrowseError(
            f"id column {opts.id_column!r} not among headers", locator=opts.id_column
        )

    records: list[Record] = []
    seen_ids: set[str] = set()
    for row_no, row in enumerate(rows, start=2 if opts.header_row else 1):
        if not row:
            continue  # blank line, not a data row
        report.rows_read += 1
        if not headers:
            headers = _dedupe_headers(
                [f"Column {i + 1}" for i in range(len(row))], report
            )
        if len(row) != len(headers):
            report.rows_skipped += 1
            report.warn(
                f"row {row_no}",
                f"expected {len(headers)} cells, got {len(row)}; row skipped",
            )
            continue
        values: dict[str, Value] = {}
        for name, cell in zip(headers, row):
            if cell.strip():
                values[name] = Value.text(cell)
        if opts.id_column is not None:
            rid_value = values.get(opts.id_column, MISSING)
            if rid_value.is_missing:
                report.rows_skipped += 1
                report.warn(f"row {row_no}", "missing id cell; row skipped")
                continue
            rid = rid_value.display()
        else:
            rid = f"r{report.records_created + 1}"
        if rid in seen_ids:
            raise DuplicateId(
                f"record id {rid!r} appears more than once", locator=f"row {row_no}"
            )
        seen_ids.add(rid)
        records.append(Record(record_id=rid, values=values))
        report.records_created += 1

    schema = tuple(FieldSpec(name=h, ftype=FieldType.TEXT) for h in headers)
    snapshot = DatasetSnapshot(
        dataset_id=dataset_id,
        version=version,
        schema=schema,
        records=tuple(records),
        source=source or {"type": "delimited"},
    )
    report.check()
    return snapshot, report


def _scalar_to_text(key: str, value: object, index: int) -> Value:
    if value is None:
        return MISSING
    if isinstance(value, str):
        return Value.text(value) if value.strip() else MISSING
    if isinstance(value, bool):
        # bool is an int subclass; keep the JSON literal spelling
        return Value.text("true" if value else "false")
    if isinstance(value, (int, float)):
        return Value.text(json.dumps(value))
    raise NonScalarValue(
        f"value for {key!r} is not a scalar", locator=f"record {index + 1}"
    )


def parse_record_list(
    data: bytes,
    dataset_id: str = "dataset",
    version: int = 1,
    source: dict | None = None,
) -> tuple[DatasetSnapshot, ImportReport]:
    """Parse a record-list document: a JSON array of flat objects.

    The union of keys across objects becomes the schema (all TEXT); keys
    absent from a given object read as missing. Values must be scalar
    strings, numbers, or null; nested structures are rejected with a
    locator. Ids are synthesized "r1", "r2", ... in document order.
    """
    text = _decode_utf8(data)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"invalid record-list document: {exc}") from None
    if not isinstance(doc, list):
        raise MalformedDocument("record-list document must be a top-level array")

    report = ImportReport()
    field_names: list[str] = []
    seen_fields: set[str] = set()
    records: list[Record] = []
    for i, obj in enumerate(doc):
        if not isinstance(obj, dict):
            raise MalformedDocument(
                "record-list entries must be objects", locator=f"record {i + 1}"
            )
        report.rows_read += 1
        values: dict[str, Value] = {}
        for key, raw in obj.items():
            if key not in seen_fields:
                seen_fields.add(key)
                field_names.append(key)
            v = _scalar_to_text(key, raw, i)
            if not v.is_missing:
                values[key] = v
        records.append(Record(record_id=f"r{i + 1}", values=values))
        report.records_created += 1

    schema = tuple(FieldSpec(name=n, ftype=FieldType.TEXT) for n in field_names)
    snapshot = DatasetSnapshot(
        dataset_id=dataset_id,
        version=version,
        schema=schema,
        records=tuple(records),
        source=source or {"type": "record_list"},
    )
    report.check()
    return snapshot, report
